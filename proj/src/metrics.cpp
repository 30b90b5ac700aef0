#include "lstmc/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "lstmc/error.hpp"

namespace lstmc {

namespace {

bool mentions(const std::vector<std::string>& caption, const std::string& object) {
  return std::find(caption.begin(), caption.end(), object) != caption.end();
}

ObjectCounts count_object(const EvalCorpus& corpus, const std::string& object) {
  ObjectCounts c;
  for (const EvalItem& item : corpus.items) {
    const bool predicted = mentions(item.generated, object);
    const bool actual = item.labels.count(object) > 0;
    if (predicted && actual)
      ++c.tp;
    else if (predicted && !actual)
      ++c.fp;
    else if (!predicted && actual)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

double f1_from_counts(const ObjectCounts& c) {
  if (c.tp == 0) return 0.0;  // covers P+R = 0 and the undefined-denominator cases
  const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

double f1_per_object(const EvalCorpus& corpus, const std::string& object) {
  if (object.empty()) throw ValidationError("f1_per_object: empty object token");
  return f1_from_counts(count_object(corpus, object));
}

double novel_score(const EvalCorpus& corpus, const std::set<std::string>& novel_set) {
  if (novel_set.empty()) throw ValidationError("novel_score: empty novel set");
  int mentioned = 0;
  for (const std::string& object : novel_set) {
    bool hit = false;
    for (const EvalItem& item : corpus.items) {
      if (item.labels.count(object) > 0 && mentions(item.generated, object)) {
        hit = true;
        break;
      }
    }
    if (hit) ++mentioned;
  }
  return static_cast<double>(mentioned) / static_cast<double>(novel_set.size());
}

double accuracy_score(const EvalCorpus& corpus, const std::set<std::string>& novel_set) {
  if (novel_set.empty()) throw ValidationError("accuracy_score: empty novel set");
  double total = 0.0;
  int counted = 0;
  for (const std::string& object : novel_set) {
    int containing = 0, described = 0;
    for (const EvalItem& item : corpus.items) {
      if (item.labels.count(object) == 0) continue;
      ++containing;
      if (mentions(item.generated, object)) ++described;
    }
    if (containing == 0) continue;  // undefined recall, excluded
    total += static_cast<double>(described) / static_cast<double>(containing);
    ++counted;
  }
  if (counted == 0) return 0.0;
  return total / static_cast<double>(counted);
}

MetricsReport evaluate(const EvalCorpus& corpus, const std::set<std::string>& novel_set) {
  if (novel_set.empty()) throw ValidationError("evaluate: empty novel set");
  MetricsReport report;
  double f1_total = 0.0;
  for (const std::string& object : novel_set) {
    const ObjectCounts c = count_object(corpus, object);
    report.counts[object] = c;
    const double f1 = f1_from_counts(c);
    report.per_object_f1[object] = f1;
    f1_total += f1;
    if (c.tp + c.fn == 0) report.excluded_objects.push_back(object);
  }
  report.average_f1 = f1_total / static_cast<double>(novel_set.size());
  report.novel_score = novel_score(corpus, novel_set);
  report.accuracy_score = accuracy_score(corpus, novel_set);
  return report;
}

std::string format_report_table(const MetricsReport& report) {
  std::ostringstream os;
  os << "object           f1        tp   fp   fn\n";
  for (const auto& [object, f1] : report.per_object_f1) {
    const ObjectCounts& c = report.counts.at(object);
    os << object;
    for (std::size_t i = object.size(); i < 17; ++i) os << ' ';
    std::string f = fmt_double(f1);
    os << f;
    for (std::size_t i = f.size(); i < 10; ++i) os << ' ';
    os << c.tp << "    " << c.fp << "    " << c.fn << "\n";
  }
  os << "average_f1      " << fmt_double(report.average_f1) << "\n";
  os << "novel_score     " << fmt_double(report.novel_score) << "\n";
  os << "accuracy_score  " << fmt_double(report.accuracy_score) << "\n";
  if (!report.excluded_objects.empty()) {
    os << "excluded (no labeled images):";
    for (const auto& o : report.excluded_objects) os << ' ' << o;
    os << "\n";
  }
  return os.str();
}

std::string format_report_keyvalues(const MetricsReport& report) {
  std::ostringstream os;
  for (const auto& [object, f1] : report.per_object_f1) os << "f1." << object << "=" << fmt_double(f1) << "\n";
  for (const auto& [object, c] : report.counts) {
    os << "tp." << object << "=" << c.tp << "\n";
    os << "fp." << object << "=" << c.fp << "\n";
    os << "fn." << object << "=" << c.fn << "\n";
  }
  os << "f1_average=" << fmt_double(report.average_f1) << "\n";
  os << "novel_score=" << fmt_double(report.novel_score) << "\n";
  os << "accuracy_score=" << fmt_double(report.accuracy_score) << "\n";
  return os.str();
}

}  // namespace lstmc
