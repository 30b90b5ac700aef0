#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace lstmc {

// Evaluation corpus over plain token strings; independent of any vocabulary
// or model so reference data can be scored stand-alone.
struct EvalItem {
  std::string image_id;
  std::vector<std::string> generated;                 // caption tokens
  std::vector<std::vector<std::string>> references;   // possibly empty
  std::set<std::string> labels;                       // ground-truth novel objects
};

struct EvalCorpus {
  std::vector<EvalItem> items;
};

struct ObjectCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int tn = 0;
};

struct MetricsReport {
  std::map<std::string, double> per_object_f1;
  std::map<std::string, ObjectCounts> counts;
  double average_f1 = 0.0;
  double novel_score = 0.0;
  double accuracy_score = 0.0;
  std::vector<std::string> excluded_objects;  // zero labeled images
};

// Image-level binary classification for one object: predicted positive iff
// the token appears in the generated caption, ground-truth positive iff the
// image is labeled with it. F1 = 2PR/(P+R), 0 when P+R = 0.
double f1_per_object(const EvalCorpus& corpus, const std::string& object);

// Fraction of novel objects mentioned in at least one generated caption of
// an image labeled with that object.
double novel_score(const EvalCorpus& corpus, const std::set<std::string>& novel_set);

// Mean per-object recall over images containing the object; objects with no
// labeled image are excluded (reported separately when a report is built).
double accuracy_score(const EvalCorpus& corpus, const std::set<std::string>& novel_set);

MetricsReport evaluate(const EvalCorpus& corpus, const std::set<std::string>& novel_set);

std::string format_report_table(const MetricsReport& report);
std::string format_report_keyvalues(const MetricsReport& report);

}  // namespace lstmc
