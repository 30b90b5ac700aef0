#include "lstmc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lstmc/error.hpp"

namespace lstmc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Vector matvec(const Matrix& m, const Vector& v) {
  require(m.cols() == v.size(), "matvec shape mismatch: matrix " + shape_str(m) +
                                    " vs vector of length " + std::to_string(v.size()));
  Vector out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
  require(m.rows() == v.size(), "matvec_transposed shape mismatch: matrix " + shape_str(m) +
                                    " vs vector of length " + std::to_string(v.size()));
  Vector out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i);
    const double vi = v[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += vi * row[j];
  }
  return out;
}

void add_outer(Matrix& m, const Vector& u, const Vector& v) {
  require(m.rows() == u.size() && m.cols() == v.size(),
          "add_outer shape mismatch: matrix " + shape_str(m) + " vs " +
              std::to_string(u.size()) + " x " + std::to_string(v.size()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* row = m.row(i);
    const double ui = u[i];
    for (std::size_t j = 0; j < m.cols(); ++j) row[j] += ui * v[j];
  }
}

double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dot length mismatch: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sigmoid(double x) {
  double y = 1.0 / (1.0 + std::exp(-x));
  // keep strictly inside (0,1) even at saturation
  if (y >= 1.0) y = std::nextafter(1.0, 0.0);
  if (y <= 0.0) y = std::nextafter(0.0, 1.0);
  return y;
}

double tanh_open(double x) {
  double y = std::tanh(x);
  if (y >= 1.0) y = std::nextafter(1.0, 0.0);
  if (y <= -1.0) y = std::nextafter(-1.0, 0.0);
  return y;
}

Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

Vector tanh_vec(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = tanh_open(v[i]);
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "hadamard length mismatch: " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vector axpy(double a, const Vector& x, const Vector& y) {
  require(x.size() == y.size(), "axpy length mismatch: " + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()));
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

double log_sum_exp(std::span<const double> scores) {
  require(!scores.empty(), "log_sum_exp of empty input");
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : scores) mx = std::max(mx, s);
  if (std::isinf(mx) && mx < 0) return mx;  // all -inf
  double acc = 0.0;
  for (double s : scores) acc += std::exp(s - mx);
  return mx + std::log(acc);
}

Vector finite_diff(const std::function<double(std::span<const double>)>& f,
                   std::span<double> params, double epsilon) {
  require(epsilon > 0.0, "finite_diff requires epsilon > 0");
  Vector grad(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double up = f(params);
    params[i] = saved - epsilon;
    const double down = f(params);
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

double frobenius_sq(const Matrix& m) {
  double acc = 0.0;
  for (double x : m.data()) acc += x * x;
  return acc;
}

double sum_sq(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

}  // namespace lstmc
