#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lstmc {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Shapes are rigid: every operation
// that combines shapes checks them and throws ValidationError on mismatch.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// result[i] = sum_j m(i,j) * v[j]
Vector matvec(const Matrix& m, const Vector& v);

// result[j] = sum_i m(i,j) * v[i]  (m^T v without materializing m^T)
Vector matvec_transposed(const Matrix& m, const Vector& v);

// m += u * v^T
void add_outer(Matrix& m, const Vector& u, const Vector& v);

double dot(const Vector& a, const Vector& b);

// Elementwise nonlinearities. Outputs are kept strictly inside the open
// interval even where IEEE saturation would land on an endpoint, so that
// downstream invariants (|h| < 1) hold for arbitrary finite inputs.
double sigmoid(double x);
double tanh_open(double x);
Vector sigmoid(const Vector& v);
Vector tanh_vec(const Vector& v);

Vector hadamard(const Vector& a, const Vector& b);

// a*x + y
Vector axpy(double a, const Vector& x, const Vector& y);

// log(sum_i exp(s[i])) via max shift; exact for a single element.
double log_sum_exp(std::span<const double> scores);

// Central differences (f(x+eps e_i) - f(x-eps e_i)) / (2 eps) per
// coordinate. Perturbs params in place and restores them bit-exactly.
Vector finite_diff(const std::function<double(std::span<const double>)>& f,
                   std::span<double> params, double epsilon);

double frobenius_sq(const Matrix& m);
double sum_sq(const Vector& v);

std::string shape_str(const Matrix& m);

}  // namespace lstmc
