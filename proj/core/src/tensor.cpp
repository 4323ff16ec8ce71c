#include "spanie/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spanie/errors.hpp"

namespace spanie {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("shape " + shape_to_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() == 2) return shape_[0];
  throw DimensionError("matrix view requires rank 1 or 2, got " + shape_to_string(shape_));
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() == 2) return shape_[1];
  throw DimensionError("matrix view requires rank 1 or 2, got " + shape_to_string(shape_));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " +
                         shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_to_string(a.shape()) + " by " +
                         shape_to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
  Tensor out({m, p});
  const double* pa = a.raw();
  const double* pb = b.raw();
  double* po = out.raw();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = po + i * p;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = pa[i * k + t];
      if (av == 0.0) continue;
      const double* brow = pb + t * p;
      for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: cannot multiply " + shape_to_string(a.shape()) +
                         " by transpose of " + shape_to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), p = b.rows();
  Tensor out({m, p});
  const double* pa = a.raw();
  const double* pb = b.raw();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < p; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += arow[t] * brow[t];
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: cannot multiply transpose of " +
                         shape_to_string(a.shape()) + " by " + shape_to_string(b.shape()));
  }
  const std::size_t k = a.rows(), m = a.cols(), p = b.cols();
  Tensor out({m, p});
  const double* pa = a.raw();
  const double* pb = b.raw();
  double* po = out.raw();
  for (std::size_t t = 0; t < k; ++t) {
    const double* brow = pb + t * p;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = pa[t * m + i];
      if (av == 0.0) continue;
      double* orow = po + i * p;
      for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

void softmax_inplace(std::span<double> values) {
  if (values.empty()) throw DomainError("softmax of an empty vector");
  const double mx = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (auto& v : values) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : values) v /= total;
}

Tensor softmax(const Tensor& logits) {
  Tensor out = logits;
  softmax_inplace(out.data());
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw DomainError("log-sum-exp of an empty vector");
  const double mx = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += std::exp(v - mx);
  return mx + std::log(total);
}

double cross_entropy(const Tensor& logits, std::size_t target) {
  if (target >= logits.size()) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " out of range for " + std::to_string(logits.size()) + " logits");
  }
  return log_sum_exp(logits.data()) - logits[target];
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    return std::numeric_limits<double>::infinity();
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace spanie
