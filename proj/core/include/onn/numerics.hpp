#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace onn {

class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  DenseVector(std::initializer_list<double> values) : data_(values) {}
  explicit DenseVector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool operator==(const DenseVector&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void fill(double value);
  bool all_finite() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws ConfigError when W.cols() != x.size().
DenseVector matvec(const DenseMatrix& w, std::span<const double> x);

// out(b, r) = sum_c x(b, c) * w(r, c) + bias[r]; the batched form of W·x + b.
DenseMatrix affine_rows(const DenseMatrix& x, const DenseMatrix& w, std::span<const double> bias);

// out(b, c) = sum_r dy(b, r) * w(r, c); backprop of affine_rows onto its input.
DenseMatrix matmul_nn(const DenseMatrix& dy, const DenseMatrix& w);

// dw(r, c) += sum_b dy(b, r) * x(b, c)
void accumulate_outer_tn(const DenseMatrix& dy, const DenseMatrix& x, DenseMatrix& dw);

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> values);

/// Deterministic generator: a fixed seed yields the same draws on every platform.
/// The engine is mt19937_64, whose output sequence is fixed by the standard;
/// the distributions are implemented here because <random>'s are not.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); rejection sampling keeps it unbiased.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  // Independent child stream; used to give each component its own sequence.
  SeededRng fork();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// A trainable tensor and its gradient accumulator.
struct Parameter {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t rows, std::size_t cols, double fill = 0.0)
      : name(std::move(n)), value(rows, cols, fill), grad(rows, cols, 0.0) {}

  void zero_grad() { grad.fill(0.0); }
};

using ParamList = std::vector<Parameter*>;

// Named non-trainable state that still belongs in a checkpoint (BN running stats).
struct NamedBuffer {
  std::string name;
  DenseMatrix* tensor;
};

}  // namespace onn
