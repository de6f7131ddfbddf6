#include "onn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "onn/errors.hpp"

namespace onn {

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ConfigError("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool DenseMatrix::all_finite() const { return onn::all_finite(data_); }

DenseVector matvec(const DenseMatrix& w, std::span<const double> x) {
  if (w.cols() != x.size()) {
    throw ConfigError("matvec: matrix has " + std::to_string(w.cols()) + " columns but vector has " +
                      std::to_string(x.size()) + " entries");
  }
  DenseVector out(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) out[r] = dot(w.row(r), x);
  return out;
}

DenseMatrix affine_rows(const DenseMatrix& x, const DenseMatrix& w, std::span<const double> bias) {
  if (x.cols() != w.cols() || bias.size() != w.rows()) {
    throw ConfigError("affine_rows: input width " + std::to_string(x.cols()) + " vs weight " +
                      std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
  DenseMatrix out(x.rows(), w.rows());
  for (std::size_t b = 0; b < x.rows(); ++b) {
    auto in = x.row(b);
    auto o = out.row(b);
    for (std::size_t r = 0; r < w.rows(); ++r) o[r] = dot(w.row(r), in) + bias[r];
  }
  return out;
}

DenseMatrix matmul_nn(const DenseMatrix& dy, const DenseMatrix& w) {
  if (dy.cols() != w.rows()) throw ConfigError("matmul_nn: inner dimensions differ");
  DenseMatrix out(dy.rows(), w.cols());
  for (std::size_t b = 0; b < dy.rows(); ++b) {
    auto o = out.row(b);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const double g = dy(b, r);
      if (g != 0.0) axpy(g, w.row(r), o);
    }
  }
  return out;
}

void accumulate_outer_tn(const DenseMatrix& dy, const DenseMatrix& x, DenseMatrix& dw) {
  if (dy.rows() != x.rows() || dw.rows() != dy.cols() || dw.cols() != x.cols()) {
    throw ConfigError("accumulate_outer_tn: shape mismatch");
  }
  for (std::size_t b = 0; b < dy.rows(); ++b) {
    auto in = x.row(b);
    for (std::size_t r = 0; r < dy.cols(); ++r) {
      const double g = dy(b, r);
      if (g != 0.0) axpy(g, in, dw.row(r));
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double SeededRng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return radius * std::cos(angle);
}

bool SeededRng::bernoulli(double p) { return uniform01() < p; }

SeededRng SeededRng::fork() {
  // splitmix64 finalizer decorrelates the child seed from the parent stream.
  std::uint64_t z = next_u64() + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return SeededRng(z ^ (z >> 31));
}

}  // namespace onn
