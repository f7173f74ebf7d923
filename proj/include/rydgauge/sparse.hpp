#pragma once

// Real symmetric operators in compressed-row storage. Rows are sorted by
// column and duplicates are summed when the operator is assembled.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rydgauge/errors.hpp"

namespace rydgauge {

class SparseOperator {
 public:
  SparseOperator() = default;

  std::size_t dim() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t nnz() const { return col_.size(); }
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  std::span<const std::uint32_t> row_cols(std::size_t i) const {
    return {col_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {val_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  /// y = H x. Works for real and complex amplitudes.
  template <class T>
  void apply(std::span<const T> x, std::span<T> y) const {
    if (x.size() != dim() || y.size() != dim())
      throw DimensionError("SparseOperator::apply: dimension mismatch");
    const std::size_t n = dim();
    for (std::size_t i = 0; i < n; ++i) {
      T acc{};
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += val_[k] * x[col_[k]];
      y[i] = acc;
    }
  }

  template <class T>
  std::vector<T> apply(const std::vector<T>& x) const {
    std::vector<T> y(x.size());
    apply<T>(std::span<const T>(x), std::span<T>(y));
    return y;
  }

  /// <x|H|x> for real x.
  double expectation(const std::vector<double>& x) const {
    const auto y = apply(x);
    double e = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) e += x[i] * y[i];
    return e;
  }

  double expectation(const std::vector<std::complex<double>>& x) const {
    const auto y = apply(x);
    std::complex<double> e{};
    for (std::size_t i = 0; i < x.size(); ++i) e += std::conj(x[i]) * y[i];
    return e.real();
  }

  double element(std::size_t i, std::size_t j) const {
    const auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(j));
    if (it == cols.end() || *it != j) return 0.0;
    return val_[row_ptr_[i] + (it - cols.begin())];
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(dim(), 0.0);
    for (std::size_t i = 0; i < dim(); ++i) d[i] = element(i, i);
    return d;
  }

  /// Largest |H_ij - H_ji| over stored entries.
  double asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      const auto cols = row_cols(i);
      for (std::size_t k = 0; k < cols.size(); ++k)
        worst = std::max(worst, std::abs(val_[row_ptr_[i] + k] - element(cols[k], i)));
    }
    return worst;
  }
  bool is_symmetric(double tol = 1e-12) const { return asymmetry() <= tol; }

  /// Upper bound on the spectral radius (max absolute row sum).
  double norm_bound() const {
    double b = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      double s = 0.0;
      for (double v : row_values(i)) s += std::abs(v);
      b = std::max(b, s);
    }
    return b;
  }

  /// Row-major dense copy.
  std::vector<double> to_dense() const {
    const std::size_t n = dim();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) a[i * n + col_[k]] += val_[k];
    return a;
  }

  /// Coordinate-list text export with a `# dim=<n> model=<name>` header.
  void write_coo(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    os << "# dim=" << dim() << " model=" << name_ << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        os << i << ' ' << col_[k] << ' ' << val_[k] << "\n";
  }

  /// a H + b K on a common dimension.
  friend SparseOperator combine(double a, const SparseOperator& h, double b, const SparseOperator& k);

 private:
  friend class OperatorBuilder;
  std::string name_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
};

/// Collects entries row by row. Rows may be added in any order; entries of a
/// row are sorted and duplicates summed by finish().
class OperatorBuilder {
 public:
  explicit OperatorBuilder(std::size_t dim) : rows_(dim) {
    if (dim > (std::size_t{1} << 32)) throw DimensionError("operator dimension exceeds 2^32");
  }

  std::size_t dim() const { return rows_.size(); }

  void add(std::size_t i, std::size_t j, double v) {
    if (i >= rows_.size() || j >= rows_.size()) throw DimensionError("OperatorBuilder: index out of range");
    rows_[i].emplace_back(static_cast<std::uint32_t>(j), v);
  }

  SparseOperator finish(std::string name, bool drop_zeros = true) {
    SparseOperator op;
    op.name_ = std::move(name);
    op.row_ptr_.assign(rows_.size() + 1, 0);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      auto& r = rows_[i];
      std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < r.size();) {
        const std::uint32_t c = r[k].first;
        double s = 0.0;
        for (; k < r.size() && r[k].first == c; ++k) s += r[k].second;
        if (drop_zeros && s == 0.0) continue;
        op.col_.push_back(c);
        op.val_.push_back(s);
      }
      op.row_ptr_[i + 1] = op.col_.size();
      std::vector<std::pair<std::uint32_t, double>>().swap(r);
    }
    return op;
  }

 private:
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows_;
};

inline SparseOperator combine(double a, const SparseOperator& h, double b, const SparseOperator& k) {
  if (h.dim() != k.dim()) throw DimensionError("combine: dimension mismatch");
  OperatorBuilder ob(h.dim());
  for (std::size_t i = 0; i < h.dim(); ++i) {
    auto hc = h.row_cols(i);
    auto hv = h.row_values(i);
    for (std::size_t q = 0; q < hc.size(); ++q) ob.add(i, hc[q], a * hv[q]);
    auto kc = k.row_cols(i);
    auto kv = k.row_values(i);
    for (std::size_t q = 0; q < kc.size(); ++q) ob.add(i, kc[q], b * kv[q]);
  }
  return ob.finish(h.name());
}

}  // namespace rydgauge
