#pragma once

// Ground states (restarted Lanczos with full reorthogonalization), dense
// spectra through LAPACK, and Krylov propagation exp(-i H dt).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <lapacke.h>

#include "rydgauge/errors.hpp"
#include "rydgauge/sparse.hpp"

namespace rydgauge {

using cplx = std::complex<double>;

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}
inline cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}
template <class T>
double norm(const std::vector<T>& a) {
  double s = 0.0;
  for (const auto& x : a) s += std::norm(x);
  return std::sqrt(s);
}
template <class T, class S>
void axpy(S alpha, const std::vector<T>& x, std::vector<T>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}
template <class T>
void scale(std::vector<T>& x, double s) {
  for (auto& v : x) v *= s;
}

/// Eigen-decomposition of a symmetric tridiagonal matrix; z is column-major
/// k x k on return.
inline void tridiag_eigen(std::vector<double> d, std::vector<double> e, std::vector<double>& w,
                          std::vector<double>& z) {
  const lapack_int k = static_cast<lapack_int>(d.size());
  z.assign(static_cast<std::size_t>(k) * k, 0.0);
  e.resize(std::max<lapack_int>(k, 1));
  if (LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', k, d.data(), e.data(), z.data(), k) != 0)
    throw ConvergenceError("dstev failed");
  w = std::move(d);
}

}  // namespace detail

struct LanczosOptions {
  double tol = 1e-10;          ///< residual norm ||Hv - Ev||
  int max_iter = 5000;         ///< total matrix-vector products
  int krylov_dim = 120;        ///< vectors kept before a restart
  std::size_t memory_budget = std::size_t{1} << 30;  ///< bytes for Krylov vectors
  std::uint64_t seed = 12345;
  bool count_degeneracy = true;
  int max_degeneracy = 8;      ///< stop counting degenerate partners here
};

struct GroundState {
  double energy = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  int iterations = 0;
  int degeneracy = 1;  ///< eigenvalues within 100 tol of the ground energy
};

namespace detail {

struct Eigenpair {
  double value = 0.0;
  std::vector<double> vec;
  double residual = 0.0;
  int iterations = 0;
};

/// Lowest eigenpair of H restricted to the orthogonal complement of `locked`.
inline Eigenpair lanczos_lowest(const SparseOperator& H, const std::vector<std::vector<double>>& locked,
                                const LanczosOptions& opt, std::uint64_t seed) {
  const std::size_t n = H.dim();
  if (n == 0) throw DimensionError("ground_state: empty operator");
  auto deflate = [&](std::vector<double>& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : locked) axpy(-dot(u, v), u, v);
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> start(n);
  for (auto& x : start) x = uni(rng);
  deflate(start);
  double nrm = norm(start);
  if (nrm < 1e-300) throw ConvergenceError("ground_state: start vector lies in the locked space");
  scale(start, 1.0 / nrm);

  const std::size_t budget_vecs = std::max<std::size_t>(8, opt.memory_budget / (8 * n));
  const std::size_t free_dim = n - locked.size();
  const std::size_t m_max =
      std::min<std::size_t>({static_cast<std::size_t>(opt.krylov_dim), budget_vecs, free_dim});

  Eigenpair best;
  int total = 0;
  std::vector<std::vector<double>> V;
  std::vector<double> w(n);
  while (true) {
    V.clear();
    V.push_back(start);
    std::vector<double> alpha, beta;
    bool invariant = false;
    std::vector<double> theta, z;
    for (std::size_t j = 0; j < m_max; ++j) {
      H.apply<double>(std::span<const double>(V[j]), std::span<double>(w));
      ++total;
      const double a = dot(V[j], w);
      alpha.push_back(a);
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& u : locked) axpy(-dot(u, w), u, w);
        for (const auto& v : V) axpy(-dot(v, w), v, w);
      }
      const double b = norm(w);
      tridiag_eigen(alpha, beta, theta, z);
      const std::size_t k = alpha.size();
      const double est = b * std::abs(z[k - 1]);
      if (b < 1e-12 * std::max(1.0, std::abs(a)) || k == m_max || est < 0.1 * opt.tol ||
          total >= opt.max_iter) {
        invariant = b < 1e-12 * std::max(1.0, std::abs(a));
        break;
      }
      beta.push_back(b);
      V.emplace_back(w);
      scale(V.back(), 1.0 / b);
    }
    const std::size_t k = alpha.size();
    std::vector<double> ritz(n, 0.0);
    for (std::size_t j = 0; j < k; ++j) axpy(z[j], V[j], ritz);
    deflate(ritz);
    scale(ritz, 1.0 / norm(ritz));
    H.apply<double>(std::span<const double>(ritz), std::span<double>(w));
    ++total;
    const double e = dot(ritz, w);
    axpy(-e, ritz, w);
    const double res = norm(w);
    best = {e, ritz, res, total};
    if (res < opt.tol || invariant) {
      if (!invariant || res < std::max(opt.tol, 1e-8)) return best;
    }
    if (total >= opt.max_iter)
      throw ConvergenceError("ground_state: residual " + std::to_string(res) + " after " +
                             std::to_string(total) + " iterations");
    start = std::move(best.vec);
  }
}

}  // namespace detail

/// Lowest eigenpair by restarted Lanczos; deterministic for a given seed.
inline GroundState ground_state(const SparseOperator& H, const LanczosOptions& opt = {}) {
  auto gs = detail::lanczos_lowest(H, {}, opt, opt.seed);
  GroundState out{gs.value, std::move(gs.vec), gs.residual, gs.iterations, 1};
  if (opt.count_degeneracy && H.dim() > 1) {
    std::vector<std::vector<double>> locked{out.vector};
    while (out.degeneracy < opt.max_degeneracy && locked.size() < H.dim()) {
      auto next = detail::lanczos_lowest(H, locked, opt, opt.seed + locked.size());
      if (next.value - out.energy > 100.0 * opt.tol) break;
      ++out.degeneracy;
      locked.push_back(std::move(next.vec));
    }
  }
  // fix the sign convention: largest-magnitude component positive
  auto it = std::max_element(out.vector.begin(), out.vector.end(),
                             [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (it != out.vector.end() && *it < 0)
    for (auto& x : out.vector) x = -x;
  return out;
}

/// k lowest eigenpairs by successive deflation.
inline std::vector<GroundState> low_spectrum(const SparseOperator& H, int k,
                                             const LanczosOptions& opt = {}) {
  std::vector<GroundState> out;
  std::vector<std::vector<double>> locked;
  for (int i = 0; i < k && locked.size() < H.dim(); ++i) {
    auto e = detail::lanczos_lowest(H, locked, opt, opt.seed + i);
    locked.push_back(e.vec);
    out.push_back({e.value, std::move(e.vec), e.residual, e.iterations, 1});
  }
  return out;
}

inline constexpr std::size_t kDenseLimit = 4096;

struct DenseSpectrum {
  std::vector<double> values;   ///< ascending
  std::vector<double> vectors;  ///< column-major, column i belongs to values[i]
  std::size_t dim = 0;

  std::vector<double> vector(std::size_t i) const {
    return {vectors.begin() + i * dim, vectors.begin() + (i + 1) * dim};
  }
};

inline DenseSpectrum dense_spectrum(const SparseOperator& H, bool want_vectors = false) {
  const std::size_t n = H.dim();
  if (n > kDenseLimit) throw DimensionError("dense_spectrum: dimension above 4096");
  DenseSpectrum out;
  out.dim = n;
  if (n == 0) return out;
  std::vector<double> a = H.to_dense();  // symmetric, so layout is irrelevant
  out.values.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'U',
                                         static_cast<lapack_int>(n), a.data(),
                                         static_cast<lapack_int>(n), out.values.data());
  if (info != 0) throw ConvergenceError("dsyevd failed");
  if (want_vectors) out.vectors = std::move(a);
  return out;
}

/// Eigenpairs with eigenvalues in (lo, hi].
inline DenseSpectrum dense_window(const SparseOperator& H, double lo, double hi) {
  const std::size_t n = H.dim();
  if (n > kDenseLimit) throw DimensionError("dense_window: dimension above 4096");
  std::vector<double> a = H.to_dense();
  std::vector<double> w(n), z(n * n);
  std::vector<lapack_int> isuppz(2 * n);
  lapack_int m = 0;
  const lapack_int N = static_cast<lapack_int>(n);
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'V', 'U', N, a.data(), N, lo, hi, 0,
                                         0, 0.0, &m, w.data(), z.data(), N, isuppz.data());
  if (info != 0) throw ConvergenceError("dsyevr failed");
  DenseSpectrum out;
  out.dim = n;
  out.values.assign(w.begin(), w.begin() + m);
  out.vectors.assign(z.begin(), z.begin() + static_cast<std::size_t>(m) * n);
  return out;
}

// ---------------------------------------------------------------- evolution

/// H(t) = sum_i c_i(t) H_i with fixed operators.
class OperatorFamily {
 public:
  void add(std::function<double(double)> coeff, const SparseOperator& op) {
    if (!terms_.empty() && op.dim() != dim()) throw DimensionError("OperatorFamily: dimension mismatch");
    terms_.push_back({std::move(coeff), &op});
  }
  std::size_t dim() const { return terms_.empty() ? 0 : terms_.front().op->dim(); }

  void apply(double t, std::span<const cplx> x, std::span<cplx> y) const {
    std::fill(y.begin(), y.end(), cplx{});
    tmp_.resize(x.size());
    for (const auto& term : terms_) {
      const double c = term.coeff(t);
      if (c == 0.0) continue;
      term.op->apply<cplx>(x, std::span<cplx>(tmp_));
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += c * tmp_[i];
    }
  }

  double expectation(double t, const std::vector<cplx>& v) const {
    std::vector<cplx> y(v.size());
    apply(t, v, y);
    return detail::dot(v, y).real();
  }

  double norm_bound(double t) const {
    double b = 0.0;
    for (const auto& term : terms_) b += std::abs(term.coeff(t)) * term.op->norm_bound();
    return b;
  }

 private:
  struct Term {
    std::function<double(double)> coeff;
    const SparseOperator* op;
  };
  std::vector<Term> terms_;
  mutable std::vector<cplx> tmp_;
};

struct EvolveOptions {
  int krylov_dim = 20;
  double step_tol = 1e-8;  ///< per-step error estimate
  int max_substeps = 1 << 12;
};

struct EvolveStats {
  int steps = 0;
  int substeps = 0;
  double max_error = 0.0;
};

namespace detail {

/// One exp(-i H dt) v step on a fixed Hamiltonian given as a matvec. Returns
/// the a-posteriori error estimate, or a negative value if dt must shrink.
template <class MatVec>
double krylov_step(const MatVec& mv, std::vector<cplx>& v, double dt, int m_max, double tol) {
  const std::size_t n = v.size();
  const double v_norm = norm(v);
  if (v_norm == 0.0) return 0.0;
  std::vector<std::vector<cplx>> V;
  V.emplace_back(v);
  scale(V[0], 1.0 / v_norm);
  std::vector<double> alpha, beta;
  std::vector<cplx> w(n);
  double b_last = 0.0;
  const int m = static_cast<int>(std::min<std::size_t>(m_max, n));
  for (int j = 0; j < m; ++j) {
    mv(V[j], w);
    const double a = dot(V[j], w).real();
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : V) axpy(-dot(u, w), u, w);
    b_last = norm(w);
    if (b_last < 1e-13 || j + 1 == m) break;
    beta.push_back(b_last);
    V.emplace_back(w);
    scale(V.back(), 1.0 / b_last);
  }
  const std::size_t k = alpha.size();
  std::vector<double> theta, z;
  tridiag_eigen(alpha, beta, theta, z);
  // c = Z exp(-i theta dt) Z^T e1
  std::vector<cplx> c(k, cplx{});
  for (std::size_t q = 0; q < k; ++q) {
    const cplx f = std::exp(cplx(0.0, -theta[q] * dt)) * z[q * k + 0];
    for (std::size_t r = 0; r < k; ++r) c[r] += z[q * k + r] * f;
  }
  const bool happy = b_last < 1e-13 || k == n;
  const double err = happy ? 0.0 : b_last * std::abs(c[k - 1]);
  if (err > tol) return -err;
  std::vector<cplx> out(n, cplx{});
  for (std::size_t r = 0; r < k; ++r) axpy(c[r] * v_norm, V[r], out);
  v = std::move(out);
  return err;
}

}  // namespace detail

/// Propagates v over [t0, t1] with the family frozen at the interval midpoint,
/// splitting the interval until every Krylov step meets the tolerance.
inline void evolve_step(const OperatorFamily& H, std::vector<cplx>& v, double t0, double t1,
                        const EvolveOptions& opt, EvolveStats& stats) {
  const double tm = 0.5 * (t0 + t1);
  auto mv = [&](const std::vector<cplx>& x, std::vector<cplx>& y) { H.apply(tm, x, y); };
  int pieces = 1;
  while (true) {
    std::vector<cplx> trial = v;
    const double dt = (t1 - t0) / pieces;
    bool ok = true;
    double worst = 0.0;
    for (int s = 0; s < pieces && ok; ++s) {
      const double err = detail::krylov_step(mv, trial, dt, opt.krylov_dim, opt.step_tol / pieces);
      if (err < 0) ok = false;
      worst = std::max(worst, std::abs(err));
    }
    if (ok) {
      v = std::move(trial);
      stats.substeps += pieces;
      stats.max_error = std::max(stats.max_error, worst);
      ++stats.steps;
      return;
    }
    pieces *= 2;
    if (pieces > opt.max_substeps) throw ConvergenceError("evolve: step error budget exceeded");
  }
}

/// Piecewise-constant propagation over a uniform grid. `observe(k, t, v)` is
/// called at every grid point, including the first.
inline std::vector<cplx> evolve(const OperatorFamily& H, std::vector<cplx> v0,
                                const std::vector<double>& t_grid,
                                const std::function<void(std::size_t, double, const std::vector<cplx>&)>& observe,
                                const EvolveOptions& opt = {}, EvolveStats* stats_out = nullptr) {
  if (v0.size() != H.dim()) throw DimensionError("evolve: dimension mismatch");
  if (t_grid.empty()) throw Error("evolve: empty time grid");
  for (std::size_t k = 2; k < t_grid.size(); ++k) {
    const double d0 = t_grid[1] - t_grid[0], dk = t_grid[k] - t_grid[k - 1];
    if (std::abs(dk - d0) > 1e-9 * std::max(1.0, std::abs(d0)))
      throw Error("evolve: time grid must be uniform");
  }
  EvolveStats stats;
  if (observe) observe(0, t_grid[0], v0);
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    evolve_step(H, v0, t_grid[k - 1], t_grid[k], opt, stats);
    if (observe) observe(k, t_grid[k], v0);
  }
  if (stats_out) *stats_out = stats;
  return v0;
}

inline std::vector<double> uniform_grid(double t0, double t1, double dt) {
  if (!(dt > 0.0)) throw Error("uniform_grid: dt must be positive");
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round((t1 - t0) / dt)));
  std::vector<double> g(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) g[k] = t0 + (t1 - t0) * static_cast<double>(k) / steps;
  return g;
}

template <class T>
std::vector<cplx> to_complex(const std::vector<T>& v) {
  return {v.begin(), v.end()};
}

}  // namespace rydgauge
