#pragma once

// Correlations, structure factors S_k[mu] = 4/N^2 sum_{p,p'} e^{ik(p-p')}
// <S^mu_p S^mu_p'>, flippable-plaquette counts and the RVBS diagnostic.
// N is the number of dynamical spins; positions are integer lattice coordinates.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydgauge/basis.hpp"
#include "rydgauge/errors.hpp"
#include "rydgauge/gauge.hpp"
#include "rydgauge/hamiltonian.hpp"
#include "rydgauge/lattice.hpp"

namespace rydgauge {

enum class Axis { x, z };

inline char to_char(Axis a) { return a == Axis::x ? 'x' : 'z'; }

struct KPoint {
  double kx = 0.0;
  double ky = 0.0;
  bool operator==(const KPoint&) const = default;
};

inline constexpr double kPi = std::numbers::pi;

namespace detail {

template <class T>
double abs2(const T& x) {
  return std::norm(x);
}

inline double cj(double x) { return x; }
inline std::complex<double> cj(const std::complex<double>& x) { return std::conj(x); }

template <class T>
void check_state(const Basis& basis, const std::vector<T>& v, const char* who) {
  if (v.size() != basis.size()) throw DimensionError(std::string(who) + ": state/basis size mismatch");
  if (basis.picture() != BasisPicture::dual)
    throw DimensionError(std::string(who) + ": dual-spin basis required");
}

}  // namespace detail

/// <S^mu_p>. Off-sector single flips contribute zero.
template <class T>
double magnetization(const Basis& basis, const std::vector<T>& v, Axis mu, int p) {
  detail::check_state(basis, v, "magnetization");
  double acc = 0.0;
  if (mu == Axis::z) {
    for (std::size_t i = 0; i < v.size(); ++i) acc += detail::abs2(v[i]) * sz(basis[i], p);
    return acc;
  }
  T sum{};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto j = basis.index_of(basis[i] ^ (std::uint64_t{1} << p));
    if (j != Basis::npos) sum += detail::cj(v[j]) * v[i];
  }
  return 0.5 * std::real(sum);
}

/// <S^mu_p S^mu_p'>; the x case flips both spins through the basis lookup.
template <class T>
double correlation(const Basis& basis, const std::vector<T>& v, Axis mu, int p, int q) {
  detail::check_state(basis, v, "correlation");
  if (p == q) {
    double n = 0.0;
    for (const auto& x : v) n += detail::abs2(x);
    return 0.25 * n;
  }
  if (mu == Axis::z) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += detail::abs2(v[i]) * sz(basis[i], p) * sz(basis[i], q);
    return acc;
  }
  const std::uint64_t m = (std::uint64_t{1} << p) | (std::uint64_t{1} << q);
  T sum{};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto j = basis.index_of(basis[i] ^ m);
    if (j != Basis::npos) sum += detail::cj(v[j]) * v[i];
  }
  return 0.25 * std::real(sum);
}

/// Full correlation matrix, row-major N x N; `connected` subtracts <S_p><S_q>.
template <class T>
std::vector<double> correlation_matrix(const Lattice& lat, const Basis& basis, const std::vector<T>& v,
                                       Axis mu, bool connected = false) {
  const int n = lat.num_spins();
  std::vector<double> c(n * n);
  std::vector<double> m(n, 0.0);
  if (connected)
    for (int p = 0; p < n; ++p) m[p] = magnetization(basis, v, mu, p);
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q) {
      const double val = correlation(basis, v, mu, p, q) - m[p] * m[q];
      c[p * n + q] = c[q * n + p] = val;
    }
  return c;
}

inline double phase_sum_weight(const Lattice& lat, const KPoint& k, int p, int q) {
  const double dx = lat.spin_x(p) - lat.spin_x(q);
  const double dy = lat.spin_y(p) - lat.spin_y(q);
  return std::cos(k.kx * dx + k.ky * dy);
}

/// Structure factor from a correlation matrix (the double-sum code path).
inline double structure_factor_from_correlations(const Lattice& lat, const std::vector<double>& corr,
                                                 const KPoint& k) {
  const int n = lat.num_spins();
  double s = 0.0;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) s += phase_sum_weight(lat, k, p, q) * corr[p * n + q];
  return 4.0 * s / (static_cast<double>(n) * n);
}

/// Structure factor as <v| A^dag A |v> with A = sum_p e^{ik p} S^mu_p,
/// accumulated directly rather than through the correlation matrix.
template <class T>
double structure_factor(const Lattice& lat, const Basis& basis, const std::vector<T>& v, Axis mu,
                        const KPoint& k) {
  detail::check_state(basis, v, "structure_factor");
  const int n = lat.num_spins();
  std::vector<std::complex<double>> ph(n);
  for (int p = 0; p < n; ++p)
    ph[p] = std::polar(1.0, k.kx * lat.spin_x(p) + k.ky * lat.spin_y(p));
  double acc = 0.0;
  if (mu == Axis::z) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::complex<double> a{};
      for (int p = 0; p < n; ++p) a += ph[p] * sz(basis[i], p);
      acc += detail::abs2(v[i]) * std::norm(a);
    }
  } else if (basis.is_full()) {
    std::vector<std::complex<double>> u(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      for (int p = 0; p < n; ++p) u[i ^ (std::size_t{1} << p)] += 0.5 * ph[p] * std::complex<double>(v[i]);
    for (const auto& a : u) acc += std::norm(a);
  } else {
    // <v| A^dag A |v> with A = sum_p ph_p S^x_p; double flips leaving the basis vanish
    std::complex<double> tot{};
    double nrm = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::complex<double> vi(v[i]);
      nrm += std::norm(vi);
      if (vi == 0.0) continue;
      for (int p = 0; p < n; ++p) {
        const std::uint64_t t = basis[i] ^ (std::uint64_t{1} << p);
        for (int q = 0; q < n; ++q) {
          if (q == p) continue;
          const auto j = basis.index_of(t ^ (std::uint64_t{1} << q));
          if (j != Basis::npos) tot += std::conj(ph[p]) * ph[q] * std::conj(std::complex<double>(v[j])) * vi;
        }
      }
    }
    acc = 0.25 * (tot.real() + n * nrm);
  }
  return 4.0 * acc / (static_cast<double>(n) * n);
}

/// k = (2 pi m / nx, 2 pi l / ny), m < nx, l < ny.
inline std::vector<KPoint> reciprocal_grid(const Lattice& lat) {
  std::vector<KPoint> g;
  for (int l = 0; l < lat.ny(); ++l)
    for (int m = 0; m < lat.nx(); ++m) g.push_back({2.0 * kPi * m / lat.nx(), 2.0 * kPi * l / lat.ny()});
  return g;
}

struct StructureFactorEntry {
  Axis mu = Axis::z;
  KPoint k;
  double value = 0.0;
  bool connected = false;
};

struct StructureFactorReport {
  LatticeSpec lattice;
  std::vector<StructureFactorEntry> entries;

  double get(Axis mu, const KPoint& k, bool connected = false) const {
    for (const auto& e : entries)
      if (e.mu == mu && e.connected == connected && std::abs(e.k.kx - k.kx) < 1e-12 &&
          std::abs(e.k.ky - k.ky) < 1e-12)
        return e.value;
    throw Error("StructureFactorReport: entry not computed");
  }
  double s00(Axis mu) const { return get(mu, {0.0, 0.0}); }
  double spipi(Axis mu) const { return get(mu, {kPi, kPi}); }
};

inline std::vector<KPoint> standard_kpoints() { return {{0.0, 0.0}, {kPi, kPi}, {kPi / 2, kPi / 2}}; }

/// Raw values at the standard k-points (and the full grid when asked), plus
/// connected variants flagged as such: raw minus 4/N^2 |sum_p e^{ikp} <S_p>|^2.
template <class T>
StructureFactorReport structure_factor_report(const Lattice& lat, const Basis& basis,
                                              const std::vector<T>& v, bool full_grid = false,
                                              bool with_connected = true) {
  StructureFactorReport r{lat.spec(), {}};
  auto ks = standard_kpoints();
  if (full_grid)
    for (const auto& k : reciprocal_grid(lat))
      if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
  const int n = lat.num_spins();
  for (Axis mu : {Axis::z, Axis::x}) {
    std::vector<double> m;
    if (with_connected)
      for (int p = 0; p < n; ++p) m.push_back(magnetization(basis, v, mu, p));
    for (const auto& k : ks) {
      const double raw = structure_factor(lat, basis, v, mu, k);
      r.entries.push_back({mu, k, raw, false});
      if (with_connected) {
        std::complex<double> a{};
        for (int p = 0; p < n; ++p) a += m[p] * std::polar(1.0, k.kx * lat.spin_x(p) + k.ky * lat.spin_y(p));
        r.entries.push_back({mu, k, raw - 4.0 * std::norm(a) / (static_cast<double>(n) * n), true});
      }
    }
  }
  return r;
}

/// <sum_p (P^{up..up} + P^{down..down})> in the dual picture, or the number of
/// flippable plaquettes in the link picture.
template <class T>
double flippable_count(const Lattice& lat, const Basis& basis, const std::vector<T>& v) {
  if (v.size() != basis.size()) throw DimensionError("flippable_count: size mismatch");
  double acc = 0.0;
  if (basis.picture() == BasisPicture::dual) {
    const FlipTable ft(lat);
    for (std::size_t i = 0; i < v.size(); ++i) acc += detail::abs2(v[i]) * ft.flippable_count(basis[i]);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      int c = 0;
      for (int p = 0; p < lat.num_spins(); ++p) c += plaquette_flippable(lat, LinkConfig{basis[i]}, p);
      acc += detail::abs2(v[i]) * c;
    }
  }
  return acc;
}

struct RvbsDiagnostic {
  double ratio = 0.0;     ///< S_(pi,pi)[z] / S_(0,0)[z]
  double x_peak = 0.0;    ///< S_(pi,pi)[x]
  double baseline = 0.0;  ///< S_(pi,pi)[x] of the all-up product state
  bool verdict = false;
};

struct RvbsOptions {
  double threshold = 0.1;
  double x_factor = 2.0;
};

/// The x baseline of the ferromagnet is 1/N: only p = p' terms survive.
inline RvbsDiagnostic rvbs_signature(double s00z, double spipiz, double spipix, int num_spins,
                                     const RvbsOptions& opt = {}) {
  RvbsDiagnostic d;
  d.baseline = 1.0 / num_spins;
  d.x_peak = spipix;
  if (s00z < 1e-12) {
    d.ratio = std::numeric_limits<double>::infinity();
    d.verdict = false;
    return d;
  }
  d.ratio = spipiz / s00z;
  d.verdict = std::abs(d.ratio - 1.0) < opt.threshold && spipix >= opt.x_factor * d.baseline;
  return d;
}

inline RvbsDiagnostic rvbs_signature(const StructureFactorReport& r, const RvbsOptions& opt = {}) {
  const int n = r.lattice.nx * r.lattice.ny;
  return rvbs_signature(r.s00(Axis::z), r.spipi(Axis::z), r.spipi(Axis::x), n, opt);
}

template <class T>
double fidelity(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) throw DimensionError("fidelity: size mismatch");
  std::complex<double> s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(std::complex<double>(a[i])) * std::complex<double>(b[i]);
  return std::norm(s);
}

inline nlohmann::json to_json(const StructureFactorReport& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : r.entries)
    arr.push_back({{"mu", std::string(1, to_char(e.mu))},
                   {"kx", e.k.kx},
                   {"ky", e.k.ky},
                   {"value", e.value},
                   {"connected", e.connected}});
  return {{"lattice", to_string(r.lattice)}, {"entries", arr}};
}

inline nlohmann::json to_json(const RvbsDiagnostic& d) {
  return {{"ratio", d.ratio}, {"x_peak", d.x_peak}, {"baseline", d.baseline}, {"verdict", d.verdict}};
}

}  // namespace rydgauge
