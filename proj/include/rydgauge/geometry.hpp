#pragma once

// Van der Waals Ising couplings of decorated atom-pair arrays and the
// geometric conditions that turn them into a generalized blockade.
//
// Units: lengths in the leg spacing a_x = 1, energies in C6 / a_x^6 unless a
// C6 is passed explicitly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "rydgauge/errors.hpp"

namespace rydgauge {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  constexpr bool operator==(const Vec3&) const = default;
};

inline constexpr Vec3 x_hat{1.0, 0.0, 0.0};
inline constexpr Vec3 y_hat{0.0, 1.0, 0.0};
inline constexpr Vec3 z_hat{0.0, 0.0, 1.0};

/// Displacement of the two atoms of a pair, |eta| (cos theta x + sin theta z).
inline Vec3 pair_displacement(double eta_norm, double theta = 0.0) {
  return {eta_norm * std::cos(theta), 0.0, eta_norm * std::sin(theta)};
}

struct GeometryOptions {
  double min_separation = 0.05;        ///< collision guard, units of a_x
  double root_tolerance = 1e-10;       ///< relative bisection tolerance on a_y
  double degeneracy_threshold = 1e-6;  ///< relative threshold for vanishing subset sums
};

namespace detail {

inline double inv6(double r) {
  const double r2 = r * r;
  return 1.0 / (r2 * r2 * r2);
}

inline void check_separation(const Vec3& sep, const Vec3& eta, double min_sep) {
  const double dp = (sep + eta).norm();
  const double dm = (sep - eta).norm();
  const double d0 = sep.norm();
  if (d0 < min_sep || dp < min_sep || dm < min_sep) {
    std::ostringstream os;
    os << "degenerate geometry: atom separation below " << min_sep << " (|sep|=" << d0
       << ", |sep+eta|=" << dp << ", |sep-eta|=" << dm << ")";
    throw DegenerateGeometryError(os.str());
  }
}

}  // namespace detail

/// Ising coupling between two pseudo spins whose pair centres are separated by
/// `sep`: C6 (2/|sep|^6 - 1/|sep+eta|^6 - 1/|sep-eta|^6).
inline double ising_coupling_A(const Vec3& sep, const Vec3& eta, double c6,
                               double min_separation = GeometryOptions{}.min_separation) {
  detail::check_separation(sep, eta, min_separation);
  return c6 * (2.0 * detail::inv6(sep.norm()) - detail::inv6((sep + eta).norm()) -
               detail::inv6((sep - eta).norm()));
}

/// On-site field generated by a neighbour at `sep`: C6 (1/|sep+eta|^6 - 1/|sep-eta|^6).
inline double onsite_coefficient_B(const Vec3& sep, const Vec3& eta, double c6,
                                   double min_separation = GeometryOptions{}.min_separation) {
  detail::check_separation(sep, eta, min_separation);
  return c6 * (detail::inv6((sep + eta).norm()) - detail::inv6((sep - eta).norm()));
}

struct DriveParams {
  double omega = 0.0;        ///< Rabi frequency
  double detuning = 0.0;     ///< Delta, negative for the blue-detuned drive
  double pair_offset = 0.0;  ///< delta, intra-pair ground-state energy offset
};

/// Effective Rabi frequency of a pair pseudo spin,
/// J = Omega^2 (1/Delta + |eta|^6 / (C6 - Delta |eta|^6)).
inline double effective_rabi(const DriveParams& drive, double eta_norm, double c6) {
  if (drive.detuning == 0.0) throw PoleError("effective_rabi: zero detuning");
  const double e6 = std::pow(eta_norm, 6);
  const double denom = c6 - drive.detuning * e6;
  if (denom == 0.0) throw PoleError("effective_rabi: pole at C6 = Delta |eta|^6");
  return drive.omega * drive.omega * (1.0 / drive.detuning + e6 / denom);
}

/// True when Omega << -Delta and C6/|eta|^6 >> Omega, each by at least `ratio`.
inline bool perturbative_regime(const DriveParams& drive, double eta_norm, double c6,
                                double ratio = 10.0) {
  const double om = std::abs(drive.omega);
  return drive.detuning < 0.0 && ratio * om <= -drive.detuning &&
         c6 / std::pow(eta_norm, 6) >= ratio * om;
}

enum class ArrayKind { ladder, square };

inline std::string to_string(ArrayKind k) { return k == ArrayKind::ladder ? "ladder" : "square"; }

/// Decorated array: pair centres on a (possibly sublattice-shifted) rectangular
/// grid, atoms at centre +- eta/2.
struct PairArrayGeometry {
  ArrayKind kind = ArrayKind::ladder;
  double a_y = 1.0;
  double d_y = 0.0;  ///< y-shift of the odd sublattice (square arrays)
  Vec3 eta{};
  double c6 = 1.0;

  double theta() const { return std::atan2(eta.z, eta.x); }

  /// Pair centre of lattice site (x, y); x is along the legs.
  Vec3 position(int x, int y) const {
    const bool odd = ((x + y) % 2 + 2) % 2 == 1;
    const double shift = (kind == ArrayKind::square && odd) ? d_y : 0.0;
    return {static_cast<double>(x), a_y * y + shift, 0.0};
  }

  /// Centre separation p - p' for p = (x, y) and p' = (x + dx, y + dy).
  Vec3 separation(int x, int y, int dx, int dy) const {
    return position(x, y) - position(x + dx, y + dy);
  }
};

/// Lattice displacement to a k-th neighbour. For ladders dy = +1 means "the
/// other leg" seen from leg 0; the caller flips its sign on leg 1.
struct Displacement {
  int dx = 0;
  int dy = 0;
};

inline std::vector<Displacement> neighbor_displacements(ArrayKind kind, int order) {
  if (kind == ArrayKind::ladder) {
    if (order == 1) return {{-1, 0}, {0, 1}, {1, 0}};
    if (order == 2) return {{-1, 1}, {1, 1}};
  } else {
    // anticlockwise, starting from +x
    if (order == 1) return {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    if (order == 2) return {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  }
  throw Error("neighbor_displacements: neighbour order must be 1 or 2");
}

struct Coupling {
  int order = 1;       ///< k of the k-neighbour shell
  int sublattice = 0;  ///< leg (ladder) or checkerboard parity (square)
  Displacement displacement;
  Vec3 separation;  ///< p - p'
  double A = 0.0;
  double B = 0.0;
};

/// A and B for every k <= k_max neighbour of a representative site of each
/// sublattice. Neighbours beyond k = 2 are neglected.
inline std::vector<Coupling> coupling_table(const PairArrayGeometry& geom, int k_max,
                                            const GeometryOptions& opts = {}) {
  if (k_max < 1 || k_max > 2) throw Error("coupling_table: k_max must be 1 or 2");
  std::vector<Coupling> table;
  for (int sub = 0; sub < 2; ++sub) {
    // ladder: leg `sub`; square: site (sub, 0) has parity `sub`
    const int x0 = geom.kind == ArrayKind::square ? sub : 0;
    const int y0 = geom.kind == ArrayKind::ladder ? sub : 0;
    for (int k = 1; k <= k_max; ++k) {
      for (auto d : neighbor_displacements(geom.kind, k)) {
        if (geom.kind == ArrayKind::ladder && sub == 1) d.dy = -d.dy;
        Coupling c;
        c.order = k;
        c.sublattice = sub;
        c.displacement = d;
        c.separation = geom.separation(x0, y0, d.dx, d.dy);
        c.A = ising_coupling_A(c.separation, geom.eta, geom.c6, opts.min_separation);
        c.B = onsite_coefficient_B(c.separation, geom.eta, geom.c6, opts.min_separation);
        table.push_back(c);
      }
    }
  }
  return table;
}

/// Smallest |sum| over nonempty proper subsets of the nearest-neighbour
/// couplings; this is the blockade gap G. Throws when some subset sum falls
/// below threshold * max|A|.
inline double validate_generalized_blockade(std::span<const double> couplings,
                                            double threshold = GeometryOptions{}.degeneracy_threshold) {
  const std::size_t n = couplings.size();
  if (n == 0) throw Error("validate_generalized_blockade: empty coupling list");
  if (n > 20) throw Error("validate_generalized_blockade: too many couplings");
  double amax = 0.0;
  for (double a : couplings) amax = std::max(amax, std::abs(a));
  const double floor = threshold * amax;
  double gap = std::numeric_limits<double>::infinity();
  const std::uint32_t full = (1u << n) - 1u;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) s += couplings[i];
    if (std::abs(s) <= floor) {
      std::vector<std::size_t> subset;
      std::ostringstream os;
      os << "generalized blockade degenerate: subset {";
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
          if (!subset.empty()) os << ", ";
          os << i;
          subset.push_back(i);
        }
      }
      os << "} sums to " << s;
      throw BlockadeDegeneracyError(os.str(), std::move(subset));
    }
    gap = std::min(gap, std::abs(s));
  }
  return gap;
}

struct BlockadeSolution {
  PairArrayGeometry geometry;
  double a_y = 0.0;
  double G = 0.0;
  double Lambda = 0.0;
  std::vector<Coupling> couplings;  ///< k <= 2 table

  /// Nearest-neighbour A values seen from sublattice 0, in neighbour order.
  std::vector<double> nearest_couplings() const {
    std::vector<double> out;
    for (const auto& c : couplings)
      if (c.order == 1 && c.sublattice == 0) out.push_back(c.A);
    return out;
  }
};

namespace detail {

template <class F>
double bisect_root(F f, double lo, double hi, double rel_tol, const char* who) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!(flo * fhi < 0.0)) {
    std::ostringstream os;
    os << who << ": no sign change in bracket [" << lo << ", " << hi << "] (f=" << flo << ", "
       << fhi << ")";
    throw NoRootError(os.str());
  }
  auto done = [rel_tol](double a, double b) {
    return std::abs(b - a) <= rel_tol * std::max(std::abs(a), std::abs(b));
  };
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, done, max_iter);
  return 0.5 * (a + b);
}

/// Closest approach of atoms belonging to different pairs, over the k <= 2 shells.
inline double min_interpair_atom_distance(const PairArrayGeometry& g) {
  double dmin = std::numeric_limits<double>::infinity();
  for (int sub = 0; sub < 2; ++sub) {
    const int x0 = g.kind == ArrayKind::square ? sub : 0;
    const int y0 = g.kind == ArrayKind::ladder ? sub : 0;
    for (int k = 1; k <= 2; ++k) {
      for (auto d : neighbor_displacements(g.kind, k)) {
        if (g.kind == ArrayKind::ladder && sub == 1) d.dy = -d.dy;
        const Vec3 s = g.separation(x0, y0, d.dx, d.dy);
        for (double s1 : {-0.5, 0.5})
          for (double s2 : {-0.5, 0.5}) dmin = std::min(dmin, (s + g.eta * (s1 - s2)).norm());
      }
    }
  }
  return dmin;
}

inline void check_pairs_separated(const PairArrayGeometry& g) {
  const double dmin = min_interpair_atom_distance(g);
  if (!(dmin > g.eta.norm())) {
    std::ostringstream os;
    os << "degenerate geometry: inter-pair atom distance " << dmin << " does not exceed |eta| = "
       << g.eta.norm();
    throw DegenerateGeometryError(os.str());
  }
}

}  // namespace detail

/// Ladder with pairs along x: a_y solves 2 A(x, eta) = -A(a_y y, eta);
/// G = -A(x, eta) and Lambda = A(x + a_y y, eta) / 2.
inline BlockadeSolution solve_ladder_geometry(double eta_norm, double c6 = 1.0,
                                              const GeometryOptions& opts = {}) {
  if (!(eta_norm > 0.0) || !(eta_norm < 0.5))
    throw DegenerateGeometryError("solve_ladder_geometry: requires 0 < |eta| < 0.5 a_x");
  const Vec3 eta = pair_displacement(eta_norm);
  const double m = opts.min_separation;
  const double a_leg = ising_coupling_A(x_hat, eta, c6, m);
  auto f = [&](double a_y) { return 2.0 * a_leg + ising_coupling_A(y_hat * a_y, eta, c6, m); };
  BlockadeSolution sol;
  sol.a_y = detail::bisect_root(f, eta_norm + m, 1.0, opts.root_tolerance, "solve_ladder_geometry");
  sol.geometry = PairArrayGeometry{ArrayKind::ladder, sol.a_y, 0.0, eta, c6};
  detail::check_pairs_separated(sol.geometry);
  sol.G = -a_leg;
  sol.Lambda = 0.5 * ising_coupling_A(x_hat + y_hat * sol.a_y, eta, c6, m);
  sol.couplings = coupling_table(sol.geometry, 2, opts);
  const auto nn = sol.nearest_couplings();
  // the blockade gap must reproduce G; this also rejects accidental degeneracies
  const double gap = validate_generalized_blockade(nn, opts.degeneracy_threshold);
  if (std::abs(gap - std::abs(sol.G)) > 1e-6 * std::abs(sol.G))
    throw Error("solve_ladder_geometry: blockade gap inconsistent with -A(x)");
  return sol;
}

/// Closed-form gap for the shifted square array (top/bottom couplings
/// A((a_y -+ d_y) y)); equals validate_generalized_blockade on the NN couplings.
inline double square_gap_formula(const PairArrayGeometry& g) {
  const double dy = std::abs(g.d_y);
  const double lower = ising_coupling_A(y_hat * (g.a_y - dy), g.eta, g.c6);
  const double upper = ising_coupling_A(y_hat * (g.a_y + dy), g.eta, g.c6);
  return std::min(upper, 0.5 * (lower - upper));
}

/// Square array of pairs in the xz-plane with sublattice shift d_y: a_y solves
/// -2 A(x + d_y y) = A((a_y - d_y) y) + A((a_y + d_y) y); Lambda = A(x + a_y y).
inline BlockadeSolution solve_square_geometry(double eta_norm, double theta, double d_y,
                                              double c6 = 1.0, const GeometryOptions& opts = {}) {
  if (!(eta_norm > 0.0)) throw DegenerateGeometryError("solve_square_geometry: |eta| must be > 0");
  if (d_y < 0.0) throw Error("solve_square_geometry: d_y must be >= 0");
  const Vec3 eta = pair_displacement(eta_norm, theta);
  const double m = opts.min_separation;
  const double a_side = ising_coupling_A(x_hat + y_hat * d_y, eta, c6, m);
  auto f = [&](double a_y) {
    return 2.0 * a_side + ising_coupling_A(y_hat * (a_y - d_y), eta, c6, m) +
           ising_coupling_A(y_hat * (a_y + d_y), eta, c6, m);
  };
  BlockadeSolution sol;
  sol.a_y = detail::bisect_root(f, eta_norm + d_y + m, 1.0, opts.root_tolerance,
                                "solve_square_geometry");
  sol.geometry = PairArrayGeometry{ArrayKind::square, sol.a_y, d_y, eta, c6};
  detail::check_pairs_separated(sol.geometry);
  sol.couplings = coupling_table(sol.geometry, 2, opts);
  sol.G = validate_generalized_blockade(sol.nearest_couplings(), opts.degeneracy_threshold);
  sol.Lambda = ising_coupling_A(x_hat + y_hat * sol.a_y, eta, c6, m);
  return sol;
}

// JSON

inline nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json to_json(const BlockadeSolution& s) {
  nlohmann::json couplings = nlohmann::json::array();
  for (const auto& c : s.couplings) {
    couplings.push_back({{"k", c.order},
                         {"sublattice", c.sublattice},
                         {"displacement", {c.displacement.dx, c.displacement.dy}},
                         {"separation", to_json(c.separation)},
                         {"A", c.A},
                         {"B", c.B}});
  }
  return {{"kind", to_string(s.geometry.kind)},
          {"eta", s.geometry.eta.norm()},
          {"eta_vector", to_json(s.geometry.eta)},
          {"theta", s.geometry.theta()},
          {"d_y", s.geometry.d_y},
          {"a_y", s.a_y},
          {"C6", s.geometry.c6},
          {"G", s.G},
          {"Lambda", s.Lambda},
          {"couplings", couplings}};
}

inline BlockadeSolution blockade_solution_from_json(const nlohmann::json& j) {
  try {
    BlockadeSolution s;
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "ladder" && kind != "square") throw ConfigError("unknown geometry kind " + kind);
    s.geometry.kind = kind == "ladder" ? ArrayKind::ladder : ArrayKind::square;
    s.geometry.eta = vec3_from_json(j.at("eta_vector"));
    s.geometry.d_y = j.at("d_y").get<double>();
    s.geometry.c6 = j.at("C6").get<double>();
    s.a_y = j.at("a_y").get<double>();
    s.geometry.a_y = s.a_y;
    s.G = j.at("G").get<double>();
    s.Lambda = j.at("Lambda").get<double>();
    s.couplings = coupling_table(s.geometry, 2);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed geometry record: ") + e.what());
  }
}

}  // namespace rydgauge
