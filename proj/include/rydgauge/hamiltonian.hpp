#pragma once

// Operator builders over bitmask bases. All spin operators use S^z = +-1/2 and
// S^x with unit matrix element 1/2 between the two flip partners.
// Constant energy offsets are dropped, so energies are comparable only within
// one builder.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rydgauge/basis.hpp"
#include "rydgauge/errors.hpp"
#include "rydgauge/gauge.hpp"
#include "rydgauge/geometry.hpp"
#include "rydgauge/lattice.hpp"
#include "rydgauge/sparse.hpp"

namespace rydgauge {

inline double sz(std::uint64_t s, int p) { return ((s >> p) & 1u) ? 0.5 : -0.5; }

namespace detail {

inline void require_basis(const Lattice& lat, const Basis& b, BasisPicture pic, const char* who) {
  if (b.picture() != pic || !(b.spec() == lat.spec()))
    throw DimensionError(std::string(who) + ": basis does not belong to this lattice/picture");
}

inline std::size_t target(const Basis& b, std::uint64_t t, const char* who) {
  const auto j = b.index_of(t);
  if (j == Basis::npos)
    throw DimensionError(std::string(who) + ": basis is not closed under the plaquette flips");
  return j;
}

}  // namespace detail

/// H = -J sum_p [(U_p + U_p^dag) - lambda (U_p + U_p^dag)^2] on link configurations.
inline SparseOperator build_original_rk(const Lattice& lat, const Basis& basis, double J,
                                        double lambda) {
  detail::require_basis(lat, basis, BasisPicture::link, "build_original_rk");
  OperatorBuilder ob(basis.size());
  const int n = lat.num_spins();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const LinkConfig c{basis[i]};
    int flippable = 0;
    for (int p = 0; p < n; ++p) {
      if (auto t = apply_plaquette(lat, c, p)) {
        ++flippable;
        ob.add(i, detail::target(basis, t->bits, "build_original_rk"), -J);
      }
    }
    ob.add(i, i, J * lambda * flippable);
  }
  return ob.finish("original_rk");
}

/// H = -J sum_p (P^{up..up} + P^{down..down})(2 S^x_p - lambda). On a chain
/// the rule reduces to plain blockade and this is the PXP model.
inline SparseOperator build_dual_rk(const Lattice& lat, const Basis& basis, double J, double lambda) {
  detail::require_basis(lat, basis, BasisPicture::dual, "build_dual_rk");
  const FlipTable ft(lat);
  OperatorBuilder ob(basis.size());
  const int n = lat.num_spins();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const std::uint64_t s = basis[i];
    int flippable = 0;
    for (int p = 0; p < n; ++p) {
      if (!ft.flippable(s, p)) continue;
      ++flippable;
      ob.add(i, detail::target(basis, s ^ (std::uint64_t{1} << p), "build_dual_rk"), -J);
    }
    ob.add(i, i, J * lambda * flippable);
  }
  return ob.finish(lat.kind() == LatticeKind::chain ? "pxp_chain" : "dual_rk");
}

/// H_1D = J sum_p P^up_{p-1} P^up_{p+1} (-2 S^x_p + lambda), open chain with
/// virtual up spins at both ends; the basis fixes how the constraint is imposed
/// (blockade sector, or full space together with add_penalty).
inline SparseOperator build_pxp_chain(const Lattice& chain, const Basis& basis, double J,
                                      double lambda) {
  if (chain.kind() != LatticeKind::chain) throw Error("build_pxp_chain: chain lattice required");
  return build_dual_rk(chain, basis, J, lambda);
}

/// True when the neighbour spins of p alternate around p, starting up or down.
inline bool alternating_neighbors(const Lattice& lat, std::uint64_t s, int p) {
  const auto& nb = lat.neighbors(p);
  bool ok_up = true, ok_down = true;
  for (std::size_t k = 0; k < nb.size(); ++k) {
    const bool up = nb[k] < 0 || ((s >> nb[k]) & 1u);
    const bool even = k % 2 == 0;
    ok_up = ok_up && (up == even);
    ok_down = ok_down && (up != even);
  }
  return ok_up || ok_down;
}

/// Generalized RK potential Lambda sum_p (P_uniform - P_alternating) over the
/// nearest neighbours of p, in the order of Lattice::neighbors.
inline double rydberg_potential(const Lattice& lat, const FlipTable& ft, std::uint64_t s,
                                double Lambda) {
  double v = 0.0;
  for (int p = 0; p < lat.num_spins(); ++p) {
    if (ft.all_up(s, p) || ft.all_down(s, p))
      v += Lambda;
    else if (alternating_neighbors(lat, s, p))
      v -= Lambda;
  }
  return v;
}

/// H = -2J sum_p (P^{up..up} + P^{down..down}) S^x_p + V^(2) + delta sum_p S^z_p.
inline SparseOperator build_rydberg_rk(const Lattice& lat, const Basis& basis, double J,
                                       double Lambda, double delta = 0.0) {
  detail::require_basis(lat, basis, BasisPicture::dual, "build_rydberg_rk");
  if (lat.kind() == LatticeKind::chain) throw Error("build_rydberg_rk: ladder or square lattice required");
  const FlipTable ft(lat, BlockadeRule::generalized);
  OperatorBuilder ob(basis.size());
  const int n = lat.num_spins();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const std::uint64_t s = basis[i];
    double diag = rydberg_potential(lat, ft, s, Lambda);
    for (int p = 0; p < n; ++p) {
      diag += delta * sz(s, p);
      if (ft.flippable(s, p))
        ob.add(i, detail::target(basis, s ^ (std::uint64_t{1} << p), "build_rydberg_rk"), -J);
    }
    ob.add(i, i, diag);
  }
  return ob.finish("rydberg_rk");
}

// ------------------------------------------------------ effective spin model

/// How the double sum over k-neighbours in V^(k) is read: `ordered` keeps the
/// sum over every (p, p') as written, so each bond enters twice; `unordered`
/// counts each pair of pairs once, which is the interaction energy of the
/// underlying atoms.
enum class BondCounting { ordered, unordered };

struct IsingTerm {
  int p = 0;
  int q = 0;  ///< neighbour spin
  int order = 1;
  double A = 0.0;
  double B = 0.0;
};

inline ArrayKind array_kind_for(const Lattice& lat) {
  if (lat.kind() == LatticeKind::periodic_ladder) return ArrayKind::ladder;
  if (lat.kind() == LatticeKind::open_square) return ArrayKind::square;
  throw Error("decorated arrays exist for ladder and square lattices only");
}

/// All (p, p') terms of V^(1) + ... + V^(k_max) on the lattice. Open
/// boundaries keep the bare terms of the neighbours that exist.
inline std::vector<IsingTerm> ising_terms(const Lattice& lat, const PairArrayGeometry& geom,
                                          int k_max = 2, const GeometryOptions& opts = {}) {
  if (array_kind_for(lat) != geom.kind)
    throw Error("ising_terms: geometry kind does not match the lattice");
  std::vector<IsingTerm> terms;
  for (int p = 0; p < lat.num_spins(); ++p) {
    const int x = lat.spin_x(p), y = lat.spin_y(p);
    for (int k = 1; k <= k_max; ++k) {
      for (auto d : neighbor_displacements(geom.kind, k)) {
        if (geom.kind == ArrayKind::ladder && y == 1) d.dy = -d.dy;
        const int q = lat.spin_at(x + d.dx, y + d.dy);
        if (q < 0) continue;
        const Vec3 sep = geom.separation(x, y, d.dx, d.dy);
        terms.push_back({p, q, k, ising_coupling_A(sep, geom.eta, geom.c6, opts.min_separation),
                         onsite_coefficient_B(sep, geom.eta, geom.c6, opts.min_separation)});
      }
    }
  }
  return terms;
}

/// Diagonal energy sum V^(k) of a z-basis state.
inline double ising_energy(const std::vector<IsingTerm>& terms, std::uint64_t s,
                           BondCounting counting = BondCounting::ordered) {
  double v = 0.0;
  for (const auto& t : terms) v += sz(s, t.p) * (t.A * sz(s, t.q) + t.B);
  return counting == BondCounting::ordered ? v : 0.5 * v;
}

struct EffectiveSpinOptions {
  int k_max = 2;
  BondCounting counting = BondCounting::ordered;
  int max_spins = 24;
};

/// H = sum_p (-2J S^x_p + delta S^z_p) + sum_k V^(k) on the full 2^N space,
/// built from the raw A and B values so that the blockade is emergent.
inline SparseOperator build_effective_spin(const Lattice& lat, const PairArrayGeometry& geom,
                                           double J, double delta,
                                           const EffectiveSpinOptions& opt = {}) {
  const int n = lat.num_spins();
  if (n > opt.max_spins)
    throw DimensionError("build_effective_spin: " + std::to_string(n) + " spins exceed the cap of " +
                         std::to_string(opt.max_spins));
  const auto terms = ising_terms(lat, geom, opt.k_max);
  const std::size_t dim = std::size_t{1} << n;
  OperatorBuilder ob(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    double diag = ising_energy(terms, s, opt.counting);
    for (int p = 0; p < n; ++p) {
      diag += delta * sz(s, p);
      if (J != 0.0) ob.add(s, s ^ (std::size_t{1} << p), -J);
    }
    ob.add(s, s, diag);
  }
  return ob.finish("effective_spin");
}

/// -2 sum_p S^x_p on the full 2^n space, the drive part of the effective model
/// per unit J.
inline SparseOperator transverse_field(int n) {
  if (n > 30) throw DimensionError("transverse_field: too many spins");
  const std::size_t dim = std::size_t{1} << n;
  OperatorBuilder ob(dim);
  for (std::size_t s = 0; s < dim; ++s)
    for (int p = 0; p < n; ++p) ob.add(s, s ^ (std::size_t{1} << p), -1.0);
  return ob.finish("transverse_field");
}

/// Embeds a sector-basis vector into the full 2^N space.
template <class T>
std::vector<T> embed(const Basis& sector, const std::vector<T>& v, int n) {
  std::vector<T> out(std::size_t{1} << n, T{});
  for (std::size_t i = 0; i < sector.size(); ++i) out[sector[i]] = v[i];
  return out;
}

// ---------------------------------------------------------- atom level

struct AtomArray {
  std::vector<Vec3> positions;  ///< atom 2i at p_i - eta/2, atom 2i+1 at p_i + eta/2
  double c6 = 1.0;
};

inline AtomArray decorate(const std::vector<Vec3>& pair_centres, const Vec3& eta, double c6) {
  AtomArray a;
  a.c6 = c6;
  for (const auto& p : pair_centres) {
    a.positions.push_back(p - eta * 0.5);
    a.positions.push_back(p + eta * 0.5);
  }
  return a;
}

/// Atom-level Rydberg Hamiltonian over 2^(2 n_pairs) states, bit = Rydberg:
/// sum_I [-Omega sigma^x_I + Delta n_I] + sum_{I<I'} C6/|I-I'|^6 n_I n_I'
/// + (delta/2) sum_p (n_{p+eta/2} - n_{p-eta/2}).
/// The pseudo spin of pair i is up when atom 2i+1 is the excited one.
inline SparseOperator build_atom_level(const AtomArray& atoms, const DriveParams& drive,
                                       int max_pairs = 4) {
  const int na = static_cast<int>(atoms.positions.size());
  if (na % 2 != 0) throw Error("build_atom_level: atoms must come in pairs");
  if (na / 2 > max_pairs)
    throw DimensionError("build_atom_level: at most " + std::to_string(max_pairs) + " pairs");
  std::vector<double> v(na * na, 0.0);
  for (int i = 0; i < na; ++i)
    for (int j = i + 1; j < na; ++j) {
      const double r = (atoms.positions[i] - atoms.positions[j]).norm();
      if (r <= 0.0) throw DegenerateGeometryError("build_atom_level: coincident atoms");
      v[i * na + j] = atoms.c6 / std::pow(r, 6);
    }
  const std::size_t dim = std::size_t{1} << na;
  OperatorBuilder ob(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (int i = 0; i < na; ++i) {
      if (!((s >> i) & 1u)) continue;
      diag += drive.detuning + 0.5 * drive.pair_offset * (i % 2 == 1 ? 1.0 : -1.0);
      for (int j = i + 1; j < na; ++j)
        if ((s >> j) & 1u) diag += v[i * na + j];
    }
    ob.add(s, s, diag);
    if (drive.omega != 0.0)
      for (int i = 0; i < na; ++i) ob.add(s, s ^ (std::size_t{1} << i), -drive.omega);
  }
  return ob.finish("atom_level");
}

/// Atom configuration with one excitation per pair matching a pseudo-spin state.
inline std::uint64_t atoms_from_spins(std::uint64_t spins, int n_pairs) {
  std::uint64_t a = 0;
  for (int p = 0; p < n_pairs; ++p) a |= std::uint64_t{1} << (2 * p + (((spins >> p) & 1u) ? 1 : 0));
  return a;
}

// ------------------------------------------------------ extra diagonal terms

/// Number of vortex patterns: around every site shared by p, p+x, p+y, p+x+y
/// (frozen plaquettes up), the patterns down-down-up-up, down-up-down-up,
/// up-up-down-down and up-down-up-down of (p, p+x, p+y, p+x+y). These are
/// exactly the dual configurations without a Gauss-law preimage.
inline int vortex_count(const Lattice& lat, std::uint64_t s) {
  if (lat.kind() == LatticeKind::chain) {
    int n = 0;
    for (int p = 0; p + 1 < lat.num_spins(); ++p) n += !((s >> p) & 1u) && !((s >> (p + 1)) & 1u);
    return n;
  }
  auto up = [&](int x, int y) {
    const int i = lat.spin_at(x, y);
    return i < 0 || ((s >> i) & 1u);
  };
  int x0 = -1, x1 = lat.nx() - 1, y0 = -1, y1 = lat.ny() - 1;
  if (lat.kind() == LatticeKind::periodic_ladder) x0 = 0, y0 = 0, x1 = lat.nx() - 1, y1 = 1;
  int n = 0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const bool a = up(x, y), b = up(x + 1, y), c = up(x, y + 1), d = up(x + 1, y + 1);
      n += (a != d) && (b != c);
    }
  return n;
}

/// Adds E times the forbidden-pattern count (chain: adjacent down pairs).
inline SparseOperator add_penalty(const Lattice& lat, const Basis& basis, const SparseOperator& op,
                                  double E) {
  if (op.dim() != basis.size()) throw DimensionError("add_penalty: dimension mismatch");
  OperatorBuilder ob(op.dim());
  for (std::size_t i = 0; i < op.dim(); ++i) {
    auto c = op.row_cols(i);
    auto v = op.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) ob.add(i, c[k], v[k]);
    const int nv = vortex_count(lat, basis[i]);
    if (nv) ob.add(i, i, E * nv);
  }
  return ob.finish(op.name() + "+penalty");
}

struct Site {
  int x = 0;
  int y = 0;
};

/// (1,1), (2,1), (2,2) counted from one.
inline std::vector<Site> default_pinning_sites() { return {{0, 0}, {1, 0}, {1, 1}}; }

/// Adds -delta_tilde sum_{s in sites} S^z_s, a field that favours up.
inline SparseOperator add_pinning(const Lattice& lat, const Basis& basis, const SparseOperator& op,
                                  double delta_tilde, const std::vector<Site>& sites) {
  if (op.dim() != basis.size()) throw DimensionError("add_pinning: dimension mismatch");
  std::vector<int> idx;
  for (const auto& s : sites) {
    const int i = lat.spin_at(s.x, s.y);
    if (i < 0) throw Error("add_pinning: site outside the dynamical lattice");
    idx.push_back(i);
  }
  OperatorBuilder ob(op.dim());
  for (std::size_t i = 0; i < op.dim(); ++i) {
    auto c = op.row_cols(i);
    auto v = op.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) ob.add(i, c[k], v[k]);
    double d = 0.0;
    for (int p : idx) d -= delta_tilde * sz(basis[i], p);
    ob.add(i, i, d);
  }
  return ob.finish(op.name());
}

/// Restriction of a global-flip symmetric operator to the even combinations
/// (|s> + |~s>)/sqrt(2), one row per pair in order of the smaller mask's
/// basis index. On the periodic ladder this is the block that reproduces the
/// link picture; the odd block carries a twisted boundary condition.
inline SparseOperator flip_even_block(const Basis& basis, const SparseOperator& op, int n) {
  if (op.dim() != basis.size()) throw DimensionError("flip_even_block: dimension mismatch");
  const std::uint64_t all = low_mask(n);
  std::vector<std::size_t> block(basis.size()), reps;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto j = basis.index_of(basis[i] ^ all);
    if (j == Basis::npos) throw DimensionError("flip_even_block: basis is not flip symmetric");
    if (basis[i] < basis[j]) {
      block[i] = block[j] = reps.size();
      reps.push_back(i);
    }
  }
  OperatorBuilder ob(reps.size());
  for (std::size_t a = 0; a < reps.size(); ++a) {
    auto c = op.row_cols(reps[a]);
    auto v = op.row_values(reps[a]);
    for (std::size_t k = 0; k < c.size(); ++k) ob.add(a, block[c[k]], v[k]);
  }
  return ob.finish(op.name() + "/even");
}

/// Diagonal operator from a function of the basis state.
template <class F>
SparseOperator diagonal_operator(const Basis& basis, F f, std::string name) {
  OperatorBuilder ob(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) ob.add(i, i, f(basis[i]));
  return ob.finish(std::move(name));
}

}  // namespace rydgauge
