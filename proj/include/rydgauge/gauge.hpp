#pragma once

// Electric link configurations, dual plaquette-spin configurations and the
// map between them.
//
// Spin values: bit 1 = up = +1/2. Link fields are handled as e = 2E = +-1 and
// dual spins as sigma = 2S = +-1, so the duality reads
//   e_{p,x} = -(-1)^p sigma_p sigma_{p-y}     (bottom link of p)
//   e_{p,y} = +(-1)^p sigma_p sigma_{p-x}     (left link of p)
// with (-1)^p = (-1)^(x_p + y_p).

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include "rydgauge/errors.hpp"
#include "rydgauge/lattice.hpp"

namespace rydgauge {

struct DualConfig {
  std::uint64_t bits = 0;
  bool up(int p) const { return (bits >> p) & 1u; }
  int sigma(int p) const { return up(p) ? 1 : -1; }
  DualConfig flipped(int p) const { return {bits ^ (std::uint64_t{1} << p)}; }
  bool operator==(const DualConfig&) const = default;
};

struct LinkConfig {
  std::uint64_t bits = 0;
  bool up(int l) const { return (bits >> l) & 1u; }
  bool operator==(const LinkConfig&) const = default;
};

inline std::uint64_t low_mask(int n) {
  return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1u;
}

inline DualConfig all_up(const Lattice& lat) { return {low_mask(lat.num_spins())}; }

/// Value of a (possibly frozen) link in configuration c.
inline bool link_up(const LinkConfig& c, const LinkRef& r) {
  return r.dynamic() ? c.up(r.index) : r.fixed_up;
}

/// Value of the dual spin at (x, y); frozen boundary plaquettes are up.
inline int dual_sigma(const Lattice& lat, const DualConfig& d, int x, int y) {
  const int i = lat.spin_at(x, y);
  return i < 0 ? 1 : d.sigma(i);
}

// ---------------------------------------------------------------- Gauss law

struct ChargeBackground {
  enum class Mode { vacuum, staggered };
  Mode mode = Mode::vacuum;

  static ChargeBackground vacuum() { return {Mode::vacuum}; }
  static ChargeBackground staggered() { return {Mode::staggered}; }

  /// Q_s at a site of the given parity.
  int charge(int site_parity) const {
    if (mode == Mode::vacuum) return 0;
    return site_parity == 0 ? 1 : -1;
  }
};

/// Vertex pattern bits: 0 = E_{s,x}, 1 = E_{s,y}, 2 = E_{s-x,x}, 3 = E_{s-y,y}.
/// Vacuum uses the divergence form; the staggered background uses the
/// rotated (dimer-basis) form E_sx + E_sy + E_{s-x,x} + E_{s-y,y} + (-1)^s Q_s = 0.
inline bool vertex_physical(unsigned pattern, const ChargeBackground& bg, int site_parity = 0) {
  int e[4];
  for (int k = 0; k < 4; ++k) e[k] = (pattern >> k) & 1u ? 1 : -1;
  const int q2 = 2 * bg.charge(site_parity);
  if (bg.mode == ChargeBackground::Mode::vacuum) return e[0] + e[1] - e[2] - e[3] == q2;
  const int sign = site_parity == 0 ? 1 : -1;
  return e[0] + e[1] + e[2] + e[3] + sign * q2 == 0;
}

inline std::vector<unsigned> list_physical_vertex_configs(const ChargeBackground& bg,
                                                          int site_parity = 0) {
  std::vector<unsigned> out;
  for (unsigned p = 0; p < 16; ++p)
    if (vertex_physical(p, bg, site_parity)) out.push_back(p);
  return out;
}

inline unsigned vertex_pattern(const LinkConfig& c, const SiteLinks& s) {
  unsigned pat = 0;
  for (int k = 0; k < 4; ++k)
    if (link_up(c, s.links[k])) pat |= 1u << k;
  return pat;
}

/// Indices (into lat.sites()) of sites where the Gauss law fails.
inline std::vector<int> check_gauss_law(const Lattice& lat, const LinkConfig& c,
                                        const ChargeBackground& bg = ChargeBackground::vacuum()) {
  if (!lat.has_links()) throw DimensionError("check_gauss_law: lattice has no link picture");
  std::vector<int> bad;
  const auto& sites = lat.sites();
  for (int i = 0; i < static_cast<int>(sites.size()); ++i)
    if (!vertex_physical(vertex_pattern(c, sites[i]), bg, Lattice::parity(sites[i].x, sites[i].y)))
      bad.push_back(i);
  return bad;
}

inline bool is_physical(const Lattice& lat, const LinkConfig& c,
                        const ChargeBackground& bg = ChargeBackground::vacuum()) {
  return check_gauss_law(lat, c, bg).empty();
}

// ------------------------------------------------------- plaquette operators

/// 0: not flippable; 1: bottom,right up / top,left down; 2: the reverse.
inline int plaquette_pattern(const LinkConfig& c, const PlaquetteLinks& q) {
  const bool b = link_up(c, q.bottom), r = link_up(c, q.right), t = link_up(c, q.top),
             l = link_up(c, q.left);
  if (b && r && !t && !l) return 1;
  if (!b && !r && t && l) return 2;
  return 0;
}

inline bool plaquette_flippable(const Lattice& lat, const LinkConfig& c, int p) {
  return plaquette_pattern(c, lat.plaquettes()[p]) != 0;
}

/// U_p + U_p^dagger acting on a basis state: the partner configuration when
/// plaquette p is flippable, nothing otherwise.
inline std::optional<LinkConfig> apply_plaquette(const Lattice& lat, const LinkConfig& c, int p) {
  const auto& q = lat.plaquettes()[p];
  if (plaquette_pattern(c, q) == 0) return std::nullopt;
  std::uint64_t bits = c.bits;
  for (const LinkRef* r : {&q.bottom, &q.right, &q.top, &q.left}) {
    if (!r->dynamic()) throw PhysicalityError("apply_plaquette: plaquette touches a frozen link");
    bits ^= std::uint64_t{1} << r->index;
  }
  return LinkConfig{bits};
}

// ---------------------------------------------------------------- duality

/// Link field e = +-1 of the bottom (Dir::x) or left (Dir::y) link of the
/// plaquette at (x, y), from the dual configuration.
inline int dual_link_field(const Lattice& lat, const DualConfig& d, Dir dir, int x, int y) {
  const int sign = Lattice::parity(x, y) == 0 ? 1 : -1;
  const int s = dual_sigma(lat, d, x, y);
  if (dir == Dir::x) return -sign * s * dual_sigma(lat, d, x, y - 1);
  return sign * s * dual_sigma(lat, d, x - 1, y);
}

inline LinkConfig from_dual(const Lattice& lat, const DualConfig& d) {
  if (!lat.has_links()) throw DimensionError("from_dual: lattice has no link picture");
  std::uint64_t bits = 0;
  const auto& links = lat.links();
  for (int l = 0; l < static_cast<int>(links.size()); ++l)
    if (dual_link_field(lat, d, links[l].dir, links[l].ox, links[l].oy) > 0)
      bits |= std::uint64_t{1} << l;
  return {bits};
}

inline LinkConfig omega(const Lattice& lat) { return from_dual(lat, all_up(lat)); }

/// Inverse map. Open lattices integrate from the frozen boundary; on the
/// ladder the representative with plaquette (0,0) up is returned.
inline DualConfig to_dual(const Lattice& lat, const LinkConfig& c) {
  if (!lat.has_links()) throw DimensionError("to_dual: lattice has no link picture");
  const auto bad = check_gauss_law(lat, c);
  if (!bad.empty()) {
    const auto& s = lat.sites()[bad.front()];
    std::ostringstream os;
    os << "to_dual: Gauss law violated at " << bad.size() << " site(s), first at (" << s.x << ","
       << s.y << ")";
    throw PhysicalityError(os.str());
  }
  auto e_of = [&](Dir dir, int x, int y) { return link_up(c, lat.link(dir, x, y)) ? 1 : -1; };
  DualConfig d{0};
  const int nx = lat.nx(), ny = lat.ny();
  // sigma_p = (-1)^p e_{p,y} sigma_{p-x}, sigma_p = -(-1)^p e_{p,x} sigma_{p-y}
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      const int sign = Lattice::parity(x, y) == 0 ? 1 : -1;
      int s = 0;
      if (lat.kind() == LatticeKind::periodic_ladder) {
        if (x == 0 && y == 0)
          s = 1;
        else if (x == 0)
          s = -sign * e_of(Dir::x, x, y) * dual_sigma(lat, d, x, y - 1);
        else
          s = sign * e_of(Dir::y, x, y) * dual_sigma(lat, d, x - 1, y);
      } else {
        s = sign * e_of(Dir::y, x, y) * dual_sigma(lat, d, x - 1, y);
      }
      if (s > 0) d.bits |= std::uint64_t{1} << lat.spin_at(x, y);
    }
  }
  if (from_dual(lat, d) != c)
    throw PhysicalityError(
        "to_dual: link configuration is incompatible with the boundary (no dual preimage)");
  return d;
}

// ---------------------------------------------------- generalized blockade

enum class BlockadeRule {
  generalized,  ///< flip iff all neighbours are up or all are down
  pxp           ///< flip iff all neighbours are up
};

inline BlockadeRule default_rule(const Lattice& lat) {
  return lat.kind() == LatticeKind::chain ? BlockadeRule::pxp : BlockadeRule::generalized;
}

/// Precomputed neighbour masks for fast flippability tests on bitmasks.
class FlipTable {
 public:
  FlipTable(const Lattice& lat, BlockadeRule rule) : rule_(rule) {
    const int n = lat.num_spins();
    mask_.assign(n, 0);
    frozen_.assign(n, false);
    for (int p = 0; p < n; ++p) {
      for (int q : lat.neighbors(p)) {
        if (q < 0)
          frozen_[p] = true;
        else
          mask_[p] |= std::uint64_t{1} << q;
      }
    }
  }
  FlipTable(const Lattice& lat) : FlipTable(lat, default_rule(lat)) {}

  int size() const { return static_cast<int>(mask_.size()); }
  BlockadeRule rule() const { return rule_; }
  std::uint64_t neighbor_mask(int p) const { return mask_[p]; }

  bool all_up(std::uint64_t s, int p) const { return (s & mask_[p]) == mask_[p]; }
  bool all_down(std::uint64_t s, int p) const { return (s & mask_[p]) == 0 && !frozen_[p]; }

  bool flippable(std::uint64_t s, int p) const {
    if (all_up(s, p)) return true;
    return rule_ == BlockadeRule::generalized && all_down(s, p);
  }

  int flippable_count(std::uint64_t s) const {
    int n = 0;
    for (int p = 0; p < size(); ++p) n += flippable(s, p);
    return n;
  }

 private:
  BlockadeRule rule_;
  std::vector<std::uint64_t> mask_;
  std::vector<bool> frozen_;
};

inline std::optional<DualConfig> apply_dual_plaquette(const Lattice& lat, const DualConfig& d,
                                                      int p) {
  const FlipTable ft(lat);
  if (!ft.flippable(d.bits, p)) return std::nullopt;
  return d.flipped(p);
}

// ------------------------------------------------------------ dimer basis

/// Flip the bottom and left links of every odd plaquette (equivalently the
/// top-right corner of the even ones). An involution.
inline LinkConfig rotate_to_dimer_basis(const Lattice& lat, const LinkConfig& c) {
  if (lat.kind() == LatticeKind::chain || !lat.has_links())
    throw DimensionError("rotate_to_dimer_basis: square or ladder lattice required");
  std::uint64_t bits = c.bits;
  const auto& links = lat.links();
  for (int l = 0; l < static_cast<int>(links.size()); ++l)
    if (Lattice::parity(links[l].ox, links[l].oy) == 1) bits ^= std::uint64_t{1} << l;
  return {bits};
}

/// Dimer-basis flippability: both horizontal links coloured and both vertical
/// empty, or the reverse.
inline bool parallel_pattern(const LinkConfig& rotated, const PlaquetteLinks& q) {
  const bool b = link_up(rotated, q.bottom), r = link_up(rotated, q.right),
             t = link_up(rotated, q.top), l = link_up(rotated, q.left);
  return (b && t && !r && !l) || (!b && !t && r && l);
}

/// Frozen links in the rotated basis keep the columnar background.
inline LinkRef rotated_ref(const LinkRef& r, int ox, int oy) {
  if (r.dynamic() || Lattice::parity(ox, oy) == 0) return r;
  return {-1, !r.fixed_up};
}

inline bool dimer_flippable(const Lattice& lat, const LinkConfig& rotated, int p) {
  const int x = lat.spin_x(p), y = lat.spin_y(p);
  const auto& q = lat.plaquettes()[p];
  const PlaquetteLinks r{rotated_ref(q.bottom, x, y), rotated_ref(q.right, x + 1, y),
                         rotated_ref(q.top, x, y + 1), rotated_ref(q.left, x, y)};
  return parallel_pattern(rotated, r);
}

// ------------------------------------------------------------- heights

/// Heights in half-integer units, H = 2h, with E_{p,x} = h_p - h_{p-y} and
/// E_{p,y} = h_{p-x} - h_p. Frozen plaquettes carry the Omega heights
/// (0 on even, 1 on odd plaquettes); on the ladder h_(0,0) = 0.
struct HeightField {
  std::vector<int> twice_h;

  /// Dual spin from the height: up iff (H_p - parity_p) = 0 mod 4.
  DualConfig spins(const Lattice& lat) const {
    DualConfig d{0};
    for (int p = 0; p < lat.num_spins(); ++p) {
      const int v = ((twice_h[p] - lat.parity(p)) % 4 + 4) % 4;
      if (v == 0) d.bits |= std::uint64_t{1} << p;
    }
    return d;
  }
};

inline HeightField height_field(const Lattice& lat, const LinkConfig& c) {
  if (!lat.has_links()) throw DimensionError("height_field: lattice has no link picture");
  if (!is_physical(lat, c)) throw PhysicalityError("height_field: Gauss law violated");
  auto e_of = [&](Dir dir, int x, int y) { return link_up(c, lat.link(dir, x, y)) ? 1 : -1; };
  const int n = lat.num_spins();
  HeightField h{std::vector<int>(n, 0)};
  auto height = [&](int x, int y) {
    const int i = lat.spin_at(x, y);
    return i < 0 ? Lattice::parity(x, y) : h.twice_h[i];
  };
  for (int y = 0; y < lat.ny(); ++y) {
    for (int x = 0; x < lat.nx(); ++x) {
      const int i = lat.spin_at(x, y);
      if (lat.kind() == LatticeKind::periodic_ladder) {
        if (x == 0 && y == 0)
          h.twice_h[i] = 0;
        else if (x == 0)
          h.twice_h[i] = height(x, y - 1) + e_of(Dir::x, x, y);
        else
          h.twice_h[i] = height(x - 1, y) - e_of(Dir::y, x, y);
      } else {
        h.twice_h[i] = height(x - 1, y) - e_of(Dir::y, x, y);
      }
    }
  }
  // every link must be reproduced; a mismatch signals winding or a bad boundary
  for (const auto& li : lat.links()) {
    const int e = e_of(li.dir, li.ox, li.oy);
    const int diff = li.dir == Dir::x ? height(li.ox, li.oy) - height(li.ox, li.oy - 1)
                                      : height(li.ox - 1, li.oy) - height(li.ox, li.oy);
    if (diff != e) throw PhysicalityError("height_field: inconsistent height differences");
  }
  return h;
}

// ------------------------------------------------------ direct counting

/// Number of vacuum-physical link configurations, by depth-first assignment
/// of link bits with pruning at every site whose links are all assigned.
/// Independent of the dual picture.
inline std::uint64_t count_physical_link_configs(
    const Lattice& lat, const ChargeBackground& bg = ChargeBackground::vacuum()) {
  if (!lat.has_links()) throw DimensionError("count_physical_link_configs: no link picture");
  const int nl = lat.num_links();
  const auto& sites = lat.sites();
  // assign links site by site so that every vertex is checked as early as possible
  std::vector<int> order, pos(nl, -1);
  for (const auto& st : sites)
    for (const auto& r : st.links)
      if (r.dynamic() && pos[r.index] < 0) {
        pos[r.index] = static_cast<int>(order.size());
        order.push_back(r.index);
      }
  for (int l = 0; l < nl; ++l)
    if (pos[l] < 0) {
      pos[l] = static_cast<int>(order.size());
      order.push_back(l);
    }
  // sites completed once the link at position k has been assigned
  std::vector<std::vector<int>> ready(nl);
  for (int s = 0; s < static_cast<int>(sites.size()); ++s) {
    int last = -1;
    for (const auto& r : sites[s].links)
      if (r.dynamic()) last = std::max(last, pos[r.index]);
    if (last < 0) {
      if (!vertex_physical(vertex_pattern(LinkConfig{0}, sites[s]), bg,
                           Lattice::parity(sites[s].x, sites[s].y)))
        return 0;
    } else {
      ready[last].push_back(s);
    }
  }
  std::uint64_t count = 0;
  std::function<void(int, std::uint64_t)> dfs = [&](int k, std::uint64_t bits) {
    if (k == nl) {
      ++count;
      return;
    }
    for (std::uint64_t v : {std::uint64_t{0}, std::uint64_t{1}}) {
      const std::uint64_t b = bits | (v << order[k]);
      bool ok = true;
      for (int s : ready[k]) {
        if (!vertex_physical(vertex_pattern(LinkConfig{b}, sites[s]), bg,
                             Lattice::parity(sites[s].x, sites[s].y))) {
          ok = false;
          break;
        }
      }
      if (ok) dfs(k + 1, b);
    }
  };
  dfs(0, 0);
  return count;
}

}  // namespace rydgauge
