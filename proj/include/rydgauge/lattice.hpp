#pragma once

// Lattice bookkeeping shared by the link (electric) and dual (plaquette-spin)
// pictures.
//
// Dual spins live on plaquettes, labelled by their lower-left site. A link is
// owned by the plaquette above it (x-links) or to its right (y-links), so the
// bottom and left links of plaquette p are the x- and y-links owned by p.
//
//   chain(N)            open PXP chain, virtual end spins fixed up
//   periodic_ladder(N)  N x 2 torus of plaquettes (periodic in x and y)
//   open_square(nx,ny)  nx x ny dynamical plaquettes inside a ring of
//                       plaquettes fixed up; sites span (nx+1) x (ny+1)
//
// Indices are row-major with x fastest. Links are stored x-links first.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rydgauge/errors.hpp"

namespace rydgauge {

enum class LatticeKind { chain, periodic_ladder, open_square };

inline std::string to_string(LatticeKind k) {
  switch (k) {
    case LatticeKind::chain: return "chain";
    case LatticeKind::periodic_ladder: return "ladder";
    case LatticeKind::open_square: return "square";
  }
  return "?";
}

struct LatticeSpec {
  LatticeKind kind = LatticeKind::open_square;
  int nx = 2;
  int ny = 2;

  static LatticeSpec chain(int n) { return {LatticeKind::chain, n, 1}; }
  static LatticeSpec periodic_ladder(int nx) { return {LatticeKind::periodic_ladder, nx, 2}; }
  static LatticeSpec open_square(int nx, int ny) { return {LatticeKind::open_square, nx, ny}; }

  bool operator==(const LatticeSpec&) const = default;
};

inline std::string to_string(const LatticeSpec& s) {
  return to_string(s.kind) + " " + std::to_string(s.nx) + "x" + std::to_string(s.ny);
}

enum class Dir : std::uint8_t { x = 0, y = 1 };

/// Reference to a link value: a dynamical link index, or a frozen value.
struct LinkRef {
  int index = -1;  ///< -1 when the link is frozen by the boundary
  bool fixed_up = false;
  bool dynamic() const { return index >= 0; }
};

struct LinkInfo {
  Dir dir = Dir::x;
  int ox = 0;  ///< owner plaquette
  int oy = 0;
};

/// Plaquette links in circulation order.
struct PlaquetteLinks {
  LinkRef bottom, right, top, left;
};

/// Links meeting at a site: E_{s,x}, E_{s,y}, E_{s-x,x}, E_{s-y,y}.
struct SiteLinks {
  int x = 0;
  int y = 0;
  std::array<LinkRef, 4> links{};
};

class Lattice {
 public:
  static constexpr int kMaxSpins = 64;

  explicit Lattice(const LatticeSpec& spec) : spec_(spec) {
    switch (spec.kind) {
      case LatticeKind::chain:
        if (spec.nx < 1 || spec.ny != 1) throw Error("chain requires N >= 1 and ny = 1");
        break;
      case LatticeKind::periodic_ladder:
        if (spec.ny != 2) throw Error("periodic ladder requires ny = 2");
        if (spec.nx < 2 || spec.nx % 2 != 0)
          throw Error("periodic ladder requires an even nx >= 2 (checkerboard parity)");
        break;
      case LatticeKind::open_square:
        if (spec.nx < 1 || spec.ny < 1) throw Error("open square requires nx, ny >= 1");
        break;
    }
    if (spec.nx * spec.ny > kMaxSpins) throw DimensionError("lattice exceeds 64 dynamical spins");
    build_spins();
    // the link picture needs one machine word per configuration
    if (spec.kind != LatticeKind::chain && link_count(spec) <= 64) {
      build_links();
      build_plaquettes();
      build_sites();
    }
  }

  const LatticeSpec& spec() const { return spec_; }
  LatticeKind kind() const { return spec_.kind; }
  int nx() const { return spec_.nx; }
  int ny() const { return spec_.ny; }
  int num_spins() const { return spec_.nx * spec_.ny; }
  bool has_links() const { return !links_.empty(); }

  static int link_count(const LatticeSpec& s) {
    if (s.kind == LatticeKind::chain) return 0;
    if (s.kind == LatticeKind::periodic_ladder) return 4 * s.nx;
    return s.nx * (s.ny + 1) + (s.nx + 1) * s.ny;
  }

  int spin_x(int i) const { return i % spec_.nx; }
  int spin_y(int i) const { return i / spec_.nx; }
  int parity(int i) const { return (spin_x(i) + spin_y(i)) & 1; }
  static int parity(int x, int y) { return ((x + y) % 2 + 2) % 2; }

  /// Dynamical spin index at (x, y), wrapping periodic directions, or -1 for a
  /// frozen (up) boundary plaquette.
  int spin_at(int x, int y) const {
    if (spec_.kind == LatticeKind::periodic_ladder) {
      x = ((x % spec_.nx) + spec_.nx) % spec_.nx;
      y = ((y % 2) + 2) % 2;
      return y * spec_.nx + x;
    }
    if (x < 0 || x >= spec_.nx || y < 0 || y >= spec_.ny) return -1;
    return y * spec_.nx + x;
  }

  /// Nearest neighbours in the generalized-blockade order: chain (left,
  /// right); ladder (x-1, other leg, x+1); square (right, up, left, down).
  /// Entries of -1 are frozen up spins.
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }

  /// Lattice displacements of the nearest neighbours, same order as neighbors().
  const std::vector<std::array<int, 2>>& neighbor_offsets(int i) const { return offsets_[i]; }

  int num_links() const { return static_cast<int>(links_.size()); }
  const std::vector<LinkInfo>& links() const { return links_; }
  const std::vector<PlaquetteLinks>& plaquettes() const { return plaquettes_; }
  const std::vector<SiteLinks>& sites() const { return sites_; }

  /// Link owned by plaquette (ox, oy), or its frozen value outside the stored set.
  LinkRef link(Dir d, int ox, int oy) const {
    if (spec_.kind == LatticeKind::periodic_ladder) {
      ox = ((ox % spec_.nx) + spec_.nx) % spec_.nx;
      oy = ((oy % 2) + 2) % 2;
      const int base = d == Dir::x ? 0 : 2 * spec_.nx;
      return {base + oy * spec_.nx + ox, false};
    }
    const int nx = spec_.nx, ny = spec_.ny;
    if (d == Dir::x) {
      if (ox >= 0 && ox < nx && oy >= 0 && oy <= ny) return {oy * nx + ox, false};
    } else {
      if (ox >= 0 && ox <= nx && oy >= 0 && oy < ny) return {nx * (ny + 1) + oy * (nx + 1) + ox, false};
    }
    return {-1, frozen_link_value(d, ox, oy)};
  }

  /// Frozen links take their value in the all-up (Omega) background: an x-link
  /// is up iff its owner is odd, a y-link iff its owner is even.
  static bool frozen_link_value(Dir d, int ox, int oy) {
    const bool odd = parity(ox, oy) == 1;
    return d == Dir::x ? odd : !odd;
  }

 private:
  void build_spins() {
    const int n = num_spins();
    neighbors_.resize(n);
    offsets_.resize(n);
    for (int i = 0; i < n; ++i) {
      const int x = spin_x(i), y = spin_y(i);
      std::vector<std::array<int, 2>> off;
      switch (spec_.kind) {
        case LatticeKind::chain: off = {{-1, 0}, {1, 0}}; break;
        case LatticeKind::periodic_ladder: off = {{-1, 0}, {0, y == 0 ? 1 : -1}, {1, 0}}; break;
        case LatticeKind::open_square: off = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}}; break;
      }
      for (const auto& o : off) neighbors_[i].push_back(spin_at(x + o[0], y + o[1]));
      offsets_[i] = off;
    }
  }

  void build_links() {
    const int nx = spec_.nx, ny = spec_.ny;
    if (spec_.kind == LatticeKind::periodic_ladder) {
      for (Dir d : {Dir::x, Dir::y})
        for (int y = 0; y < 2; ++y)
          for (int x = 0; x < nx; ++x) links_.push_back({d, x, y});
    } else {
      for (int y = 0; y <= ny; ++y)
        for (int x = 0; x < nx; ++x) links_.push_back({Dir::x, x, y});
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x <= nx; ++x) links_.push_back({Dir::y, x, y});
    }
  }

  void build_plaquettes() {
    for (int i = 0; i < num_spins(); ++i) {
      const int x = spin_x(i), y = spin_y(i);
      plaquettes_.push_back({link(Dir::x, x, y), link(Dir::y, x + 1, y), link(Dir::x, x, y + 1),
                             link(Dir::y, x, y)});
    }
  }

  void build_sites() {
    const int sx = spec_.kind == LatticeKind::periodic_ladder ? spec_.nx : spec_.nx + 1;
    const int sy = spec_.kind == LatticeKind::periodic_ladder ? 2 : spec_.ny + 1;
    for (int y = 0; y < sy; ++y)
      for (int x = 0; x < sx; ++x)
        sites_.push_back({x, y,
                          {link(Dir::x, x, y), link(Dir::y, x, y), link(Dir::x, x - 1, y),
                           link(Dir::y, x, y - 1)}});
  }

  LatticeSpec spec_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<std::array<int, 2>>> offsets_;
  std::vector<LinkInfo> links_;
  std::vector<PlaquetteLinks> plaquettes_;
  std::vector<SiteLinks> sites_;
};

}  // namespace rydgauge
