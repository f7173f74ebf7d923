#pragma once

// Ordered bitmask bases: constrained sectors reached by plaquette flips, or
// the full 2^N spin space.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rydgauge/errors.hpp"
#include "rydgauge/gauge.hpp"
#include "rydgauge/lattice.hpp"

namespace rydgauge {

enum class BasisPicture : std::uint8_t { dual = 0, link = 1 };

inline constexpr std::size_t kDefaultDimensionCap = std::size_t{1} << 26;

class Basis {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Basis() = default;

  /// Explicit list; the first entry is the reference state.
  Basis(LatticeSpec spec, BasisPicture picture, std::vector<std::uint64_t> states)
      : spec_(spec), picture_(picture), states_(std::move(states)) {
    order_.resize(states_.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    std::sort(order_.begin(), order_.end(),
              [&](std::uint32_t a, std::uint32_t b) { return states_[a] < states_[b]; });
    sorted_.resize(states_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) sorted_[i] = states_[order_[i]];
    if (std::adjacent_find(sorted_.begin(), sorted_.end()) != sorted_.end())
      throw Error("Basis: duplicate states");
    // direct-address table when the configurations fit in a few tens of MB
    const int bits = sorted_.empty() ? 0 : 64 - std::countl_zero(sorted_.back());
    if (bits <= kTableBits && states_.size() > 64 && states_.size() < 0xffffffffu) {
      table_.assign(std::size_t{1} << bits, kNone);
      for (std::size_t i = 0; i < states_.size(); ++i) table_[states_[i]] = static_cast<std::uint32_t>(i);
    }
  }

  /// Full 2^n dual space, index = mask.
  static Basis full(LatticeSpec spec, int n) {
    if (n > 30) throw DimensionError("full basis limited to 30 spins");
    Basis b;
    b.spec_ = spec;
    b.picture_ = BasisPicture::dual;
    b.full_ = true;
    b.nbits_ = n;
    b.states_.resize(std::size_t{1} << n);
    std::iota(b.states_.begin(), b.states_.end(), std::uint64_t{0});
    return b;
  }

  const LatticeSpec& spec() const { return spec_; }
  BasisPicture picture() const { return picture_; }
  bool is_full() const { return full_; }
  std::size_t size() const { return states_.size(); }
  std::uint64_t operator[](std::size_t i) const { return states_[i]; }
  const std::vector<std::uint64_t>& states() const { return states_; }

  std::size_t index_of(std::uint64_t s) const {
    if (full_) return (s >> nbits_) == 0 ? static_cast<std::size_t>(s) : npos;
    if (!table_.empty()) {
      if (s >= table_.size()) return npos;
      const std::uint32_t i = table_[s];
      return i == kNone ? npos : i;
    }
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), s);
    if (it == sorted_.end() || *it != s) return npos;
    return order_[it - sorted_.begin()];
  }
  bool contains(std::uint64_t s) const { return index_of(s) != npos; }

 private:
  LatticeSpec spec_{};
  BasisPicture picture_ = BasisPicture::dual;
  bool full_ = false;
  int nbits_ = 0;
  std::vector<std::uint64_t> states_;
  std::vector<std::uint64_t> sorted_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> table_;
  static constexpr int kTableBits = 24;
  static constexpr std::uint32_t kNone = 0xffffffffu;
};

namespace detail {

template <class Neighbours>
std::vector<std::uint64_t> bfs_closure(std::uint64_t ref, std::size_t cap, Neighbours&& next) {
  std::vector<std::uint64_t> out{ref};
  std::unordered_set<std::uint64_t> seen{ref};
  for (std::size_t head = 0; head < out.size(); ++head) {
    next(out[head], [&](std::uint64_t t) {
      if (seen.insert(t).second) {
        if (out.size() >= cap)
          throw DimensionError("sector exceeds the dimension cap of " + std::to_string(cap));
        out.push_back(t);
      }
    });
  }
  return out;
}

}  // namespace detail

/// Breadth-first closure of `reference` under the blockade flips; new states
/// are discovered by flipping plaquettes in increasing index order.
inline Basis enumerate_sector(const Lattice& lat, DualConfig reference, BlockadeRule rule,
                              std::size_t cap = kDefaultDimensionCap) {
  const FlipTable ft(lat, rule);
  const int n = lat.num_spins();
  auto states = detail::bfs_closure(reference.bits, cap, [&](std::uint64_t s, auto&& emit) {
    for (int p = 0; p < n; ++p)
      if (ft.flippable(s, p)) emit(s ^ (std::uint64_t{1} << p));
  });
  return Basis(lat.spec(), BasisPicture::dual, std::move(states));
}

inline Basis enumerate_sector(const Lattice& lat, std::size_t cap = kDefaultDimensionCap) {
  return enumerate_sector(lat, all_up(lat), default_rule(lat), cap);
}

/// Same closure in the link picture, starting from Omega and using the
/// ring-exchange plaquette operator.
inline Basis enumerate_link_sector(const Lattice& lat, std::size_t cap = kDefaultDimensionCap) {
  const int n = lat.num_spins();
  auto states = detail::bfs_closure(omega(lat).bits, cap, [&](std::uint64_t s, auto&& emit) {
    for (int p = 0; p < n; ++p)
      if (auto t = apply_plaquette(lat, LinkConfig{s}, p)) emit(t->bits);
  });
  return Basis(lat.spec(), BasisPicture::link, std::move(states));
}

// ------------------------------------------------------------- export

/// Binary layout: "RKSB", u16 version, u8 lattice kind, u8 picture, u32 nx,
/// u32 ny, then one little-endian u64 per state.
inline void write_basis_binary(const Basis& b, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  auto put = [&](std::uint64_t v, int bytes) {
    for (int k = 0; k < bytes; ++k) os.put(static_cast<char>((v >> (8 * k)) & 0xffu));
  };
  os.write("RKSB", 4);
  put(1, 2);
  put(static_cast<std::uint64_t>(b.spec().kind), 1);
  put(static_cast<std::uint64_t>(b.picture()), 1);
  put(static_cast<std::uint64_t>(b.spec().nx), 4);
  put(static_cast<std::uint64_t>(b.spec().ny), 4);
  for (auto s : b.states()) put(s, 8);
  if (!os) throw Error("write failed: " + path);
}

inline Basis read_basis_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  auto get = [&](int bytes) {
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) {
      const int c = is.get();
      if (c == EOF) throw Error("truncated basis file " + path);
      v |= static_cast<std::uint64_t>(c & 0xff) << (8 * k);
    }
    return v;
  };
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RKSB", 4) != 0) throw Error("not a basis file: " + path);
  if (get(2) != 1) throw Error("unsupported basis file version");
  LatticeSpec spec;
  spec.kind = static_cast<LatticeKind>(get(1));
  const auto picture = static_cast<BasisPicture>(get(1));
  spec.nx = static_cast<int>(get(4));
  spec.ny = static_cast<int>(get(4));
  std::vector<std::uint64_t> states;
  while (is.peek() != EOF) states.push_back(get(8));
  return Basis(spec, picture, std::move(states));
}

inline nlohmann::json basis_to_json(const Basis& b, std::size_t max_states = 4096) {
  if (b.size() > max_states) throw DimensionError("basis too large for JSON export");
  return {{"lattice", to_string(b.spec().kind)},
          {"nx", b.spec().nx},
          {"ny", b.spec().ny},
          {"picture", b.picture() == BasisPicture::dual ? "dual" : "link"},
          {"dimension", b.size()},
          {"states", b.states()}};
}

}  // namespace rydgauge
