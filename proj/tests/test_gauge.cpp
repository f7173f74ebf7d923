#include <gtest/gtest.h>

#include <cstdio>
#include <unistd.h>

#include "oracles.hpp"
#include "rydgauge/basis.hpp"
#include "rydgauge/gauge.hpp"
#include "rydgauge/hamiltonian.hpp"

using namespace rydgauge;

namespace {

std::vector<LatticeSpec> small_lattices() {
  std::vector<LatticeSpec> out;
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b) out.push_back(LatticeSpec::open_square(a, b));
  for (int nx = 2; nx <= 6; nx += 2) out.push_back(LatticeSpec::periodic_ladder(nx));
  return out;
}

}  // namespace

TEST(Vertex, SixVacuumPatterns) {
  const auto pats = list_physical_vertex_configs(ChargeBackground::vacuum());
  EXPECT_EQ(pats.size(), 6u);
  for (unsigned p = 0; p < 16; ++p)
    EXPECT_EQ(vertex_physical(p, ChargeBackground::vacuum()), oracle::vacuum_gauss(p)) << p;
}

TEST(Vertex, StaggeredBackgroundHasFourPatternsPerParity) {
  for (int parity : {0, 1}) {
    const auto pats = list_physical_vertex_configs(ChargeBackground::staggered(), parity);
    EXPECT_EQ(pats.size(), 4u);
    // exactly one dimer touches every site
    for (unsigned p : pats) EXPECT_EQ(std::popcount(p), 1);
  }
}

TEST(Duality, OmegaIsPhysical) {
  for (const auto& spec : small_lattices()) {
    const Lattice lat(spec);
    EXPECT_TRUE(is_physical(lat, omega(lat))) << to_string(spec);
    EXPECT_EQ(to_dual(lat, omega(lat)), all_up(lat)) << to_string(spec);
  }
}

TEST(Duality, SectorStatesMapToPhysicalLinks) {
  for (const auto& spec : small_lattices()) {
    const Lattice lat(spec);
    const Basis b = enumerate_sector(lat);
    for (auto s : b.states()) {
      const LinkConfig c = from_dual(lat, DualConfig{s});
      ASSERT_TRUE(is_physical(lat, c)) << to_string(spec) << " state " << s;
      const DualConfig back = to_dual(lat, c);
      EXPECT_EQ(from_dual(lat, back), c);
      if (spec.kind == LatticeKind::open_square) EXPECT_EQ(back.bits, s);
    }
  }
}

TEST(Duality, LadderGlobalFlipHasTheSameLinks) {
  const Lattice lat(LatticeSpec::periodic_ladder(4));
  const Basis b = enumerate_sector(lat);
  for (auto s : b.states()) {
    const std::uint64_t f = s ^ low_mask(lat.num_spins());
    EXPECT_TRUE(b.contains(f));
    EXPECT_EQ(from_dual(lat, DualConfig{s}), from_dual(lat, DualConfig{f}));
  }
}

TEST(Duality, PlaquetteFlipsIntertwine) {
  for (const auto& spec : small_lattices()) {
    const Lattice lat(spec);
    const Basis b = enumerate_sector(lat);
    for (auto s : b.states()) {
      const DualConfig d{s};
      const LinkConfig c = from_dual(lat, d);
      for (int p = 0; p < lat.num_spins(); ++p) {
        const auto fd = apply_dual_plaquette(lat, d, p);
        const auto fl = apply_plaquette(lat, c, p);
        ASSERT_EQ(fd.has_value(), fl.has_value()) << to_string(spec) << " p=" << p;
        if (fd) EXPECT_EQ(from_dual(lat, *fd), *fl);
      }
    }
  }
}

TEST(Duality, VortexPatternsAreExactlyTheUnphysicalImages) {
  for (const auto& spec : {LatticeSpec::open_square(3, 3), LatticeSpec::open_square(2, 3),
                           LatticeSpec::periodic_ladder(4)}) {
    const Lattice lat(spec);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << lat.num_spins()); ++s)
      ASSERT_EQ(is_physical(lat, from_dual(lat, DualConfig{s})), vortex_count(lat, s) == 0)
          << to_string(spec) << " " << s;
  }
}

TEST(Duality, ToDualRejectsGaussViolation) {
  const Lattice lat(LatticeSpec::open_square(2, 2));
  LinkConfig c = omega(lat);
  c.bits ^= 1u;
  EXPECT_THROW(to_dual(lat, c), PhysicalityError);
  EXPECT_FALSE(check_gauss_law(lat, c).empty());
}

TEST(Counting, DualSectorMatchesDirectGaussCount) {
  for (int a = 1; a <= 4; ++a)
    for (int b = a; b <= 4; ++b) {
      const Lattice lat(LatticeSpec::open_square(a, b));
      const auto direct = count_physical_link_configs(lat);
      EXPECT_EQ(enumerate_sector(lat).size(), direct) << a << "x" << b;
      if (a * b <= 9) EXPECT_EQ(enumerate_link_sector(lat).size(), direct);
    }
}

TEST(Counting, KnownSquareSizes) {
  EXPECT_EQ(enumerate_sector(Lattice(LatticeSpec::open_square(1, 1))).size(), 2u);
  EXPECT_EQ(enumerate_sector(Lattice(LatticeSpec::open_square(1, 2))).size(), 3u);
}

TEST(Counting, LadderDualSectorDoublesTheLinkSector) {
  for (int nx = 2; nx <= 8; nx += 2) {
    const Lattice lat(LatticeSpec::periodic_ladder(nx));
    EXPECT_EQ(enumerate_sector(lat).size(), 2 * enumerate_link_sector(lat).size()) << nx;
  }
}

TEST(Counting, PxpChainIsFibonacci) {
  for (int n = 1; n <= 16; ++n) {
    const Lattice lat(LatticeSpec::chain(n));
    EXPECT_EQ(enumerate_sector(lat).size(), oracle::no_adjacent_zeros(n)) << n;
  }
  EXPECT_EQ(enumerate_sector(Lattice(LatticeSpec::chain(16))).size(), 2584u);
}

TEST(Heights, SpinsFromHeightsMatchTheDuality) {
  for (const auto& spec : small_lattices()) {
    const Lattice lat(spec);
    const Basis b = enumerate_link_sector(lat);
    for (auto s : b.states()) {
      const LinkConfig c{s};
      EXPECT_EQ(height_field(lat, c).spins(lat), to_dual(lat, c)) << to_string(spec);
    }
  }
}

TEST(Heights, OmegaIsFlat) {
  const Lattice lat(LatticeSpec::open_square(3, 3));
  const auto h = height_field(lat, omega(lat));
  for (int p = 0; p < lat.num_spins(); ++p) EXPECT_EQ(h.twice_h[p], lat.parity(p));
}

TEST(Dimers, RotationIsAnInvolutionAndPreservesFlippability) {
  for (const auto& spec : small_lattices()) {
    const Lattice lat(spec);
    const Basis link = enumerate_link_sector(lat);
    for (auto s : link.states()) {
      const LinkConfig c{s};
      const auto r = rotate_to_dimer_basis(lat, c);
      EXPECT_EQ(rotate_to_dimer_basis(lat, r), c);
      for (int p = 0; p < lat.num_spins(); ++p)
        EXPECT_EQ(dimer_flippable(lat, r, p), plaquette_flippable(lat, c, p)) << to_string(spec);
    }
  }
}

TEST(Blockade, GeneralizedRule) {
  const Lattice lat(LatticeSpec::open_square(3, 3));
  const FlipTable ft(lat);
  // centre spin 4 with neighbours 5, 7, 3, 1
  const std::uint64_t all = low_mask(9);
  EXPECT_TRUE(ft.flippable(all, 4));
  EXPECT_TRUE(ft.flippable(1u << 4, 4));
  EXPECT_FALSE(ft.flippable(all ^ (1u << 5), 4));
  // corner spins touch the frozen up boundary, so all-down never applies
  EXPECT_FALSE(ft.flippable(0, 0));
}

TEST(Basis, LookupAndBinaryRoundTrip) {
  const Lattice lat(LatticeSpec::open_square(3, 3));
  const Basis b = enumerate_sector(lat);
  EXPECT_EQ(b[0], all_up(lat).bits);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b.index_of(b[i]), i);
  EXPECT_EQ(b.index_of(0), Basis::npos);
  EXPECT_EQ(b.index_of(~std::uint64_t{0}), Basis::npos);

  char name[] = "/tmp/rydgauge_basisXXXXXX";
  const int fd = mkstemp(name);
  ASSERT_GE(fd, 0);
  close(fd);
  write_basis_binary(b, name);
  const Basis back = read_basis_binary(name);
  std::remove(name);
  EXPECT_EQ(back.states(), b.states());
  EXPECT_EQ(back.spec(), b.spec());
  EXPECT_EQ(back.picture(), BasisPicture::dual);
}

TEST(Basis, DimensionCapAndDuplicates) {
  const Lattice lat(LatticeSpec::open_square(3, 3));
  EXPECT_THROW(enumerate_sector(lat, all_up(lat), BlockadeRule::generalized, 10), DimensionError);
  EXPECT_THROW(Basis(lat.spec(), BasisPicture::dual, {1, 2, 1}), Error);
}

TEST(Basis, FullSpaceIndexIsTheMask) {
  const Basis f = Basis::full(LatticeSpec::open_square(2, 2), 4);
  EXPECT_EQ(f.size(), 16u);
  EXPECT_EQ(f.index_of(11), 11u);
  EXPECT_EQ(f.index_of(16), Basis::npos);
}
