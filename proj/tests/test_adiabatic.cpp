#include <gtest/gtest.h>

#include <sstream>

#include "rydgauge/adiabatic.hpp"

using namespace rydgauge;

TEST(Pulse, Profile) {
  PulseSpec p{2.0, 10.0, 0.01};
  EXPECT_DOUBLE_EQ(p.J_at(0.0), 0.0);
  EXPECT_NEAR(p.J_at(10.0), 2.0, 1e-15);
  EXPECT_NEAR(p.J_at(5.0), 2.0 * std::sin(kPi / 4), 1e-15);
  EXPECT_THROW((PulseSpec{1.0, 0.0, 0.01}.validate()), Error);
  EXPECT_THROW((PulseSpec{1.0, 1.0, 0.0}.validate()), Error);
  EXPECT_THROW((PulseSpec{0.0, 1.0, 0.01}.validate()), Error);
}

TEST(Adiabatic, InitialStateFollowsTheDetuning) {
  const Lattice lat(LatticeSpec::periodic_ladder(4));
  EXPECT_EQ(adiabatic_initial_state(lat, 0.1), 0u);
  EXPECT_EQ(adiabatic_initial_state(lat, -0.1), low_mask(8));
  // both are sector members
  const Basis sec = enumerate_sector(lat);
  EXPECT_TRUE(sec.contains(0));
  EXPECT_TRUE(sec.contains(low_mask(8)));
}

TEST(Adiabatic, SmallLadderTrajectory) {
  const Lattice lat(LatticeSpec::periodic_ladder(4));
  const auto sol = solve_ladder_geometry(0.38);
  PulseSpec p{1.0, 4.0, 0.02};
  AdiabaticOptions o;
  o.record_every = 20;
  const auto r = adiabatic_sweep(lat, sol, p, o);
  ASSERT_EQ(r.trajectory.size(), 11u);
  EXPECT_NEAR(r.trajectory.front().fidelity, 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(r.trajectory.back().t, 4.0);
  for (const auto& row : r.trajectory) {
    EXPECT_NEAR(row.norm, 1.0, 1e-9);
    EXPECT_GE(row.fidelity, 0.0);
    EXPECT_LE(row.fidelity, 1.0 + 1e-12);
  }
  EXPECT_NEAR(r.final_fidelity, r.trajectory.back().fidelity, 1e-12);
  EXPECT_EQ(r.stats.steps, 200);
  EXPECT_EQ(r.final_state.size(), 256u);
  // the initial all-down state has S00z = 1
  EXPECT_NEAR(r.trajectory.front().s00z, 1.0, 1e-14);
}

TEST(Adiabatic, InstantaneousGroundStateLivesInTheSector) {
  const Lattice lat(LatticeSpec::periodic_ladder(4));
  const auto sol = solve_ladder_geometry(0.38);
  const Basis sec = enumerate_sector(lat);
  const auto v = instantaneous_ground_state(lat, sec, sol, 0.5, 0.1, {});
  double in = 0.0;
  for (auto s : sec.states()) in += std::norm(v[s]);
  EXPECT_NEAR(in, 1.0, 1e-12);
}

TEST(Adiabatic, ChainIsRejected) {
  EXPECT_THROW(adiabatic_sweep(Lattice(LatticeSpec::chain(4)), solve_ladder_geometry(0.38), PulseSpec{}),
               Error);
}

TEST(Adiabatic, CsvLayout) {
  std::ostringstream os;
  write_trajectory_csv(os, {TrajectoryRow{0.5, 0.1, -1.0, 0.2, 0.3, 0.4, 0.9, 1.0}});
  EXPECT_EQ(os.str(), "t,J_t,energy,S00z,Spipiz,Spipix,fidelity_instantaneous\n0.5,0.1,-1,0.2,0.3,0.4,0.9\n");
}
