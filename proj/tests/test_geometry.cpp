#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rydgauge/geometry.hpp"

using namespace rydgauge;

namespace {

oracle::V3 ov(const Vec3& v) { return {v.x, v.y, v.z}; }

}  // namespace

TEST(Couplings, AVanishesWithoutDisplacement) {
  EXPECT_NEAR(ising_coupling_A(x_hat, Vec3{}, 1.0), 0.0, 1e-15);
}

TEST(Couplings, AMatchesDirectEvaluation) {
  const Vec3 eta = pair_displacement(0.38);
  const double a = ising_coupling_A(x_hat, eta, 1.0);
  EXPECT_NEAR(a, oracle::coupling_A({1, 0, 0}, {0.38L, 0, 0}), 1e-12);
  EXPECT_NEAR(a, -15.75, 0.01);
}

TEST(Couplings, LadderDiagonalCouplingGivesLambda) {
  const Vec3 eta = pair_displacement(0.38);
  EXPECT_NEAR(ising_coupling_A({1.0, 0.588, 0.0}, eta, 1.0) / 2.0, -0.918, 0.005);
}

TEST(Couplings, BMatchesDirectEvaluation) {
  const Vec3 eta = pair_displacement(0.38);
  const double b = onsite_coefficient_B(x_hat, eta, 1.0);
  EXPECT_NEAR(b, 1.0 / std::pow(1.38, 6) - 1.0 / std::pow(0.62, 6), 1e-12);
  EXPECT_NEAR(b, -17.46, 0.01);
  EXPECT_NEAR(onsite_coefficient_B(y_hat * 0.7, eta, 1.0), 0.0, 1e-14);
}

TEST(Couplings, SymmetryProperties) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 eta{0.3 * u(rng), 0.0, 0.3 * u(rng)};
    Vec3 sep{u(rng), u(rng), 0.2 * u(rng)};
    if (sep.norm() < eta.norm() + 0.3) continue;
    const double a = ising_coupling_A(sep, eta, 2.0);
    EXPECT_NEAR(a, ising_coupling_A(sep * -1.0, eta, 2.0), 1e-10 * (1 + std::abs(a)));
    EXPECT_NEAR(a, ising_coupling_A(sep, eta * -1.0, 2.0), 1e-10 * (1 + std::abs(a)));
    EXPECT_NEAR(a, oracle::coupling_A(ov(sep), ov(eta), 2.0L), 1e-9 * (1 + std::abs(a)));
    const double b = onsite_coefficient_B(sep, eta, 2.0);
    EXPECT_NEAR(b, -onsite_coefficient_B(sep * -1.0, eta, 2.0), 1e-10 * (1 + std::abs(b)));
    EXPECT_NEAR(b, oracle::coupling_B(ov(sep), ov(eta), 2.0L), 1e-9 * (1 + std::abs(b)));
  }
}

TEST(Couplings, CollisionIsRejected) {
  const Vec3 eta = pair_displacement(0.38);
  EXPECT_THROW(ising_coupling_A(eta, eta, 1.0), DegenerateGeometryError);
  EXPECT_THROW(onsite_coefficient_B(eta * -1.0, eta, 1.0), DegenerateGeometryError);
  EXPECT_THROW(ising_coupling_A(Vec3{}, eta, 1.0), DegenerateGeometryError);
}

TEST(EffectiveRabi, ClosedForm) {
  const DriveParams d{0.1, -2.0, 0.0};
  const double e6 = std::pow(0.38, 6);
  EXPECT_NEAR(effective_rabi(d, 0.38, 1.0), 0.01 * (1.0 / -2.0 + e6 / (1.0 + 2.0 * e6)), 1e-15);
  EXPECT_NEAR(effective_rabi({0.0, -2.0, 0.0}, 0.38, 1.0), 0.0, 1e-15);
}

TEST(EffectiveRabi, PoleAndZeroDetuning) {
  // C6 = Delta |eta|^6
  EXPECT_THROW(effective_rabi({0.1, 64.0, 0.0}, 0.5, 1.0), PoleError);
  EXPECT_THROW(effective_rabi({0.1, 0.0, 0.0}, 0.5, 1.0), PoleError);
}

TEST(EffectiveRabi, RegimeFlag) {
  EXPECT_TRUE(perturbative_regime({0.05, -1.0, 0.0}, 0.38, 1.0));
  EXPECT_FALSE(perturbative_regime({0.5, -1.0, 0.0}, 0.38, 1.0));
  EXPECT_FALSE(perturbative_regime({0.05, 1.0, 0.0}, 0.38, 1.0));
}

TEST(Blockade, GapIsSmallestProperSubsetSum) {
  const std::vector<double> a{1.0, 1.0, -2.0};
  EXPECT_DOUBLE_EQ(validate_generalized_blockade(a), 1.0);
  const std::vector<double> b{-3.0, -3.0, 6.0};
  EXPECT_DOUBLE_EQ(validate_generalized_blockade(b), 3.0);
}

TEST(Blockade, VanishingSubsetIsReported) {
  const std::vector<double> a{1.0, -1.0, 2.0, -2.0};
  try {
    validate_generalized_blockade(a);
    FAIL() << "expected a degeneracy error";
  } catch (const BlockadeDegeneracyError& e) {
    EXPECT_EQ(e.subset(), (std::vector<std::size_t>{0, 1}));
  }
}

TEST(Ladder, ReferenceValues) {
  const auto s = solve_ladder_geometry(0.38, 1.0);
  EXPECT_NEAR(s.a_y, 0.59, 0.02 * 0.59);
  EXPECT_NEAR(s.G, 15.71, 0.01 * 15.71);
  EXPECT_NEAR(s.Lambda, -0.91, 0.02 * 0.91);
  EXPECT_GT(s.G, 0.0);
  EXPECT_LT(s.Lambda, 0.0);
}

TEST(Ladder, NearestCouplingsSumToZero) {
  const auto s = solve_ladder_geometry(0.38, 1.0);
  const auto nn = s.nearest_couplings();
  ASSERT_EQ(nn.size(), 3u);
  EXPECT_NEAR(nn[0] + nn[1] + nn[2], 0.0, 1e-8 * s.G);
  EXPECT_NEAR(s.G, -ising_coupling_A(x_hat, s.geometry.eta, 1.0), 1e-12);
  // B cancels between the two legs neighbours along x
  double bsum = 0.0;
  for (const auto& c : s.couplings)
    if (c.order == 1 && c.sublattice == 0) bsum += c.B;
  EXPECT_NEAR(bsum, 0.0, 1e-10);
}

TEST(Ladder, ScalesWithC6) {
  const auto s1 = solve_ladder_geometry(0.3, 1.0);
  const auto s2 = solve_ladder_geometry(0.3, 2.5);
  EXPECT_NEAR(s1.a_y, s2.a_y, 1e-9);
  EXPECT_NEAR(2.5 * s1.G, s2.G, 1e-8);
  EXPECT_NEAR(2.5 * s1.Lambda, s2.Lambda, 1e-8);
}

TEST(Ladder, OutOfRangeDisplacement) {
  EXPECT_THROW(solve_ladder_geometry(0.6), DegenerateGeometryError);
  EXPECT_THROW(solve_ladder_geometry(0.0), DegenerateGeometryError);
}

TEST(Square, ReferenceValues) {
  const auto s = solve_square_geometry(0.5, 0.85, 0.07, 1.0);
  EXPECT_NEAR(s.a_y, 0.88, 0.01 * 0.88);
  EXPECT_NEAR(s.G, 1.42, 0.02 * 1.42);
  EXPECT_NEAR(s.Lambda, -0.088, 0.05 * 0.088);
}

TEST(Square, GapFormulaAgreesWithSubsetSearch) {
  const auto s = solve_square_geometry(0.5, 0.85, 0.07, 1.0);
  EXPECT_NEAR(s.G, square_gap_formula(s.geometry), 1e-9);
}

TEST(Square, NearestBSumVanishes) {
  const auto s = solve_square_geometry(0.5, 0.85, 0.07, 1.0);
  for (int sub = 0; sub < 2; ++sub) {
    double a = 0.0, b = 0.0;
    for (const auto& c : s.couplings)
      if (c.order == 1 && c.sublattice == sub) a += c.A, b += c.B;
    EXPECT_NEAR(a, 0.0, 1e-8);
    EXPECT_NEAR(b, 0.0, 1e-10);
  }
}

TEST(Square, UnshiftedLatticeIsDegenerate) {
  EXPECT_THROW(solve_square_geometry(0.5, 0.85, 0.0, 1.0), BlockadeDegeneracyError);
}

TEST(Roots, NoSignChange) {
  EXPECT_THROW(detail::bisect_root([](double) { return 1.0; }, 0.0, 1.0, 1e-10, "test"), NoRootError);
}

TEST(Table, SizesAndOrders) {
  const auto s = solve_ladder_geometry(0.38);
  EXPECT_EQ(coupling_table(s.geometry, 1).size(), 6u);
  EXPECT_EQ(coupling_table(s.geometry, 2).size(), 10u);
  const auto q = solve_square_geometry(0.5, 0.85, 0.07);
  EXPECT_EQ(coupling_table(q.geometry, 2).size(), 16u);
  EXPECT_THROW(coupling_table(q.geometry, 3), Error);
}

TEST(Table, LegsAreMirrorImages) {
  const auto s = solve_ladder_geometry(0.38);
  const auto t = coupling_table(s.geometry, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(t[i].A, t[i + 5].A, 1e-12);
    EXPECT_NEAR(t[i].separation.y, -t[i + 5].separation.y, 1e-12);
  }
}

TEST(Json, RoundTrip) {
  const auto s = solve_square_geometry(0.5, 0.85, 0.07);
  const auto back = blockade_solution_from_json(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(back.geometry.kind, ArrayKind::square);
  EXPECT_DOUBLE_EQ(back.a_y, s.a_y);
  EXPECT_DOUBLE_EQ(back.G, s.G);
  EXPECT_DOUBLE_EQ(back.Lambda, s.Lambda);
  EXPECT_NEAR(back.geometry.theta(), 0.85, 1e-12);
  ASSERT_EQ(back.couplings.size(), s.couplings.size());
  EXPECT_THROW(blockade_solution_from_json(nlohmann::json{{"kind", "ladder"}}), ConfigError);
}
