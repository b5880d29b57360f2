#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "isentrope/errors.hpp"
#include "isentrope/symbolic.hpp"

using namespace isentrope;

namespace {

IntervalMap tent2() { return make_tent({1, -1}, {{1.0}}); }
IntervalMap chebyshev() { return make_cubic(4.0, 0.0); }
IntervalMap stunted_half() { return make_stunted({2, -1}, {{0.5, -0.5}}); }

std::vector<int> syms(std::initializer_list<int> s) { return s; }

}  // namespace

TEST(Itinerary, BoundaryFixedPoint) {
  EXPECT_EQ(itinerary(chebyshev(), 1.0, 4).symbols, syms({4, 4, 4, 4}));
  EXPECT_EQ(itinerary(chebyshev(), 1.0, 4).str(), "L2 L2 L2 L2");
}

TEST(Itinerary, InteriorFixedPoint) {
  EXPECT_EQ(itinerary(tent2(), 1.0 / 3.0, 3).str(), "L1 L1 L1");
}

TEST(Itinerary, PlateauCarriesCriticalSymbol) {
  // c_1 lies on Z_1 (value 0.5), and 0.5 is the right end of Z_2 = [1/6, 1/2].
  EXPECT_EQ(itinerary(stunted_half(), -1.0 / 3.0, 2).str(), "C1 C2");
}

TEST(BranchDecomposition, FullTentDepthFive) {
  const auto d = branch_decomposition(tent2(), 5);
  EXPECT_EQ(d.laps, 32u);
  EXPECT_NEAR(d.variation, 64.0, 1e-12);
  EXPECT_EQ(d.branches.size(), 32u);
}

TEST(BranchDecomposition, ChebyshevDepthThree) {
  EXPECT_EQ(branch_decomposition(chebyshev(), 3).laps, 27u);
}

TEST(BranchDecomposition, DepthOneCountsLapsOfTheMap) {
  EXPECT_EQ(branch_decomposition(tent2(), 1).laps, 2u);
  EXPECT_EQ(branch_decomposition(stunted_half(), 1).laps, 3u);
  EXPECT_EQ(branch_decomposition(make_tent({4, 1}, {{-0.2, 0.3, -0.9, 0.1}}), 1).laps, 5u);
}

TEST(BranchDecomposition, StuntedLapsGrowLinearly) {
  // Frozen from dense-grid monotonicity counting of the iterates.
  const std::uint64_t expected[] = {3, 5, 7, 9, 11, 13};
  for (int n = 1; n <= 6; ++n)
    EXPECT_EQ(branch_decomposition(stunted_half(), n).laps, expected[n - 1]) << n;
}

TEST(BranchDecomposition, PiecesCoverTheInterval) {
  const auto d = branch_decomposition(make_tent({3, -1}, {{0.4, -0.7, 0.9}}), 4);
  EXPECT_EQ(d.branches.front().left, -1.0);
  EXPECT_EQ(d.branches.back().right, 1.0);
  for (std::size_t k = 0; k + 1 < d.branches.size(); ++k)
    EXPECT_EQ(d.branches[k].right, d.branches[k + 1].left);
}

TEST(BranchDecomposition, BudgetExceededCarriesDepth) {
  try {
    branch_decomposition(tent2(), 12, 100);
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.depth_reached(), 6);
  }
}

TEST(BranchDecomposition, CsvHeader) {
  std::ostringstream os;
  branch_decomposition(tent2(), 1).write_csv(os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "left,right,image_left,image_right");
  EXPECT_EQ(os.str(), "left,right,image_left,image_right\n-1,0,-1,1\n0,1,1,-1\n");
}

TEST(BranchDecomposition, ImagesMatchDirectIteration) {
  const auto f = make_cubic(3.2, 0.3);
  const auto d = branch_decomposition(f, 4);
  for (const auto& b : d.branches) {
    EXPECT_NEAR(f.iterate(b.left, 4), b.image_left, 1e-8);
    EXPECT_NEAR(f.iterate(b.right, 4), b.image_right, 1e-8);
  }
}

TEST(LapCounter, AgreesWithExplicitDecomposition) {
  const std::vector<IntervalMap> maps{
      tent2(), stunted_half(), make_tent({2, -1}, {{0.6, -0.4}}),
      make_stunted({3, -1}, {{0.7, -0.2, 0.5}}), make_cubic(3.5, 0.2),
      make_stunted({4, 1}, {{-0.8, 0.3, -0.6, 0.9}})};
  for (const auto& f : maps) {
    LapCounter counter(f);
    for (int n = 1; n <= 7; ++n) {
      ASSERT_TRUE(counter.step());
      const auto d = branch_decomposition(f, n);
      EXPECT_EQ(counter.laps(), d.laps) << to_string(f.kind()) << " n=" << n;
      EXPECT_NEAR(std::exp(counter.log_variation()), d.variation, 1e-9 * d.variation);
    }
  }
}

TEST(LapCounter, Submultiplicative) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const ModalShape shape{3, -1};
    ZetaCoords z{{u(rng), u(rng), u(rng)}};
    const auto f = make_tent(shape, from_zeta(shape, z));
    LapCounter c(f);
    std::vector<double> laps{1.0};
    for (int n = 1; n <= 10; ++n) {
      c.step();
      laps.push_back(static_cast<double>(c.laps()));
    }
    for (int n = 1; n <= 5; ++n)
      for (int m = 1; m <= 5; ++m) EXPECT_LE(laps[n + m], laps[n] * laps[m]);
  }
}

TEST(LapCounter, VariationBoundedByTwiceLaps) {
  const auto f = make_stunted({3, -1}, {{0.7, -0.2, 0.5}});
  LapCounter c(f);
  double prev = 0.0;
  for (int n = 1; n <= 10; ++n) {
    c.step();
    const double var = std::exp(c.log_variation());
    EXPECT_LE(var, 2.0 * static_cast<double>(c.laps()) + 1e-9);
    EXPECT_GE(var, prev - 1e-9);
    prev = var;
  }
}

TEST(LapCounter, StuntedMonotoneInZeta) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.02, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const ModalShape shape{3, -1};
    ZetaCoords lo, hi;
    for (int i = 0; i < 3; ++i) {
      const double a = u(rng), b = u(rng);
      lo.zeta.push_back(std::min(a, b));
      hi.zeta.push_back(std::max(a, b));
    }
    LapCounter a(make_stunted(shape, from_zeta(shape, lo)));
    LapCounter b(make_stunted(shape, from_zeta(shape, hi)));
    for (int n = 1; n <= 12; ++n) {
      a.step();
      b.step();
      EXPECT_LE(a.laps(), b.laps()) << "n=" << n;
    }
  }
}

TEST(Preimages, FullMaps) {
  EXPECT_EQ(preimage_count(tent2(), 0.1, 3), 8u);
  EXPECT_EQ(preimage_count(chebyshev(), 0.1, 2), 9u);
}

TEST(Preimages, StuntedMatchesBruteForce) {
  // Brute force: sign changes of f^4 on a 4e6-point grid plus the fixed point 0.
  EXPECT_EQ(preimage_count(stunted_half(), 0.0, 4), 9u);
}

TEST(Preimages, BoundedByLapNumber) {
  const auto f = make_tent({2, -1}, {{0.6, -0.4}});
  for (int n = 1; n <= 8; ++n) {
    const auto laps = branch_decomposition(f, n).laps;
    for (double x : {-0.77, -0.1234, 0.05, 0.61})
      EXPECT_LE(preimage_count(f, x, n), laps);
  }
}

TEST(Preimages, CriticalOrbitTargetIsRetargeted) {
  try {
    preimage_count(tent2(), -1.0 + 1e-14, 3);
    FAIL();
  } catch (const RetargetError& e) {
    EXPECT_NE(e.suggested_target(), -1.0 + 1e-14);
    EXPECT_NO_THROW(preimage_count(tent2(), e.suggested_target(), 3));
  }
  EXPECT_THROW(preimage_count(stunted_half(), 0.5, 2), RetargetError);
}

TEST(Itinerary, DeterminesBranch) {
  const auto f = make_tent({3, -1}, {{0.4, -0.7, 0.9}});
  const int n = 5;
  const auto d = branch_decomposition(f, n);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::pair<Itinerary, std::size_t>> seen;
  for (int k = 0; k < 2000; ++k) {
    const double x = u(rng);
    std::size_t idx = 0;
    while (d.branches[idx].right < x) ++idx;
    const auto it = itinerary(f, x, n);
    for (const auto& [other, j] : seen)
      if (other == it) EXPECT_EQ(j, idx);
    if (seen.size() < 300) seen.emplace_back(it, idx);
  }
}

TEST(Kneading, TentAndChebyshev) {
  const auto k = kneading_data(tent2(), 4);
  ASSERT_EQ(k.per_critical.size(), 1u);
  EXPECT_EQ(k.per_critical[0].str(), "L1 L0 L0 L0");
  EXPECT_EQ(k.lap_signs, syms({1, -1}));
  const auto c = kneading_data(chebyshev(), 3);
  EXPECT_EQ(c.per_critical[0].str(), "L2 L2 L2");
  EXPECT_EQ(c.per_critical[1].str(), "L0 L0 L0");
  EXPECT_EQ(c.lap_signs, syms({1, -1, 1}));
}
