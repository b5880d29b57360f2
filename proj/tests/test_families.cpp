#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "isentrope/errors.hpp"
#include "isentrope/families.hpp"

using namespace isentrope;

namespace {

const ModalShape kUni{1, -1};
const ModalShape kBi{2, -1};
const ModalShape kQuad{3, -1};

}  // namespace

TEST(Tent, FullUnimodalIsOneMinusTwiceAbs) {
  const auto f = make_tent(kUni, {{1.0}});
  for (double x : {-1.0, -0.7, -0.25, 0.0, 0.3, 0.9, 1.0})
    EXPECT_DOUBLE_EQ(f(x), 1.0 - 2.0 * std::abs(x));
  ASSERT_EQ(f.breakpoints().size(), 3u);
  EXPECT_FALSE(f.has_plateaus());
  EXPECT_DOUBLE_EQ(f.lipschitz(), 2.0);
}

TEST(Tent, FullSawtoothThroughCanonicalPoints) {
  const auto f = make_tent(kBi, {{1.0, -1.0}});
  EXPECT_DOUBLE_EQ(f(-1.0), -1.0);
  EXPECT_NEAR(f(-1.0 / 3.0), 1.0, 1e-15);
  EXPECT_NEAR(f(1.0 / 3.0), -1.0, 1e-15);
  EXPECT_DOUBLE_EQ(f(1.0), 1.0);
  EXPECT_NEAR(f.lipschitz(), 3.0, 1e-14);
  ASSERT_EQ(f.modality(), 2);
  EXPECT_EQ(f.lap_orientation()[0], 1);
  EXPECT_EQ(f.lap_orientation()[1], -1);
  EXPECT_EQ(f.lap_orientation()[2], 1);
}

TEST(Tent, AlternationBoundary) {
  EXPECT_NO_THROW(make_tent(kUni, {{-0.5}}));
  try {
    make_tent(kUni, {{-1.0}});
    FAIL() << "expected a shape error";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.index(), 1);
  }
  try {
    make_tent(kBi, {{0.2, 0.4}});
    FAIL() << "expected a shape error";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.index(), 2);
  }
}

TEST(Tent, BranchSlopesFollowCriticalValueGaps) {
  const CriticalValues v{{0.3, -0.6, 0.8}};
  const auto f = make_tent(kQuad, v);
  const double values[] = {-1.0, 0.3, -0.6, 0.8, -1.0};
  for (int i = 1; i <= 4; ++i) {
    const double mid = 0.5 * (kQuad.canonical_point(i - 1) + kQuad.canonical_point(i));
    EXPECT_NEAR(std::abs(f.derivative(mid)), std::abs(values[i] - values[i - 1]) * 4.0 / 2.0,
                1e-13);
  }
}

TEST(Stunted, UnstuntedEqualsFullSawtooth) {
  const auto f = make_stunted(kBi, {{1.0, -1.0}});
  const auto s0 = make_tent(kBi, {{1.0, -1.0}});
  EXPECT_FALSE(f.has_plateaus());
  for (int k = 0; k <= 200; ++k) {
    const double x = -1.0 + k / 100.0;
    EXPECT_DOUBLE_EQ(f(x), s0(x));
  }
}

TEST(Stunted, PlateausForHalfLevels) {
  // Solving 1 - 3|x + 1/3| = 0.5 and -1 + 3|x - 1/3| = -0.5.
  const auto f = make_stunted(kBi, {{0.5, -0.5}});
  const auto z = f.plateaus();
  ASSERT_EQ(z.size(), 2u);
  EXPECT_NEAR(z[0].lo, -0.5, 1e-15);
  EXPECT_NEAR(z[0].hi, -1.0 / 6.0, 1e-15);
  EXPECT_NEAR(z[1].lo, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(z[1].hi, 0.5, 1e-15);
  EXPECT_EQ(f(-1.0 / 3.0), 0.5);
  EXPECT_EQ(f(1.0 / 3.0), -0.5);
}

TEST(Stunted, AgreesWithSawtoothOffPlateaus) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.9, 1.0);
  for (int b : {2, 3, 4}) {
    const ModalShape shape{b, -1};
    const auto full = make_tent(shape, constant_slope_values(shape, b + 1));
    for (int trial = 0; trial < 20; ++trial) {
      ZetaCoords z;
      for (int i = 0; i < b; ++i) z.zeta.push_back(u(rng));
      CriticalValues v = from_zeta(shape, z);
      IntervalMap f = make_tent(shape, constant_slope_values(shape, b + 1));
      try {
        f = make_stunted(shape, v);
      } catch (const ShapeError&) {
        continue;
      }
      const auto plateaus = f.plateaus();
      for (int k = 0; k <= 400; ++k) {
        const double x = -1.0 + k / 200.0;
        bool inside = false;
        for (std::size_t i = 0; i < plateaus.size(); ++i) {
          if (plateaus[i].contains(x)) inside = true;
        }
        if (inside) continue;
        EXPECT_NEAR(f(x), full(x), 1e-14) << "b=" << b << " x=" << x;
      }
      for (int i = 0; i < b; ++i) {
        EXPECT_EQ(f(shape.canonical_point(i + 1)), v.v[i]);
      }
    }
  }
}

TEST(Stunted, PlateausNestWhenZetaGrows) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ModalShape shape{3, -1};
  for (int trial = 0; trial < 50; ++trial) {
    ZetaCoords lo, hi;
    for (int i = 0; i < 3; ++i) {
      const double a = u(rng), b = u(rng);
      lo.zeta.push_back(std::min(a, b));
      hi.zeta.push_back(std::max(a, b));
    }
    const auto f = make_stunted(shape, from_zeta(shape, lo));
    const auto g = make_stunted(shape, from_zeta(shape, hi));
    for (int i = 0; i < 3; ++i) {
      const auto zf = f.critical_pieces()[i];
      const auto zg = g.critical_pieces()[i];
      EXPECT_LE(zf.lo, zg.lo + 1e-15);
      EXPECT_GE(zf.hi, zg.hi - 1e-15);
    }
  }
}

TEST(Zeta, RoundTripIsExact) {
  const CriticalValues v{{0.25, -0.75, 0.5}};
  for (int eps : {-1, 1}) {
    const ModalShape shape{3, eps};
    EXPECT_EQ(from_zeta(shape, to_zeta(shape, v)).v, v.v);
  }
}

TEST(Cubic, ChebyshevCriticalStructure) {
  const auto f = make_cubic(4.0, 0.0);
  for (double x : {-0.9, -0.2, 0.4, 0.77}) EXPECT_NEAR(f(x), 4 * x * x * x - 3 * x, 1e-15);
  ASSERT_EQ(f.modality(), 2);
  EXPECT_NEAR(f.critical_points()[0], -0.5, 1e-15);
  EXPECT_NEAR(f.critical_points()[1], 0.5, 1e-15);
  // On the boundary beta = 2 sqrt(alpha) - alpha the right critical point maps to -1.
  EXPECT_NEAR(f.critical_values()[1], -1.0, 1e-15);
  EXPECT_NEAR(1.0 - 1.0 / std::sqrt(4.0), f.critical_points()[1], 1e-15);
}

TEST(Cubic, AlphaOneBetaOne) {
  const auto f = make_cubic(1.0, 1.0);
  EXPECT_NEAR(f.critical_points()[0], -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(f.critical_values()[0], -23.0 / 27.0, 1e-15);
  EXPECT_NEAR(f.critical_points()[1], 0.0, 1e-15);
  EXPECT_NEAR(f.critical_values()[1], -1.0, 1e-15);
}

TEST(Cubic, EndpointsAnchored) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ua(1.0, 4.0), ub(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double a = ua(rng);
    const double b = ub(rng) * (2 * std::sqrt(a) - a);
    try {
      const auto f = make_cubic(a, b);
      EXPECT_EQ(f(-1.0), -1.0);
      EXPECT_EQ(f(1.0), 1.0);
      const auto p = f.polynomial_form();
      EXPECT_NEAR((*p)(-1.0), -1.0, 1e-14);
      EXPECT_NEAR((*p)(1.0), 1.0, 1e-14);
    } catch (const DomainError&) {
    }
  }
}

TEST(Cubic, OutsideRegionRejected) {
  EXPECT_THROW(make_cubic(4.5, 0.0), DomainError);
  EXPECT_THROW(make_cubic(0.0, 0.0), DomainError);
  EXPECT_THROW(make_cubic(1.0, 1.2), DomainError);
}

TEST(Inverse, FullMapIsChebyshev) {
  const auto f = map_from_critical_values(kBi, {{1.0, -1.0}});
  EXPECT_NEAR(f.alpha(), 4.0, 1e-9);
  EXPECT_NEAR(f.beta(), 0.0, 1e-9);
}

TEST(Inverse, RecoversAlphaOneBetaOne) {
  const auto f = map_from_critical_values(kBi, {{-23.0 / 27.0, -1.0}});
  EXPECT_NEAR(f.alpha(), 1.0, 1e-9);
  EXPECT_NEAR(f.beta(), 1.0, 1e-9);
}

TEST(Inverse, RoundTripRandomCubics) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ua(1.0, 4.0), ub(-0.95, 0.95);
  for (int k = 0; k < 30; ++k) {
    const double a = ua(rng);
    const double b = ub(rng) * (2 * std::sqrt(a) - a);
    const auto f = make_cubic(a, b);
    const CriticalValues v{{f.critical_values()[0], f.critical_values()[1]}};
    const auto g = map_from_critical_values(kBi, v);
    EXPECT_NEAR(g.alpha(), a, 1e-9);
    EXPECT_NEAR(g.beta(), b, 1e-9);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(g.critical_values()[i], v.v[i], 1e-10);
  }
}

TEST(Inverse, QuarticRoundTripAndAlternation) {
  const ModalShape shape{3, -1};
  for (const auto& v : std::vector<CriticalValues>{{{1.0, -1.0, 1.0}},
                                                   {{0.5, -0.8, 0.9}},
                                                   {{0.2, 0.1, 0.95}},
                                                   {{0.9, -0.95, 0.3}}}) {
    const auto f = map_from_critical_values(shape, v);
    ASSERT_EQ(f.modality(), 3);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(f.critical_values()[i], v.v[i], 1e-10);
    EXPECT_EQ(f(-1.0), -1.0);
    EXPECT_EQ(f(1.0), -1.0);
  }
}

TEST(Inverse, PositiveEpsilonCubic) {
  const ModalShape shape{2, 1};
  const auto f = map_from_critical_values(shape, {{-0.6, 0.7}});
  EXPECT_EQ(f(-1.0), 1.0);
  EXPECT_EQ(f(1.0), -1.0);
  EXPECT_NEAR(f.critical_values()[0], -0.6, 1e-10);
  EXPECT_NEAR(f.critical_values()[1], 0.7, 1e-10);
}

TEST(Inverse, SingularQuarticRejected) {
  EXPECT_THROW(map_from_critical_values(kQuad, {{0.3, 0.3, 0.8}}), SingularityError);
}

TEST(ConstantSlope, OddAndEvenModality) {
  const auto v1 = constant_slope_values(kUni, 1.5);
  EXPECT_DOUBLE_EQ(v1.v[0], 0.5);
  const auto v3 = constant_slope_values(kQuad, 3.0);
  EXPECT_DOUBLE_EQ(v3.v[0], 0.5);
  EXPECT_DOUBLE_EQ(v3.v[1], -1.0);
  EXPECT_DOUBLE_EQ(v3.v[2], 0.5);
  EXPECT_THROW(constant_slope_values(kBi, 2.0), DomainError);
  const auto f = make_tent(kQuad, v3);
  for (double x : {-0.9, -0.3, 0.2, 0.8}) EXPECT_NEAR(std::abs(f.derivative(x)), 3.0, 1e-13);
}

TEST(Json, RoundTripsEveryKind) {
  const std::vector<IntervalMap> maps{
      make_tent(kUni, {{0.4}}), make_stunted(kBi, {{0.5, -0.5}}), make_cubic(3.0, 0.2),
      map_from_critical_values(kQuad, {{0.5, -0.8, 0.9}}),
      IntervalMap::piecewise_linear({-1.0, 0.2, 1.0}, {-1.0, 0.9, -0.3})};
  for (const auto& f : maps) {
    const auto j = to_json(f);
    EXPECT_EQ(j["version"], 1);
    const auto g = map_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(g.kind(), f.kind());
    for (double x = -1.0; x <= 1.0; x += 0.125) EXPECT_NEAR(g(x), f(x), 1e-13);
  }
}

TEST(PiecewiseLinear, DerivesTurningStructure) {
  const auto f = IntervalMap::piecewise_linear({-1.0, -0.3, 0.0, 0.3, 0.6, 1.0},
                                               {-1.0, -0.15, 0.0, 0.6, 1.0, -1.0});
  ASSERT_EQ(f.modality(), 1);
  EXPECT_DOUBLE_EQ(f.critical_points()[0], 0.6);
  EXPECT_EQ(f.epsilon(), -1);
  const auto g = IntervalMap::piecewise_linear({-1.0, 1.0}, {-0.5, 0.5});
  EXPECT_EQ(g.modality(), 0);
  EXPECT_THROW(IntervalMap::piecewise_linear({-1.0, -0.5, 0.0, 1.0}, {-1.0, 0.0, 0.0, 1.0}),
               ShapeError);
}

TEST(Address, SymbolsForLapsAndCriticalPieces) {
  const auto f = make_stunted(kBi, {{0.5, -0.5}});
  EXPECT_EQ(f.address(-1.0), 0);
  EXPECT_EQ(f.address(-0.5), 1);
  EXPECT_EQ(f.address(-0.3), 1);
  EXPECT_EQ(f.address(0.0), 2);
  EXPECT_EQ(f.address(0.5), 3);
  EXPECT_EQ(f.address(0.9), 4);
  EXPECT_EQ(f.address(1.0), 4);
}
