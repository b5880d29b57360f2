#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "isentrope/bifurcation.hpp"
#include "isentrope/errors.hpp"

using namespace isentrope;

namespace {

IntervalMap tent2() { return make_tent({1, -1}, {{1.0}}); }
IntervalMap chebyshev() { return make_cubic(4.0, 0.0); }

// The cubic slice with v_2 = -1: beta = 2 sqrt(alpha) - alpha.
IntervalMap slice_cubic(double alpha) { return make_cubic(alpha, 2.0 * std::sqrt(alpha) - alpha); }

// Independent oracle: bisection on f^2(c_1) - c_1 over [3.5, 3.8].
double alpha_star_oracle() {
  auto g = [](double a) {
    const auto f = slice_cubic(a);
    const double c = f.critical_points()[0];
    return f(f(c)) - c;
  };
  double lo = 3.5, hi = 3.8;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    ((g(mid) < 0) == (g(lo) < 0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Unimodal PL family whose slope-1 middle segment sits t above the diagonal.
IntervalMap tangency_family(double t) {
  return IntervalMap::piecewise_linear({-1.0, -0.4, -0.1, 0.1, 0.6, 1.0},
                                       {-1.0, -0.25 + t, -0.1 + t, 0.1 + t, 1.0, -1.0});
}

}  // namespace

TEST(PeriodicOrbits, TentFixedPoints) {
  const auto list = periodic_orbits(tent2(), 1);
  ASSERT_FALSE(list.partial);
  ASSERT_EQ(list.points.size(), 2u);
  EXPECT_DOUBLE_EQ(list.points[0].point, -1.0);
  EXPECT_NEAR(list.points[1].point, 1.0 / 3.0, 1e-14);
  EXPECT_DOUBLE_EQ(list.points[0].multiplier, 2.0);
  EXPECT_DOUBLE_EQ(list.points[1].multiplier, -2.0);
  for (const auto& o : list.points) EXPECT_EQ(o.stability, Stability::repelling);
}

TEST(PeriodicOrbits, ChebyshevFixedPoints) {
  const auto list = periodic_orbits(chebyshev(), 1);
  ASSERT_EQ(list.points.size(), 3u);
  const double xs[] = {-1.0, 0.0, 1.0}, ms[] = {9.0, -3.0, 9.0};
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(list.points[k].point, xs[k], 1e-12);
    EXPECT_NEAR(list.points[k].multiplier, ms[k], 1e-9);
    EXPECT_EQ(list.points[k].stability, Stability::repelling);
  }
}

TEST(PeriodicOrbits, ResidualAndChainRule) {
  const auto f = make_cubic(3.3, 0.3);
  for (int N = 1; N <= 5; ++N) {
    for (const auto& o : periodic_orbits(f, N).points) {
      EXPECT_LE(std::abs(f.iterate(o.point, N) - o.point), 1e-10);
      EXPECT_EQ(N % o.period, 0);
      double m = 1.0, x = o.point;
      for (int j = 0; j < o.period; ++j) {
        m *= f.derivative(x);
        x = f(x);
      }
      EXPECT_NEAR(o.multiplier, m, 1e-8 * std::max(1.0, std::abs(m)));
    }
  }
}

TEST(PeriodicOrbits, PeriodTwoCountMatchesFullMap) {
  // The full slope-3 bimodal tent has 3^N solutions of f^N(x) = x.
  const auto f = make_tent({2, -1}, {{1.0, -1.0}});
  EXPECT_EQ(periodic_orbits(f, 1).points.size(), 3u);
  EXPECT_EQ(periodic_orbits(f, 2).points.size(), 9u);
  EXPECT_EQ(periodic_orbits(f, 3).points.size(), 27u);
}

TEST(PeriodicOrbits, SuperattractingCycleThroughCriticalPoint) {
  const double a = alpha_star_oracle();
  const auto f = slice_cubic(a);
  const double c1 = f.critical_points()[0];
  bool found = false;
  for (const auto& o : periodic_orbits(f, 2).points) {
    if (std::abs(o.point - c1) < 1e-6) {
      found = true;
      EXPECT_EQ(o.period, 2);
      EXPECT_LT(std::abs(o.multiplier), 1e-6);
      EXPECT_EQ(o.stability, Stability::superattracting);
    }
  }
  EXPECT_TRUE(found);
}

TEST(PeriodicOrbits, PlateauOnDiagonalIsOneRepresentative) {
  // Z_1 = [-1/2, -1/6] sits at height -0.3, which lies inside it.
  const auto f = make_stunted({2, -1}, {{-0.3, -1.0}});
  int super = 0;
  for (const auto& o : periodic_orbits(f, 1).points)
    if (o.stability == Stability::superattracting) {
      ++super;
      EXPECT_DOUBLE_EQ(o.point, -0.3);
    }
  EXPECT_EQ(super, 1);
}

TEST(PeriodicOrbits, JsonFields) {
  const auto j = to_json(periodic_orbits(tent2(), 1).points[1]);
  EXPECT_EQ(j["stability"], "repelling");
  EXPECT_EQ(j["period"], 1);
}

TEST(CriticalFate, ChebyshevLandsOnRepellingFixedPoint) {
  const auto fate = critical_fate(chebyshev(), 1);
  EXPECT_EQ(fate.verdict, CriticalFate::Verdict::eventually_periodic_repelling);
  EXPECT_EQ(fate.period, 1);
  EXPECT_NEAR(fate.cycle_point, 1.0, 1e-12);
  EXPECT_NEAR(fate.multiplier, 9.0, 1e-9);
}

TEST(CriticalFate, SliceCubicAtAlphaStar) {
  const auto f = slice_cubic(alpha_star_oracle());
  const auto first = critical_fate(f, 1);
  EXPECT_EQ(first.verdict, CriticalFate::Verdict::attracted);
  EXPECT_EQ(first.period, 2);
  EXPECT_LT(std::abs(first.multiplier), 1.0);

  const auto second = critical_fate(f, 2);
  EXPECT_EQ(second.verdict, CriticalFate::Verdict::eventually_periodic_repelling);
  EXPECT_EQ(second.period, 1);
  EXPECT_DOUBLE_EQ(second.cycle_point, -1.0);
}

TEST(CriticalFate, GenericTentIsUndecided) {
  const auto f = make_tent({1, -1}, {{0.55}});
  EXPECT_EQ(critical_fate(f, 1).verdict, CriticalFate::Verdict::undecided);
}

TEST(CriticalFate, AttractedWithSlowConvergence) {
  // Attracting fixed point of the slice cubic with multiplier about -0.6.
  const auto f = slice_cubic(1.2);
  const auto fate = critical_fate(f, 1);
  EXPECT_EQ(fate.verdict, CriticalFate::Verdict::attracted);
  EXPECT_EQ(fate.period, 1);
  EXPECT_LE(std::abs(f(fate.cycle_point) - fate.cycle_point), 1e-10);
}

TEST(SolveSuperattracting, AlphaStarWindow) {
  const double a = solve_superattracting(slice_cubic, 1, 2, {3.5, 3.8});
  EXPECT_GE(a, 3.668);
  EXPECT_LE(a, 3.670);
  EXPECT_NEAR(a, alpha_star_oracle(), 1e-9);
  const auto f = slice_cubic(a);
  const double c1 = f.critical_points()[0], c2 = f.critical_points()[1];
  EXPECT_LE(std::abs(f(f(c1)) - c1), 1e-12);
  EXPECT_GT(f(c1), c2);
  EXPECT_GT(c2, c1);
}

TEST(SolveSuperattracting, FixedPointBracketWithoutSignChange) {
  // Residual f(c_1) - c_1 is negative over all of [0.5, 1.5]; it changes
  // sign near 1.56 (dense scan).
  EXPECT_THROW(solve_superattracting(slice_cubic, 1, 1, {0.5, 1.5}), BracketError);
  const double a = solve_superattracting(slice_cubic, 1, 1, {1.5, 1.7});
  const auto f = slice_cubic(a);
  const double c1 = f.critical_points()[0];
  EXPECT_LE(std::abs(f(c1) - c1), 1e-12);
}

TEST(SaddleNode, SyntheticPiecewiseLinearTangency) {
  // For t < 0 the slope-1 segment sits below the diagonal, between an
  // attracting (slope 1/2) and a repelling (slope 1.8) fixed point; at t = 0
  // it lies on the diagonal.
  ASSERT_TRUE(has_orbit_pair(tangency_family(-0.05), 1, {-0.4, 0.6}));
  ASSERT_FALSE(has_orbit_pair(tangency_family(0.05), 1, {-0.4, 0.6}));
  const double tol = 1e-10;
  const auto sn = detect_saddle_node(tangency_family, 1, {-0.1, 0.1}, {-0.4, 0.6}, tol);
  EXPECT_NEAR(sn.t_star, 0.0, tol);
  EXPECT_GE(sn.q_star, -0.1);
  EXPECT_LE(sn.q_star, 0.1);
  EXPECT_NEAR(sn.multiplier, 1.0, 1e-12);
  EXPECT_LE(std::abs(sn.residual), 2 * tol);
}

TEST(SaddleNode, SliceCubicPeriodTwo) {
  // The superattracting period-2 orbit of alpha* is born in a saddle-node.
  const Interval window{-0.65, -0.45};
  const double tol = 1e-10;
  const auto sn = detect_saddle_node(slice_cubic, 2, {3.6, 3.668}, window, tol);
  EXPECT_LE(std::abs(sn.multiplier - 1.0), 1e-4);
  EXPECT_LE(std::abs(sn.residual), 1e-8);
  EXPECT_TRUE(has_orbit_pair(slice_cubic(sn.t_star + 10 * tol + 1e-7), 2, window));
  EXPECT_FALSE(has_orbit_pair(slice_cubic(sn.t_star - 10 * tol - 1e-7), 2, window));

  // Oracle: Newton on (f^2(x) - x, (f^2)'(x) - 1) in (alpha, x).
  Eigen::Vector2d z(sn.t_star + 1e-4, sn.q_star);
  auto F = [](const Eigen::Vector2d& v) {
    const auto f = slice_cubic(v[0]);
    const double x = v[1];
    return Eigen::Vector2d(f(f(x)) - x, f.derivative(f(x)) * f.derivative(x) - 1.0);
  };
  for (int it = 0; it < 30; ++it) {
    Eigen::Matrix2d J;
    const double h = 1e-7;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[c] = h;
      J.col(c) = (F(z + e) - F(z - e)) / (2 * h);
    }
    z -= J.partialPivLu().solve(F(z));
  }
  EXPECT_NEAR(sn.t_star, z[0], 1e-7);
  EXPECT_NEAR(sn.q_star, z[1], 1e-3);
}

TEST(SaddleNode, BracketInsideWindowIsRejected) {
  EXPECT_THROW(detect_saddle_node(slice_cubic, 2, {3.669, 3.68}, {-0.65, -0.45}, 1e-10),
               BracketError);
}

TEST(FundamentalDomain, HalvingMap) {
  const auto g = IntervalMap::piecewise_linear({-1.0, 1.0}, {-0.5, 0.5});
  const auto fd = fundamental_domain(g, 0.0, 1, 1.0);
  EXPECT_EQ(fd.domain, (Interval{0.5, 1.0}));
  EXPECT_EQ(fd.image, (Interval{0.25, 0.5}));
  EXPECT_TRUE(fd.verified());
}

TEST(FundamentalDomain, OscillatingOrbitIsNotABasin) {
  const auto g = IntervalMap::piecewise_linear({-1.0, 1.0}, {0.5, -0.5});
  EXPECT_THROW(fundamental_domain(g, 0.0, 1, 1.0), NotABasin);
}

TEST(FundamentalDomain, SliceCubicNearSaddleNode) {
  // Just past the period-2 saddle-node (alpha about 3.66421) the attracting
  // point of f^2 lies left of c_1 with multiplier close to +1; points between
  // it and c_1 approach it monotonically.
  const double a = 3.6645;
  const auto f = slice_cubic(a);
  double q = 0.0;
  for (const auto& o : periodic_orbits(f, 2).points)
    if (o.stability == Stability::attracting && o.point < -0.4 && o.point > -0.6) q = o.point;
  ASSERT_NE(q, 0.0);
  const double c1 = f.critical_points()[0];
  const auto fd = fundamental_domain(f, q, 2, 0.5 * (q + c1));
  EXPECT_TRUE(fd.single_point_overlap);
  EXPECT_TRUE(fd.boundary_to_boundary);
  EXPECT_GT(fd.domain.lo, q);
  EXPECT_LT(fd.domain.hi, c1);
}

TEST(WindowMembership, AlphaStar) {
  const auto f = slice_cubic(alpha_star_oracle());
  EXPECT_EQ(window_membership(f, {ExpectedFate::attracted(2), ExpectedFate::boundary()}),
            Membership::yes);
  // The boundary fixed point is never an attractor.
  EXPECT_EQ(window_membership(f, {ExpectedFate::attracted(2), ExpectedFate::attracted(1)}),
            Membership::no);
}

TEST(WindowMembership, ChebyshevHasNoAttractors) {
  EXPECT_EQ(window_membership(chebyshev(), {ExpectedFate::attracted(1), ExpectedFate::attracted(1)}),
            Membership::no);
}

TEST(WindowMembership, UndecidedFateIsIndeterminate) {
  EXPECT_EQ(window_membership(make_tent({1, -1}, {{0.55}}), {ExpectedFate::attracted(1)}),
            Membership::indeterminate);
}

namespace {

// Full slope-3 bimodal tent: q = -0.6 has period 2 (-0.6 -> 0.2 -> -0.6).
IntervalMap full_bimodal() { return make_tent({2, -1}, {{1.0, -1.0}}); }

TransferData bimodal_transfer() {
  TransferData d;
  d.qhat = -0.6;
  d.Jhat = {-0.7, -0.58};
  d.N = 2;
  d.k = 1;
  d.xhat = 0.21;
  d.Vhat = {0.58 / 3.0, 0.7 / 3.0};
  return d;
}

}  // namespace

TEST(TransferData, BimodalTentPasses) {
  const auto r = verify_transfer_data(full_bimodal(), bimodal_transfer(), 12);
  EXPECT_TRUE(r.passed()) << r.text();
  EXPECT_EQ(r.depth, 12);

  // Oracle: explicit inverse branches (y-2)/3, -y/3, (y+2)/3.
  std::vector<double> all{-0.6}, level{-0.6};
  for (int d = 0; d < 12; ++d) {
    std::vector<double> next;
    for (double y : level)
      for (double x : {(y - 2.0) / 3.0, -y / 3.0, (y + 2.0) / 3.0}) next.push_back(x);
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
  }
  std::sort(all.begin(), all.end());
  double gap = std::max(all.front() + 1.0, 1.0 - all.back());
  for (std::size_t j = 0; j + 1 < all.size(); ++j) gap = std::max(gap, 0.5 * (all[j + 1] - all[j]));
  EXPECT_NEAR(r.density_gap, gap, 1e-12);
  EXPECT_LT(r.density_gap, 1e-5);
  EXPECT_NE(r.text().find("PASS"), std::string::npos);
}

TEST(TransferData, StraddlingTurningPointViolatesMonotonicity) {
  auto d = bimodal_transfer();
  d.Jhat = {-0.7, -0.2};
  const auto r = verify_transfer_data(full_bimodal(), d, 4);
  EXPECT_FALSE(r.monotone_return);
  EXPECT_FALSE(r.passed());
}

TEST(TransferData, PeriodicTurningPointViolatesAvoidance) {
  // Golden-mean tent: 0 -> v -> -v^2 -> 0 with v = (sqrt 5 - 1)/2.
  const double v = 0.5 * (std::sqrt(5.0) - 1.0);
  const auto T = make_tent({1, -1}, {{v}});
  TransferData d;
  d.qhat = 0.0;
  d.Jhat = {-0.05, 0.05};
  d.N = 3;
  d.k = 1;
  d.xhat = 0.0;
  d.Vhat = {-0.05, 0.05};
  const auto r = verify_transfer_data(T, d, 4);
  EXPECT_FALSE(r.avoids_turning);
  EXPECT_NE(r.text().find("turning point"), std::string::npos);
}
