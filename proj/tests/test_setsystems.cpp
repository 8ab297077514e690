#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dtk/setsystems.hpp"

using namespace dtk;

namespace {

IntervalUnion half_line(double a) { return IntervalUnion({{a, kInf}}); }

std::vector<std::vector<double>> points_1d(const std::vector<double>& xs) {
  std::vector<std::vector<double>> out;
  for (double x : xs) out.push_back({x});
  return out;
}

std::vector<double> generic_points(std::size_t n) {
  std::vector<double> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(0.37 * static_cast<double>(i) + 0.011 * static_cast<double>(i * i));
  return xs;
}

}  // namespace

TEST(IntervalUnion, NormalizesAndMerges) {
  const IntervalUnion u({{3, 4}, {0, 1}, {1, 2}, {5, 5}, {3.5, 6}});
  ASSERT_EQ(u.size(), 2u);
  EXPECT_EQ(u.intervals()[0], (Interval{0, 2}));
  EXPECT_EQ(u.intervals()[1], (Interval{3, 6}));
  EXPECT_TRUE(u.contains(0.0));
  EXPECT_TRUE(u.contains(1.0));
  EXPECT_FALSE(u.contains(2.0));
  EXPECT_FALSE(u.contains(2.5));
  EXPECT_TRUE(u.contains(5.9));
  EXPECT_FALSE(u.contains(-1.0));
}

TEST(IntervalUnion, ComplementAndWhole) {
  const IntervalUnion u({{-1, 1}});
  const IntervalUnion c = u.complement();
  ASSERT_EQ(c.size(), 2u);
  EXPECT_TRUE(c.contains(-5.0));
  EXPECT_FALSE(c.contains(0.0));
  EXPECT_TRUE(c.contains(1.0));
  EXPECT_EQ(IntervalUnion::whole().complement(), IntervalUnion::empty_set());
  EXPECT_TRUE(IntervalUnion::whole().contains(1e300));
}

TEST(EmpiricalMeasure, DirectCounts) {
  const Sample s = Sample::from_1d({1, 2, 3});
  EXPECT_NEAR(empirical_measure(s, half_line(1.5)), 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(empirical_measure(s, IntervalUnion::whole()), 1.0);
  EXPECT_THROW(empirical_measure(Sample(1), IntervalUnion::whole()), std::invalid_argument);
  const auto xs = s.sorted_1d();
  EXPECT_EQ(count_in(xs, half_line(1.5)), 2u);
}

TEST(EmpiricalMeasure, HalfLineConvergesAtRootRate) {
  for (std::size_t m : {100u, 10000u, 1000000u}) {
    const Sample s = sample(Gaussian1D(0, 1), m, 1234 + m);
    const double v = empirical_measure(s, half_line(0.0));
    EXPECT_LT(std::abs(v - 0.5), 4.0 * 0.5 / std::sqrt(static_cast<double>(m)));
  }
}

TEST(ScheffeSet, IdenticalIsWholeSpace) {
  const Density f = Gaussian1D(0.5, 2);
  const auto a = scheffe_set(f, f);
  for (double x : {-100.0, 0.0, 3.0, 50.0}) EXPECT_TRUE(a.contains(x));
  EXPECT_EQ(scheffe_intervals_1d(f, f), IntervalUnion::whole());
}

TEST(ScheffeSet, UnitShiftMidpoint) {
  const auto u = scheffe_intervals_1d(Gaussian1D(0, 1), Gaussian1D(2, 1));
  ASSERT_EQ(u.size(), 1u);
  EXPECT_EQ(u.intervals()[0].lo, -kInf);
  EXPECT_NEAR(u.intervals()[0].hi, 1.0, 1e-15);
  const auto a = scheffe_set(Gaussian1D(0, 1), Gaussian1D(2, 1));
  EXPECT_TRUE(a.contains(0.999));
  EXPECT_FALSE(a.contains(1.001));
}

TEST(ScheffeSet, UnequalScalesGiveBoundedInterval) {
  const auto u = scheffe_intervals_1d(Gaussian1D(0, 1), Gaussian1D(0, 2));
  ASSERT_EQ(u.size(), 1u);
  // Oracle: x^2 (1 - 1/4) / 2 = ln 2.
  const double r = std::sqrt(8.0 * std::log(2.0) / 3.0);
  EXPECT_NEAR(u.intervals()[0].lo, -r, 1e-12);
  EXPECT_NEAR(u.intervals()[0].hi, r, 1e-12);
  const auto v = scheffe_intervals_1d(Gaussian1D(0, 2), Gaussian1D(0, 1));
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v.intervals()[0].hi, -r, 1e-12);
  EXPECT_NEAR(v.intervals()[1].lo, r, 1e-12);
}

TEST(ScheffeSet, MultivariateMembership) {
  const Density f = GaussianND::standard(2);
  Eigen::VectorXd m(2);
  m << 2, 0;
  const Density g = GaussianND(m, Eigen::MatrixXd::Identity(2, 2));
  const auto a = scheffe_set(f, g);
  EXPECT_EQ(a.dim, 2u);
  EXPECT_TRUE(a.contains(std::vector<double>{0.9, 5.0}));
  EXPECT_FALSE(a.contains(std::vector<double>{1.1, -5.0}));
  EXPECT_THROW(scheffe_set(f, Gaussian1D(0, 1)), DimensionMismatch);
}

TEST(ScheffeIntervals, AgreesWithPointwiseMembershipOnRandomPairs) {
  Rng rng(99);
  std::uniform_real_distribution<double> mu(-3, 3), sg(0.3, 3), w(0.1, 0.9), probe(-12, 12);
  for (int rep = 0; rep < 60; ++rep) {
    Density f = Gaussian1D(mu(rng), sg(rng));
    Density g = Gaussian1D(mu(rng), sg(rng));
    if (rep % 3 == 1) {
      const double a = w(rng);
      f = Mixture({a, 1 - a}, {Gaussian1D(mu(rng), sg(rng)), Gaussian1D(mu(rng), sg(rng))});
    }
    if (rep % 3 == 2) {
      const double a = w(rng);
      g = Mixture({a, 1 - a}, {Gaussian1D(mu(rng), sg(rng)), Gaussian1D(mu(rng), sg(rng))});
    }
    const auto u = scheffe_intervals_1d(f, g);
    const auto a = scheffe_set(f, g);
    int agree = 0;
    for (int k = 0; k < 1000; ++k) {
      const double x = probe(rng);
      agree += u.contains(x) == a.contains(x);
    }
    // Disagreement can only come from probes within ~1e-12 of a boundary.
    EXPECT_EQ(agree, 1000) << "pair " << rep;
  }
}

TEST(ScheffeIntervals, PiecewisePolynomialPair) {
  // p = 1 on [0, 1); q = 2x on [0, 1) written in the local variable: 2x = 1 + u.
  const PiecewisePoly p({0.0, 1.0}, {{1.0}});
  const PiecewisePoly q({0.0, 1.0}, {{1.0, 1.0}});
  const auto u = scheffe_intervals_1d(p, q);
  // p >= q iff x <= 1/2, plus the tie region outside the supports.
  EXPECT_TRUE(u.contains(-3.0));
  EXPECT_TRUE(u.contains(0.25));
  EXPECT_FALSE(u.contains(0.75));
  EXPECT_TRUE(u.contains(2.0));
  ASSERT_EQ(u.size(), 2u);
  EXPECT_NEAR(u.intervals()[0].hi, 0.5, 1e-12);
  EXPECT_NEAR(u.intervals()[1].lo, 1.0, 1e-15);
}

TEST(ScheffeIntervals, CoincidentPiecesAreIncluded) {
  const PiecewisePoly p({0.0, 1.0, 2.0}, {{1.0, 0.5}, {0.3}});
  const PiecewisePoly q({0.0, 1.0, 2.0}, {{1.0, 0.5}, {0.6}});
  const auto u = scheffe_intervals_1d(p, q);
  EXPECT_TRUE(u.contains(0.5));
  EXPECT_FALSE(u.contains(1.5));
}

TEST(ScheffeIntervals, PiecewiseSetsHaveBoundedIntervalCount) {
  Rng rng(5);
  std::uniform_real_distribution<double> c(-1, 1);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t t = 3, d = 5;
    auto random_pp = [&](double shift) {
      std::vector<double> br{shift, shift + 1.0, shift + 2.5, shift + 3.0};
      std::vector<poly::Coeffs> cs(t, poly::Coeffs(d + 1));
      for (auto& v : cs)
        for (auto& x : v) x = c(rng);
      return PiecewisePoly(br, cs);
    };
    const auto p = random_pp(0.0);
    const auto q = random_pp(0.0);
    const auto u = scheffe_intervals_1d(p, q);
    EXPECT_LE(u.size(), t * d + 1);
    const auto a = scheffe_set(p, q);
    std::uniform_real_distribution<double> probe(-1, 4);
    for (int k = 0; k < 500; ++k) {
      const double x = probe(rng);
      EXPECT_EQ(u.contains(x), a.contains(x)) << x;
    }
  }
}

TEST(MeasureOf, ExactGaussianMasses) {
  EXPECT_NEAR(measure_of(Gaussian1D(0, 1), IntervalUnion({{-kInf, 0}})), 0.5, 1e-15);
  EXPECT_NEAR(measure_of(Gaussian1D(0, 1), IntervalUnion({{-1, 1}})), 0.6826894921370859, 1e-14);
  EXPECT_NEAR(measure_of(Gaussian1D(4, 3), IntervalUnion::whole()), 1.0, 1e-15);
  const Density mix = Mixture({0.3, 0.7}, {Gaussian1D(-2, 1), Gaussian1D(2, 0.5)});
  EXPECT_NEAR(measure_of(mix, IntervalUnion::whole()), 1.0, 1e-15);
  EXPECT_NEAR(measure_of(PiecewisePoly({0.0, 2.0}, {{0.5}}), IntervalUnion({{1.0, 5.0}})), 0.5, 1e-15);
}

TEST(MeasureOf, ExactAgreesWithMonteCarlo) {
  Rng rng(8);
  const Density f = Mixture({0.3, 0.7}, {Gaussian1D(-2, 1), Gaussian1D(2, 0.5)});
  const Density g = Gaussian1D(0, 2);
  const IntervalUnion u = scheffe_intervals_1d(f, g);
  const SetOracle a = scheffe_set(f, g);
  const std::size_t n = 200000;
  const double exact = measure_of(f, u);
  const double mc = measure_of(f, a, n, rng);
  EXPECT_NEAR(mc, exact, 4.0 * std::sqrt(exact * (1 - exact) / n));
}

TEST(ADistance, EmptySystemAndEqualMeasures) {
  const std::vector<IntervalUnion> none;
  auto p = [](const IntervalUnion& a) { return measure_of(Gaussian1D(0, 1), a); };
  EXPECT_EQ(a_distance(p, p, none), 0.0);
  const std::vector<IntervalUnion> some{IntervalUnion({{0, 1}}), IntervalUnion({{-2, 0.3}})};
  EXPECT_EQ(a_distance(p, p, some), 0.0);
}

TEST(ADistance, YatracosClassRecoversTv) {
  Rng rng(17);
  std::uniform_real_distribution<double> mu(-2, 2), sg(0.5, 2);
  for (int rep = 0; rep < 25; ++rep) {
    const std::vector<Density> fam{Gaussian1D(mu(rng), sg(rng)), Gaussian1D(mu(rng), sg(rng)),
                                   Gaussian1D(mu(rng), sg(rng))};
    const auto sets = yatracos_intervals(fam);
    EXPECT_EQ(sets.size(), 6u);
    for (std::size_t i = 0; i < fam.size(); ++i)
      for (std::size_t j = 0; j < fam.size(); ++j) {
        if (i == j) continue;
        const double ad = a_distance([&](const IntervalUnion& a) { return measure_of(fam[i], a); },
                                     [&](const IntervalUnion& a) { return measure_of(fam[j], a); }, sets);
        EXPECT_NEAR(ad, 0.5 * l1_quadrature_1d(fam[i], fam[j]).value, 1e-9);
      }
  }
}

TEST(ADistance, EmpiricalDeviationDecays) {
  const std::vector<Density> fam{Gaussian1D(0, 1), Gaussian1D(0.5, 1), Gaussian1D(0, 1.5)};
  const auto sets = yatracos_intervals(fam);
  auto dev = [&](std::size_t m) {
    double acc = 0.0;
    for (int t = 0; t < 40; ++t) {
      const Sample s = sample(fam[0], m, 1000 * m + t);
      const auto xs = s.sorted_1d();
      acc += a_distance([&](const IntervalUnion& a) { return measure_of(fam[0], a); },
                        [&](const IntervalUnion& a) { return double(count_in(xs, a)) / double(m); }, sets);
    }
    return acc / 40.0;
  };
  const double d1 = dev(100), d2 = dev(6400);
  // Eight-fold shrinkage expected for a 64-fold larger sample.
  EXPECT_GT(d1 / d2, 5.0);
  EXPECT_LT(d1 / d2, 12.0);
}

TEST(VcDimension, SingleIntervalsOnCollinearPoints) {
  const auto xs = generic_points(5);
  EXPECT_EQ(vc_dimension_bruteforce(points_1d(xs), unions_of_intervals(xs, 1)), 2u);
}

TEST(VcDimension, UnionsOfIntervalsGiveTwiceK) {
  const auto xs = generic_points(10);
  for (std::size_t k : {1u, 2u, 3u}) EXPECT_EQ(vc_dimension_bruteforce(points_1d(xs), unions_of_intervals(xs, k)), 2 * k);
}

TEST(VcDimension, EmptySystemAndCap) {
  const std::vector<IntervalUnion> none;
  EXPECT_EQ(vc_dimension_bruteforce(points_1d({1, 2, 3}), none), 0u);
  EXPECT_THROW(vc_dimension_bruteforce(points_1d(generic_points(16)), unions_of_intervals(generic_points(16), 1)),
               CapExceeded);
}

TEST(VcDimension, MonotoneUnderAddingSets) {
  const auto xs = generic_points(8);
  auto sys = unions_of_intervals(xs, 1);
  std::size_t prev = 0;
  Rng rng(2);
  std::uniform_real_distribution<double> u(-1, 4);
  for (int k = 0; k < 30; ++k) {
    const double a = u(rng), b = u(rng);
    sys.push_back(IntervalUnion({{std::min(a, b), std::max(a, b)}, {std::max(a, b) + 0.2, std::max(a, b) + 0.9}}));
    const std::size_t v = vc_dimension_bruteforce(points_1d(xs), sys);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(VcDimension, HalfPlanesInTwoDimensions) {
  // Points in convex position; half-planes {x : w.x >= c} shatter 3 but never 4 points.
  std::vector<std::vector<double>> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1.2}};
  std::vector<SetOracle> sys;
  for (int a = 0; a < 72; ++a)
    for (double c = -2.0; c <= 2.0; c += 0.05) {
      const double t = a * std::numbers::pi / 36.0;
      const double wx = std::cos(t), wy = std::sin(t);
      sys.push_back({[=](std::span<const double> x) { return wx * x[0] + wy * x[1] >= c; }, 2, ""});
    }
  EXPECT_EQ(vc_dimension_bruteforce(pts, sys), 3u);
}
