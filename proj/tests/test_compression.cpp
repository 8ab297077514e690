#include <gtest/gtest.h>

#include <cmath>

#include "dtk/compression.hpp"

using namespace dtk;

namespace {

Sample draw(const Density& f, std::size_t n, std::uint64_t seed) { return sample(f, n, seed); }

}  // namespace

TEST(EncodeGaussian1D, WindowCenters) {
  const Sample s = Sample::from_1d({0.3, 4.0, 2.0, 8.0, 5.0});
  const auto e = encode_gaussian_1d(Gaussian1D(5.0, 3.0), s, 0.1);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->points, (std::vector<std::vector<double>>{{2.0}, {8.0}}));
  EXPECT_EQ(e->source_indices, (std::vector<std::size_t>{2, 3}));
  EXPECT_TRUE(e->bits.empty());
}

TEST(EncodeGaussian1D, EmptyWindowFails) {
  const Sample s = Sample::from_1d({-9.0, -8.5, -8.0, -1.0});
  EXPECT_FALSE(encode_gaussian_1d(Gaussian1D(0.0, 1.0), s, 0.1));
  EXPECT_THROW(encode_gaussian_1d(Gaussian1D(0.0, 1.0), s, 1.5), std::invalid_argument);
}

TEST(EncodeGaussian1D, PicksClosestInsideWindow) {
  const Sample s = Sample::from_1d({-1.08, -0.95, -1.02, 0.93, 1.2, 1.05});
  const auto e = encode_gaussian_1d(Gaussian1D(0.0, 1.0), s, 0.1);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->source_indices, (std::vector<std::size_t>{2, 5}));
}

TEST(DecodeGaussian1D, Formula) {
  const auto g = decode_gaussian_1d({{{-1.0}, {1.0}}, {}, {}});
  EXPECT_EQ(g, Gaussian1D(0.0, 1.0));
  const auto h = decode_gaussian_1d({{{0.0}, {4.0}}, {}, {}});
  EXPECT_EQ(h, Gaussian1D(2.0, 2.0));
  EXPECT_THROW(decode_gaussian_1d({{{0.0}}, {}, {}}), std::invalid_argument);
  EXPECT_THROW(decode_gaussian_1d({{{1.0}, {1.0}}, {}, {}}), std::invalid_argument);
  EXPECT_THROW(decode_gaussian_1d({{{0.0}, {1.0}}, {true}, {}}), std::invalid_argument);
  EXPECT_FALSE(gaussian_1d_scheme().decode({{{2.0}, {1.0}}, {}, {}}, 0.1));
}

TEST(RoundTrip, WindowCornersWithinFrozenConstant) {
  const Gaussian1D g(5.0, 3.0);
  for (double eps : {0.1, 0.05, 0.01}) {
    for (double a : {-1.0, 0.0, 1.0})
      for (double b : {-1.0, 0.0, 1.0}) {
        const double x1 = 5.0 - (1.0 + a * eps) * 3.0, x2 = 5.0 + (1.0 + b * eps) * 3.0;
        const auto d = decode_gaussian_1d({{{x1}, {x2}}, {}, {}});
        EXPECT_LE(l1_quadrature_1d(g, d).value, kGaussianRoundTripC * eps) << eps << " " << a << " " << b;
      }
  }
}

TEST(RoundTrip, SuccessRateAtCalibratedSize) {
  const auto sc = gaussian_1d_scheme();
  const double eps = 0.1;
  const std::size_t m = sc.params.m(eps);
  EXPECT_EQ(m, 50u);
  int ok = 0;
  Rng rng(0);
  for (int t = 0; t < 300; ++t) {
    const Density target = Gaussian1D(0.0, 1.0);
    const Sample s = draw(target, m, derive_seed(3, static_cast<std::uint64_t>(t)));
    const auto e = sc.encode(target, s, eps, rng);
    if (!e) continue;
    ++ok;
    for (std::size_t i = 0; i < e->points.size(); ++i) EXPECT_EQ(e->points[i][0], s[e->source_indices[i]]);
    const auto d = sc.decode(*e, eps);
    ASSERT_TRUE(d);
    EXPECT_LE(l1_quadrature_1d(target, *d).value, kGaussianRoundTripC * eps);
  }
  EXPECT_GE(ok, 200);
}

TEST(RoundTrip, GenerousConstantAlwaysSucceeds) {
  int ok = 0;
  for (int t = 0; t < 100; ++t) {
    const Sample s = draw(Gaussian1D(0.0, 1.0), 1000, derive_seed(4, static_cast<std::uint64_t>(t)));
    ok += encode_gaussian_1d(Gaussian1D(0.0, 1.0), s, 0.1).has_value();
  }
  EXPECT_GE(ok, 67);
}

TEST(ProductScheme, ParamsArithmetic) {
  const auto base = gaussian_1d_scheme();
  const auto one = product_scheme(base, 1);
  for (double e : {0.3, 0.1, 0.01}) {
    EXPECT_EQ(one.params.tau(e), base.params.tau(e));
    EXPECT_EQ(one.params.t(e), base.params.t(e));
    EXPECT_EQ(one.params.m(e), base.params.m(e));
  }
  const auto three = product_scheme(base, 3);
  EXPECT_EQ(three.params.tau(0.1), 6u);
  EXPECT_EQ(three.params.t(0.1), 0u);
  EXPECT_EQ(three.params.m(0.1), static_cast<std::size_t>(std::ceil(base.params.m(0.1 / 3.0) * std::log(9.0))));
}

TEST(ProductScheme, RoundTripAxisAligned) {
  const auto sc = product_scheme(gaussian_1d_scheme(), 2);
  Eigen::VectorXd mu(2), var(2);
  mu << 0.0, 0.0;
  var << 1.0, 4.0;
  const Density target = GaussianND::axis_aligned(mu, var);
  const double eps = 0.1;
  int ok = 0;
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Sample s = draw(target, sc.params.m(eps), derive_seed(6, static_cast<std::uint64_t>(t)));
    const auto e = sc.encode(target, s, eps, rng);
    if (!e) continue;
    ++ok;
    ASSERT_EQ(e->points.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto p = s.point(e->source_indices[i]);
      EXPECT_EQ(e->points[i], std::vector<double>(p.begin(), p.end()));
    }
    const auto d = sc.decode(*e, eps);
    ASSERT_TRUE(d);
    ASSERT_TRUE(d->is<GaussianND>());
    EXPECT_TRUE(d->as<GaussianND>().is_axis_aligned());
    EXPECT_LE(l1_monte_carlo(target, *d, 100000, rng).estimate, 0.6);
  }
  EXPECT_GE(ok, 14);
}

TEST(MixtureScheme, ParamsArithmetic) {
  const auto sc = mixture_scheme(gaussian_1d_scheme(), 2);
  EXPECT_EQ(sc.params.tau(0.3), 4u);
  EXPECT_EQ(sc.params.t(0.3), 10u);
  EXPECT_EQ(weight_bits(2, 0.3), 5u);
  const double m_base = static_cast<double>(gaussian_1d_scheme().params.m(0.1));
  EXPECT_EQ(sc.params.m(0.3), static_cast<std::size_t>(std::ceil(48.0 * m_base * 2.0 * std::log(12.0) / 0.3)));
}

TEST(MixtureScheme, WeightQuantization) {
  EXPECT_EQ(quantize_weight(1.0, 4), std::vector<bool>(4, true));
  EXPECT_EQ(quantize_weight(0.0, 3), std::vector<bool>(3, false));
  EXPECT_EQ(quantize_weight(0.4, 3), (std::vector<bool>{0, 1, 1}));
  for (std::size_t b : {3u, 5u, 9u})
    for (double w : {0.0, 0.1, 0.337, 0.5, 0.9, 1.0})
      EXPECT_LE(std::abs(dequantize_weight(quantize_weight(w, b)) - w), 0.5 / (std::ldexp(1.0, static_cast<int>(b)) - 1.0) + 1e-15);
}

TEST(MixtureScheme, SingleComponent) {
  const auto sc = mixture_scheme(gaussian_1d_scheme(), 1);
  const Density target = Mixture({1.0}, {Gaussian1D(0.0, 1.0)});
  Rng rng(2);
  const Sample s = draw(target, 400, 9);
  const auto e = sc.encode(target, s, 0.3, rng);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->bits, std::vector<bool>(weight_bits(1, 0.3), true));
  const auto d = sc.decode(*e, 0.3);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->as<Mixture>().weights(), std::vector<double>{1.0});
}

TEST(MixtureScheme, SeparatedRoundTrip) {
  const auto sc = mixture_scheme(gaussian_1d_scheme(), 2);
  const Density target = Mixture({0.5, 0.5}, {Gaussian1D(-10, 1), Gaussian1D(10, 1)});
  const double eps = 0.1;
  Rng rng(3);
  int ok = 0;
  const int trials = 12;
  for (int t = 0; t < trials; ++t) {
    const Sample s = draw(target, sc.params.m(eps), derive_seed(10, static_cast<std::uint64_t>(t)));
    const auto e = sc.encode(target, s, eps, rng);
    if (!e) continue;
    for (std::size_t i = 0; i < e->points.size(); ++i) EXPECT_EQ(e->points[i][0], s[e->source_indices[i]]);
    EXPECT_EQ(e->bits.size(), 2 * weight_bits(2, eps));
    const auto d = sc.decode(*e, eps);
    ASSERT_TRUE(d);
    EXPECT_EQ(*d, *sc.decode(*e, eps));
    ok += l1_quadrature_1d(target, *d).value <= 0.3;
  }
  EXPECT_GE(ok, 8);
  EXPECT_THROW(sc.encode(target, Sample::from_1d({1.0, 2.0}), eps, rng), std::invalid_argument);
}

TEST(CompressionLearner, EnumerationCount) {
  EXPECT_EQ(enumeration_count(50, 2, 0), 2551u);
  EXPECT_EQ(enumeration_count(3, 1, 2), 4u * 7u);
  EXPECT_EQ(enumeration_count(1000, 30, 0), std::numeric_limits<std::size_t>::max());
  EXPECT_EQ(enumeration_count(2, 1, 80), std::numeric_limits<std::size_t>::max());
}

TEST(CompressionLearner, CountsAndContainsEncodedCandidate) {
  const auto sc = gaussian_1d_scheme();
  const double eps = 0.6, delta = 0.5;
  ASSERT_EQ(compression_material_size(sc, eps, delta), 50u);
  const Density target = Gaussian1D(1.0, 2.0);
  const Sample s = draw(target, 1050, 21);
  Rng rng(4);
  const auto r = compression_learner(sc, s, eps, delta, rng);
  EXPECT_EQ(r.enumerated, 2551u);
  EXPECT_LE(r.candidates.size(), 50u * 50u + 50u + 1u);
  EXPECT_EQ(r.candidates.size(), 50u * 49u / 2u);
  EXPECT_EQ(r.m_material, 50u);
  EXPECT_EQ(r.m_test, 1000u);
  const auto enc = encode_gaussian_1d(target.as<Gaussian1D>(), s.slice(0, 50), eps / 6.0);
  ASSERT_TRUE(enc);
  bool found = false;
  for (const auto& e : r.encodings) found = found || e == *enc;
  EXPECT_TRUE(found);
  for (std::size_t q = 0; q < r.candidates.size(); ++q)
    for (std::size_t i = 0; i < r.encodings[q].points.size(); ++i)
      EXPECT_EQ(r.encodings[q].points[i][0], s[r.encodings[q].source_indices[i]]);
}

TEST(CompressionLearner, CapAndShortSample) {
  const auto sc = gaussian_1d_scheme();
  Rng rng(5);
  const Sample s = draw(Gaussian1D(0, 1), 200, 1);
  CompressionOptions opt;
  opt.cap = 100;
  EXPECT_THROW(compression_learner(sc, s, 0.6, 0.5, rng, opt), CapExceeded);
  EXPECT_THROW(compression_learner(sc, draw(Gaussian1D(0, 1), 40, 1), 0.6, 0.5, rng), std::invalid_argument);
}

TEST(CompressionLearner, WinnerAccurate) {
  const auto sc = gaussian_1d_scheme();
  const double eps = 0.3, delta = 0.5;
  const auto bound = compression_sample_bound(sc.params, eps, delta);
  int ok = 0;
  for (int t = 0; t < 10; ++t) {
    Rng rng(static_cast<std::uint64_t>(t));
    const Sample s = draw(Gaussian1D(0, 1), bound.total, derive_seed(30, static_cast<std::uint64_t>(t)));
    const auto r = compression_learner(sc, s, eps, delta, rng);
    EXPECT_TRUE(r.warnings.empty());
    ok += l1_quadrature_1d(Gaussian1D(0, 1), r.winner).value <= eps;
  }
  EXPECT_GE(ok, 9);
}

TEST(HighDimParams, ShapeAtDOne) {
  const auto p = highdim_gaussian_params(1);
  EXPECT_EQ(p.tau(0.1), 1u);
  EXPECT_EQ(p.m(0.001), 1u);
  EXPECT_EQ(p.t(0.1), static_cast<std::size_t>(std::ceil(std::log(2.0) * std::log(10.0))));
  EXPECT_EQ(p.t(1e-6), static_cast<std::size_t>(std::ceil(std::log(2.0) * std::log(1e6))));
}

TEST(HighDimParams, MixtureCompositionTermByTerm) {
  const std::size_t k = 3, d = 2;
  const auto p = mixture_params(highdim_gaussian_params(d), k);
  const double l2d = std::log(4.0);
  for (double eps : {0.3, 0.1, 0.01}) {
    const double tau = std::ceil(2.0 * l2d);
    EXPECT_EQ(p.tau(eps), static_cast<std::size_t>(3 * tau));
    const double t = 3.0 * std::ceil(4.0 * l2d * std::log(2.0 / (eps / 3.0))) + 3.0 * std::ceil(std::log2(12.0 / eps));
    EXPECT_EQ(p.t(eps), static_cast<std::size_t>(t));
    EXPECT_EQ(p.m(eps), static_cast<std::size_t>(std::ceil(48.0 * tau * 3.0 * std::log(18.0) / eps)));
  }
}

TEST(HighDimParams, LearningBoundScalesLikeKDSquaredOverEpsSquared) {
  // Total divided by k d^2 / eps^2 grows at most polylogarithmically.
  auto ratio = [](std::size_t k, std::size_t d, double eps) {
    const auto b = compression_sample_bound(mixture_params(highdim_gaussian_params(d), k), eps, 0.1);
    return static_cast<double>(b.total) * eps * eps / static_cast<double>(k * d * d);
  };
  const double base = ratio(3, 4, 0.1);
  EXPECT_LT(ratio(3, 8, 0.1) / base, 2.0);
  EXPECT_LT(ratio(6, 4, 0.1) / base, 2.0);
  EXPECT_LT(ratio(3, 4, 0.05) / base, 2.0);
  EXPECT_GT(ratio(3, 8, 0.1) / base, 0.5);
}
