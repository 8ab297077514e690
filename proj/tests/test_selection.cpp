#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dtk/selection.hpp"

using namespace dtk;

namespace {

CandidateList random_family(Rng& rng, std::size_t m) {
  std::uniform_real_distribution<double> mu(-2, 2), sg(0.4, 2.5);
  std::vector<Density> ds;
  for (std::size_t i = 0; i < m; ++i) ds.emplace_back(Gaussian1D(mu(rng), sg(rng)));
  return CandidateList(ds);
}

// Brute-force oracle for the tournament rule, with Scheffe-set masses from quadratic roots
// done independently here on a fine sorted grid of bisection.
std::size_t oracle_tournament(const CandidateList& c, const Sample& s) {
  const std::size_t m = c.size();
  std::vector<std::size_t> wins(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const SetOracle a = scheffe_set(c[i], c[j]);
      const IntervalUnion u = scheffe_intervals_1d(c[i], c[j]);
      const double emp = empirical_measure(s, a);
      const double fi = measure_of(c[i], u), fj = measure_of(c[j], u);
      ++wins[std::abs(fi - emp) <= std::abs(fj - emp) ? i : j];
    }
  return static_cast<std::size_t>(std::max_element(wins.begin(), wins.end()) - wins.begin());
}

}  // namespace

TEST(Tournament, SampleSizeFormula) {
  EXPECT_EQ(tournament_sample_size(3, 0.1, 0.1), static_cast<std::size_t>(std::ceil(std::log(270.0) / 0.02)));
  EXPECT_EQ(tournament_sample_size(1, 0.5, 0.5), static_cast<std::size_t>(std::ceil(std::log(6.0) / 0.5)));
  EXPECT_THROW(tournament_sample_size(3, 0.0, 0.1), std::invalid_argument);
}

TEST(Tournament, SingleCandidate) {
  Rng rng(1);
  const CandidateList c({Gaussian1D(0, 1)});
  const auto rep = scheffe_tournament(c, sample(Gaussian1D(0, 1), 10, 3), 0.1, 1000, rng);
  EXPECT_EQ(rep.winner, 0u);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(Tournament, EmptySampleRejected) {
  Rng rng(1);
  const CandidateList c({Gaussian1D(0, 1), Gaussian1D(1, 1)});
  EXPECT_THROW(scheffe_tournament(c, Sample(1), 0.1, 1000, rng), std::invalid_argument);
}

TEST(Tournament, SeparatedCandidates) {
  const CandidateList c({Gaussian1D(0, 1), Gaussian1D(10, 1), Gaussian1D(-10, 1)});
  int ok = 0;
  for (int t = 0; t < 100; ++t) {
    Rng rng(t);
    ok += scheffe_tournament(c, sample(Gaussian1D(0, 1), 500, 700 + t), 0.1, 1000, rng).winner == 0;
  }
  EXPECT_GE(ok, 99);
}

TEST(Tournament, MatchesBruteForceOracle) {
  Rng rng(12);
  for (int rep = 0; rep < 30; ++rep) {
    const CandidateList c = random_family(rng, 6);
    const Sample s = sample(c[rep % 6], 200, 50 + rep);
    EXPECT_EQ(scheffe_tournament(c, s, 0.1, 1000, rng).winner, oracle_tournament(c, s));
  }
}

TEST(Tournament, PrunedEqualsRoundRobin) {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const CandidateList c = random_family(rng, 60);
    const Sample s = sample(Gaussian1D(0.2, 1.1), 150, 90 + rep);
    const auto full = scheffe_tournament(c, s, 0.1, 0, rng, {0.1, TournamentMode::Full});
    const auto pruned = scheffe_tournament(c, s, 0.1, 0, rng, {0.1, TournamentMode::Pruned});
    EXPECT_EQ(full.winner, pruned.winner);
    EXPECT_EQ(full.wins[full.winner], pruned.wins[pruned.winner]);
    EXPECT_LE(pruned.duels, full.duels);
  }
}

TEST(Tournament, WinsAreAntisymmetric) {
  Rng rng(14);
  const CandidateList c = random_family(rng, 7);
  const auto rep = scheffe_tournament(c, sample(c[2], 300, 4), 0.1, 0, rng);
  EXPECT_EQ(std::accumulate(rep.wins.begin(), rep.wins.end(), std::size_t{0}), 7u * 6u / 2u);
  ASSERT_EQ(rep.stats.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(rep.stats[i][i], 0.0);
}

TEST(Tournament, DeterministicAndPermutationCovariant) {
  Rng rng(15);
  const CandidateList c = random_family(rng, 8);
  const Sample s = sample(c[5], 400, 77);
  Rng r1(1), r2(2);
  const auto a = scheffe_tournament(c, s, 0.1, 0, r1);
  EXPECT_EQ(a.winner, scheffe_tournament(c, s, 0.1, 0, r2).winner);
  std::vector<std::size_t> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::vector<Density> ds;
  for (std::size_t p : perm) ds.push_back(c[p]);
  const auto b = scheffe_tournament(CandidateList(ds), s, 0.1, 0, r1);
  // Unique maximum keeps the permuted winner aligned; a tie could legitimately move it.
  std::vector<std::size_t> sorted = a.wins;
  std::sort(sorted.rbegin(), sorted.rend());
  if (sorted[0] != sorted[1]) {
    EXPECT_EQ(perm[b.winner], a.winner);
  }
}

TEST(Tournament, GuaranteeAtPrescribedSampleSize) {
  const CandidateList c({Gaussian1D(0, 1), Gaussian1D(0.3, 1.2), Gaussian1D(-0.4, 0.8)});
  const double eps = 0.1;
  const std::size_t n = tournament_sample_size(3, eps, 0.1);
  int ok = 0;
  for (int t = 0; t < 100; ++t) {
    Rng rng(t);
    const Density& target = c[t % 3];
    const auto rep = scheffe_tournament(c, sample(target, n, 3000 + t), eps, 0, rng);
    EXPECT_TRUE(rep.warnings.empty());
    const auto gap = agnostic_gap(c, target, rep.winner);
    ok += gap.achieved <= 3.0 * gap.opt + 4.0 * eps;
  }
  EXPECT_GE(ok, 90);
}

TEST(Tournament, MultivariateMonteCarloMeasures) {
  Eigen::VectorXd m1(2), m2(2);
  m1 << 3, 0;
  m2 << 0, 3;
  const CandidateList c({GaussianND::standard(2), GaussianND(m1, Eigen::MatrixXd::Identity(2, 2)),
                         GaussianND(m2, Eigen::MatrixXd::Identity(2, 2))});
  Rng rng(3);
  const auto rep = scheffe_tournament(c, sample(c[1], 400, 8), 0.1, 4000, rng);
  EXPECT_EQ(rep.winner, 1u);
  EXPECT_FALSE(rep.exact_measures);
}

TEST(Yatracos, SingleCandidate) {
  Rng rng(1);
  EXPECT_EQ(yatracos_minimizer(CandidateList({Gaussian1D(0, 1)}), sample(Gaussian1D(0, 1), 5, 1), 0, rng).winner, 0u);
}

TEST(Yatracos, TwoFactorInequality) {
  Rng rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    const CandidateList c = random_family(rng, 3 + rep % 4);
    const std::size_t truth = rep % c.size();
    const Sample s = sample(c[truth], 20 + 7 * rep, 100 + rep);
    const auto r = yatracos_minimizer(c, s, 0, rng);
    const double lhs = yatracos_distance(c, c[truth], c[r.winner]);
    const double rhs = 2.0 * yatracos_distance(c, c[truth], s);
    EXPECT_LE(lhs, rhs + 1e-9);
    EXPECT_NEAR(r.scores[r.winner], *std::min_element(r.scores.begin(), r.scores.end()), 0.0);
  }
}

TEST(Yatracos, ScoresMatchDirectDistance) {
  Rng rng(22);
  const CandidateList c = random_family(rng, 4);
  const Sample s = sample(c[1], 300, 5);
  const auto r = yatracos_minimizer(c, s, 0, rng);
  for (std::size_t q = 0; q < c.size(); ++q) EXPECT_NEAR(r.scores[q], yatracos_distance(c, c[q], s), 1e-15);
}

TEST(Yatracos, ErrorDecaysLikeInverseRoot) {
  const CandidateList c({Gaussian1D(0, 1), Gaussian1D(0.5, 1), Gaussian1D(0, 1.6)});
  std::vector<double> lx, ly;
  for (int e = 5; e <= 12; e += 1) {
    const std::size_t m = std::size_t{1} << e;
    double acc = 0.0;
    for (int t = 0; t < 50; ++t) {
      Rng rng(t);
      acc += yatracos_minimizer(c, sample(c[0], m, derive_seed(9, e, t)), 0, rng).scores[0];
    }
    lx.push_back(std::log(double(m)));
    ly.push_back(std::log(acc / 50.0));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.15);
}

TEST(AgnosticGap, TargetInCandidates) {
  const CandidateList c({Gaussian1D(0, 1), Gaussian1D(3, 1)});
  Rng rng(4);
  const auto g = agnostic_gap(c, c[0], sample(c[0], 500, 2), 0.1, rng);
  EXPECT_NEAR(g.opt, 0.0, 1e-9);
  EXPECT_EQ(g.best, 0u);
  EXPECT_LT(g.achieved, 1e-9);
}

TEST(AgnosticGap, FarCandidatesStillWithinBound) {
  const CandidateList c({Gaussian1D(5, 1), Gaussian1D(-6, 2), Gaussian1D(8, 0.5)});
  const Density target = Gaussian1D(0, 1);
  Rng rng(4);
  const auto g = agnostic_gap(c, target, sample(target, 800, 2), 0.1, rng);
  EXPECT_LE(g.achieved, 3.0 * g.opt + 0.4);
}
