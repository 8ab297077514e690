#pragma once

// Hypothesis selection over finite candidate lists: the Scheffe tournament and the empirical
// Yatracos minimizer, with exact 1-D measures and a Monte Carlo engine for d > 1.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "dtk/distributions.hpp"
#include "dtk/setsystems.hpp"

namespace dtk {

struct CandidateList {
  std::vector<Density> densities;
  std::vector<std::string> labels;

  CandidateList() = default;
  explicit CandidateList(std::vector<Density> ds, std::vector<std::string> ls = {})
      : densities(std::move(ds)), labels(std::move(ls)) {
    if (labels.empty())
      for (std::size_t i = 0; i < densities.size(); ++i) labels.push_back("f" + std::to_string(i));
    validate();
  }

  void push_back(Density d, std::string label) {
    densities.push_back(std::move(d));
    labels.push_back(std::move(label));
  }

  void validate() const {
    if (densities.empty()) throw std::invalid_argument("CandidateList: empty");
    if (labels.size() != densities.size()) throw std::invalid_argument("CandidateList: labels do not match densities");
    for (const auto& d : densities)
      if (d.dim() != densities.front().dim()) throw DimensionMismatch("CandidateList: dimensions differ");
  }

  std::size_t size() const { return densities.size(); }
  std::size_t dim() const { return densities.front().dim(); }
  const Density& operator[](std::size_t i) const { return densities[i]; }
};

struct SelectionReport {
  std::size_t winner = 0;
  std::size_t candidates = 0;
  std::size_t samples_used = 0;
  /// Tournament: duel wins per candidate; exact where `evaluated` is set (pruned runs leave
  /// lower bounds for eliminated candidates).
  std::vector<std::size_t> wins;
  std::vector<bool> evaluated;
  /// Tournament: stats[i][j] = |f_i(A) - p_hat(A)| on the duel set A of the pair {i, j}.
  /// Yatracos: stats[q][i] = max over j of |q(A_ij) - p_hat(A_ij)|. Kept for M <= 512.
  std::vector<std::vector<double>> stats;
  /// Yatracos: max over the class of |q(A) - p_hat(A)| per candidate.
  std::vector<double> scores;
  std::size_t duels = 0;
  bool exact_measures = true;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kDenseReportLimit = 512;

/// ceil(log(3 M^2 / delta) / (2 eps^2)).
inline std::size_t tournament_sample_size(std::size_t m, double eps, double delta) {
  if (!(eps > 0.0) || !(delta > 0.0) || !(delta < 1.0)) throw std::invalid_argument("tournament_sample_size: need eps > 0, delta in (0,1)");
  const double mm = static_cast<double>(std::max<std::size_t>(m, 1));
  return static_cast<std::size_t>(std::ceil(std::log(3.0 * mm * mm / delta) / (2.0 * eps * eps)));
}

namespace detail {

struct DuelMeasures {
  double fi = 0.0;   // f_i(A)
  double fj = 0.0;   // f_j(A)
  double emp = 0.0;  // p_hat(A)
};

/// Exact measures for 1-D candidates: Scheffe sets as interval unions, masses from CDFs or
/// antiderivatives, empirical masses by binary search in the sorted sample.
class ExactEngine1D {
 public:
  ExactEngine1D(const CandidateList& c, const Sample& s) : xs_(s.sorted_1d()) {
    flat_.reserve(c.size());
    for (const auto& d : c.densities) flat_.push_back(flatten_1d(d));
    simple_ = std::all_of(flat_.begin(), flat_.end(),
                          [](const Flat1D& f) { return f.polys.empty() && f.normals.size() == 1; });
    if (simple_) {
      for (const auto& f : flat_) {
        const auto& h = f.normals[0];
        const double v = h.sigma * h.sigma;
        gauss_.push_back({h.mu, h.sigma, 0.5 / v, h.mu / v, 0.5 * h.mu * h.mu / v + std::log(h.sigma) - std::log(h.w)});
      }
      build_buckets();
    }
  }

  IntervalUnion set(std::size_t i, std::size_t j) const {
    if (simple_) {
      const auto& a = flat_[i].normals[0];
      const auto& b = flat_[j].normals[0];
      return scheffe_gaussians(a.w, a.mu, a.sigma, b.w, b.mu, b.sigma);
    }
    return scheffe_intervals_1d(flat_[i], flat_[j]);
  }
  double measure(std::size_t q, const IntervalUnion& a) const { return measure_of(flat_[q], a); }
  double empirical(const IntervalUnion& a) const {
    return static_cast<double>(count_in(xs_, a)) / static_cast<double>(xs_.size());
  }
  DuelMeasures duel(std::size_t i, std::size_t j) const {
    if (simple_) return duel_gaussians(i, j);
    const IntervalUnion a = set(i, j);
    return {measure(i, a), measure(j, a), empirical(a)};
  }

 private:
  struct GaussTerms {
    double mu, sigma, a, b, h;  // log(w N(x)) = -a x^2 + b x - h - log sqrt(2 pi)
  };

  // Bucketed lower_bound over the sorted sample.
  void build_buckets() {
    if (xs_.size() < 2 || !(xs_.back() > xs_.front())) return;
    const std::size_t nb = xs_.size();
    scale_ = static_cast<double>(nb) / (xs_.back() - xs_.front());
    start_.resize(nb + 1);
    for (std::size_t k = 0; k <= nb; ++k) {
      const double edge = xs_.front() + static_cast<double>(k) / scale_;
      start_[k] = static_cast<std::size_t>(std::lower_bound(xs_.begin(), xs_.end(), edge) - xs_.begin());
    }
  }
  double below(double x) const {
    const std::size_t n = xs_.size();
    if (!(x > xs_.front())) return 0.0;
    if (x > xs_.back()) return static_cast<double>(n);
    auto lo = xs_.begin(), hi = xs_.end();
    if (!start_.empty()) {
      const auto k = static_cast<std::size_t>((x - xs_.front()) * scale_);
      lo += static_cast<std::ptrdiff_t>(start_[k > 0 ? std::min(k, n) - 1 : 0]);
      hi = xs_.begin() + static_cast<std::ptrdiff_t>(start_[std::min(k + 2, n)]);
    }
    return static_cast<double>(std::lower_bound(lo, hi, x) - xs_.begin());
  }

  // The sets of scheffe_gaussians (same quadratic), measured without building the union.
  DuelMeasures duel_gaussians(std::size_t i, std::size_t j) const {
    const GaussTerms& f = gauss_[i];
    const GaussTerms& g = gauss_[j];
    const double n = static_cast<double>(xs_.size());
    auto mass = [](const GaussTerms& t, double lo, double hi) {
      return normal_mass((lo - t.mu) / t.sigma, (hi - t.mu) / t.sigma);
    };
    auto lower = [](const GaussTerms& t, double x) { return normal_cdf((x - t.mu) / t.sigma); };
    auto upper = [](const GaussTerms& t, double x) { return normal_sf((x - t.mu) / t.sigma); };
    const double A = g.a - f.a;
    const double B = f.b - g.b;
    const double C = g.h - f.h;
    if (A == 0.0) {
      if (B == 0.0) return C >= 0.0 ? DuelMeasures{1.0, 1.0, 1.0} : DuelMeasures{0.0, 0.0, 0.0};
      const double r = -C / B;
      if (B > 0.0) return {upper(f, r), upper(g, r), (n - below(r)) / n};
      return {lower(f, r), lower(g, r), below(r) / n};
    }
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return A > 0.0 ? DuelMeasures{1.0, 1.0, 1.0} : DuelMeasures{0.0, 0.0, 0.0};
    const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B == 0.0 ? 1.0 : B));
    double r1 = q / A;
    double r2 = q != 0.0 ? C / q : r1;
    if (r1 > r2) std::swap(r1, r2);
    if (A > 0.0) {
      return {lower(f, r1) + upper(f, r2), lower(g, r1) + upper(g, r2), (below(r1) + n - below(r2)) / n};
    }
    if (r2 == r1) return {0.0, 0.0, 0.0};
    return {mass(f, r1, r2), mass(g, r1, r2), (below(r2) - below(r1)) / n};
  }

  std::vector<Flat1D> flat_;
  std::vector<double> xs_;
  bool simple_ = false;
  std::vector<GaussTerms> gauss_;
  double scale_ = 0.0;
  std::vector<std::size_t> start_;
};

/// Monte Carlo measures for d > 1: each candidate gets its own n_mc draws (one substream per
/// candidate), and membership in {f_i >= f_j} is decided in the log domain.
class MonteCarloEngine {
 public:
  MonteCarloEngine(const CandidateList& c, const Sample& s, std::size_t n_mc, Rng& rng)
      : cands_(c), sample_(s), n_mc_(n_mc) {
    const std::uint64_t base = rng();
    draws_.reserve(c.size());
    for (std::size_t q = 0; q < c.size(); ++q) {
      if (!c[q].samplable()) throw Unsupported("selection: Monte Carlo measures need samplable candidates");
      draws_.push_back(dtk::sample(c[q], n_mc, derive_seed(base, q)));
    }
  }

  double measure_pair(std::size_t q, std::size_t i, std::size_t j) const {
    const Sample& x = draws_[q];
    std::size_t hits = 0;
    for (std::size_t s = 0; s < x.size(); ++s)
      if (log_pdf(cands_[i], x.point(s)) >= log_pdf(cands_[j], x.point(s))) ++hits;
    return static_cast<double>(hits) / static_cast<double>(x.size());
  }
  double empirical_pair(std::size_t i, std::size_t j) const {
    std::size_t hits = 0;
    for (std::size_t s = 0; s < sample_.size(); ++s)
      if (log_pdf(cands_[i], sample_.point(s)) >= log_pdf(cands_[j], sample_.point(s))) ++hits;
    return static_cast<double>(hits) / static_cast<double>(sample_.size());
  }
  DuelMeasures duel(std::size_t i, std::size_t j) const {
    return {measure_pair(i, i, j), measure_pair(j, i, j), empirical_pair(i, j)};
  }
  std::size_t n_mc() const { return n_mc_; }

 private:
  const CandidateList& cands_;
  const Sample& sample_;
  std::size_t n_mc_;
  std::vector<Sample> draws_;
};

/// Candidates by decreasing log-likelihood of the first 64 sample points. Only the search
/// order depends on it, never the winner.
inline std::vector<std::size_t> likelihood_order(const CandidateList& c, const Sample& s) {
  const std::size_t n = std::min<std::size_t>(s.size(), 64);
  std::vector<double> ll(c.size(), 0.0);
  for (std::size_t q = 0; q < c.size(); ++q)
    for (std::size_t i = 0; i < n; ++i) ll[q] += std::max(log_pdf(c[q], s.point(i)), -690.0);
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ll[a] > ll[b]; });
  return order;
}

template <class Engine>
SelectionReport run_round_robin(const CandidateList& c, const Engine& eng) {
  const std::size_t m = c.size();
  SelectionReport rep;
  rep.candidates = m;
  rep.wins.assign(m, 0);
  rep.evaluated.assign(m, false);
  const bool dense = m <= kDenseReportLimit;
  if (dense) rep.stats.assign(m, std::vector<double>(m, 0.0));

  // Pair {lo, hi} with lo < hi: the duel set is {f_lo >= f_hi}; lo wins ties.
  auto play = [&](std::size_t i, std::size_t j) {
    const std::size_t lo = std::min(i, j), hi = std::max(i, j);
    const DuelMeasures d = eng.duel(lo, hi);
    const double dlo = std::abs(d.fi - d.emp);
    const double dhi = std::abs(d.fj - d.emp);
    if (dense) {
      rep.stats[lo][hi] = dlo;
      rep.stats[hi][lo] = dhi;
    }
    ++rep.duels;
    return dlo <= dhi ? lo : hi;
  };

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) ++rep.wins[play(i, j)];
  rep.evaluated.assign(m, true);
  rep.winner = static_cast<std::size_t>(std::max_element(rep.wins.begin(), rep.wins.end()) - rep.wins.begin());
  return rep;
}

}  // namespace detail

enum class TournamentMode { Auto, Full, Pruned };

struct TournamentOptions {
  double delta = 0.1;
  TournamentMode mode = TournamentMode::Auto;
};

namespace detail {

/// Exact winner without playing every duel. Candidates are evaluated (all their duels played)
/// best-first: fewest known losses, then higher sample log-likelihood. The search stops once
/// no unevaluated candidate's best attainable win count, M-1 minus its known losses, can beat
/// the current leader under the lowest-index tie rule. The winner equals the round-robin winner.
template <class Engine>
SelectionReport run_pruned(const CandidateList& c, const Sample& s, const Engine& eng) {
  const std::size_t m = c.size();
  SelectionReport rep;
  rep.candidates = m;
  rep.wins.assign(m, 0);
  rep.evaluated.assign(m, false);
  std::vector<std::size_t> losses(m, 0);
  const auto order = likelihood_order(c, s);
  std::vector<std::size_t> rank(m);
  for (std::size_t p = 0; p < m; ++p) rank[order[p]] = p;
  using Entry = std::tuple<std::size_t, std::size_t, std::size_t>;  // (losses, rank, index)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (std::size_t j = 0; j < m; ++j) queue.emplace(0, rank[j], j);
  std::size_t leader = m, lead_wins = 0;
  while (!queue.empty()) {
    const auto [l, r, i] = queue.top();
    queue.pop();
    if (rep.evaluated[i]) continue;
    if (l != losses[i]) {
      queue.emplace(losses[i], r, i);
      continue;
    }
    if (leader != m) {
      const std::size_t best = m - 1 - l;
      if (best < lead_wins) break;  // every queued candidate has at least l losses
      if (best == lead_wins && i > leader) continue;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || rep.evaluated[j]) continue;
      const std::size_t lo = std::min(i, j), hi = std::max(i, j);
      const DuelMeasures d = eng.duel(lo, hi);
      ++rep.duels;
      const bool lo_wins = std::abs(d.fi - d.emp) <= std::abs(d.fj - d.emp);
      ++rep.wins[lo_wins ? lo : hi];
      ++losses[lo_wins ? hi : lo];
    }
    rep.evaluated[i] = true;
    if (leader == m || rep.wins[i] > lead_wins || (rep.wins[i] == lead_wins && i < leader)) {
      leader = i;
      lead_wins = rep.wins[i];
    }
  }
  rep.winner = leader;
  return rep;
}

}  // namespace detail

/// Scheffe tournament: every pair {i < j} duels on A = {f_i >= f_j}; i wins when
/// |f_i(A) - p_hat(A)| <= |f_j(A) - p_hat(A)|. The most wins takes it, lowest index on ties.
/// Measures are exact in 1-D and Monte Carlo (n_mc draws per candidate) otherwise. Auto mode
/// plays the full round robin up to 512 candidates and the pruned exact search beyond.
inline SelectionReport scheffe_tournament(const CandidateList& cands, const Sample& s, double eps, std::size_t n_mc,
                                          Rng& rng, TournamentOptions opt = {}) {
  cands.validate();
  if (s.empty()) throw std::invalid_argument("scheffe_tournament: empty sample");
  if (s.dim != cands.dim()) throw DimensionMismatch("scheffe_tournament: sample dimension");
  SelectionReport rep;
  if (cands.size() == 1) {
    rep.candidates = 1;
    rep.wins = {0};
    rep.evaluated = {true};
    rep.stats = {{0.0}};
  } else {
    const bool full = opt.mode == TournamentMode::Full ||
                      (opt.mode == TournamentMode::Auto && cands.size() <= kDenseReportLimit);
    if (cands.dim() == 1) {
      detail::ExactEngine1D eng(cands, s);
      rep = full ? detail::run_round_robin(cands, eng) : detail::run_pruned(cands, s, eng);
    } else {
      detail::MonteCarloEngine eng(cands, s, n_mc, rng);
      rep = full ? detail::run_round_robin(cands, eng) : detail::run_pruned(cands, s, eng);
      rep.exact_measures = false;
    }
  }
  rep.samples_used = s.size();
  const std::size_t need = tournament_sample_size(cands.size(), eps, opt.delta);
  if (s.size() < need)
    rep.warnings.push_back("sample size " + std::to_string(s.size()) + " below " + std::to_string(need) +
                           " required for the guarantee at eps=" + std::to_string(eps));
  return rep;
}

/// Empirical Yatracos minimizer: argmin over q of max over all ordered Scheffe sets A_ij of
/// |q(A_ij) - p_hat(A_ij)|, lowest index on ties.
inline SelectionReport yatracos_minimizer(const CandidateList& cands, const Sample& s, std::size_t n_mc, Rng& rng) {
  cands.validate();
  if (s.empty()) throw std::invalid_argument("yatracos_minimizer: empty sample");
  if (s.dim != cands.dim()) throw DimensionMismatch("yatracos_minimizer: sample dimension");
  const std::size_t m = cands.size();
  SelectionReport rep;
  rep.candidates = m;
  rep.samples_used = s.size();
  rep.scores.assign(m, 0.0);
  const bool dense = m <= kDenseReportLimit;
  if (dense) rep.stats.assign(m, std::vector<double>(m, 0.0));
  if (m == 1) return rep;
  if (cands.dim() == 1) {
    detail::ExactEngine1D eng(cands, s);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        const IntervalUnion a = eng.set(i, j);
        const double emp = eng.empirical(a);
        for (std::size_t q = 0; q < m; ++q) {
          const double dq = std::abs(eng.measure(q, a) - emp);
          rep.scores[q] = std::max(rep.scores[q], dq);
          if (dense) rep.stats[q][i] = std::max(rep.stats[q][i], dq);
        }
      }
  } else {
    detail::MonteCarloEngine eng(cands, s, n_mc, rng);
    rep.exact_measures = false;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        const double emp = eng.empirical_pair(i, j);
        for (std::size_t q = 0; q < m; ++q) {
          const double dq = std::abs(eng.measure_pair(q, i, j) - emp);
          rep.scores[q] = std::max(rep.scores[q], dq);
          if (dense) rep.stats[q][i] = std::max(rep.stats[q][i], dq);
        }
      }
  }
  rep.winner = static_cast<std::size_t>(std::min_element(rep.scores.begin(), rep.scores.end()) - rep.scores.begin());
  return rep;
}

/// ||p - q||_{Y(F)} for two densities over the Yatracos class of a 1-D family (exact).
inline double yatracos_distance(const CandidateList& fam, const Density& p, const Density& q) {
  const auto sets = yatracos_intervals(fam.densities);
  const Flat1D fp = flatten_1d(p), fq = flatten_1d(q);
  double best = 0.0;
  for (const auto& a : sets) best = std::max(best, std::abs(measure_of(fp, a) - measure_of(fq, a)));
  return best;
}

/// ||p - p_hat_S||_{Y(F)} for a 1-D family (exact).
inline double yatracos_distance(const CandidateList& fam, const Density& p, const Sample& s) {
  const auto sets = yatracos_intervals(fam.densities);
  const Flat1D fp = flatten_1d(p);
  const auto xs = s.sorted_1d();
  double best = 0.0;
  for (const auto& a : sets)
    best = std::max(best, std::abs(measure_of(fp, a) - static_cast<double>(count_in(xs, a)) / static_cast<double>(xs.size())));
  return best;
}

struct AgnosticGap {
  double achieved = 0.0;   // ||winner - target||_1
  double opt = 0.0;        // min_i ||f_i - target||_1
  std::size_t winner = 0;
  std::size_t best = 0;
};

/// White-box check of a selection: L1 of the chosen candidate against the best available.
/// 1-D distances use quadrature; otherwise Monte Carlo with n_mc points.
inline AgnosticGap agnostic_gap(const CandidateList& cands, const Density& target, std::size_t winner,
                                std::size_t n_mc = 200000, Rng* rng = nullptr) {
  AgnosticGap g;
  g.winner = winner;
  g.opt = kInf;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double v = l1_distance(target, cands[i], rng, n_mc);
    if (v < g.opt) {
      g.opt = v;
      g.best = i;
    }
    if (i == winner) g.achieved = v;
  }
  return g;
}

inline AgnosticGap agnostic_gap(const CandidateList& cands, const Density& target, const Sample& s, double eps,
                                Rng& rng, std::size_t n_mc = 200000) {
  const auto rep = scheffe_tournament(cands, s, eps, n_mc, rng);
  return agnostic_gap(cands, target, rep.winner, n_mc, &rng);
}

}  // namespace dtk
