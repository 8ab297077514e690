#pragma once

// Generic k-mixture learner: exhaustive colorings of a training sample, per-color base fits,
// a weight grid on the simplex, and a Scheffe tournament on fresh points.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "dtk/distributions.hpp"
#include "dtk/selection.hpp"

namespace dtk {

inline constexpr std::size_t kDefaultColoringCap = std::size_t{1} << 20;

// ---------------------------------------------------------------------------
// Weight grid

struct WeightGrid {
  double step = 1.0;
  std::vector<std::vector<double>> vectors;

  std::size_t size() const { return vectors.size(); }

  /// The single vector (1/k, ..., 1/k).
  static WeightGrid uniform(std::size_t k) {
    if (k == 0) throw std::invalid_argument("WeightGrid::uniform: k >= 1");
    WeightGrid g;
    g.step = 1.0 / static_cast<double>(k);
    g.vectors.assign(1, std::vector<double>(k, 1.0 / static_cast<double>(k)));
    return g;
  }
};

/// All points of the simplex with coordinates in step * {0, 1, ..., 1/step}, in lexicographic
/// order of the coordinate vectors.
inline WeightGrid weight_grid(std::size_t k, double step) {
  if (k == 0) throw std::invalid_argument("weight_grid: k >= 1");
  if (!(step > 0.0) || step > 1.0) throw std::invalid_argument("weight_grid: step must lie in (0, 1]");
  const double inv = 1.0 / step;
  const auto n = static_cast<std::size_t>(std::llround(inv));
  if (std::abs(inv - static_cast<double>(n)) > 1e-9 * inv) throw std::invalid_argument("weight_grid: 1/step must be an integer");
  WeightGrid g;
  g.step = step;
  std::vector<std::size_t> parts(k, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == k) {
      parts[pos] = left;
      std::vector<double> w(k);
      for (std::size_t i = 0; i < k; ++i) w[i] = static_cast<double>(parts[i]) / static_cast<double>(n);
      g.vectors.push_back(std::move(w));
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      parts[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, n);
  return g;
}

// ---------------------------------------------------------------------------
// Colorings

struct Coloring {
  std::vector<int> assignment;
  friend bool operator==(const Coloring&, const Coloring&) = default;
};

/// The k^m colorings of m points in lexicographic order (the first is all color 0).
class ColoringRange {
 public:
  ColoringRange(std::size_t m, std::size_t k, std::size_t cap = kDefaultColoringCap) : m_(m), k_(k) {
    if (k == 0) throw std::invalid_argument("enumerate_colorings: k >= 1");
    double total = std::pow(static_cast<double>(k), static_cast<double>(m));
    if (total > static_cast<double>(cap))
      throw CapExceeded("enumerate_colorings: k^m = " + std::to_string(k) + "^" + std::to_string(m) +
                        " exceeds cap " + std::to_string(cap));
    count_ = static_cast<std::size_t>(std::llround(total));
  }

  class iterator {
   public:
    using value_type = Coloring;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    iterator(std::size_t m, std::size_t k, std::size_t index) : k_(k), index_(index) { c_.assignment.assign(m, 0); }
    const Coloring& operator*() const { return c_; }
    const Coloring* operator->() const { return &c_; }
    iterator& operator++() {
      ++index_;
      for (std::size_t i = c_.assignment.size(); i-- > 0;) {
        if (static_cast<std::size_t>(++c_.assignment[i]) < k_) break;
        c_.assignment[i] = 0;
      }
      return *this;
    }
    iterator operator++(int) {
      iterator t = *this;
      ++*this;
      return t;
    }
    bool operator==(const iterator& o) const { return index_ == o.index_; }
    std::size_t index() const { return index_; }

   private:
    Coloring c_;
    std::size_t k_ = 1;
    std::size_t index_ = 0;
  };

  iterator begin() const { return {m_, k_, 0}; }
  iterator end() const { return {0, k_, count_}; }
  std::size_t size() const { return count_; }

 private:
  std::size_t m_, k_, count_ = 0;
};

inline ColoringRange enumerate_colorings(std::size_t m, std::size_t k, std::size_t cap = kDefaultColoringCap) {
  return {m, k, cap};
}

// ---------------------------------------------------------------------------
// Maximum-likelihood Gaussian fits

struct GaussianFit {
  Density gaussian;
  bool floored = false;
};

/// Sample mean and population covariance (divide by n). Variances or eigenvalues below the
/// positive-definiteness floor are raised to it and the fit is flagged. 1-D samples give a
/// Gaussian1D; `axis_aligned` zeroes the off-diagonal entries.
inline GaussianFit ml_fit_gaussian(const Sample& s, bool axis_aligned = false) {
  const std::size_t n = s.size(), d = s.dim;
  if (d == 1 ? n < 2 : (axis_aligned ? n < 2 : n < d + 1))
    throw std::invalid_argument("ml_fit_gaussian: too few points (" + std::to_string(n) + ")");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[static_cast<Eigen::Index>(j)] += s.data[i * d + j];
  mean /= static_cast<double>(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) x[static_cast<Eigen::Index>(j)] = s.data[i * d + j];
    x -= mean;
    cov.noalias() += x * x.transpose();
  }
  cov /= static_cast<double>(n);
  if (axis_aligned) cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
  cov = 0.5 * (cov + cov.transpose());

  const double scale = std::max(1.0, mean.squaredNorm());
  const double abs_floor = kCovarianceFloor * scale;
  bool floored = false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd ev = es.eigenvalues();
  const double rel_floor = 2.0 * kCovarianceFloor * std::max(ev.maxCoeff(), 0.0);
  const double fl = std::max(abs_floor, rel_floor);
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] < fl) {
      ev[i] = fl;
      floored = true;
    }
  if (floored) {
    cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose());
    if (axis_aligned) cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
  }
  if (d == 1) return {Gaussian1D(mean[0], std::sqrt(cov(0, 0))), floored};
  return {GaussianND(mean, cov), floored};
}

// ---------------------------------------------------------------------------
// Base learners

struct BaseLearner {
  std::string name;
  std::function<Density(const Sample&, double eps, double delta)> fit;
  /// m_F(eps, delta), constants set to 1.
  std::function<std::size_t(double eps, double delta)> advertised_complexity;
  std::size_t min_points = 2;
};

/// Maximum-likelihood Gaussian learner for G_{d,1} (or A_{d,1} when axis-aligned), with the
/// advertised sample complexity (d^2 + log(1/delta)) / eps^2, resp. (d + log(1/delta)) / eps^2.
inline BaseLearner gaussian_ml_learner(std::size_t d = 1, bool axis_aligned = false) {
  BaseLearner b;
  b.name = axis_aligned ? "ml-gaussian-axis" : "ml-gaussian";
  b.fit = [axis_aligned](const Sample& s, double, double) { return ml_fit_gaussian(s, axis_aligned).gaussian; };
  const double params = axis_aligned ? static_cast<double>(d) : static_cast<double>(d * d);
  b.advertised_complexity = [params](double eps, double delta) {
    return static_cast<std::size_t>(std::ceil((params + std::log(1.0 / delta)) / (eps * eps)));
  };
  b.min_points = (axis_aligned || d == 1) ? 2 : d + 1;
  return b;
}

// ---------------------------------------------------------------------------
// Candidate generation

struct CandidateSet {
  CandidateList list;
  std::vector<std::size_t> coloring;  // coloring index of each candidate
  std::vector<std::size_t> weights;   // grid index of each candidate
  std::size_t raw_count = 0;          // before deduplication
  std::size_t placeholder_fits = 0;   // color classes too small for the base learner
};

namespace detail {

inline void append_key(std::string& out, const Density& d) {
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%a,", v);
    out += buf;
  };
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Gaussian1D>) {
          out += "g1:";
          put(x.mu());
          put(x.sigma());
        } else if constexpr (std::is_same_v<T, GaussianND>) {
          out += "gn:";
          for (Eigen::Index i = 0; i < x.mean().size(); ++i) put(x.mean()[i]);
          for (Eigen::Index i = 0; i < x.cov().size(); ++i) put(x.cov().data()[i]);
        } else if constexpr (std::is_same_v<T, PiecewisePoly>) {
          out += "pp:";
          for (double b : x.breakpoints()) put(b);
          for (const auto& c : x.coeffs())
            for (double v : c) put(v);
        } else {
          out += "mx:";
          for (std::size_t i = 0; i < x.size(); ++i) {
            put(x.weights()[i]);
            append_key(out, x.components()[i]);
          }
        }
      },
      d.variant());
}

/// Parameter key of sum_i w_i G_i up to component order, ignoring zero-weight components.
inline std::string mixture_key(const std::vector<double>& w, const std::vector<Density>& comps) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    std::string s;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a|", w[i]);
    s += buf;
    append_key(s, comps[i]);
    parts.push_back(std::move(s));
  }
  std::sort(parts.begin(), parts.end());
  std::string key;
  for (const auto& p : parts) key += p + ";";
  return key;
}

}  // namespace detail

/// Candidates sum_i w_i G_i: for each coloring of S_train, G_i is the base fit of color class i
/// (classes smaller than the learner's minimum get the full-sample fit as a placeholder), and w
/// ranges over the grid. Duplicates up to component order are dropped, keeping the first.
inline CandidateSet generate_candidates(const Sample& train, std::size_t k, const BaseLearner& base,
                                        const WeightGrid& grid, double eps, double delta,
                                        std::size_t cap = kDefaultColoringCap) {
  if (train.empty()) throw std::invalid_argument("generate_candidates: empty training sample");
  for (const auto& w : grid.vectors)
    if (w.size() != k) throw std::invalid_argument("generate_candidates: grid dimension differs from k");
  const double total = std::pow(static_cast<double>(k), static_cast<double>(train.size())) * static_cast<double>(grid.size());
  if (total > static_cast<double>(cap))
    throw CapExceeded("generate_candidates: k^m * |grid| = " + std::to_string(total) + " exceeds cap " + std::to_string(cap));

  CandidateSet out;
  if (k == 1) {
    out.list.push_back(base.fit(train, eps, delta), "fit");
    out.coloring.push_back(0);
    out.weights.push_back(0);
    out.raw_count = 1;
    return out;
  }
  const Density fallback = base.fit(train, eps, delta);
  std::set<std::string> seen;
  for (auto it = ColoringRange(train.size(), k, cap).begin(), end = ColoringRange(train.size(), k, cap).end(); it != end; ++it) {
    std::vector<Sample> classes(k, Sample(train.dim));
    for (std::size_t i = 0; i < train.size(); ++i) classes[static_cast<std::size_t>(it->assignment[i])].push_back(train.point(i));
    std::vector<Density> comps;
    comps.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      if (classes[c].size() < base.min_points) {
        comps.push_back(fallback);
        ++out.placeholder_fits;
      } else {
        comps.push_back(base.fit(classes[c], eps, delta));
      }
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      ++out.raw_count;
      const auto& w = grid.vectors[g];
      if (!seen.insert(detail::mixture_key(w, comps)).second) continue;
      out.list.push_back(Mixture(w, comps), "c" + std::to_string(it.index()) + "w" + std::to_string(g));
      out.coloring.push_back(it.index());
      out.weights.push_back(g);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Learner

struct MixtureOptions {
  std::size_t m_train = 0;        // 0: the largest prefix allowed by the cap and the bounds
  std::optional<WeightGrid> grid;  // default: step eps/k (rounded so that 1/step is integral)
  std::size_t cap = kDefaultColoringCap;
};

struct MixtureResult {
  Density winner;
  SelectionReport report;
  CandidateSet candidates;
  std::size_t m_train = 0;
  std::size_t m_test = 0;
  bool degraded = false;  // some sample size fell below the bound it is meant to meet
  std::vector<std::string> warnings;
};

/// Default grid: step 1/ceil(k/eps), the coarsest integral grid no coarser than eps/k.
inline WeightGrid default_weight_grid(std::size_t k, double eps) {
  const double n = std::ceil(static_cast<double>(k) / eps - 1e-9);
  return weight_grid(k, 1.0 / n);
}

/// Sample-size and runtime arithmetic for the mixture learner, constants set to 1.
struct MixtureBounds {
  std::size_t m_base = 0;       // m_F(eps, delta / 3k)
  std::size_t m_train = 0;      // k m_F(eps, delta / 3k)
  double log_candidates = 0.0;  // m_train log k + log|grid|
  std::size_t m_test = 0;       // tournament size for that many candidates at (eps, delta / 3)
  double headline = 0.0;        // k log k m_F(eps, delta / 3k) / eps^2 (k >= 2)
};

inline MixtureBounds mixture_bounds(std::size_t k, double eps, double delta, const BaseLearner& base,
                                    std::size_t grid_size = 1) {
  MixtureBounds b;
  const double kk = static_cast<double>(k);
  b.m_base = base.advertised_complexity(eps, delta / (3.0 * kk));
  b.m_train = k * b.m_base;
  b.log_candidates = static_cast<double>(b.m_train) * std::log(kk) + std::log(static_cast<double>(grid_size));
  b.m_test = static_cast<std::size_t>(std::ceil((std::log(3.0) + 2.0 * b.log_candidates + std::log(3.0 / delta)) / (2.0 * eps * eps)));
  b.headline = kk * std::log(kk) * static_cast<double>(b.m_base) / (eps * eps);
  return b;
}

/// Splits S into a training prefix (candidate generation) and a disjoint test suffix (tournament),
/// generates candidates and returns the tournament winner.
inline MixtureResult learn_mixture(const Sample& s, std::size_t k, const BaseLearner& base, double eps, double delta,
                                   Rng& rng, MixtureOptions opt = {}) {
  if (s.size() < 2) throw std::invalid_argument("learn_mixture: need at least two points");
  const WeightGrid grid = opt.grid ? *opt.grid : (k == 1 ? WeightGrid::uniform(1) : default_weight_grid(k, eps));
  const MixtureBounds bounds = mixture_bounds(k, eps, delta, base, grid.size());
  MixtureResult r{Density(Gaussian1D(0, 1)), {}, {}, 0, 0, false, {}};
  std::size_t m_train = opt.m_train;
  if (m_train == 0) {
    m_train = std::min(bounds.m_train, s.size() - 1);
    if (k > 1) {
      const double by_cap = std::floor((std::log(static_cast<double>(opt.cap)) - std::log(static_cast<double>(grid.size()))) /
                                       std::log(static_cast<double>(k)));
      m_train = std::min(m_train, static_cast<std::size_t>(std::max(by_cap, 1.0)));
    }
  }
  if (m_train >= s.size()) throw std::invalid_argument("learn_mixture: training prefix leaves no test points");
  if (m_train < bounds.m_train) {
    r.degraded = true;
    r.warnings.push_back("training prefix " + std::to_string(m_train) + " below k m_F = " + std::to_string(bounds.m_train));
  }
  const Sample train = s.slice(0, m_train);
  const Sample test = s.slice(m_train, s.size());
  r.candidates = generate_candidates(train, k, base, grid, eps, delta / 3.0, opt.cap);
  r.report = scheffe_tournament(r.candidates.list, test, eps, 20000, rng, {delta / 3.0});
  if (!r.report.warnings.empty()) {
    r.degraded = true;
    r.warnings.insert(r.warnings.end(), r.report.warnings.begin(), r.report.warnings.end());
  }
  r.winner = r.candidates.list[r.report.winner];
  r.m_train = m_train;
  r.m_test = test.size();
  return r;
}

}  // namespace dtk
