#pragma once

// Minimax lower-bound machinery: greedy binary packings, the mean- and covariance-packing
// Gaussian families, the generalized Fano bound and the shifted-normal L1 bound.

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtk/core.hpp"
#include "dtk/distributions.hpp"

namespace dtk {

inline constexpr std::size_t kExhaustiveCodeCap = 24;
/// Families up to this size keep their densities in memory; larger ones build them on demand.
inline constexpr std::size_t kMaterializeCap = 4096;
/// Generic-oracle verification on every pair is run up to this family size.
inline constexpr std::size_t kFullPairCheckCap = 512;

/// Binary words of length d stored as bit masks (bit j is coordinate j).
struct BinaryCode {
  std::size_t d = 0;
  std::vector<std::uint64_t> words;
  std::size_t min_distance = 0;

  std::size_t size() const { return words.size(); }
  bool bit(std::size_t i, std::size_t j) const { return (words[i] >> j) & 1u; }
};

inline std::size_t hamming(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::size_t>(std::popcount(a ^ b));
}

/// sum_{j <= radius} C(d, j), as a double.
inline double hamming_ball_volume(std::size_t d, std::size_t radius) {
  double total = 0.0, c = 1.0;
  for (std::size_t j = 0; j <= std::min(radius, d); ++j) {
    total += c;
    c = c * static_cast<double>(d - j) / static_cast<double>(j + 1);
  }
  return total;
}

/// Smallest and largest pairwise distance over all pairs.
inline std::pair<std::size_t, std::size_t> code_distance_range(const BinaryCode& code) {
  if (code.size() < 2) return {code.d + 1, 0};
  std::size_t lo = code.d + 1, hi = 0;
  for (std::size_t i = 0; i < code.size(); ++i)
    for (std::size_t j = i + 1; j < code.size(); ++j) {
      const std::size_t h = hamming(code.words[i], code.words[j]);
      lo = std::min(lo, h);
      hi = std::max(hi, h);
    }
  return {lo, hi};
}

namespace detail {

inline void mark_ball(std::vector<bool>& covered, std::uint64_t centre, std::size_t d, std::size_t radius,
                      std::size_t from = 0) {
  covered[centre] = true;
  if (radius == 0) return;
  for (std::size_t j = from; j < d; ++j) mark_ball(covered, centre ^ (std::uint64_t{1} << j), d, radius - 1, j + 1);
}

}  // namespace detail

/// Greedy packing with pairwise Hamming distance >= min_dist. Up to `exhaustive_cap` the words
/// are scanned in lexicographic order and each accepted word deletes its radius min_dist-1 ball.
/// Above the cap words are proposed uniformly at random (needs `rng`) until `max_words` are
/// accepted or `max_rejections` consecutive proposals fail.
inline BinaryCode gv_greedy_code(std::size_t d, std::size_t min_dist, Rng* rng = nullptr,
                                 std::size_t exhaustive_cap = kExhaustiveCodeCap, std::size_t max_words = 4096,
                                 std::size_t max_rejections = 100000) {
  if (d == 0) throw std::invalid_argument("gv_greedy_code: d must be positive");
  if (min_dist == 0) throw std::invalid_argument("gv_greedy_code: min_dist must be positive");
  if (d > 64) throw CapExceeded("gv_greedy_code: d > 64 does not fit a word");
  BinaryCode code{d, {}, min_dist};
  if (d <= exhaustive_cap) {
    const std::uint64_t n = std::uint64_t{1} << d;
    std::vector<bool> covered(n, false);
    for (std::uint64_t x = 0; x < n; ++x) {
      if (covered[x]) continue;
      code.words.push_back(x);
      detail::mark_ball(covered, x, d, min_dist - 1);
    }
    return code;
  }
  if (!rng) throw CapExceeded("gv_greedy_code: d above the exhaustive cap needs a generator");
  const std::uint64_t mask = d == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << d) - 1;
  std::size_t misses = 0;
  while (code.size() < max_words && misses < max_rejections) {
    const std::uint64_t x = (*rng)() & mask;
    bool ok = true;
    for (std::uint64_t w : code.words)
      if (hamming(w, x) < min_dist) {
        ok = false;
        break;
      }
    if (ok) {
      code.words.push_back(x);
      misses = 0;
    } else {
      ++misses;
    }
  }
  return code;
}

/// A packing of Gaussians with pairwise KL <= kl_cap and pairwise L1 >= l1_floor.
struct HardFamily {
  std::string kind;
  std::size_t d = 0;
  double eps = 0.0;
  double kl_cap = 0.0;
  double l1_floor = 0.0;
  // Measured extremes over all pairs.
  double max_kl = 0.0;
  double min_l1 = kInf;
  // Mean packing.
  BinaryCode code;
  double side = 0.0;
  // Covariance packing.
  double lambda = 0.0;
  std::size_t r = 0;
  std::vector<Eigen::MatrixXd> U;
  double max_overlap = 0.0;

  std::vector<GaussianND> densities;
  std::size_t M = 0;

  std::size_t size() const { return M; }
  double log_M() const { return std::log(static_cast<double>(M)); }

  GaussianND density(std::size_t i) const {
    if (i >= M) throw std::out_of_range("HardFamily::density: index out of range");
    if (!densities.empty()) return densities[i];
    if (kind == "mean-packing") {
      Eigen::VectorXd mu(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) mu[static_cast<Eigen::Index>(j)] = code.bit(i, j) ? side : 0.0;
      return {mu, Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))};
    }
    const auto n = static_cast<Eigen::Index>(d);
    return {Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n) + lambda * U[i] * U[i].transpose()};
  }
};

/// N(mu_i eps / sqrt d, I_d) over a greedy code with distance ceil(d/5). KL cap eps^2/2 and
/// L1 floor 2(2 Phi(eps / (2 sqrt 5)) - 1).
inline HardFamily mean_packing_family(std::size_t d, double eps, Rng* rng = nullptr) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("mean_packing_family: eps must lie in (0,1]");
  if (d < 5) throw std::invalid_argument("mean_packing_family: need d >= 5");
  HardFamily fam;
  fam.kind = "mean-packing";
  fam.d = d;
  fam.eps = eps;
  fam.code = gv_greedy_code(d, (d + 4) / 5, rng);
  fam.M = fam.code.size();
  if (fam.M < 2) throw std::runtime_error("mean_packing_family: code has fewer than two words");
  fam.side = eps / std::sqrt(static_cast<double>(d));
  fam.kl_cap = 0.5 * eps * eps;
  fam.l1_floor = 2.0 * (2.0 * normal_cdf(eps / (2.0 * std::sqrt(5.0))) - 1.0);
  if (fam.M <= kMaterializeCap) {
    std::vector<GaussianND> all;
    for (std::size_t i = 0; i < fam.M; ++i) all.push_back(fam.density(i));
    fam.densities = std::move(all);
  }

  // Both KL and TV depend on a pair only through its Hamming distance: evaluate the generic
  // oracles once per distance that occurs, and on every pair for small families.
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> rep;
  for (std::size_t i = 0; i < fam.M; ++i)
    for (std::size_t j = i + 1; j < fam.M; ++j) rep.try_emplace(hamming(fam.code.words[i], fam.code.words[j]), i, j);
  auto check = [&](std::size_t i, std::size_t j) {
    const GaussianND fi = fam.density(i), fj = fam.density(j);
    const double kl = std::max(kl_gaussians(fi, fj), kl_gaussians(fj, fi));
    const double l1 = 2.0 * tv_identity_cov(fi.mean(), fj.mean());
    fam.max_kl = std::max(fam.max_kl, kl);
    fam.min_l1 = std::min(fam.min_l1, l1);
  };
  for (const auto& [h, ij] : rep) check(ij.first, ij.second);
  if (fam.M <= kFullPairCheckCap)
    for (std::size_t i = 0; i < fam.M; ++i)
      for (std::size_t j = i + 1; j < fam.M; ++j) check(i, j);
  if (fam.max_kl > fam.kl_cap * (1.0 + 1e-12) || fam.min_l1 < fam.l1_floor * (1.0 - 1e-12))
    throw std::logic_error("mean_packing_family: pairwise caps violated");
  return fam;
}

/// 2 KL(f_a || f_b) for Sigma = I + lambda U U^T with k = d/r orthonormal columns, from the
/// trace identity; `overlap` is ||U_a^T U_b||_F^2.
inline double covariance_family_kl(double lambda, double k, double overlap) {
  return 0.5 * (lambda * k - lambda / (1.0 + lambda) * k - lambda * lambda / (1.0 + lambda) * overlap);
}

/// N(0, I + lambda U_a U_a^T) with lambda = eps ln(1/eps) / sqrt d and U_a drawn as orthonormalized
/// Gaussian d x (d/r) matrices, rejection-resampled until every pair has overlap <= d/(2r).
inline HardFamily covariance_packing_family(std::size_t d, double eps, Rng& rng, std::size_t M = 16,
                                            std::size_t r = 9, std::size_t n_mc = 20000) {
  if (r == 0 || d < r || d % r != 0) throw std::invalid_argument("covariance_packing_family: d must be a positive multiple of r");
  if (!(eps > 0.0 && eps < std::exp(-1.0)))
    throw std::invalid_argument("covariance_packing_family: eps must lie in (0, 1/e)");
  if (M < 2) throw std::invalid_argument("covariance_packing_family: need M >= 2");
  HardFamily fam;
  fam.kind = "covariance-packing";
  fam.d = d;
  fam.eps = eps;
  fam.r = r;
  fam.M = M;
  fam.lambda = eps * std::log(1.0 / eps) / std::sqrt(static_cast<double>(d));
  const auto n = static_cast<Eigen::Index>(d);
  const auto k = static_cast<Eigen::Index>(d / r);
  const double limit = static_cast<double>(d) / (2.0 * static_cast<double>(r));
  const std::size_t budget = 200 * M * M;
  std::normal_distribution<double> z;
  double best_rejected = kInf;
  std::size_t attempts = 0;
  while (fam.U.size() < M) {
    if (attempts++ >= budget)
      throw std::runtime_error("covariance_packing_family: rejection budget exhausted; smallest achieved max overlap " +
                               std::to_string(best_rejected) + " > " + std::to_string(limit));
    Eigen::MatrixXd g(n, k);
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = 0; i < n; ++i) g(i, j) = z(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(n, k);
    double worst = 0.0;
    for (const auto& u : fam.U) worst = std::max(worst, (u.transpose() * q).squaredNorm());
    if (worst <= limit) {
      fam.U.push_back(q);
      fam.max_overlap = std::max(fam.max_overlap, worst);
    } else {
      best_rejected = std::min(best_rejected, worst);
    }
  }
  const double lam = fam.lambda, kd = static_cast<double>(k);
  fam.kl_cap = lam * lam * static_cast<double>(d) / (2.0 * static_cast<double>(r) * (1.0 + lam));
  std::vector<GaussianND> all;
  for (std::size_t i = 0; i < M; ++i) all.push_back(fam.density(i));
  fam.densities = std::move(all);
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = a + 1; b < M; ++b) {
      const double overlap = (fam.U[a].transpose() * fam.U[b]).squaredNorm();
      const double trace_kl = covariance_family_kl(lam, kd, overlap);
      const double generic = kl_gaussians(fam.densities[a], fam.densities[b]);
      if (std::abs(trace_kl - generic) > 1e-8)
        throw std::logic_error("covariance_packing_family: trace identity disagrees with kl_gaussians");
      fam.max_kl = std::max({fam.max_kl, trace_kl, kl_gaussians(fam.densities[b], fam.densities[a])});
      const McEstimate l1 = l1_monte_carlo(Density(fam.densities[a]), Density(fam.densities[b]), n_mc, rng);
      fam.min_l1 = std::min(fam.min_l1, l1.estimate);
    }
  fam.l1_floor = fam.min_l1;
  if (fam.max_kl > fam.kl_cap * (1.0 + 1e-12))
    throw std::logic_error("covariance_packing_family: KL cap violated");
  return fam;
}

struct FanoInstance {
  std::size_t M = 2;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t n = 0;
};

/// alpha (log M - n beta + log 2) / (2 log M), clamped below at 0, with log M given directly.
inline double fano_bound_log(double log_m, double alpha, double beta, double n) {
  if (!(log_m > 0.0)) throw std::invalid_argument("fano_bound: need M > 1");
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("fano_bound: alpha and beta must be nonnegative");
  return std::max(0.0, alpha * (log_m - n * beta + std::numbers::ln2) / (2.0 * log_m));
}

inline double fano_bound(const FanoInstance& inst) {
  if (inst.M < 2) throw std::invalid_argument("fano_bound: need M > 1");
  return fano_bound_log(std::log(static_cast<double>(inst.M)), inst.alpha, inst.beta, static_cast<double>(inst.n));
}

struct SampleFloor {
  std::size_t n = 0;
  double log_M = 0.0;
  double asymptotic = 0.0;
  std::string form;
};

/// Smallest n with fano bound < alpha/4, i.e. floor((log M / 2 + log 2) / beta) + 1.
/// alpha = 0 makes the bound identically 0 and beta = 0 keeps it above alpha/2: both rejected.
inline std::size_t fano_sample_floor(double log_m, double alpha, double beta) {
  if (!(alpha > 0.0)) throw std::invalid_argument("sample_complexity_floor: degenerate family (alpha = 0)");
  if (!(beta > 0.0)) throw std::invalid_argument("sample_complexity_floor: degenerate family (beta = 0)");
  const double x = (0.5 * log_m + std::numbers::ln2) / beta;
  if (!(x < 1e18)) throw std::overflow_error("sample_complexity_floor: floor does not fit a count");
  auto n = static_cast<std::size_t>(std::floor(x)) + 1;
  const double target = alpha / 4.0;
  while (n > 0 && fano_bound_log(log_m, alpha, beta, static_cast<double>(n - 1)) < target) --n;
  while (fano_bound_log(log_m, alpha, beta, static_cast<double>(n)) >= target) ++n;
  return n;
}

/// Fano floor for a verified family plus its asymptotic form at eps_target (the family's own eps
/// when eps_target <= 0): d / eps^2 for mean packing, d^2 / eps^2 for covariance packing.
inline SampleFloor sample_complexity_floor(const HardFamily& fam, double eps_target = 0.0) {
  if (fam.M < 2) throw std::invalid_argument("sample_complexity_floor: need M > 1");
  const double e = eps_target > 0.0 ? eps_target : fam.eps;
  const double d = static_cast<double>(fam.d);
  SampleFloor out;
  out.log_M = fam.log_M();
  out.n = fano_sample_floor(out.log_M, fam.l1_floor, fam.kl_cap);
  if (fam.kind == "mean-packing") {
    out.asymptotic = d / (e * e);
    out.form = "d/eps^2";
  } else {
    out.asymptotic = d * d / (e * e);
    out.form = "d^2/eps^2";
  }
  return out;
}

struct ShiftedNormalCheck {
  double exact = 0.0;
  double bound = 0.0;
};

/// ||N(0,1) - N(eps,1)||_1 = 2 (2 Phi(eps/2) - 1) against eps/5, for eps in [0, 1].
inline ShiftedNormalCheck shifted_normal_l1_check(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("shifted_normal_l1_check: eps must lie in [0,1]");
  ShiftedNormalCheck c{2.0 * (2.0 * normal_cdf(0.5 * eps) - 1.0), eps / 5.0};
  if (c.exact < c.bound) throw std::logic_error("shifted_normal_l1_check: bound violated");
  return c;
}

/// The steps of the shifted-normal argument evaluated numerically: the integral over
/// [eps/2, inf), its linearized lower bound, and the closed form of that bound.
struct ShiftedNormalChain {
  double integral = 0.0;
  double linearized = 0.0;
  double closed_form = 0.0;
};

inline ShiftedNormalChain shifted_normal_l1_chain(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("shifted_normal_l1_chain: eps must lie in [0,1]");
  const double lo = 0.5 * eps, hi = lo + 40.0;
  const double c = 2.0 * kInvSqrt2Pi;
  auto diff = [&](double x) { return c * (std::exp(-0.5 * (x - eps) * (x - eps)) - std::exp(-0.5 * x * x)); };
  auto lin = [&](double x) { return c * std::exp(-0.5 * x * x) * (-0.5 * eps * eps + x * eps); };
  ShiftedNormalChain out;
  out.integral = detail::adaptive_gk(diff, lo, hi, 1e-13).value;
  out.linearized = detail::adaptive_gk(lin, lo, hi, 1e-13).value;
  out.closed_form = eps * (c * std::exp(-eps * eps / 8.0) - eps * normal_sf(lo));
  return out;
}

}  // namespace dtk
