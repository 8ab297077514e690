#pragma once

// Distribution compression schemes: encodings of a target by a few sample points plus a few
// bits, the 1-D Gaussian scheme, product and mixture combinators, parameter arithmetic, and
// the learner that enumerates all short encodings and selects among their decodes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtk/core.hpp"
#include "dtk/distributions.hpp"
#include "dtk/selection.hpp"

namespace dtk {

/// Calibrated constant of the 1-D Gaussian scheme: m(eps) = ceil(C / eps).
inline constexpr double kGaussianSchemeC = 5.0;
/// Frozen round-trip constant: whenever encode succeeds, ||decode - target||_1 <= c eps.
inline constexpr double kGaussianRoundTripC = 2.0;
inline constexpr std::size_t kDefaultEnumerationCap = std::size_t{1} << 22;

namespace detail {
/// Ceiling that ignores rounding noise in v (eps / 6 * 6 != eps).
inline std::size_t ceil_count(double v) { return static_cast<std::size_t>(std::ceil(v * (1.0 - 1e-12))); }
}  // namespace detail

struct Encoding {
  std::vector<std::vector<double>> points;
  std::vector<bool> bits;
  std::vector<std::size_t> source_indices;

  friend bool operator==(const Encoding&, const Encoding&) = default;
};

struct SchemeParams {
  std::function<std::size_t(double)> tau;
  std::function<std::size_t(double)> t;
  std::function<std::size_t(double)> m;
};

struct Scheme {
  std::string name;
  std::size_t dim = 1;
  SchemeParams params;
  /// White-box encoder: nullopt when no valid encoding exists in the sample.
  std::function<std::optional<Encoding>(const Density&, const Sample&, double, Rng&)> encode;
  /// Deterministic decoder at accuracy eps: nullopt for undecodable input.
  std::function<std::optional<Density>(const Encoding&, double)> decode;
};

// ---------------------------------------------------------------------------
// 1-D Gaussian: two points, one near mu - sigma and one near mu + sigma.

/// Points closest to mu - sigma and mu + sigma inside the windows [mu -/+ (1 + eps) sigma,
/// mu -/+ (1 - eps) sigma]; nullopt when either window is empty.
inline std::optional<Encoding> encode_gaussian_1d(const Gaussian1D& target, const Sample& s, double eps) {
  if (s.dim != 1) throw DimensionMismatch("encode_gaussian_1d: sample must be 1-D");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("encode_gaussian_1d: eps must lie in (0,1)");
  const double mu = target.mu(), sg = target.sigma();
  auto closest = [&](double center) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    double gap = kInf;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double g = std::abs(s[i] - center);
      if (g <= eps * sg && g < gap) {
        gap = g;
        best = i;
      }
    }
    return best;
  };
  const auto i1 = closest(mu - sg);
  const auto i2 = closest(mu + sg);
  if (!i1 || !i2) return std::nullopt;
  return Encoding{{{s[*i1]}, {s[*i2]}}, {}, {*i1, *i2}};
}

/// N((x1 + x2) / 2, sigma = (x2 - x1) / 2).
inline Gaussian1D decode_gaussian_1d(const Encoding& enc) {
  if (enc.points.size() != 2 || !enc.bits.empty() || enc.points[0].size() != 1 || enc.points[1].size() != 1)
    throw std::invalid_argument("decode_gaussian_1d: need exactly two 1-D points and no bits");
  const double x1 = enc.points[0][0], x2 = enc.points[1][0];
  if (!(x2 > x1)) throw std::invalid_argument("decode_gaussian_1d: need x2 > x1");
  return Gaussian1D(0.5 * (x1 + x2), 0.5 * (x2 - x1));
}

inline Scheme gaussian_1d_scheme(double c = kGaussianSchemeC) {
  Scheme s;
  s.name = "gaussian-1d";
  s.dim = 1;
  s.params.tau = [](double) -> std::size_t { return 2; };
  s.params.t = [](double) -> std::size_t { return 0; };
  s.params.m = [c](double eps) { return detail::ceil_count(c / eps); };
  s.encode = [](const Density& f, const Sample& x, double eps, Rng&) -> std::optional<Encoding> {
    if (!f.is<Gaussian1D>()) throw std::invalid_argument("gaussian-1d scheme: target must be Gaussian1D");
    return encode_gaussian_1d(f.as<Gaussian1D>(), x, eps);
  };
  s.decode = [](const Encoding& e, double) -> std::optional<Density> {
    if (e.points.size() != 2 || !e.bits.empty() || e.points[0].size() != 1 || !(e.points[1][0] > e.points[0][0]))
      return std::nullopt;
    return Density(decode_gaussian_1d(e));
  };
  return s;
}

// ---------------------------------------------------------------------------
// Combinators

namespace detail {

/// Encoding chunk q of n equal chunks of points and bits; nullopt if not divisible.
inline std::optional<Encoding> chunk(const Encoding& e, std::size_t q, std::size_t n) {
  if (e.points.size() % n != 0 || e.bits.size() % n != 0) return std::nullopt;
  const std::size_t np = e.points.size() / n, nb = e.bits.size() / n;
  Encoding out;
  out.points.assign(e.points.begin() + static_cast<std::ptrdiff_t>(q * np),
                    e.points.begin() + static_cast<std::ptrdiff_t>((q + 1) * np));
  out.bits.assign(e.bits.begin() + static_cast<std::ptrdiff_t>(q * nb), e.bits.begin() + static_cast<std::ptrdiff_t>((q + 1) * nb));
  return out;
}
}  // namespace detail

/// Bits per quantized mixture weight: ceil(log2(4k / eps)).
inline std::size_t weight_bits(std::size_t k, double eps) {
  return detail::ceil_count(std::log2(4.0 * static_cast<double>(k) / eps));
}

/// Mixture combinator applied to bare parameter functions (same arithmetic as mixture_scheme).
inline SchemeParams mixture_params(const SchemeParams& base, std::size_t k) {
  const double kk = static_cast<double>(k);
  SchemeParams p;
  p.tau = [base, k](double eps) { return k * base.tau(eps / 3.0); };
  p.t = [base, k](double eps) { return k * base.t(eps / 3.0) + k * weight_bits(k, eps); };
  p.m = [base, kk](double eps) {
    return detail::ceil_count(48.0 * static_cast<double>(base.m(eps / 3.0)) * kk * std::log(6.0 * kk) / eps);
  };
  return p;
}

/// Product combinator applied to bare parameter functions (same arithmetic as product_scheme).
inline SchemeParams product_params(const SchemeParams& base, std::size_t d) {
  if (d == 1) return base;
  const double dd = static_cast<double>(d);
  SchemeParams p;
  p.tau = [base, d, dd](double eps) { return d * base.tau(eps / dd); };
  p.t = [base, d, dd](double eps) { return d * base.t(eps / dd); };
  p.m = [base, dd](double eps) { return detail::ceil_count(static_cast<double>(base.m(eps / dd)) * std::log(3.0 * dd)); };
  return p;
}

/// Scheme for d-fold products of a 1-D class: params (d tau(eps/d), d t(eps/d),
/// m(eps/d) log(3d)). The encoder runs the base per coordinate at eps/d; the encoding holds
/// the d-dimensional sample points themselves, coordinate blocks in order.
inline Scheme product_scheme(const Scheme& base, std::size_t d) {
  if (d == 0) throw std::invalid_argument("product_scheme: d >= 1");
  if (base.dim != 1) throw std::invalid_argument("product_scheme: base must be 1-D");
  if (d == 1) return base;
  Scheme s;
  s.name = base.name + "^" + std::to_string(d);
  s.dim = d;
  const double dd = static_cast<double>(d);
  s.params = product_params(base.params, d);
  s.encode = [base, d, dd](const Density& f, const Sample& x, double eps, Rng& rng) -> std::optional<Encoding> {
    if (!f.is<GaussianND>() || !f.as<GaussianND>().is_axis_aligned())
      throw std::invalid_argument("product scheme: target must be an axis-aligned GaussianND");
    if (x.dim != d) throw DimensionMismatch("product scheme: sample dimension");
    const auto& g = f.as<GaussianND>();
    Encoding out;
    for (std::size_t j = 0; j < d; ++j) {
      const Density marginal = Gaussian1D(g.mean()[static_cast<Eigen::Index>(j)],
                                          std::sqrt(g.cov()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j))));
      const auto e = base.encode(marginal, x.coordinate(j), eps / dd, rng);
      if (!e) return std::nullopt;
      for (std::size_t idx : e->source_indices) {
        const auto p = x.point(idx);
        out.points.emplace_back(p.begin(), p.end());
        out.source_indices.push_back(idx);
      }
      out.bits.insert(out.bits.end(), e->bits.begin(), e->bits.end());
    }
    return out;
  };
  s.decode = [base, d, dd](const Encoding& e, double eps) -> std::optional<Density> {
    Eigen::VectorXd mean(static_cast<Eigen::Index>(d)), var(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
      auto c = detail::chunk(e, j, d);
      if (!c) return std::nullopt;
      for (auto& p : c->points) {
        if (p.size() != d) return std::nullopt;
        p = {p[j]};
      }
      const auto m = base.decode(*c, eps / dd);
      if (!m || !m->is<Gaussian1D>()) return std::nullopt;
      mean[static_cast<Eigen::Index>(j)] = m->as<Gaussian1D>().mu();
      var[static_cast<Eigen::Index>(j)] = m->as<Gaussian1D>().variance();
    }
    return Density(GaussianND::axis_aligned(mean, var));
  };
  return s;
}

/// q = round(w (2^b - 1)), most significant bit first.
inline std::vector<bool> quantize_weight(double w, std::size_t b) {
  const double levels = std::ldexp(1.0, static_cast<int>(b)) - 1.0;
  auto q = static_cast<std::uint64_t>(std::llround(std::clamp(w, 0.0, 1.0) * levels));
  std::vector<bool> out(b);
  for (std::size_t i = b; i-- > 0; q >>= 1) out[i] = (q & 1U) != 0;
  return out;
}

inline double dequantize_weight(const std::vector<bool>& bits) {
  std::uint64_t q = 0;
  for (bool v : bits) q = (q << 1) | (v ? 1U : 0U);
  return static_cast<double>(q) / (std::ldexp(1.0, static_cast<int>(bits.size())) - 1.0);
}

/// Scheme for k-mixtures of the base class: params (k tau(eps/3), k t(eps/3) + k ceil(log2(4k/eps)),
/// 48 m(eps/3) k log(6k) / eps). The encoder splits the sample by true component label, runs
/// the base per component at eps/3 and appends each quantized weight after its component's bits.
inline Scheme mixture_scheme(const Scheme& base, std::size_t k) {
  if (k == 0) throw std::invalid_argument("mixture_scheme: k >= 1");
  Scheme s;
  s.name = std::to_string(k) + "-mix(" + base.name + ")";
  s.dim = base.dim;
  s.params = mixture_params(base.params, k);
  s.encode = [base, k](const Density& f, const Sample& x, double eps, Rng& rng) -> std::optional<Encoding> {
    if (!f.is<Mixture>() || f.as<Mixture>().size() != k)
      throw std::invalid_argument("mixture scheme: target must be a " + std::to_string(k) + "-component Mixture");
    if (x.labels.size() != x.size()) throw std::invalid_argument("mixture scheme: sample needs component labels");
    const auto& mix = f.as<Mixture>();
    const std::size_t b = weight_bits(k, eps);
    Encoding out;
    for (std::size_t i = 0; i < k; ++i) {
      Sample sub(x.dim);
      std::vector<std::size_t> back;
      for (std::size_t n = 0; n < x.size(); ++n)
        if (static_cast<std::size_t>(x.labels[n]) == i) {
          sub.push_back(x.point(n));
          back.push_back(n);
        }
      const auto e = base.encode(mix.components()[i], sub, eps / 3.0, rng);
      if (!e) return std::nullopt;
      for (std::size_t j = 0; j < e->points.size(); ++j) {
        out.points.push_back(e->points[j]);
        out.source_indices.push_back(back[e->source_indices[j]]);
      }
      out.bits.insert(out.bits.end(), e->bits.begin(), e->bits.end());
      const auto wb = quantize_weight(mix.weights()[i], b);
      out.bits.insert(out.bits.end(), wb.begin(), wb.end());
    }
    return out;
  };
  s.decode = [base, k](const Encoding& e, double eps) -> std::optional<Density> {
    const std::size_t b = weight_bits(k, eps);
    std::vector<double> w;
    std::vector<Density> comps;
    for (std::size_t i = 0; i < k; ++i) {
      auto c = detail::chunk(e, i, k);
      if (!c || c->bits.size() < b) return std::nullopt;
      const std::vector<bool> wb(c->bits.end() - static_cast<std::ptrdiff_t>(b), c->bits.end());
      c->bits.resize(c->bits.size() - b);
      const auto m = base.decode(*c, eps / 3.0);
      if (!m) return std::nullopt;
      w.push_back(dequantize_weight(wb));
      comps.push_back(*m);
    }
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0)) return std::nullopt;
    for (double& v : w) v /= total;
    return Density(Mixture(std::move(w), std::move(comps)));
  };
  return s;
}

// ---------------------------------------------------------------------------
// Compression implies learning

struct CompressionOptions {
  std::size_t cap = kDefaultEnumerationCap;
  TournamentMode mode = TournamentMode::Auto;
  std::size_t n_mc = 20000;
};

struct CompressionResult {
  Density winner = Gaussian1D(0, 1);
  SelectionReport report;
  CandidateList candidates;
  std::vector<Encoding> encodings;  // encoding of each candidate
  std::size_t enumerated = 0;       // sequences times bit strings tried
  std::size_t m_material = 0;
  std::size_t m_test = 0;
  std::vector<std::string> warnings;
};

/// Number of (point sequence, bit string) pairs: sum_{j <= tau} n^j times sum_{l <= t} 2^l,
/// saturating at the size_t maximum.
inline std::size_t enumeration_count(std::size_t n, std::size_t tau, std::size_t t) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  auto mul = [](std::size_t a, std::size_t b) { return (a != 0 && b > kMax / a) ? kMax : a * b; };
  std::size_t seqs = 0, pow = 1;
  for (std::size_t j = 0; j <= tau; ++j) {
    seqs = seqs > kMax - pow ? kMax : seqs + pow;
    pow = mul(pow, n);
  }
  const std::size_t strings = t >= 63 ? kMax : (std::size_t{2} << t) - 1;
  return mul(seqs, strings);
}

/// Material size m(eps/6) ceil(ln(1/delta)).
inline std::size_t compression_material_size(const Scheme& scheme, double eps, double delta) {
  return scheme.params.m(eps / 6.0) * static_cast<std::size_t>(std::ceil(std::log(1.0 / delta)));
}

/// Decodes every ordered sequence (repetition allowed) of at most tau(eps/6) points from the
/// material prefix, paired with every bit string of at most t(eps/6) bits; undecodable pairs
/// are skipped. Sequences are length-major and lexicographic by index, bit strings
/// length-major and lexicographic. A Scheffe tournament on the remaining points selects the winner.
inline CompressionResult compression_learner(const Scheme& scheme, const Sample& s, double eps, double delta, Rng& rng,
                                             CompressionOptions opt = {}) {
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("compression_learner: need eps, delta in (0,1)");
  if (s.dim != scheme.dim) throw DimensionMismatch("compression_learner: sample dimension");
  const double e6 = eps / 6.0;
  const std::size_t m1 = compression_material_size(scheme, eps, delta);
  if (m1 >= s.size())
    throw std::invalid_argument("compression_learner: sample of " + std::to_string(s.size()) +
                                " points leaves nothing for the tournament after " + std::to_string(m1) + " material points");
  const std::size_t tau = scheme.params.tau(e6), t = scheme.params.t(e6);
  const std::size_t total = enumeration_count(m1, tau, t);
  if (total > opt.cap)
    throw CapExceeded("compression_learner: " + std::to_string(total) + " encodings exceed the cap " + std::to_string(opt.cap));

  CompressionResult res;
  res.m_material = m1;
  res.m_test = s.size() - m1;
  const Sample material = s.slice(0, m1);
  const Sample test = s.slice(m1, s.size());

  std::vector<std::size_t> idx;
  for (std::size_t len = 0; len <= tau; ++len) {
    idx.assign(len, 0);
    while (true) {
      Encoding e;
      for (std::size_t i : idx) {
        const auto p = material.point(i);
        e.points.emplace_back(p.begin(), p.end());
      }
      e.source_indices = idx;
      for (std::size_t nb = 0; nb <= t; ++nb) {
        for (std::uint64_t word = 0; word < (std::uint64_t{1} << nb); ++word) {
          e.bits.assign(nb, false);
          for (std::size_t b = 0; b < nb; ++b) e.bits[b] = ((word >> (nb - 1 - b)) & 1U) != 0;
          ++res.enumerated;
          if (auto d = scheme.decode(e, e6)) {
            res.candidates.push_back(std::move(*d), "enc" + std::to_string(res.encodings.size()));
            res.encodings.push_back(e);
          }
        }
      }
      // Next index sequence (last position fastest).
      std::size_t pos = len;
      while (pos > 0 && ++idx[pos - 1] == m1) idx[--pos] = 0;
      if (pos == 0) break;
    }
  }
  if (res.candidates.size() == 0) throw std::runtime_error("compression_learner: no encoding decodes to a valid density");
  res.report = scheffe_tournament(res.candidates, test, e6, opt.n_mc, rng, {delta / 2.0, opt.mode});
  res.warnings = res.report.warnings;
  res.winner = res.candidates[res.report.winner];
  return res;
}

/// Sample size of the learner: material m(eps/6) ceil(ln(1/delta)) plus a tournament over
/// every encoding at accuracy eps/6 and confidence delta/2.
struct CompressionBound {
  std::size_t m_material = 0;
  double log_candidates = 0.0;  // ln of sum_{j <= tau} m1^j 2^{t+1}, approximated as tau ln m1 + (t+1) ln 2
  std::size_t m_tournament = 0;
  std::size_t total = 0;
};

inline CompressionBound compression_sample_bound(const SchemeParams& p, double eps, double delta) {
  CompressionBound b;
  const double e6 = eps / 6.0;
  b.m_material = p.m(e6) * static_cast<std::size_t>(std::ceil(std::log(1.0 / delta)));
  b.log_candidates = static_cast<double>(p.tau(e6)) * std::log(static_cast<double>(std::max<std::size_t>(b.m_material, 2))) +
                     static_cast<double>(p.t(e6) + 1) * std::log(2.0);
  b.m_tournament = detail::ceil_count((std::log(3.0 / (delta / 2.0)) + 2.0 * b.log_candidates) / (2.0 * e6 * e6));
  b.total = b.m_material + b.m_tournament;
  return b;
}

/// Parameter functions for d-dimensional Gaussians with unit constants:
/// tau = d ln(2d), t = d^2 ln(2d) ln(d/eps), m = d ln(2d) (each rounded up, at least 1).
inline SchemeParams highdim_gaussian_params(std::size_t d) {
  if (d == 0) throw std::invalid_argument("highdim_gaussian_params: d >= 1");
  const double dd = static_cast<double>(d);
  const double l2d = std::log(2.0 * dd);
  SchemeParams p;
  p.tau = [dd, l2d](double) { return std::max<std::size_t>(1, detail::ceil_count(dd * l2d)); };
  p.t = [dd, l2d](double eps) { return std::max<std::size_t>(1, detail::ceil_count(dd * dd * l2d * std::log(dd / eps))); };
  p.m = [dd, l2d](double) { return std::max<std::size_t>(1, detail::ceil_count(dd * l2d)); };
  return p;
}

}  // namespace dtk
