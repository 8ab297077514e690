#pragma once

// Piecewise-polynomial approximation of Gaussians and Gaussian mixtures, and exact L1 between
// piecewise polynomials.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "dtk/distributions.hpp"
#include "dtk/polynomial.hpp"
#include "dtk/setsystems.hpp"

namespace dtk {

/// Degree constant: the Taylor order is N = ceil(a ln(1/eps)), degree D = 2N.
inline constexpr double kTaylorDegreeConstant = 6.0;

/// Half-width of the approximated body in units of sigma: sqrt(2 ln(2/eps)) + 1.
inline double taylor_body_width(double eps) { return std::sqrt(2.0 * std::log(2.0 / eps)) + 1.0; }

inline std::size_t taylor_order(double eps) {
  return static_cast<std::size_t>(std::ceil(kTaylorDegreeConstant * std::log(1.0 / eps)));
}

/// Three pieces: zero tails and, on [mu - B sigma, mu + B sigma], the Taylor polynomial of
/// the pdf about mu truncated after the u^{2N} term. The body is one piece, so the
/// representation stores only it; outside the support the density is zero.
inline PiecewisePoly taylor_approx_gaussian(const Gaussian1D& g, double body_width, std::size_t order) {
  if (!(body_width > 0.0)) throw std::invalid_argument("taylor_approx_gaussian: body width must be positive");
  // exp(-B^2 u^2 / 2) = sum_n (-1)^n (B^2 / 2)^n u^{2n} / n!
  poly::Coeffs c(2 * order + 1, 0.0);
  const double half_b2 = 0.5 * body_width * body_width;
  double term = 1.0 / (g.sigma() * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t n = 0; n <= order; ++n) {
    c[2 * n] = term;
    term *= -half_b2 / static_cast<double>(n + 1);
  }
  const double h = body_width * g.sigma();
  return PiecewisePoly({g.mu() - h, g.mu() + h}, {std::move(c)});
}

inline PiecewisePoly taylor_approx_gaussian(const Gaussian1D& g, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("taylor_approx_gaussian: eps must lie in (0,1)");
  return taylor_approx_gaussian(g, taylor_body_width(eps), taylor_order(eps));
}

/// sum_i w_i p_i for piecewise polynomials p_i, on the union of their breakpoints.
/// Gaps between supports become zero pieces.
inline PiecewisePoly weighted_sum(std::span<const double> weights, std::span<const PiecewisePoly> parts) {
  if (parts.empty() || weights.size() != parts.size())
    throw std::invalid_argument("weighted_sum: need matching non-empty weights and parts");
  std::vector<double> cuts;
  for (const auto& p : parts) cuts.insert(cuts.end(), p.breakpoints().begin(), p.breakpoints().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<poly::Coeffs> coeffs;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    poly::Coeffs acc{0.0};
    for (std::size_t q = 0; q < parts.size(); ++q) {
      const std::size_t i = parts[q].piece_of(mid);
      if (i == PiecewisePoly::npos || weights[q] == 0.0) continue;
      const auto& br = parts[q].breakpoints();
      const double w = br[i + 1] - br[i];
      // Local variable of piece i in terms of the new local variable v: u = alpha v + beta.
      const poly::Coeffs local = poly::compose_affine(parts[q].coeffs()[i], 2.0 * half / w, (2.0 * mid - br[i] - br[i + 1]) / w);
      acc = poly::add(acc, local, weights[q]);
    }
    coeffs.push_back(std::move(acc));
  }
  return PiecewisePoly(std::move(cuts), std::move(coeffs));
}

/// Weighted sum of per-component Taylor approximants at accuracy eps/k each.
inline PiecewisePoly approx_mixture_pwpoly(const Mixture& f, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("approx_mixture_pwpoly: eps must lie in (0,1)");
  const double per = eps / static_cast<double>(f.size());
  std::vector<double> w;
  std::vector<PiecewisePoly> parts;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Density& c = f.components()[i];
    if (!c.is<Gaussian1D>()) throw DimensionMismatch("approx_mixture_pwpoly: components must be 1-D Gaussians");
    if (f.weights()[i] == 0.0) continue;
    w.push_back(f.weights()[i]);
    parts.push_back(taylor_approx_gaussian(c.as<Gaussian1D>(), per));
  }
  return weighted_sum(w, parts);
}

/// Exact integral of |p - q|: with A = {p >= q} from per-piece root isolation,
/// int |p - q| = 2 (p(A) - q(A)) - (p(R) - q(R)).
inline double pwpoly_l1(const PiecewisePoly& p, const PiecewisePoly& q) {
  const Flat1D fp = flatten_1d(p), fq = flatten_1d(q);
  const IntervalUnion a = detail::scheffe_pwpoly(fp, fq);
  const double diff_a = measure_of(fp, a) - measure_of(fq, a);
  const double diff_all = p.total_mass() - q.total_mass();
  return std::max(0.0, 2.0 * diff_a - diff_all);
}

}  // namespace dtk
