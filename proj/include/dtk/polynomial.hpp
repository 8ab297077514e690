#pragma once

// Dense power-basis polynomials: evaluation, calculus, affine substitution and
// real-root isolation on a bounded interval.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace dtk::poly {

using Coeffs = std::vector<double>;  // c[0] + c[1] u + c[2] u^2 + ...

inline double eval(std::span<const double> c, double u) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * u + c[i];
  return acc;
}

inline Coeffs derivative(std::span<const double> c) {
  if (c.size() <= 1) return {0.0};
  Coeffs d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = static_cast<double>(i) * c[i];
  return d;
}

/// Antiderivative vanishing at u = 0.
inline Coeffs antiderivative(std::span<const double> c) {
  Coeffs a(c.size() + 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) a[i + 1] = c[i] / static_cast<double>(i + 1);
  return a;
}

inline Coeffs add(std::span<const double> a, std::span<const double> b, double b_scale = 1.0) {
  Coeffs r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b_scale * b[i];
  return r;
}

/// Coefficients of q(v) = p(alpha * v + beta).
inline Coeffs compose_affine(std::span<const double> c, double alpha, double beta) {
  // Horner in polynomial arithmetic: q = (...((c_n) * L + c_{n-1}) * L ...), L = alpha v + beta.
  Coeffs q{0.0};
  for (std::size_t i = c.size(); i-- > 0;) {
    Coeffs next(q.size() + 1, 0.0);
    for (std::size_t j = 0; j < q.size(); ++j) {
      next[j] += beta * q[j];
      next[j + 1] += alpha * q[j];
    }
    next[0] += c[i];
    q = std::move(next);
  }
  while (q.size() > 1 && q.back() == 0.0) q.pop_back();
  return q;
}

inline double max_abs(std::span<const double> c) {
  double m = 0.0;
  for (double v : c) m = std::max(m, std::abs(v));
  return m;
}

/// Drops trailing coefficients that are negligible relative to the largest one.
inline Coeffs trimmed(std::span<const double> c, double rel = 0.0) {
  Coeffs r(c.begin(), c.end());
  const double cut = rel * max_abs(c);
  while (r.size() > 1 && std::abs(r.back()) <= cut) r.pop_back();
  if (r.empty()) r.push_back(0.0);
  return r;
}

namespace detail {

inline double bisect(std::span<const double> c, double a, double b, double fa, double width) {
  while (b - a > width) {
    const double mid = 0.5 * (a + b);
    const double fm = eval(c, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

inline void roots_rec(std::span<const double> c, double lo, double hi, double width,
                      std::vector<double>& out) {
  const Coeffs p = trimmed(c);
  const std::size_t deg = p.size() - 1;
  if (deg == 0) return;
  if (deg == 1) {
    const double r = -p[0] / p[1];
    if (r >= lo && r <= hi) out.push_back(r);
    return;
  }
  // Rolle: between consecutive critical points p is monotone, so each holds at most one root.
  std::vector<double> knots;
  knots.push_back(lo);
  const Coeffs dp = derivative(p);
  roots_rec(dp, lo, hi, width, knots);
  knots.push_back(hi);
  std::sort(knots.begin(), knots.end());
  double fa = eval(p, knots[0]);
  if (fa == 0.0) out.push_back(knots[0]);
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double a = knots[i - 1];
    const double b = knots[i];
    const double fb = eval(p, b);
    if (fb == 0.0) {
      out.push_back(b);
    } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0) && b > a) {
      out.push_back(bisect(p, a, b, fa, width));
    }
    fa = fb;
  }
}

}  // namespace detail

/// Real roots of p in [lo, hi], sorted, isolated to `width`. The zero polynomial yields no roots.
/// Isolation is by derivative recursion: critical points split the interval into monotone
/// brackets, each refined by bisection.
inline std::vector<double> real_roots(std::span<const double> c, double lo, double hi,
                                      double width) {
  std::vector<double> out;
  if (max_abs(c) == 0.0 || !(hi > lo)) return out;
  detail::roots_rec(c, lo, hi, width, out);
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double r : out)
    if (uniq.empty() || r - uniq.back() > width) uniq.push_back(r);
  return uniq;
}

}  // namespace dtk::poly
