#pragma once

// Sets, set systems and measures: Scheffe and Yatracos sets, an exact interval-union form of
// 1-D Scheffe sets, empirical measures, A-distances and a brute-force VC-dimension engine.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dtk/distributions.hpp"
#include "dtk/polynomial.hpp"

namespace dtk {

struct Interval {
  double lo;
  double hi;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Sorted, disjoint, merged union of closed-open intervals [lo, hi); ends may be infinite.
class IntervalUnion {
 public:
  IntervalUnion() = default;
  explicit IntervalUnion(std::vector<Interval> parts) : parts_(std::move(parts)) { normalize(); }

  static IntervalUnion whole() { return IntervalUnion({{-kInf, kInf}}); }
  static IntervalUnion empty_set() { return {}; }

  const std::vector<Interval>& intervals() const { return parts_; }
  std::size_t size() const { return parts_.size(); }
  bool empty() const { return parts_.empty(); }

  bool contains(double x) const {
    auto it = std::upper_bound(parts_.begin(), parts_.end(), x,
                               [](double v, const Interval& iv) { return v < iv.lo; });
    if (it == parts_.begin()) return false;
    --it;
    return x >= it->lo && (x < it->hi || (it->hi == kInf));
  }
  bool contains(std::span<const double> x) const { return contains(x[0]); }

  IntervalUnion complement() const {
    std::vector<Interval> out;
    double cur = -kInf;
    for (const auto& iv : parts_) {
      if (iv.lo > cur) out.push_back({cur, iv.lo});
      cur = iv.hi;
    }
    if (cur < kInf) out.push_back({cur, kInf});
    return IntervalUnion(std::move(out));
  }

  friend bool operator==(const IntervalUnion&, const IntervalUnion&) = default;

 private:
  void normalize() {
    std::erase_if(parts_, [](const Interval& iv) { return !(iv.hi > iv.lo); });
    std::sort(parts_.begin(), parts_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& iv : parts_) {
      if (!merged.empty() && iv.lo <= merged.back().hi) merged.back().hi = std::max(merged.back().hi, iv.hi);
      else merged.push_back(iv);
    }
    parts_ = std::move(merged);
  }

  std::vector<Interval> parts_;
};

/// Membership-testable subset of R^dim.
struct SetOracle {
  std::function<bool(std::span<const double>)> membership;
  std::size_t dim = 1;
  std::string descriptor;

  bool contains(std::span<const double> x) const { return membership(x); }
  bool contains(double x) const { return membership(std::span<const double>(&x, 1)); }
};

// ---------------------------------------------------------------------------
// Empirical measure

template <class Set>
double empirical_measure(const Sample& s, const Set& set) {
  if (s.empty()) throw std::invalid_argument("empirical_measure: empty sample");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (set.contains(s.point(i))) ++hits;
  return static_cast<double>(hits) / static_cast<double>(s.size());
}

/// Count of sorted points falling in an interval union.
inline std::size_t count_in(std::span<const double> sorted, const IntervalUnion& u) {
  std::size_t n = 0;
  for (const auto& iv : u.intervals()) {
    auto a = std::lower_bound(sorted.begin(), sorted.end(), iv.lo);
    auto b = iv.hi == kInf ? sorted.end() : std::lower_bound(sorted.begin(), sorted.end(), iv.hi);
    if (b > a) n += static_cast<std::size_t>(b - a);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Scheffe sets

/// {x : f(x) >= g(x)}; ties are members. Gaussian-type pairs are compared in the log domain.
inline SetOracle scheffe_set(const Density& f, const Density& g, std::string descriptor = "scheffe(f,g)") {
  if (f.dim() != g.dim()) throw DimensionMismatch("scheffe_set: dimensions differ");
  const bool use_log = f.gaussian_type() && g.gaussian_type();
  return SetOracle{[f, g, use_log](std::span<const double> x) {
                     if (use_log) return log_pdf(f, x) >= log_pdf(g, x);
                     return pdf(f, x) >= pdf(g, x);
                   },
                   f.dim(), std::move(descriptor)};
}

namespace detail {

/// Builds the union of cells where `sign_at(mid) >= 0`, given sorted boundary points.
template <class SignFn>
IntervalUnion union_from_roots(std::vector<double> roots, SignFn sign_at) {
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  std::vector<double> cuts;
  cuts.push_back(-kInf);
  cuts.insert(cuts.end(), roots.begin(), roots.end());
  cuts.push_back(kInf);
  std::vector<Interval> parts;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    double mid;
    if (a == -kInf && b == kInf) mid = 0.0;
    else if (a == -kInf) mid = b - 1.0 - std::abs(b);
    else if (b == kInf) mid = a + 1.0 + std::abs(a);
    else mid = 0.5 * (a + b);
    if (sign_at(mid)) parts.push_back({a, b});
  }
  return IntervalUnion(std::move(parts));
}

/// Scheffe set of two Gaussians: the boundary solves a quadratic.
inline IntervalUnion scheffe_gaussians(double w1, double m1, double s1, double w2, double m2, double s2) {
  // log(w1 N1) - log(w2 N2) = A x^2 + B x + C
  const double A = 0.5 / (s2 * s2) - 0.5 / (s1 * s1);
  const double B = m1 / (s1 * s1) - m2 / (s2 * s2);
  const double C = 0.5 * m2 * m2 / (s2 * s2) - 0.5 * m1 * m1 / (s1 * s1) + std::log(s2 / s1) +
                   std::log(w1 / w2);
  std::vector<double> roots;
  if (A == 0.0) {
    if (B == 0.0) return C >= 0.0 ? IntervalUnion::whole() : IntervalUnion::empty_set();
    roots.push_back(-C / B);
    if (B > 0.0) return IntervalUnion({{roots[0], kInf}});
    return IntervalUnion({{-kInf, roots[0]}});
  }
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return A > 0.0 ? IntervalUnion::whole() : IntervalUnion::empty_set();
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B == 0.0 ? 1.0 : B));
  double r1 = q / A;
  double r2 = q != 0.0 ? C / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  if (A > 0.0) return IntervalUnion({{-kInf, r1}, {r2, kInf}});
  if (r2 == r1) return IntervalUnion::empty_set();
  return IntervalUnion({{r1, r2}});
}

/// Sign structure of p - q for piecewise polynomials: exact per-piece root isolation.
inline IntervalUnion scheffe_pwpoly(const Flat1D& f, const Flat1D& g) {
  std::vector<double> cuts;
  for (const auto* fl : {&f, &g})
    for (const auto& [w, p] : fl->polys) cuts.insert(cuts.end(), p.breakpoints().begin(), p.breakpoints().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  if (cuts.empty()) return IntervalUnion::whole();

  auto local_diff = [&](double a, double b) {
    // p - q on [a, b] in the local variable v = (2x - a - b)/(b - a).
    poly::Coeffs acc{0.0};
    for (int side = 0; side < 2; ++side) {
      const Flat1D& fl = side == 0 ? f : g;
      const double sgn = side == 0 ? 1.0 : -1.0;
      for (const auto& [w, p] : fl.polys) {
        const std::size_t i = p.piece_of(0.5 * (a + b));
        if (i == PiecewisePoly::npos) continue;
        const double pa = p.breakpoints()[i], pb = p.breakpoints()[i + 1];
        // u = alpha v + beta maps the cell onto the piece's local variable.
        const double alpha = (b - a) / (pb - pa);
        const double beta = (a + b - pa - pb) / (pb - pa);
        acc = poly::add(acc, poly::compose_affine(p.coeffs()[i], alpha, beta), sgn * w);
      }
    }
    return acc;
  };

  std::vector<Interval> parts;
  parts.push_back({-kInf, cuts.front()});  // both vanish: tie
  parts.push_back({cuts.back(), kInf});
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    poly::Coeffs d = local_diff(a, b);
    double scale = 0.0;
    for (const auto* fl : {&f, &g})
      for (const auto& [w, p] : fl->polys) {
        const std::size_t i = p.piece_of(0.5 * (a + b));
        if (i != PiecewisePoly::npos) scale = std::max(scale, w * poly::max_abs(p.coeffs()[i]));
      }
    if (poly::max_abs(d) <= 1e-14 * scale || poly::max_abs(d) == 0.0) {
      parts.push_back({a, b});  // coincident on this cell
      continue;
    }
    std::vector<double> roots = poly::real_roots(d, -1.0, 1.0, 2e-12);
    std::vector<double> knots{-1.0};
    for (double r : roots)
      if (r > -1.0 && r < 1.0) knots.push_back(r);
    knots.push_back(1.0);
    auto to_x = [&](double v) { return 0.5 * (a + b) + 0.5 * (b - a) * v; };
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      const double mid = 0.5 * (knots[k] + knots[k + 1]);
      if (poly::eval(d, mid) >= 0.0) parts.push_back({k == 0 ? a : to_x(knots[k]), k + 2 == knots.size() ? b : to_x(knots[k + 1])});
    }
  }
  return IntervalUnion(std::move(parts));
}

/// Numeric path for mixed pairs: scan a pair-adapted grid, refine each sign change by bisection.
inline IntervalUnion scheffe_scan(const Flat1D& f, const Flat1D& g) {
  const bool use_log = f.gaussian_only() && g.gaussian_only();
  auto diff = [&](double x) { return use_log ? f.log_pdf(x) - g.log_pdf(x) : f.pdf(x) - g.pdf(x); };
  static constexpr double kOffsets[] = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.5, 8.5, 11.0};
  std::vector<double> grid;
  for (const auto* fl : {&f, &g}) {
    for (const auto& n : fl->normals)
      for (double t : kOffsets) {
        grid.push_back(n.mu - t * n.sigma);
        grid.push_back(n.mu + t * n.sigma);
      }
    for (const auto& [w, p] : fl->polys)
      for (std::size_t i = 0; i + 1 < p.breakpoints().size(); ++i) {
        const double a = p.breakpoints()[i], b = p.breakpoints()[i + 1];
        for (int j = 0; j < 48; ++j) grid.push_back(a + (b - a) * j / 48.0);
        grid.push_back(b);
      }
  }
  if (grid.empty()) return IntervalUnion::whole();
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<double> roots;
  double xa = grid[0];
  double da = diff(xa);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double xb = grid[i];
    const double db = diff(xb);
    if ((da >= 0.0) != (db >= 0.0)) {
      double a = xa, b = xb, fa = da;
      const double width = 1e-12 * std::max(1.0, std::abs(a) + std::abs(b));
      while (b - a > width) {
        const double m = 0.5 * (a + b);
        const double fm = diff(m);
        if ((fm >= 0.0) == (fa >= 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    xa = xb;
    da = db;
  }
  const double first = grid.front(), last = grid.back();
  return union_from_roots(roots, [&](double x) { return diff(std::clamp(x, first, last)) >= 0.0; });
}

}  // namespace detail

/// Exact interval-union form of {x : f(x) >= g(x)} for 1-D densities.
/// Gaussian pairs use the quadratic boundary; piecewise-polynomial pairs use per-piece root
/// isolation; other 1-D pairs (mixtures) use a scan-and-bisect over a grid adapted to the
/// components, which resolves every root not closer than the local grid spacing.
inline IntervalUnion scheffe_intervals_1d(const Flat1D& f, const Flat1D& g) {
  if (f.polys.empty() && g.polys.empty() && f.normals.size() == 1 && g.normals.size() == 1) {
    const auto& a = f.normals[0];
    const auto& b = g.normals[0];
    return detail::scheffe_gaussians(a.w, a.mu, a.sigma, b.w, b.mu, b.sigma);
  }
  if (f.normals.empty() && g.normals.empty()) return detail::scheffe_pwpoly(f, g);
  return detail::scheffe_scan(f, g);
}

inline IntervalUnion scheffe_intervals_1d(const Density& f, const Density& g) {
  if (f.dim() != 1 || g.dim() != 1) throw DimensionMismatch("scheffe_intervals_1d: densities must be 1-D");
  return scheffe_intervals_1d(flatten_1d(f), flatten_1d(g));
}

// ---------------------------------------------------------------------------
// Measures

/// f(A) for an interval union: exact for Gaussians, Gaussian mixtures and piecewise polynomials.
inline double measure_of(const Density& f, const IntervalUnion& a) {
  const Flat1D fl = flatten_1d(f);
  double s = 0.0;
  for (const auto& iv : a.intervals()) s += fl.mass(iv.lo, iv.hi);
  return s;
}

inline double measure_of(const Flat1D& fl, const IntervalUnion& a) {
  double s = 0.0;
  for (const auto& iv : a.intervals()) s += fl.mass(iv.lo, iv.hi);
  return s;
}

/// f(A) for a general set: Monte Carlo with n_mc draws from f.
inline double measure_of(const Density& f, const SetOracle& a, std::size_t n_mc, Rng& rng) {
  if (a.dim != f.dim()) throw DimensionMismatch("measure_of: dimensions differ");
  return empirical_measure(sample(f, n_mc, rng), a);
}

/// sup over the system of |p(A) - q(A)|; an empty system gives 0.
template <class Set, class P, class Q>
double a_distance(P&& p_measure, Q&& q_measure, std::span<const Set> system) {
  double best = 0.0;
  for (const auto& a : system) best = std::max(best, std::abs(p_measure(a) - q_measure(a)));
  return best;
}

template <class Set, class P, class Q>
double a_distance(P&& p_measure, Q&& q_measure, const std::vector<Set>& system) {
  return a_distance<Set>(std::forward<P>(p_measure), std::forward<Q>(q_measure), std::span<const Set>(system));
}

// ---------------------------------------------------------------------------
// Yatracos classes

/// All M(M-1) ordered Scheffe sets {f_i >= f_j}, i != j, as interval unions (1-D).
inline std::vector<IntervalUnion> yatracos_intervals(std::span<const Density> fam) {
  std::vector<Flat1D> flat;
  for (const auto& f : fam) flat.push_back(flatten_1d(f));
  std::vector<IntervalUnion> out;
  for (std::size_t i = 0; i < fam.size(); ++i)
    for (std::size_t j = 0; j < fam.size(); ++j)
      if (i != j) out.push_back(scheffe_intervals_1d(flat[i], flat[j]));
  return out;
}

inline std::vector<SetOracle> yatracos_class(std::span<const Density> fam) {
  std::vector<SetOracle> out;
  for (std::size_t i = 0; i < fam.size(); ++i)
    for (std::size_t j = 0; j < fam.size(); ++j)
      if (i != j)
        out.push_back(scheffe_set(fam[i], fam[j], "scheffe(" + std::to_string(i) + "," + std::to_string(j) + ")"));
  return out;
}

// ---------------------------------------------------------------------------
// VC dimension

inline constexpr std::size_t kDefaultVcPointCap = 15;

/// Largest s such that some s-subset of `points` is shattered by the traces of `system`.
/// Exhaustive over subsets by increasing size; stops at the first size with no shattered set.
template <class Set>
std::size_t vc_dimension_bruteforce(const std::vector<std::vector<double>>& points, std::span<const Set> system,
                                    std::size_t cap = kDefaultVcPointCap) {
  const std::size_t n = points.size();
  if (n > cap || n > 30) throw CapExceeded("vc_dimension_bruteforce: " + std::to_string(n) + " points exceed cap " + std::to_string(cap));
  if (system.empty() || n == 0) return 0;
  std::vector<std::uint32_t> traces;
  for (const auto& s : system) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (s.contains(std::span<const double>(points[i]))) mask |= 1u << i;
    traces.push_back(mask);
  }
  std::sort(traces.begin(), traces.end());
  traces.erase(std::unique(traces.begin(), traces.end()), traces.end());

  std::vector<std::uint32_t> stamp(std::size_t{1} << n, 0);
  std::uint32_t epoch = 0;
  auto shattered = [&](std::uint32_t subset, std::size_t s) {
    ++epoch;
    std::size_t distinct = 0;
    for (std::uint32_t t : traces) {
      const std::uint32_t p = t & subset;
      if (stamp[p] != epoch) {
        stamp[p] = epoch;
        if (++distinct == (std::size_t{1} << s)) return true;
      }
    }
    return false;
  };

  std::size_t best = 0;
  for (std::size_t s = 1; s <= n; ++s) {
    if (traces.size() < (std::size_t{1} << s)) break;
    bool found = false;
    // Gosper's hack over all s-subsets of n bits.
    std::uint64_t sub = (std::uint64_t{1} << s) - 1;
    const std::uint64_t limit = std::uint64_t{1} << n;
    while (sub < limit) {
      if (shattered(static_cast<std::uint32_t>(sub), s)) {
        found = true;
        break;
      }
      const std::uint64_t c = sub & (~sub + 1);
      const std::uint64_t r = sub + c;
      sub = (((r ^ sub) >> 2) / c) | r;
    }
    if (!found) break;
    best = s;
  }
  return best;
}

template <class Set>
std::size_t vc_dimension_bruteforce(const std::vector<std::vector<double>>& points, const std::vector<Set>& system,
                                    std::size_t cap = kDefaultVcPointCap) {
  return vc_dimension_bruteforce<Set>(points, std::span<const Set>(system), cap);
}

/// Every union of at most k intervals, as distinguished by the given 1-D points: endpoints range
/// over the gaps between sorted points, which realizes every possible trace.
inline std::vector<IntervalUnion> unions_of_intervals(std::vector<double> xs, std::size_t k) {
  std::sort(xs.begin(), xs.end());
  std::vector<double> gaps;
  gaps.push_back(xs.empty() ? 0.0 : xs.front() - 1.0);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) gaps.push_back(0.5 * (xs[i] + xs[i + 1]));
  if (!xs.empty()) gaps.push_back(xs.back() + 1.0);
  std::vector<IntervalUnion> out;
  out.push_back(IntervalUnion::empty_set());
  std::vector<double> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (!chosen.empty() && chosen.size() % 2 == 0) {
      std::vector<Interval> parts;
      for (std::size_t i = 0; i < chosen.size(); i += 2) parts.push_back({chosen[i], chosen[i + 1]});
      out.emplace_back(std::move(parts));
    }
    if (chosen.size() == 2 * k) return;
    for (std::size_t g = start; g < gaps.size(); ++g) {
      chosen.push_back(gaps[g]);
      rec(g + 1);
      chosen.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace dtk
