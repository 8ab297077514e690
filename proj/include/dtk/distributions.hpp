#pragma once

// Density types (1-D Gaussian, d-dimensional Gaussian, finite mixture, piecewise
// polynomial), sampling, and the distance oracles used throughout the library.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dtk/core.hpp"
#include "dtk/polynomial.hpp"

namespace dtk {

/// Smallest eigenvalue allowed relative to the largest for a covariance matrix.
inline constexpr double kCovarianceFloor = 1e-10;
/// 1-D quadrature ignores the region where both densities are below this value.
inline constexpr double kTailFloor = 1e-12;
inline constexpr double kWeightTolerance = 1e-9;

class Gaussian1D {
 public:
  Gaussian1D(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0))
      throw std::invalid_argument("Gaussian1D: need finite mu and sigma > 0");
  }

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double variance() const { return sigma_ * sigma_; }

  double log_pdf(double x) const {
    const double z = (x - mu_) / sigma_;
    return -0.5 * z * z - std::log(sigma_) - kLogSqrt2Pi;
  }
  double pdf(double x) const { return normal_pdf((x - mu_) / sigma_) / sigma_; }
  double cdf(double x) const { return normal_cdf((x - mu_) / sigma_); }
  /// P(a <= X < b).
  double mass(double a, double b) const { return normal_mass((a - mu_) / sigma_, (b - mu_) / sigma_); }

  friend bool operator==(const Gaussian1D&, const Gaussian1D&) = default;

 private:
  double mu_;
  double sigma_;
};

class GaussianND {
 public:
  GaussianND(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    const auto d = mean_.size();
    if (d < 1) throw std::invalid_argument("GaussianND: dimension must be >= 1");
    if (cov_.rows() != d || cov_.cols() != d) throw DimensionMismatch("GaussianND: cov shape");
    if (!mean_.allFinite() || !cov_.allFinite()) throw std::invalid_argument("GaussianND: non-finite");
    const double scale = cov_.cwiseAbs().maxCoeff();
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("GaussianND: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || lo < kCovarianceFloor * hi)
      throw std::invalid_argument("GaussianND: covariance not positive definite");
    chol_ = cov_.llt().matrixL();
    log_det_ = 2.0 * chol_.diagonal().array().log().sum();
  }

  static GaussianND axis_aligned(const Eigen::VectorXd& mean, const Eigen::VectorXd& variances) {
    if (variances.size() != mean.size()) throw DimensionMismatch("axis_aligned: size");
    return {mean, variances.asDiagonal().toDenseMatrix()};
  }

  static GaussianND standard(int d) { return {Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d)}; }

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::MatrixXd& chol() const { return chol_; }
  double log_det() const { return log_det_; }

  bool is_axis_aligned() const {
    for (Eigen::Index i = 0; i < cov_.rows(); ++i)
      for (Eigen::Index j = 0; j < cov_.cols(); ++j)
        if (i != j && cov_(i, j) != 0.0) return false;
    return true;
  }

  double log_pdf(std::span<const double> x) const {
    if (x.size() != dim()) throw DimensionMismatch("GaussianND::log_pdf: point dimension");
    Eigen::VectorXd diff = Eigen::Map<const Eigen::VectorXd>(x.data(), mean_.size()) - mean_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(diff);
    return -0.5 * diff.squaredNorm() - 0.5 * log_det_ - static_cast<double>(dim()) * kLogSqrt2Pi;
  }
  double pdf(std::span<const double> x) const { return std::exp(log_pdf(x)); }

  friend bool operator==(const GaussianND& a, const GaussianND& b) {
    return a.mean_ == b.mean_ && a.cov_ == b.cov_;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
};

/// Piecewise polynomial on [breakpoints.front(), breakpoints.back()], zero outside.
/// Piece i covers [b_i, b_{i+1}) (the last piece is closed) and its coefficients are in the
/// power basis of the local variable u = (2x - b_i - b_{i+1}) / (b_{i+1} - b_i), u in [-1, 1].
/// May be negative or unnormalized.
class PiecewisePoly {
 public:
  PiecewisePoly(std::vector<double> breakpoints, std::vector<poly::Coeffs> coeffs)
      : breaks_(std::move(breakpoints)), coeffs_(std::move(coeffs)) {
    if (breaks_.size() < 2 || coeffs_.size() + 1 != breaks_.size())
      throw std::invalid_argument("PiecewisePoly: need t >= 1 pieces and t+1 breakpoints");
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
      if (!(breaks_[i + 1] > breaks_[i]) || !std::isfinite(breaks_[i]) || !std::isfinite(breaks_[i + 1]))
        throw std::invalid_argument("PiecewisePoly: breakpoints must be finite and strictly increasing");
    for (auto& c : coeffs_) {
      if (c.empty()) c.push_back(0.0);
      for (double v : c)
        if (!std::isfinite(v)) throw std::invalid_argument("PiecewisePoly: non-finite coefficient");
    }
  }

  std::size_t pieces() const { return coeffs_.size(); }
  std::size_t degree() const {
    std::size_t d = 0;
    for (const auto& c : coeffs_) d = std::max(d, c.size() - 1);
    return d;
  }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<poly::Coeffs>& coeffs() const { return coeffs_; }
  double lo() const { return breaks_.front(); }
  double hi() const { return breaks_.back(); }

  /// Piece index containing x, or npos outside the support.
  std::size_t piece_of(double x) const {
    if (x < breaks_.front() || x > breaks_.back()) return npos;
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - breaks_.begin());
    return i == 0 ? 0 : std::min(i - 1, pieces() - 1);
  }
  double local(std::size_t i, double x) const {
    return (2.0 * x - breaks_[i] - breaks_[i + 1]) / (breaks_[i + 1] - breaks_[i]);
  }
  double operator()(double x) const {
    const std::size_t i = piece_of(x);
    return i == npos ? 0.0 : poly::eval(coeffs_[i], local(i, x));
  }

  /// Exact integral over [a, b] (clipped to the support).
  double integral(double a, double b) const {
    if (!(b > a)) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pieces(); ++i) {
      const double lo = std::max(a, breaks_[i]);
      const double hi = std::min(b, breaks_[i + 1]);
      if (!(hi > lo)) continue;
      const poly::Coeffs anti = poly::antiderivative(coeffs_[i]);
      const double half = 0.5 * (breaks_[i + 1] - breaks_[i]);
      total += half * (poly::eval(anti, local(i, hi)) - poly::eval(anti, local(i, lo)));
    }
    return total;
  }
  double total_mass() const { return integral(lo(), hi()); }

  friend bool operator==(const PiecewisePoly&, const PiecewisePoly&) = default;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<double> breaks_;
  std::vector<poly::Coeffs> coeffs_;
};

class Density;

/// Finite mixture sum_i w_i f_i with w on the probability simplex.
class Mixture {
 public:
  Mixture(std::vector<double> weights, std::vector<Density> components);

  std::size_t size() const { return weights_.size(); }
  std::size_t dim() const;
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Density>& components() const { return components_; }

  friend bool operator==(const Mixture&, const Mixture&);

 private:
  std::vector<double> weights_;
  std::vector<Density> components_;
};

class Density {
 public:
  using Variant = std::variant<Gaussian1D, GaussianND, Mixture, PiecewisePoly>;

  Density(Gaussian1D g) : v_(std::move(g)) {}
  Density(GaussianND g) : v_(std::move(g)) {}
  Density(Mixture m) : v_(std::move(m)) {}
  Density(PiecewisePoly p) : v_(std::move(p)) {}

  const Variant& variant() const { return v_; }
  template <class T>
  bool is() const { return std::holds_alternative<T>(v_); }
  template <class T>
  const T& as() const { return std::get<T>(v_); }

  std::size_t dim() const {
    return std::visit(
        [](const auto& d) -> std::size_t {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, GaussianND> || std::is_same_v<T, Mixture>) return d.dim();
          else return 1;
        },
        v_);
  }

  /// True when the density can be sampled (and used as a Monte Carlo proposal).
  bool samplable() const;
  /// True when the density is a Gaussian or a mixture of Gaussians (log-pdf is well defined).
  bool gaussian_type() const;

  friend bool operator==(const Density& a, const Density& b) { return a.v_ == b.v_; }

 private:
  Variant v_;
};

inline Mixture::Mixture(std::vector<double> weights, std::vector<Density> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.empty() || weights_.size() != components_.size())
    throw std::invalid_argument("Mixture: need k >= 1 weights matching components");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("Mixture: weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightTolerance) throw std::invalid_argument("Mixture: weights must sum to 1");
  const std::size_t d = components_.front().dim();
  for (const auto& c : components_)
    if (c.dim() != d) throw DimensionMismatch("Mixture: component dimensions differ");
}

inline std::size_t Mixture::dim() const { return components_.front().dim(); }

inline bool operator==(const Mixture& a, const Mixture& b) {
  return a.weights_ == b.weights_ && a.components_ == b.components_;
}

inline bool Density::samplable() const {
  if (is<PiecewisePoly>()) return false;
  if (is<Mixture>()) {
    for (const auto& c : as<Mixture>().components())
      if (!c.samplable()) return false;
  }
  return true;
}

inline bool Density::gaussian_type() const {
  if (is<PiecewisePoly>()) return false;
  if (is<Mixture>()) {
    for (const auto& c : as<Mixture>().components())
      if (!c.gaussian_type()) return false;
  }
  return true;
}

/// Ordered i.i.d. draws in R^d, stored row-major. `labels` carries the mixture component
/// of each draw when the sample was generated from a Mixture (empty otherwise).
struct Sample {
  std::size_t dim = 1;
  std::vector<double> data;
  std::uint64_t seed = 0;
  std::vector<int> labels;

  Sample() = default;
  explicit Sample(std::size_t d, std::uint64_t s = 0) : dim(d), seed(s) {}

  static Sample from_1d(std::vector<double> xs, std::uint64_t s = 0) {
    Sample out(1, s);
    out.data = std::move(xs);
    return out;
  }

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  bool empty() const { return data.empty(); }
  std::span<const double> point(std::size_t i) const { return {data.data() + i * dim, dim}; }
  double operator[](std::size_t i) const { return data[i * dim]; }

  void push_back(std::span<const double> x, int label = -1) {
    if (x.size() != dim) throw DimensionMismatch("Sample::push_back: point dimension");
    data.insert(data.end(), x.begin(), x.end());
    if (label >= 0) labels.push_back(label);
  }

  /// Points [begin, end) as a new sample (labels carried along).
  Sample slice(std::size_t begin, std::size_t end) const {
    Sample out(dim, seed);
    end = std::min(end, size());
    if (begin >= end) return out;
    out.data.assign(data.begin() + static_cast<std::ptrdiff_t>(begin * dim),
                    data.begin() + static_cast<std::ptrdiff_t>(end * dim));
    if (!labels.empty())
      out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                        labels.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
  }

  /// Projection onto coordinate j.
  Sample coordinate(std::size_t j) const {
    Sample out(1, seed);
    out.data.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.data.push_back(data[i * dim + j]);
    out.labels = labels;
    return out;
  }

  std::vector<double> sorted_1d() const {
    if (dim != 1) throw DimensionMismatch("Sample::sorted_1d on a multivariate sample");
    std::vector<double> xs = data;
    std::sort(xs.begin(), xs.end());
    return xs;
  }

  friend bool operator==(const Sample&, const Sample&) = default;
};

// ---------------------------------------------------------------------------
// Evaluation

double pdf(const Density& f, std::span<const double> x);
double log_pdf(const Density& f, std::span<const double> x);

inline double pdf(const Density& f, double x) { return pdf(f, std::span<const double>(&x, 1)); }
inline double log_pdf(const Density& f, double x) { return log_pdf(f, std::span<const double>(&x, 1)); }

inline double pdf(const Density& f, std::span<const double> x) {
  if (x.size() != f.dim()) throw DimensionMismatch("pdf: point dimension does not match density");
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian1D>) return d.pdf(x[0]);
        else if constexpr (std::is_same_v<T, GaussianND>) return d.pdf(x);
        else if constexpr (std::is_same_v<T, PiecewisePoly>) return d(x[0]);
        else {
          double s = 0.0;
          for (std::size_t i = 0; i < d.size(); ++i)
            if (d.weights()[i] > 0.0) s += d.weights()[i] * pdf(d.components()[i], x);
          return s;
        }
      },
      f.variant());
}

inline double log_pdf(const Density& f, std::span<const double> x) {
  if (x.size() != f.dim()) throw DimensionMismatch("log_pdf: point dimension does not match density");
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian1D>) return d.log_pdf(x[0]);
        else if constexpr (std::is_same_v<T, GaussianND>) return d.log_pdf(x);
        else if constexpr (std::is_same_v<T, PiecewisePoly>) {
          const double v = d(x[0]);
          return v > 0.0 ? std::log(v) : -kInf;
        } else {
          if (!f.gaussian_type()) {
            const double v = pdf(f, x);
            return v > 0.0 ? std::log(v) : -kInf;
          }
          double acc = -kInf;
          for (std::size_t i = 0; i < d.size(); ++i)
            if (d.weights()[i] > 0.0)
              acc = log_sum_exp(acc, std::log(d.weights()[i]) + log_pdf(d.components()[i], x));
          return acc;
        }
      },
      f.variant());
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

inline void draw_into(const Density& f, Rng& rng, std::span<double> out, int* label) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian1D>) {
          out[0] = d.mu() + d.sigma() * normal(rng);
        } else if constexpr (std::is_same_v<T, GaussianND>) {
          Eigen::VectorXd z(static_cast<Eigen::Index>(d.dim()));
          for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
          Eigen::VectorXd x = d.mean() + d.chol() * z;
          std::copy(x.data(), x.data() + x.size(), out.begin());
        } else if constexpr (std::is_same_v<T, PiecewisePoly>) {
          throw Unsupported("sample: piecewise polynomials cannot be sampled");
        } else {
          // Roll the k-faced die, then draw from the chosen component.
          std::uniform_real_distribution<double> unif(0.0, 1.0);
          const double u = unif(rng);
          std::size_t idx = 0;
          double acc = 0.0;
          for (; idx + 1 < d.size(); ++idx) {
            acc += d.weights()[idx];
            if (u < acc && d.weights()[idx] > 0.0) break;
          }
          while (d.weights()[idx] == 0.0 && idx > 0) --idx;
          if (label) *label = static_cast<int>(idx);
          draw_into(d.components()[idx], rng, out, nullptr);
        }
      },
      f.variant());
}

}  // namespace detail

/// n i.i.d. draws. Mixture draws record their component index in `labels`.
inline Sample sample(const Density& f, std::size_t n, Rng& rng, std::uint64_t seed_tag = 0) {
  if (!f.samplable()) throw Unsupported("sample: piecewise polynomials cannot be sampled");
  Sample s(f.dim(), seed_tag);
  s.data.resize(n * f.dim());
  const bool mix = f.is<Mixture>();
  if (mix) s.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    int label = -1;
    detail::draw_into(f, rng, std::span<double>(s.data.data() + i * f.dim(), f.dim()), &label);
    if (mix) s.labels[i] = label;
  }
  return s;
}

inline Sample sample(const Density& f, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample(f, n, rng, seed);
}

// ---------------------------------------------------------------------------
// KL divergence

/// KL(f || g) = 1/2 (tr(Sg^-1 Sf) - d + (mg-mf)^T Sg^-1 (mg-mf) + ln det Sg - ln det Sf).
inline double kl_gaussians(const GaussianND& f, const GaussianND& g) {
  if (f.dim() != g.dim()) throw DimensionMismatch("kl_gaussians: dimensions differ");
  const auto Lg = g.chol().triangularView<Eigen::Lower>();
  const Eigen::MatrixXd A = Lg.solve(f.chol());
  const Eigen::VectorXd diff = Lg.solve(g.mean() - f.mean());
  const double d = static_cast<double>(f.dim());
  const double kl = 0.5 * (A.squaredNorm() - d + diff.squaredNorm() + g.log_det() - f.log_det());
  return std::max(0.0, kl);
}

inline double kl_gaussians(const Gaussian1D& f, const Gaussian1D& g) {
  const double r = f.variance() / g.variance();
  const double dm = g.mu() - f.mu();
  return std::max(0.0, 0.5 * (r - 1.0 + dm * dm / g.variance() - std::log(r)));
}

// ---------------------------------------------------------------------------
// 1-D flattening: any 1-D density as weighted Gaussians plus weighted piecewise polynomials.

struct Flat1D {
  struct Normal {
    double w, mu, sigma;
  };
  std::vector<Normal> normals;
  std::vector<std::pair<double, PiecewisePoly>> polys;

  bool gaussian_only() const { return polys.empty(); }

  double pdf(double x) const {
    double s = 0.0;
    for (const auto& n : normals) s += n.w * normal_pdf((x - n.mu) / n.sigma) / n.sigma;
    for (const auto& [w, p] : polys) s += w * p(x);
    return s;
  }
  double log_pdf(double x) const {
    if (!gaussian_only()) {
      const double v = pdf(x);
      return v > 0.0 ? std::log(v) : -kInf;
    }
    double acc = -kInf;
    for (const auto& n : normals) {
      const double z = (x - n.mu) / n.sigma;
      acc = log_sum_exp(acc, std::log(n.w) - 0.5 * z * z - std::log(n.sigma) - kLogSqrt2Pi);
    }
    return acc;
  }
  /// Mass on [a, b).
  double mass(double a, double b) const {
    double s = 0.0;
    for (const auto& n : normals) s += n.w * normal_mass((a - n.mu) / n.sigma, (b - n.mu) / n.sigma);
    for (const auto& [w, p] : polys) s += w * p.integral(a, b);
    return s;
  }
};

namespace detail {
inline void flatten_into(const Density& f, double w, Flat1D& out) {
  if (w <= 0.0) return;
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian1D>) out.normals.push_back({w, d.mu(), d.sigma()});
        else if constexpr (std::is_same_v<T, GaussianND>)
          out.normals.push_back({w, d.mean()[0], std::sqrt(d.cov()(0, 0))});
        else if constexpr (std::is_same_v<T, PiecewisePoly>) out.polys.emplace_back(w, d);
        else
          for (std::size_t i = 0; i < d.size(); ++i) flatten_into(d.components()[i], w * d.weights()[i], out);
      },
      f.variant());
}
}  // namespace detail

inline Flat1D flatten_1d(const Density& f) {
  if (f.dim() != 1) throw DimensionMismatch("flatten_1d: density is not one-dimensional");
  Flat1D out;
  detail::flatten_into(f, 1.0, out);
  return out;
}

// ---------------------------------------------------------------------------
// L1 / TV distances

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

struct McEstimate {
  double estimate = 0.0;
  double half_width = 0.0;  // 95% confidence
};

namespace detail {

/// Globally adaptive 31-point Gauss-Kronrod on [a, b]: repeatedly bisects the subinterval with
/// the largest error estimate until the summed estimate meets `tol` or `max_intervals` is hit.
template <class F>
QuadResult adaptive_gk(const F& f, double a, double b, double tol, std::size_t max_intervals = 400) {
  struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto rule = [&](double lo, double hi) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 0, 0.0, &err);
    return Piece{lo, hi, v, err};
  };
  std::priority_queue<Piece> heap;
  heap.push(rule(a, b));
  double value = heap.top().value, error = heap.top().error;
  while (error > tol && heap.size() < max_intervals) {
    const Piece p = heap.top();
    const double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b)) break;
    heap.pop();
    const Piece l = rule(p.a, m), r = rule(m, p.b);
    value += l.value + r.value - p.value;
    error += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum to shed the drift of the running totals.
  value = 0.0;
  error = 0.0;
  for (; !heap.empty(); heap.pop()) {
    value += heap.top().value;
    error += heap.top().error;
  }
  return {value, error};
}

}  // namespace detail

/// Composite adaptive Gauss-Kronrod quadrature of |f - g| for 1-D densities.
/// The domain is truncated where every component falls below kTailFloor; the missed tail mass
/// is added to the error estimate. `resolution` is the absolute error target, spread over the
/// domain in proportion to panel width.
inline QuadResult l1_quadrature_1d(const Density& f, const Density& g, double resolution = 1e-11) {
  if (f.dim() != 1 || g.dim() != 1) throw DimensionMismatch("l1_quadrature_1d: densities must be 1-D");
  if (!(resolution > 0.0)) throw std::invalid_argument("l1_quadrature_1d: resolution must be > 0");
  const Flat1D ff = flatten_1d(f);
  const Flat1D gg = flatten_1d(g);

  double lo = kInf, hi = -kInf;
  std::vector<double> breaks;
  double tail_error = 0.0;
  const std::size_t ncomp = ff.normals.size() + gg.normals.size();
  const double floor = kTailFloor / static_cast<double>(std::max<std::size_t>(ncomp, 1));
  auto add_normals = [&](const Flat1D& fl) {
    for (const auto& n : fl.normals) {
      const double peak = n.w * kInvSqrt2Pi / n.sigma;
      const double z = peak > floor ? std::sqrt(2.0 * std::log(peak / floor)) : 0.0;
      lo = std::min(lo, n.mu - z * n.sigma);
      hi = std::max(hi, n.mu + z * n.sigma);
      tail_error += 2.0 * n.w * normal_sf(z);
      for (double k : {0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0}) {
        if (k > z) break;
        breaks.push_back(n.mu - k * n.sigma);
        breaks.push_back(n.mu + k * n.sigma);
      }
      breaks.push_back(n.mu - z * n.sigma);
      breaks.push_back(n.mu + z * n.sigma);
    }
    for (const auto& [w, p] : fl.polys) {
      lo = std::min(lo, p.lo());
      hi = std::max(hi, p.hi());
      for (std::size_t i = 0; i + 1 < p.breakpoints().size(); ++i) {
        const double a = p.breakpoints()[i], b = p.breakpoints()[i + 1];
        for (int j = 0; j < 8; ++j) breaks.push_back(a + (b - a) * j / 8.0);
      }
      breaks.push_back(p.hi());
    }
  };
  add_normals(ff);
  add_normals(gg);
  if (!(hi > lo)) return {0.0, tail_error};
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto integrand = [&](double x) { return std::abs(ff.pdf(x) - gg.pdf(x)); };
  QuadResult out;
  const double width = hi - lo;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(lo, breaks[i]);
    const double b = std::min(hi, breaks[i + 1]);
    if (!(b > a)) continue;
    const QuadResult r = detail::adaptive_gk(integrand, a, b, resolution * (b - a) / width);
    out.value += r.value;
    out.error += r.error;
  }
  out.error += tail_error;
  return out;
}

/// Symmetrized Monte Carlo estimate of ||f - g||_1:
///   E_{X~f}[(1 - g/f)_+] + E_{Y~g}[(1 - f/g)_+],
/// each term bounded in [0, 1]. When g cannot be sampled (piecewise polynomial) the one-sided
/// estimator E_{X~f}|1 - g/f| is used instead.
inline McEstimate l1_monte_carlo(const Density& f, const Density& g, std::size_t n_mc, Rng& rng) {
  if (f.dim() != g.dim()) throw DimensionMismatch("l1_monte_carlo: dimensions differ");
  if (!f.samplable()) throw Unsupported("l1_monte_carlo: proposal f must be Gaussian or a mixture");
  if (n_mc < 2) throw std::invalid_argument("l1_monte_carlo: need n_mc >= 2");
  const bool log_ok = f.gaussian_type() && g.gaussian_type();
  auto ratio = [&](const Density& num, const Density& den, std::span<const double> x) {
    if (log_ok) return std::exp(log_pdf(num, x) - log_pdf(den, x));
    return pdf(num, x) / pdf(den, x);
  };
  auto sided = [&](const Density& p, const Density& q, bool positive_part) {
    const Sample s = sample(p, n_mc, rng);
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double r = 1.0 - ratio(q, p, s.point(i));
      const double v = positive_part ? std::max(0.0, r) : std::abs(r);
      sum += v;
      sq += v * v;
    }
    const double n = static_cast<double>(n_mc);
    const double mean = sum / n;
    const double var = std::max(0.0, (sq / n - mean * mean) * n / (n - 1.0));
    return std::pair{mean, var / n};
  };
  if (!g.samplable()) {
    auto [m, v] = sided(f, g, false);
    return {m, 1.96 * std::sqrt(v)};
  }
  auto [mf, vf] = sided(f, g, true);
  auto [mg, vg] = sided(g, f, true);
  return {mf + mg, 1.96 * std::sqrt(vf + vg)};
}

/// Exact TV between N(mu1, I) and N(mu2, I): 2 Phi(||mu1 - mu2|| / 2) - 1.
inline double tv_identity_cov(std::span<const double> mu1, std::span<const double> mu2) {
  if (mu1.size() != mu2.size()) throw DimensionMismatch("tv_identity_cov: dimensions differ");
  double sq = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) sq += (mu1[i] - mu2[i]) * (mu1[i] - mu2[i]);
  return 2.0 * normal_cdf(0.5 * std::sqrt(sq)) - 1.0;
}

inline double tv_identity_cov(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2) {
  return tv_identity_cov(std::span<const double>(mu1.data(), static_cast<std::size_t>(mu1.size())),
                         std::span<const double>(mu2.data(), static_cast<std::size_t>(mu2.size())));
}

/// ||f - g||_1 by the best available route: quadrature in 1-D, Monte Carlo otherwise.
inline double l1_distance(const Density& f, const Density& g, Rng* rng = nullptr,
                          std::size_t n_mc = 200000) {
  if (f.dim() == 1 && g.dim() == 1) return l1_quadrature_1d(f, g).value;
  if (!rng) throw std::invalid_argument("l1_distance: multivariate densities need a generator");
  return l1_monte_carlo(f, g, n_mc, *rng).estimate;
}

}  // namespace dtk
