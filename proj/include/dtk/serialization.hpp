#pragma once

// JSON forms of densities, interval unions, selection reports, encodings and samples.

#include <json.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtk/compression.hpp"
#include "dtk/distributions.hpp"
#include "dtk/selection.hpp"
#include "dtk/setsystems.hpp"

namespace dtk {

using json = nlohmann::json;

/// Malformed or out-of-schema JSON input.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline const json& field(const json& j, const char* key, const char* ctx) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string(ctx) + ": missing field '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const char* ctx) {
  if (!j.is_number()) throw SchemaError(std::string(ctx) + ": expected a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const char* ctx) {
  if (!j.is_array()) throw SchemaError(std::string(ctx) + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, ctx));
  return out;
}

/// Wraps constructor validation failures as schema errors.
template <class F>
auto build(const char* ctx, F&& f) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string(ctx) + ": " + e.what());
  }
}

inline json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

inline double bound_from_json(const json& j) {
  if (j.is_string()) {
    if (j == "inf") return kInf;
    if (j == "-inf") return -kInf;
    throw SchemaError("interval bound: unknown sentinel " + j.get<std::string>());
  }
  return number(j, "interval bound");
}

}  // namespace detail

inline json to_json(const Density& f) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian1D>) {
          return {{"type", "gaussian1d"}, {"mu", d.mu()}, {"sigma", d.sigma()}};
        } else if constexpr (std::is_same_v<T, GaussianND>) {
          const auto n = d.mean().size();
          json mean = json::array(), cov = json::array();
          for (Eigen::Index i = 0; i < n; ++i) {
            mean.push_back(d.mean()[i]);
            json row = json::array();
            for (Eigen::Index j = 0; j < n; ++j) row.push_back(d.cov()(i, j));
            cov.push_back(std::move(row));
          }
          return {{"type", "gaussiannd"}, {"mean", mean}, {"cov", cov}};
        } else if constexpr (std::is_same_v<T, Mixture>) {
          json comps = json::array();
          for (const auto& c : d.components()) comps.push_back(to_json(c));
          return {{"type", "mixture"}, {"weights", d.weights()}, {"components", comps}};
        } else {
          return {{"type", "pwpoly"}, {"breakpoints", d.breakpoints()}, {"coeffs", d.coeffs()}};
        }
      },
      f.variant());
}

inline Density density_from_json(const json& j) {
  const json& type = detail::field(j, "type", "density");
  if (!type.is_string()) throw SchemaError("density: 'type' must be a string");
  const std::string t = type.get<std::string>();
  if (t == "gaussian1d") {
    const double mu = detail::number(detail::field(j, "mu", "gaussian1d"), "gaussian1d.mu");
    const double sigma = detail::number(detail::field(j, "sigma", "gaussian1d"), "gaussian1d.sigma");
    return detail::build("gaussian1d", [&] { return Density(Gaussian1D(mu, sigma)); });
  }
  if (t == "gaussiannd") {
    const auto mean = detail::numbers(detail::field(j, "mean", "gaussiannd"), "gaussiannd.mean");
    const json& cov = detail::field(j, "cov", "gaussiannd");
    const auto n = static_cast<Eigen::Index>(mean.size());
    if (!cov.is_array() || static_cast<Eigen::Index>(cov.size()) != n)
      throw SchemaError("gaussiannd: cov must be a square matrix matching the mean");
    Eigen::VectorXd mu(n);
    Eigen::MatrixXd s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = mean[static_cast<std::size_t>(i)];
      const auto row = detail::numbers(cov[static_cast<std::size_t>(i)], "gaussiannd.cov");
      if (static_cast<Eigen::Index>(row.size()) != n) throw SchemaError("gaussiannd: cov must be square");
      for (Eigen::Index k = 0; k < n; ++k) s(i, k) = row[static_cast<std::size_t>(k)];
    }
    return detail::build("gaussiannd", [&] { return Density(GaussianND(mu, s)); });
  }
  if (t == "mixture") {
    auto w = detail::numbers(detail::field(j, "weights", "mixture"), "mixture.weights");
    const json& cs = detail::field(j, "components", "mixture");
    if (!cs.is_array()) throw SchemaError("mixture: components must be an array");
    std::vector<Density> comps;
    for (const auto& c : cs) comps.push_back(density_from_json(c));
    return detail::build("mixture", [&] { return Density(Mixture(std::move(w), std::move(comps))); });
  }
  if (t == "pwpoly") {
    auto br = detail::numbers(detail::field(j, "breakpoints", "pwpoly"), "pwpoly.breakpoints");
    const json& cs = detail::field(j, "coeffs", "pwpoly");
    if (!cs.is_array()) throw SchemaError("pwpoly: coeffs must be an array of arrays");
    std::vector<poly::Coeffs> coeffs;
    for (const auto& c : cs) coeffs.push_back(detail::numbers(c, "pwpoly.coeffs"));
    return detail::build("pwpoly", [&] { return Density(PiecewisePoly(std::move(br), std::move(coeffs))); });
  }
  throw SchemaError("density: unknown type '" + t + "'");
}

inline json to_json(const IntervalUnion& u) {
  json out = json::array();
  for (const auto& iv : u.intervals()) out.push_back({detail::bound_to_json(iv.lo), detail::bound_to_json(iv.hi)});
  return out;
}

inline IntervalUnion interval_union_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("interval union: expected an array of [lo, hi] pairs");
  std::vector<Interval> parts;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw SchemaError("interval union: each interval is a [lo, hi] pair");
    parts.push_back({detail::bound_from_json(p[0]), detail::bound_from_json(p[1])});
  }
  return IntervalUnion(std::move(parts));
}

inline json to_json(const SelectionReport& r) {
  json evaluated = json::array();
  for (bool b : r.evaluated) evaluated.push_back(b);
  return {{"winner", r.winner},       {"candidates", r.candidates}, {"samples_used", r.samples_used},
          {"wins", r.wins},           {"evaluated", evaluated},     {"duel_matrix", r.stats},
          {"scores", r.scores},       {"duels", r.duels},           {"exact_measures", r.exact_measures},
          {"warnings", r.warnings}};
}

inline json to_json(const Encoding& e) {
  std::string bits;
  for (bool b : e.bits) bits.push_back(b ? '1' : '0');
  return {{"points", e.points}, {"bits", bits}, {"source_indices", e.source_indices}};
}

inline Encoding encoding_from_json(const json& j) {
  Encoding e;
  const json& pts = detail::field(j, "points", "encoding");
  if (!pts.is_array()) throw SchemaError("encoding: points must be an array of arrays");
  for (const auto& p : pts) e.points.push_back(detail::numbers(p, "encoding.points"));
  const json& bits = detail::field(j, "bits", "encoding");
  if (!bits.is_string()) throw SchemaError("encoding: bits must be a 0/1 string");
  for (char c : bits.get<std::string>()) {
    if (c != '0' && c != '1') throw SchemaError("encoding: bits must be a 0/1 string");
    e.bits.push_back(c == '1');
  }
  if (j.contains("source_indices")) {
    const json& si = j.at("source_indices");
    if (!si.is_array()) throw SchemaError("encoding: source_indices must be an array");
    for (const auto& v : si) {
      if (!v.is_number_unsigned()) throw SchemaError("encoding: source_indices must be nonnegative integers");
      e.source_indices.push_back(v.get<std::size_t>());
    }
  }
  return e;
}

/// Samples as arrays of numbers (1-D) or arrays of points.
inline Sample sample_from_json(const json& j, std::uint64_t seed = 0) {
  if (!j.is_array() || j.empty()) throw SchemaError("sample: expected a non-empty array");
  if (j.front().is_number()) return Sample::from_1d(detail::numbers(j, "sample"), seed);
  const auto first = detail::numbers(j.front(), "sample");
  Sample s(first.size(), seed);
  for (const auto& p : j) {
    const auto x = detail::numbers(p, "sample");
    if (x.size() != first.size()) throw SchemaError("sample: points differ in dimension");
    s.push_back(x);
  }
  return s;
}

}  // namespace dtk
