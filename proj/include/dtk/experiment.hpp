#pragma once

// Config-driven experiments behind the command line: seeded trials on a worker pool, sweeps,
// JSON reports and CSV tables.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dtk/compression.hpp"
#include "dtk/core.hpp"
#include "dtk/distributions.hpp"
#include "dtk/lowerbounds.hpp"
#include "dtk/mixtures.hpp"
#include "dtk/selection.hpp"
#include "dtk/serialization.hpp"
#include "dtk/setsystems.hpp"

namespace dtk::exp {

inline constexpr const char* kCsvHeader = "grid_value,trial,seed,error,ci_half_width,wall_ms,flags";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"tournament", "yatracos", "learn-mixture", "compress-learn",
                                          "lower-bound", "vc-dim",    "sweep"};
  return c;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  bool check = false;
};

struct ExperimentOutput {
  json report;
  std::string csv;  // empty for commands without a trial table
  std::size_t violations = 0;
};

/// Typed reader over a JSON object: records defaults into `resolved` and rejects unknown keys.
class Config {
 public:
  Config(json j, std::string ctx) : in_(std::move(j)), ctx_(std::move(ctx)) {
    if (in_.is_null()) in_ = json::object();
    if (!in_.is_object()) throw SchemaError(ctx_ + ": config must be a JSON object");
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  double real(const std::string& key, double def, double lo = -kInf, double hi = kInf) {
    double v = def;
    if (const json* p = take(key)) {
      if (!p->is_number()) fail(key, "a number");
      v = p->get<double>();
    }
    if (!(v >= lo && v <= hi))
      throw SchemaError(ctx_ + ": '" + key + "' = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out_[key] = v;
    return v;
  }

  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    std::uint64_t v = def;
    if (const json* p = take(key)) v = integral(key, *p);
    out_[key] = v;
    return v;
  }

  std::size_t count(const std::string& key, std::size_t def, std::size_t lo = 0) {
    const auto v = static_cast<std::size_t>(u64(key, def));
    if (v < lo) throw SchemaError(ctx_ + ": '" + key + "' must be at least " + std::to_string(lo));
    return v;
  }

  bool flag(const std::string& key, bool def) {
    bool v = def;
    if (const json* p = take(key)) {
      if (!p->is_boolean()) fail(key, "a boolean");
      v = p->get<bool>();
    }
    out_[key] = v;
    return v;
  }

  std::string choice(const std::string& key, const std::string& def, std::initializer_list<const char*> allowed) {
    std::string v = def;
    if (const json* p = take(key)) {
      if (!p->is_string()) fail(key, "a string");
      v = p->get<std::string>();
    }
    bool ok = false;
    std::string list;
    for (const char* a : allowed) {
      ok = ok || v == a;
      list += std::string(list.empty() ? "" : ", ") + a;
    }
    if (!ok) throw SchemaError(ctx_ + ": '" + key + "' must be one of " + list + " (got '" + v + "')");
    out_[key] = v;
    return v;
  }

  Density density(const std::string& key, const Density& def) {
    Density v = def;
    if (const json* p = take(key)) v = density_from_json(*p);
    out_[key] = to_json(v);
    return v;
  }

  std::vector<Density> densities(const std::string& key, const std::vector<Density>& def) {
    std::vector<Density> v = def;
    if (const json* p = take(key)) {
      if (!p->is_array() || p->empty()) fail(key, "a non-empty array of densities");
      v.clear();
      for (const auto& d : *p) v.push_back(density_from_json(d));
    }
    json arr = json::array();
    for (const auto& d : v) arr.push_back(to_json(d));
    out_[key] = arr;
    return v;
  }

  std::vector<double> reals(const std::string& key, const std::vector<double>& def) {
    std::vector<double> v = def;
    if (const json* p = take(key)) v = dtk::detail::numbers(*p, (ctx_ + "." + key).c_str());
    out_[key] = v;
    return v;
  }

  /// Raw value, recorded verbatim; nullptr when absent.
  const json* raw(const std::string& key) {
    const json* p = take(key);
    if (p) out_[key] = *p;
    return p;
  }

  void finish() const {
    for (const auto& [k, v] : in_.items())
      if (!used_.count(k)) throw SchemaError(ctx_ + ": unknown key '" + k + "'");
  }

  const json& resolved() const { return out_; }

 private:
  const json* take(const std::string& key) {
    used_.insert(key);
    return in_.contains(key) ? &in_.at(key) : nullptr;
  }
  [[noreturn]] void fail(const std::string& key, const char* what) const {
    throw SchemaError(ctx_ + ": '" + key + "' must be " + what);
  }
  std::uint64_t integral(const std::string& key, const json& p) const {
    if (p.is_number_unsigned()) return p.get<std::uint64_t>();
    if (p.is_number_integer() && p.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(p.get<std::int64_t>());
    if (p.is_number_float()) {
      const double d = p.get<double>();
      if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    fail(key, "a nonnegative integer");
  }

  json in_;
  std::string ctx_;
  json out_ = json::object();
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Trials

struct TrialRow {
  double grid_value = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double error = std::nan("");
  double ci_half_width = 0.0;
  double wall_ms = 0.0;
  std::string flags;
  bool miss = false;  // guarantee not met in this trial
  json detail = json::object();
};

/// A configured experiment: one call of `trial` per seed.
struct Prepared {
  json setup = json::object();
  double grid_value = 0.0;
  /// Failure probability the guarantee allows; negative for a deterministic guarantee.
  double delta = -1.0;
  std::function<TrialRow(std::uint64_t)> trial;
};

/// Failures tolerated out of T trials at level delta: T delta + 3 sqrt(T delta (1 - delta)).
inline std::size_t allowed_failures(std::size_t trials, double delta) {
  if (delta < 0.0) return 0;
  const double t = static_cast<double>(trials);
  return static_cast<std::size_t>(std::floor(t * delta + 3.0 * std::sqrt(t * delta * (1.0 - delta)) + 1e-9));
}

/// Runs f(0..n-1) on `workers` threads. Results land at their index, so the output does not
/// depend on scheduling; the exception of the lowest failing index is rethrown.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, std::size_t workers, F&& f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Least-squares slope of log y against log x over points with x, y > 0; NaN with fewer than two.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0 && y[i] > 0 && std::isfinite(y[i])) p.emplace_back(std::log(x[i]), std::log(y[i]));
  if (p.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  for (auto [a, b] : p) mx += a, my += b;
  mx /= static_cast<double>(p.size());
  my /= static_cast<double>(p.size());
  double sxy = 0, sxx = 0;
  for (auto [a, b] : p) sxy += (a - mx) * (b - my), sxx += (a - mx) * (a - mx);
  return sxx > 0 ? sxy / sxx : std::nan("");
}

inline std::string csv_row(const TrialRow& r) {
  return format_double(r.grid_value) + "," + std::to_string(r.trial) + "," + std::to_string(r.seed) + "," +
         format_double(r.error) + "," + format_double(r.ci_half_width) + "," + format_double(r.wall_ms) + "," + r.flags;
}

inline json row_json(const TrialRow& r) {
  json j = {{"trial", r.trial}, {"seed", r.seed}, {"error", r.error}, {"ci_half_width", r.ci_half_width}, {"flags", r.flags}};
  for (const auto& [k, v] : r.detail.items()) j[k] = v;
  return j;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiment setups

namespace detail {

inline double l1_to_target(const Density& target, const Density& f, Rng& rng, double* half_width = nullptr) {
  if (target.dim() == 1) {
    if (half_width) *half_width = 0.0;
    return l1_quadrature_1d(target, f).value;
  }
  const McEstimate e = l1_monte_carlo(target, f, 20000, rng);
  if (half_width) *half_width = e.half_width;
  return e.estimate;
}

inline TournamentMode mode_from(const std::string& s) {
  if (s == "full") return TournamentMode::Full;
  if (s == "pruned") return TournamentMode::Pruned;
  return TournamentMode::Auto;
}

inline std::vector<Density> default_candidates() {
  return {Gaussian1D(0.0, 1.0), Gaussian1D(0.5, 1.0), Gaussian1D(0.0, 1.5)};
}

/// Shared setup of the tournament and Yatracos experiments.
inline Prepared prepare_selection(Config& cfg, bool yatracos, std::uint64_t master) {
  const auto cands_v = cfg.densities("candidates", default_candidates());
  const CandidateList cands(cands_v);
  const Density target = cfg.density("target", cands_v.front());
  if (target.dim() != cands.dim()) throw DimensionMismatch("target and candidates differ in dimension");
  const double eps = cfg.real("eps", 0.1, 1e-6, 1.0);
  const double delta = cfg.real("delta", 0.1, 1e-12, 1.0 - 1e-12);
  const std::size_t m = cfg.count("m", tournament_sample_size(cands.size(), eps, delta), 1);
  const std::size_t n_mc = cfg.count("n_mc", 20000, 2);
  const auto mode = mode_from(cfg.choice("mode", "auto", {"auto", "full", "pruned"}));
  const std::string metric = yatracos ? cfg.choice("metric", "l1", {"l1", "deviation"}) : "l1";
  if (metric == "deviation" && cands.dim() != 1) throw Unsupported("yatracos deviation metric needs 1-D candidates");
  if (!target.samplable()) throw Unsupported("target must be a Gaussian or a Gaussian mixture");

  Rng l1_rng(derive_seed(master, ~std::uint64_t{0}));
  auto l1 = std::make_shared<std::vector<double>>();
  for (const auto& c : cands.densities) l1->push_back(l1_to_target(target, c, l1_rng));
  const double opt = *std::min_element(l1->begin(), l1->end());

  Prepared p;
  p.grid_value = static_cast<double>(m);
  p.setup = {{"candidates", cands.size()}, {"opt", opt}, {"candidate_l1", *l1}, {"m", m}};
  p.delta = yatracos ? -1.0 : delta;
  p.trial = [=](std::uint64_t seed) {
    Rng rng(seed);
    const Sample s = sample(target, m, rng, seed);
    TrialRow row;
    SelectionReport rep = yatracos ? yatracos_minimizer(cands, s, n_mc, rng)
                                   : scheffe_tournament(cands, s, eps, n_mc, rng, {delta, mode});
    const double err = (*l1)[rep.winner];
    row.detail = {{"winner", rep.winner}, {"label", cands.labels[rep.winner]}, {"l1", err}};
    if (yatracos && cands.dim() == 1) {
      // ||f_w - f|| <= 3 OPT + 4 ||f - p_hat||_Y holds for every sample.
      const double dev = yatracos_distance(cands, target, s);
      row.detail["deviation"] = dev;
      row.miss = err > 3.0 * opt + 4.0 * dev + 1e-9;
      row.error = metric == "deviation" ? dev : err;
    } else {
      row.error = err;
      row.miss = !yatracos && err > 3.0 * opt + 4.0 * eps;
    }
    row.flags = row.miss ? "miss" : "ok";
    if (!rep.warnings.empty()) row.flags += ";undersized";
    return row;
  };
  return p;
}

inline Prepared prepare_learn_mixture(Config& cfg, bool check) {
  std::optional<double> separation;
  if (cfg.has("separation")) separation = cfg.real("separation", 0.0, 0.0);
  const Density def_target = Mixture({0.5, 0.5}, {Gaussian1D(-10, 1), Gaussian1D(10, 1)});
  Density target = def_target;
  if (separation) {
    if (cfg.has("target")) throw SchemaError("learn-mixture: give either 'target' or 'separation'");
    target = Mixture({0.5, 0.5}, {Gaussian1D(-*separation / 2, 1), Gaussian1D(*separation / 2, 1)});
  } else {
    target = cfg.density("target", def_target);
  }
  const std::size_t def_k = target.is<Mixture>() ? target.as<Mixture>().size() : 1;
  const std::size_t k = cfg.count("k", def_k, 1);
  const std::size_t m_train = cfg.count("m_train", 12, 1);
  const std::size_t m_test = cfg.count("m_test", 500, 1);
  const double eps = cfg.real("eps", 0.1, 1e-6, 1.0);
  const double delta = cfg.real("delta", 0.1, 1e-12, 1.0 - 1e-12);
  const double threshold = cfg.real("threshold", 0.3, 0.0);
  const std::size_t cap = cfg.count("cap", kDefaultColoringCap, 1);
  // Weight grid: uniform weights only, an explicit step, or the default step eps/k.
  const bool uniform = cfg.flag("uniform_weights", false);
  const double step = cfg.real("grid_step", 0.0, 0.0, 1.0);
  std::optional<WeightGrid> grid;
  if (uniform) grid = WeightGrid::uniform(k);
  else if (step > 0.0) grid = weight_grid(k, step);
  if (!target.samplable()) throw Unsupported("target must be a Gaussian or a Gaussian mixture");
  const std::size_t d = target.dim();
  const BaseLearner base = gaussian_ml_learner(d);

  Prepared p;
  p.grid_value = separation ? *separation : static_cast<double>(m_test);
  p.setup = {{"k", k}, {"m_train", m_train}, {"m_test", m_test}};
  p.delta = delta;
  p.trial = [=](std::uint64_t seed) {
    Rng rng(seed);
    const Sample s = sample(target, m_train + m_test, rng, seed);
    MixtureOptions opt;
    opt.m_train = m_train;
    opt.cap = cap;
    opt.grid = grid;
    const MixtureResult r = learn_mixture(s, k, base, eps, delta, rng, opt);
    TrialRow row;
    row.error = l1_to_target(target, r.winner, rng, &row.ci_half_width);
    row.detail = {{"winner", r.report.winner}, {"candidates", r.candidates.list.size()}, {"winner_density", to_json(r.winner)}};
    const bool under = row.error > threshold;
    if (check) {
      // Tournament guarantee against the best generated candidate.
      double best = kInf;
      for (const auto& c : r.candidates.list.densities) best = std::min(best, l1_to_target(target, c, rng));
      const double m2 = static_cast<double>(r.candidates.list.size());
      const double e = std::sqrt(std::log(3.0 * m2 * m2 / (delta / 3.0)) / (2.0 * static_cast<double>(r.m_test)));
      row.detail["best_candidate_l1"] = best;
      row.miss = row.error > 3.0 * best + 4.0 * e;
    }
    row.flags = under ? "above_threshold" : "ok";
    if (row.miss && check) row.flags += ";miss";
    if (r.degraded) row.flags += ";degraded";
    return row;
  };
  return p;
}

inline Prepared prepare_compress_learn(Config& cfg) {
  const Density target = cfg.density("target", Gaussian1D(0.0, 1.0));
  if (!target.is<Gaussian1D>()) throw Unsupported("compress-learn: target must be a 1-D Gaussian");
  const double eps = cfg.real("eps", 0.2, 1e-6, 1.0 - 1e-9);
  const double delta = cfg.real("delta", 0.1, 1e-12, 1.0 - 1e-12);
  const double c = cfg.real("scheme_c", kGaussianSchemeC, 1.0);
  const Scheme sc = gaussian_1d_scheme(c);
  const CompressionBound bound = compression_sample_bound(sc.params, eps, delta);
  const std::size_t m = cfg.count("m", bound.total, 1);
  const std::size_t cap = cfg.count("cap", kDefaultEnumerationCap, 1);
  const auto mode = mode_from(cfg.choice("mode", "auto", {"auto", "full", "pruned"}));

  Prepared p;
  p.grid_value = eps;
  p.setup = {{"m", m}, {"m_material", bound.m_material}, {"m_tournament", bound.m_tournament}};
  p.delta = delta;
  p.trial = [=](std::uint64_t seed) {
    Rng rng(seed);
    const Sample s = sample(target, m, rng, seed);
    CompressionOptions opt;
    opt.cap = cap;
    opt.mode = mode;
    const CompressionResult r = compression_learner(sc, s, eps, delta, rng, opt);
    TrialRow row;
    row.error = l1_quadrature_1d(target, r.winner).value;
    row.miss = row.error > eps;
    row.flags = row.miss ? "miss" : "ok";
    row.detail = {{"winner", r.report.winner},
                  {"candidates", r.candidates.size()},
                  {"enumerated", r.enumerated},
                  {"winner_density", to_json(r.winner)},
                  {"winner_encoding", to_json(r.encodings[r.report.winner])}};
    return row;
  };
  return p;
}

inline Prepared prepare_roundtrip(Config& cfg) {
  const Density target = cfg.density("target", Gaussian1D(0.0, 1.0));
  if (!target.is<Gaussian1D>()) throw Unsupported("compression-roundtrip: target must be a 1-D Gaussian");
  const double eps = cfg.real("eps", 0.1, 1e-6, 1.0 - 1e-9);
  const double c = cfg.real("scheme_c", kGaussianSchemeC, 1.0);
  const Scheme sc = gaussian_1d_scheme(c);
  const std::size_t m = cfg.count("m", sc.params.m(eps), 1);
  Prepared p;
  p.grid_value = static_cast<double>(m);
  p.setup = {{"m", m}, {"round_trip_constant", kGaussianRoundTripC}};
  p.trial = [=](std::uint64_t seed) {
    Rng rng(seed);
    const Sample s = sample(target, m, rng, seed);
    TrialRow row;
    const auto enc = sc.encode(target, s, eps, rng);
    if (!enc) {
      row.flags = "encode_failed";
      row.detail = {{"encoded", false}};
      return row;
    }
    const auto dec = sc.decode(*enc, eps);
    row.error = dec ? l1_quadrature_1d(target, *dec).value : std::nan("");
    row.miss = !dec || row.error > kGaussianRoundTripC * eps;
    row.flags = row.miss ? "encoded;miss" : "encoded";
    row.detail = {{"encoded", true}, {"encoding", to_json(*enc)}};
    return row;
  };
  return p;
}

inline Prepared prepare_trials(const std::string& experiment, Config& cfg, std::uint64_t master, bool check) {
  if (experiment == "tournament") return prepare_selection(cfg, false, master);
  if (experiment == "yatracos") return prepare_selection(cfg, true, master);
  if (experiment == "learn-mixture") return prepare_learn_mixture(cfg, check);
  if (experiment == "compress-learn") return prepare_compress_learn(cfg);
  if (experiment == "compression-roundtrip") return prepare_roundtrip(cfg);
  throw SchemaError("unknown experiment '" + experiment + "'");
}

inline const char* default_sweep_parameter(const std::string& experiment) {
  if (experiment == "learn-mixture") return "separation";
  if (experiment == "compress-learn") return "eps";
  return "m";
}

inline json grid_entry(double v) {
  if (v >= 0 && v == std::floor(v) && v < 1e15) return static_cast<std::uint64_t>(v);
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

inline json report_header(const std::string& command, const json& resolved, std::uint64_t seed, std::size_t workers) {
  const std::string canonical = json{{"command", command}, {"config", resolved}}.dump();
  return {{"command", command},  {"version", kVersion},   {"seed", seed},
          {"workers", workers},  {"config_hash", hex64(fnv1a(canonical))}, {"config", resolved}};
}

inline ExperimentOutput run_trial_command(const std::string& command, Config& cfg, std::uint64_t seed,
                                          const RunOptions& opt) {
  const std::size_t trials = cfg.count("trials", 1, 1);
  const bool timing = cfg.flag("timing", true);
  Prepared p = detail::prepare_trials(command, cfg, seed, opt.check);
  cfg.finish();
  auto rows = parallel_map<TrialRow>(trials, opt.workers, [&](std::size_t t) {
    const std::uint64_t s = derive_seed(seed, 0, t);
    const auto start = std::chrono::steady_clock::now();
    TrialRow r = p.trial(s);
    r.wall_ms = timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() : 0.0;
    r.grid_value = p.grid_value;
    r.trial = t;
    r.seed = s;
    return r;
  });
  ExperimentOutput out;
  out.report = report_header(command, cfg.resolved(), seed, opt.workers);
  std::size_t misses = 0;
  std::vector<double> errors;
  json list = json::array();
  out.csv = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    misses += r.miss;
    errors.push_back(r.error);
    list.push_back(row_json(r));
    out.csv += csv_row(r) + "\n";
  }
  const std::size_t allowed = allowed_failures(trials, p.delta);
  out.violations = misses > allowed ? 1 : 0;
  out.report["setup"] = p.setup;
  out.report["trials"] = list;
  out.report["summary"] = {{"trials", trials},         {"misses", misses},
                           {"allowed_misses", allowed}, {"median_error", median(errors)},
                           {"violations", out.violations}};
  return out;
}

inline ExperimentOutput run_lower_bound(Config& cfg, std::uint64_t seed, const RunOptions& opt) {
  const std::string family = cfg.choice("family", "mean-packing", {"mean-packing", "covariance-packing"});
  const bool mean = family == "mean-packing";
  const std::size_t d = cfg.count("d", mean ? 10 : 9, 1);
  const double eps = cfg.real("eps", mean ? 0.5 : 0.2, 1e-9, 1.0);
  const double eps_target = cfg.real("eps_target", eps, 1e-9, 1.0);
  HardFamily fam;
  if (mean) {
    Rng rng(derive_seed(seed, 1));
    fam = mean_packing_family(d, eps, &rng);
  } else {
    const std::size_t M = cfg.count("M", 16, 2);
    const std::size_t r = cfg.count("r", 9, 1);
    const std::size_t n_mc = cfg.count("n_mc", 20000, 2);
    Rng rng(derive_seed(seed, 1));
    fam = covariance_packing_family(d, eps, rng, M, r, n_mc);
  }
  cfg.finish();
  const SampleFloor floor = sample_complexity_floor(fam, eps_target);
  ExperimentOutput out;
  out.report = report_header("lower-bound", cfg.resolved(), seed, opt.workers);
  json res = {{"family", family},        {"M", fam.size()},          {"alpha", fam.l1_floor},
              {"beta", fam.kl_cap},      {"floor_n", floor.n},       {"asymptotic", floor.asymptotic},
              {"asymptotic_form", floor.form}, {"log_M", floor.log_M}, {"max_kl", fam.max_kl},
              {"min_l1", fam.min_l1},    {"verified", true},         {"d", d},
              {"eps", eps}};
  if (!mean) {
    res["lambda"] = fam.lambda;
    res["r"] = fam.r;
    res["max_overlap"] = fam.max_overlap;
  }
  out.report["results"] = res;
  return out;
}

inline ExperimentOutput run_vc_dim(Config& cfg, std::uint64_t seed, const RunOptions& opt) {
  const std::string system = cfg.choice("system", "unions-of-intervals", {"unions-of-intervals", "yatracos"});
  std::vector<double> xs;
  if (cfg.has("points")) {
    xs = cfg.reals("points", {});
  } else {
    const std::size_t n = cfg.count("n_points", 10, 1);
    Rng rng(derive_seed(seed, 2));
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (std::size_t i = 0; i < n; ++i) xs.push_back(u(rng));
  }
  std::vector<std::vector<double>> pts;
  for (double x : xs) pts.push_back({x});
  std::size_t vc = 0;
  std::optional<std::size_t> expected;
  json res;
  if (system == "unions-of-intervals") {
    const std::size_t k = cfg.count("k", 2, 1);
    cfg.finish();
    std::vector<double> distinct = xs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    vc = vc_dimension_bruteforce(pts, unions_of_intervals(xs, k));
    expected = std::min(2 * k, distinct.size());
    res["k"] = k;
  } else {
    const auto cands = cfg.densities("candidates", detail::default_candidates());
    cfg.finish();
    for (const auto& c : cands)
      if (c.dim() != 1) throw Unsupported("vc-dim: Yatracos system needs 1-D candidates");
    vc = vc_dimension_bruteforce(pts, yatracos_intervals(cands));
    res["sets"] = cands.size() * (cands.size() - 1);
  }
  ExperimentOutput out;
  out.report = report_header("vc-dim", cfg.resolved(), seed, opt.workers);
  res["vc"] = vc;
  res["system"] = system;
  res["points"] = xs;
  if (expected) {
    res["expected"] = *expected;
    out.violations = vc != *expected;
  }
  out.report["results"] = res;
  return out;
}

inline ExperimentOutput run_sweep(Config& cfg, std::uint64_t seed, const RunOptions& opt) {
  const std::string experiment = cfg.choice("experiment", "yatracos",
                                            {"tournament", "yatracos", "learn-mixture", "compress-learn", "compression-roundtrip"});
  const std::string parameter = cfg.choice("parameter", detail::default_sweep_parameter(experiment),
                                           {"m", "m_test", "m_train", "eps", "separation", "delta"});
  const auto grid = cfg.reals("grid", {32, 64, 128, 256, 512, 1024, 2048, 4096});
  if (grid.empty()) throw SchemaError("sweep: grid must not be empty");
  const std::size_t trials = cfg.count("trials", 10, 1);
  const bool timing = cfg.flag("timing", true);
  const json* base_p = cfg.raw("base");
  json base = base_p ? *base_p : json::object();
  if (!base.is_object()) throw SchemaError("sweep: base must be an object");
  if (base.contains(parameter)) throw SchemaError("sweep: base must not set the swept parameter '" + parameter + "'");
  cfg.finish();

  std::vector<Prepared> points;
  json resolved_points = json::array();
  for (double v : grid) {
    json c = base;
    c[parameter] = detail::grid_entry(v);
    Config sub(c, "sweep." + experiment);
    points.push_back(detail::prepare_trials(experiment, sub, seed, opt.check));
    sub.finish();
    points.back().grid_value = v;
    resolved_points.push_back(sub.resolved());
  }
  auto rows = parallel_map<TrialRow>(grid.size() * trials, opt.workers, [&](std::size_t idx) {
    const std::size_t g = idx / trials, t = idx % trials;
    const std::uint64_t s = derive_seed(seed, g, t);
    const auto start = std::chrono::steady_clock::now();
    TrialRow r = points[g].trial(s);
    r.wall_ms = timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() : 0.0;
    r.grid_value = grid[g];
    r.trial = t;
    r.seed = s;
    return r;
  });

  ExperimentOutput out;
  out.report = report_header("sweep", cfg.resolved(), seed, opt.workers);
  out.csv = std::string(kCsvHeader) + "\n";
  json per_point = json::array();
  std::vector<double> medians;
  std::size_t violations = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> errs;
    std::size_t misses = 0, flagged_ok = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialRow& r = rows[g * trials + t];
      out.csv += csv_row(r) + "\n";
      errs.push_back(r.error);
      misses += r.miss;
      flagged_ok += r.flags.rfind("ok", 0) == 0 || r.flags.rfind("encoded", 0) == 0;
    }
    const double med = median(errs);
    medians.push_back(med);
    const std::size_t allowed = allowed_failures(trials, points[g].delta);
    violations += misses > allowed;
    per_point.push_back({{"grid_value", grid[g]},
                         {"median_error", med},
                         {"success_rate", static_cast<double>(flagged_ok) / static_cast<double>(trials)},
                         {"misses", misses},
                         {"allowed_misses", allowed},
                         {"setup", points[g].setup}});
  }
  const double slope = loglog_slope(grid, medians);
  for (std::size_t g = 0; g < grid.size(); ++g)
    out.csv += format_double(grid[g]) + ",median,," + format_double(medians[g]) + ",,,summary\n";
  out.csv += "slope,,," + format_double(slope) + ",,,summary\n";
  out.violations = violations;
  out.report["points"] = resolved_points;
  out.report["results"] = {{"experiment", experiment}, {"parameter", parameter}, {"per_point", per_point},
                           {"loglog_slope", slope},    {"violations", violations}};
  return out;
}

/// Runs one command on a JSON config. Throws SchemaError (and the modules' own errors) on bad input.
inline ExperimentOutput run(const std::string& command, const json& config, const RunOptions& opt = {}) {
  if (std::find(commands().begin(), commands().end(), command) == commands().end())
    throw SchemaError("unknown command '" + command + "'");
  json effective = config.is_null() ? json::object() : config;
  if (!effective.is_object()) throw SchemaError(command + ": config must be a JSON object");
  if (opt.seed) effective["seed"] = *opt.seed;
  Config cfg(effective, command);
  if (const json* c = cfg.raw("command"))
    if (!c->is_string() || c->get<std::string>() != command)
      throw SchemaError("config 'command' does not match the subcommand '" + command + "'");
  const std::uint64_t seed = cfg.u64("seed", 1);
  if (command == "lower-bound") return run_lower_bound(cfg, seed, opt);
  if (command == "vc-dim") return run_vc_dim(cfg, seed, opt);
  if (command == "sweep") return run_sweep(cfg, seed, opt);
  return run_trial_command(command, cfg, seed, opt);
}

}  // namespace dtk::exp
