#pragma once

// Experiment configuration: strict JSON schema, validation that reports every
// violation, and a serializer that parses back to an equal value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kplab/control_ops.hpp"
#include "kplab/errors.hpp"
#include "kplab/nonlinear_control.hpp"
#include "kplab/spectral_core.hpp"

namespace kplab {

enum class Experiment { hum, scan_lambda, ingham, counterexample, nonlinear_steer, transit, selftest };

inline constexpr std::string_view kExperimentNames[] = {
    "hum", "scan-lambda", "ingham", "counterexample", "nonlinear-steer", "transit", "selftest"};

inline std::string_view experiment_name(Experiment e) { return kExperimentNames[int(e)]; }

inline std::optional<Experiment> experiment_from_name(std::string_view s) {
  for (int i = 0; i < 7; ++i)
    if (kExperimentNames[i] == s) return Experiment(i);
  return std::nullopt;
}

inline std::string experiment_name_list() {
  std::string s;
  for (auto n : kExperimentNames) s += (s.empty() ? "" : ", ") + std::string(n);
  return s;
}

struct GridConfig {
  int K = 8;
  int L = 4;
  bool operator==(const GridConfig&) const = default;
};

struct StripConfig {
  double a = -kPi / 2;
  double b = kPi / 2;
  Orientation orientation = Orientation::vertical;
  bool operator==(const StripConfig&) const = default;
};

struct BumpConfig {
  int n_quad = 4096;
  bool operator==(const BumpConfig&) const = default;
};

struct LambdaRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
  bool operator==(const LambdaRange&) const = default;

  std::vector<double> values() const {
    std::vector<double> v;
    const long n = long(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) v.push_back(start + double(i) * step);
    return v;
  }
};

/// Union of the keys used by the experiments; only the owning experiment's
/// keys are accepted and serialized.
struct SweepConfig {
  // hum
  int pairs = 1;
  double data_norm = 1.0;
  double samples_per_unit_time = 64.0;
  bool monolithic = false;
  // scan-lambda, transit
  std::vector<double> lambdas;
  std::optional<LambdaRange> lambda_range;
  int resonant_kmax = 0;
  bool weak = false;
  double weak_kappa = 1.0;
  // ingham
  std::vector<double> freqs;
  int cubes = 0;
  std::vector<double> T_list;
  // counterexample
  std::vector<int> n_list{4, 8, 16, 32, 64};
  std::optional<double> B;
  std::optional<double> b_small;
  int ny = 0;
  // nonlinear-steer
  std::vector<double> snapshots;

  bool operator==(const SweepConfig&) const = default;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::selftest;
  GridConfig grid;
  double T = 1.0;
  StripConfig strip;
  BumpConfig bump;
  SolverParams solver;
  SweepConfig sweep;
  std::uint64_t seed = 0;
  std::string output_dir = "kplab_out";

  bool operator==(const ExperimentConfig&) const = default;

  /// lambdas, then the range, then resonant values, sorted and deduplicated.
  std::vector<double> lambda_values() const;
  std::vector<double> ingham_freqs() const;
  double packet_B() const { return sweep.B.value_or(0.9 * strip.a / (2.0 * T)); }
  double packet_b_small() const { return sweep.b_small.value_or(0.8 * packet_B()); }
};

inline std::vector<double> ExperimentConfig::lambda_values() const {
  std::set<double> s(sweep.lambdas.begin(), sweep.lambdas.end());
  if (sweep.lambda_range)
    for (double v : sweep.lambda_range->values()) s.insert(v);
  for (int k1 = -sweep.resonant_kmax; k1 <= sweep.resonant_kmax; ++k1)
    for (int k2 = -sweep.resonant_kmax; k2 <= sweep.resonant_kmax; ++k2) {
      if (k1 == 0 || k2 == 0 || k1 == k2) continue;
      const double l2 = -double(k1) * k2 * (double(k1) * k1 + double(k1) * k2 + double(k2) * k2);
      if (l2 > 0.0) s.insert(std::sqrt(l2));
    }
  return {s.begin(), s.end()};
}

inline std::vector<double> ExperimentConfig::ingham_freqs() const {
  if (!sweep.freqs.empty()) return sweep.freqs;
  std::vector<double> f;
  for (int k = 1; k <= sweep.cubes; ++k) f.push_back(double(k) * k * k);
  return f;
}

namespace detail {

using ConfigJson = nlohmann::ordered_json;

class SchemaReader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  /// Object check plus unknown-key rejection; returns false if not an object.
  bool object(const ConfigJson& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) {
      fail(path.empty() ? "<root>" : path, "expected an object");
      return false;
    }
    for (const auto& [k, v] : j.items()) {
      bool known = false;
      for (auto key : keys) known = known || key == k;
      if (!known) fail(join(path, k), "unknown field");
    }
    return true;
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

  template <class Ok>
  void real(const ConfigJson& o, std::string_view key, const std::string& path, double& dst, Ok ok,
            const char* rule) {
    const auto it = o.find(key);
    if (it == o.end()) return;
    const std::string p = join(path, key);
    if (!it->is_number()) return fail(p, "expected a number");
    const double v = it->template get<double>();
    if (!std::isfinite(v) || !ok(v)) return fail(p, rule);
    dst = v;
  }

  template <class Ok>
  void real(const ConfigJson& o, std::string_view key, const std::string& path,
            std::optional<double>& dst, Ok ok, const char* rule) {
    if (o.find(key) == o.end()) return;
    double v = 0.0;
    const std::size_t before = errors.size();
    real(o, key, path, v, ok, rule);
    if (errors.size() == before) dst = v;
  }

  template <class Int, class Ok>
  void integer(const ConfigJson& o, std::string_view key, const std::string& path, Int& dst, Ok ok,
               const char* rule) {
    const auto it = o.find(key);
    if (it == o.end()) return;
    const std::string p = join(path, key);
    if (!it->is_number_integer()) return fail(p, "expected an integer");
    if (it->is_number_unsigned()) {
      const auto u = it->template get<std::uint64_t>();
      if constexpr (std::is_same_v<Int, std::uint64_t>) {
        if (!ok(u)) return fail(p, rule);
        dst = u;
        return;
      } else {
        if (u > std::uint64_t(1) << 30 || !ok(Int(u))) return fail(p, rule);
        dst = Int(u);
        return;
      }
    }
    const auto s = it->template get<std::int64_t>();
    if constexpr (std::is_same_v<Int, std::uint64_t>) {
      return fail(p, rule);
    } else {
      if (s < -(std::int64_t(1) << 30) || !ok(Int(s))) return fail(p, rule);
      dst = Int(s);
    }
  }

  void boolean(const ConfigJson& o, std::string_view key, const std::string& path, bool& dst) {
    const auto it = o.find(key);
    if (it == o.end()) return;
    if (!it->is_boolean()) return fail(join(path, key), "expected true or false");
    dst = it->template get<bool>();
  }

  void string(const ConfigJson& o, std::string_view key, const std::string& path, std::string& dst) {
    const auto it = o.find(key);
    if (it == o.end()) return;
    if (!it->is_string()) return fail(join(path, key), "expected a string");
    dst = it->template get<std::string>();
    if (dst.empty()) fail(join(path, key), "must not be empty");
  }

  template <class Ok>
  void reals(const ConfigJson& o, std::string_view key, const std::string& path,
             std::vector<double>& dst, Ok ok, const char* rule) {
    const auto it = o.find(key);
    if (it == o.end()) return;
    const std::string p = join(path, key);
    if (!it->is_array()) return fail(p, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& e = (*it)[i];
      const std::string pi = p + "[" + std::to_string(i) + "]";
      if (!e.is_number()) {
        fail(pi, "expected a number");
        continue;
      }
      const double v = e.template get<double>();
      if (!std::isfinite(v) || !ok(v)) fail(pi, rule);
      out.push_back(v);
    }
    dst = std::move(out);
  }

  template <class Ok>
  void ints(const ConfigJson& o, std::string_view key, const std::string& path, std::vector<int>& dst,
            Ok ok, const char* rule) {
    const auto it = o.find(key);
    if (it == o.end()) return;
    const std::string p = join(path, key);
    if (!it->is_array()) return fail(p, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& e = (*it)[i];
      const std::string pi = p + "[" + std::to_string(i) + "]";
      if (!e.is_number_integer()) {
        fail(pi, "expected an integer");
        continue;
      }
      const auto v = e.template get<std::int64_t>();
      if (v < -(1 << 30) || v > (1 << 30) || !ok(int(v))) fail(pi, rule);
      out.push_back(int(v));
    }
    dst = std::move(out);
  }
};

inline bool allowed_sweep_key(Experiment e, std::string_view k) {
  switch (e) {
    case Experiment::hum:
      return k == "pairs" || k == "data_norm" || k == "samples_per_unit_time" || k == "monolithic";
    case Experiment::scan_lambda:
      return k == "lambdas" || k == "lambda_range" || k == "resonant_kmax" || k == "weak" ||
             k == "weak_kappa";
    case Experiment::transit:
      return k == "lambdas" || k == "lambda_range" || k == "resonant_kmax";
    case Experiment::ingham:
      return k == "freqs" || k == "cubes" || k == "T_list";
    case Experiment::counterexample:
      return k == "n_list" || k == "B" || k == "b_small" || k == "samples_per_unit_time" || k == "ny";
    case Experiment::nonlinear_steer:
      return k == "snapshots" || k == "samples_per_unit_time";
    case Experiment::selftest:
      return false;
  }
  return false;
}

inline StripConfig default_strip(Experiment e) {
  if (e == Experiment::counterexample) return {1.0, kPi, Orientation::horizontal};
  return {};
}

inline SweepConfig default_sweep(Experiment e) {
  SweepConfig s;
  if (e == Experiment::counterexample) s.samples_per_unit_time = 128.0;
  if (e == Experiment::ingham) s.cubes = 6;
  return s;
}

}  // namespace detail

/// Validated config from a JSON document; throws ConfigViolations listing every
/// problem found, or ConfigError for malformed JSON.
inline ExperimentConfig parse_config(const nlohmann::ordered_json& j) {
  detail::SchemaReader r;
  ExperimentConfig c;
  if (!r.object(j, "", {"experiment", "grid", "T", "strip", "bump", "solver", "sweep", "seed",
                        "output_dir"}))
    throw ConfigViolations(r.errors);

  bool have_experiment = false;
  if (!j.contains("experiment")) {
    r.fail("experiment", "missing; valid names: " + experiment_name_list());
  } else if (!j["experiment"].is_string()) {
    r.fail("experiment", "expected a string; valid names: " + experiment_name_list());
  } else if (auto e = experiment_from_name(j["experiment"].get<std::string>())) {
    c.experiment = *e;
    have_experiment = true;
  } else {
    r.fail("experiment", "unknown experiment '" + j["experiment"].get<std::string>() +
                             "'; valid names: " + experiment_name_list());
  }
  const Experiment e = c.experiment;
  c.strip = detail::default_strip(e);
  c.sweep = detail::default_sweep(e);

  auto positive = [](double v) { return v > 0.0; };
  auto nonneg = [](double v) { return v >= 0.0; };

  if (j.contains("grid") && r.object(j["grid"], "grid", {"K", "L"})) {
    r.integer(j["grid"], "K", "grid", c.grid.K, [](int v) { return v >= 1 && v <= 512; },
              "must be an integer in [1, 512]");
    r.integer(j["grid"], "L", "grid", c.grid.L, [](int v) { return v >= 0 && v <= 512; },
              "must be an integer in [0, 512]");
  }
  r.real(j, "T", "", c.T, positive, "must be positive");

  if (j.contains("strip") && r.object(j["strip"], "strip", {"a", "b", "orientation"})) {
    const auto& s = j["strip"];
    auto in_torus = [](double v) { return v >= -kPi && v <= kPi; };
    r.real(s, "a", "strip", c.strip.a, in_torus, "must lie in [-pi, pi]");
    r.real(s, "b", "strip", c.strip.b, in_torus, "must lie in [-pi, pi]");
    if (s.contains("orientation")) {
      const auto& o = s["orientation"];
      if (o == "vertical")
        c.strip.orientation = Orientation::vertical;
      else if (o == "horizontal")
        c.strip.orientation = Orientation::horizontal;
      else
        r.fail("strip.orientation", "must be \"vertical\" or \"horizontal\"");
    }
  }

  if (j.contains("bump") && r.object(j["bump"], "bump", {"n_quad"}))
    r.integer(j["bump"], "n_quad", "bump", c.bump.n_quad, [](int v) { return v >= 64 && v <= (1 << 22); },
              "must be an integer in [64, 4194304]");

  if (j.contains("solver") &&
      r.object(j["solver"], "solver", {"dt", "dealias", "max_picard", "picard_tol", "R", "nonlinear"})) {
    const auto& s = j["solver"];
    r.real(s, "dt", "solver", c.solver.dt, positive, "must be positive");
    r.real(s, "dealias", "solver", c.solver.dealias, [](double v) { return v > 0.0 && v <= 1.0; },
           "must lie in (0, 1]");
    r.integer(s, "max_picard", "solver", c.solver.max_picard, [](int v) { return v >= 1 && v <= 1000; },
              "must be an integer in [1, 1000]");
    r.real(s, "picard_tol", "solver", c.solver.picard_tol, positive, "must be positive");
    r.real(s, "R", "solver", c.solver.R, positive, "must be positive");
    r.boolean(s, "nonlinear", "solver", c.solver.nonlinear);
  }

  if (j.contains("sweep") && j["sweep"].is_object() && have_experiment) {
    const auto& s = j["sweep"];
    for (const auto& [k, v] : s.items())
      if (!detail::allowed_sweep_key(e, k))
        r.fail("sweep." + k, "unknown field for experiment " + std::string(experiment_name(e)));
    auto& w = c.sweep;
    r.integer(s, "pairs", "sweep", w.pairs, [](int v) { return v >= 1 && v <= 10000; },
              "must be an integer in [1, 10000]");
    r.real(s, "data_norm", "sweep", w.data_norm, nonneg, "must be >= 0");
    r.real(s, "samples_per_unit_time", "sweep", w.samples_per_unit_time, [](double v) { return v >= 2.0; },
           "must be >= 2");
    r.boolean(s, "monolithic", "sweep", w.monolithic);
    r.reals(s, "lambdas", "sweep", w.lambdas, nonneg, "must be >= 0");
    if (s.contains("lambda_range") &&
        r.object(s["lambda_range"], "sweep.lambda_range", {"start", "stop", "step"})) {
      const auto& lr = s["lambda_range"];
      LambdaRange range;
      const std::size_t before = r.errors.size();
      for (auto key : {"start", "stop", "step"})
        if (!lr.contains(key)) r.fail("sweep.lambda_range." + std::string(key), "missing");
      r.real(lr, "start", "sweep.lambda_range", range.start, nonneg, "must be >= 0");
      r.real(lr, "stop", "sweep.lambda_range", range.stop, nonneg, "must be >= 0");
      r.real(lr, "step", "sweep.lambda_range", range.step, positive, "must be positive");
      if (r.errors.size() == before) {
        if (range.stop < range.start)
          r.fail("sweep.lambda_range.start, sweep.lambda_range.stop", "need start <= stop");
        else if ((range.stop - range.start) / range.step > 1e6)
          r.fail("sweep.lambda_range", "more than 10^6 points");
        else
          w.lambda_range = range;
      }
    }
    r.integer(s, "resonant_kmax", "sweep", w.resonant_kmax, [](int v) { return v >= 0 && v <= 64; },
              "must be an integer in [0, 64]");
    r.boolean(s, "weak", "sweep", w.weak);
    r.real(s, "weak_kappa", "sweep", w.weak_kappa, nonneg, "must be >= 0");
    r.reals(s, "freqs", "sweep", w.freqs, [](double) { return true; }, "must be finite");
    if (s.contains("freqs")) w.cubes = 0;
    if (s.contains("freqs") && s.contains("cubes")) r.fail("sweep.freqs, sweep.cubes", "give only one");
    r.integer(s, "cubes", "sweep", w.cubes, [](int v) { return v >= 1 && v <= 1000; },
              "must be an integer in [1, 1000]");
    r.reals(s, "T_list", "sweep", w.T_list, positive, "must be positive");
    r.ints(s, "n_list", "sweep", w.n_list, [](int v) { return v >= 2 && v <= 4096; },
           "must be an integer in [2, 4096]");
    r.real(s, "B", "sweep", w.B, positive, "must be positive");
    r.real(s, "b_small", "sweep", w.b_small, positive, "must be positive");
    r.integer(s, "ny", "sweep", w.ny, [](int v) { return v >= 0 && v <= (1 << 22); },
              "must be an integer in [0, 4194304]");
    r.reals(s, "snapshots", "sweep", w.snapshots, nonneg, "must be >= 0");
  } else if (j.contains("sweep") && !j["sweep"].is_object()) {
    r.fail("sweep", "expected an object");
  }

  r.integer(j, "seed", "", c.seed, [](std::uint64_t) { return true; }, "must be a non-negative integer");
  r.string(j, "output_dir", "", c.output_dir);

  // Cross-field rules.
  if (!(c.strip.a < c.strip.b))
    r.fail("strip.a, strip.b", "need strip.a < strip.b (got a = " + std::to_string(c.strip.a) +
                                   ", b = " + std::to_string(c.strip.b) + ")");
  if (have_experiment) {
    const bool horizontal = c.strip.orientation == Orientation::horizontal;
    if (e == Experiment::counterexample) {
      if (!horizontal)
        r.fail("strip.orientation", "counterexample requires horizontal orientation");
      if (!(c.strip.a > 0.0))
        r.fail("strip.a", "counterexample needs 0 < strip.a; the strip is (a, b) and its mirror (-b, -a)");
      if (c.packet_b_small() >= c.packet_B())
        r.fail("sweep.b_small, sweep.B", "need b_small < B");
      if (c.sweep.n_list.empty()) r.fail("sweep.n_list", "must not be empty");
      int nmax = 0;
      for (int n : c.sweep.n_list) nmax = std::max(nmax, n);
      if (c.packet_B() * nmax > 4096) r.fail("sweep.B, sweep.n_list", "packet support B n exceeds 4096");
    } else if (e == Experiment::hum || e == Experiment::nonlinear_steer ||
               e == Experiment::scan_lambda || e == Experiment::transit) {
      if (horizontal)
        r.fail("strip.orientation",
               std::string(experiment_name(e)) + " requires vertical orientation");
    }
    if ((e == Experiment::scan_lambda || e == Experiment::transit) && c.lambda_values().empty())
      r.fail("sweep", "need at least one of lambdas, lambda_range, resonant_kmax");
    if (e == Experiment::ingham) {
      auto f = c.ingham_freqs();
      std::sort(f.begin(), f.end());
      if (f.empty()) r.fail("sweep.freqs", "need freqs or cubes");
      if (std::adjacent_find(f.begin(), f.end()) != f.end()) r.fail("sweep.freqs", "duplicate frequencies");
    }
    if (e == Experiment::nonlinear_steer) {
      for (std::size_t i = 0; i < c.sweep.snapshots.size(); ++i)
        if (c.sweep.snapshots[i] > c.T)
          r.fail("sweep.snapshots[" + std::to_string(i) + "]", "must not exceed T");
      if (c.T / c.solver.dt > 1e7) r.fail("solver.dt, T", "more than 10^7 time steps");
    }
  }

  if (!r.errors.empty()) throw ConfigViolations(r.errors);
  return c;
}

inline ExperimentConfig parse_config(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Full document; sweep carries only the keys the experiment reads.
inline nlohmann::ordered_json serialize(const ExperimentConfig& c) {
  using J = nlohmann::ordered_json;
  J j;
  j["experiment"] = std::string(experiment_name(c.experiment));
  j["grid"] = J{{"K", c.grid.K}, {"L", c.grid.L}};
  j["T"] = c.T;
  j["strip"] = J{{"a", c.strip.a},
                 {"b", c.strip.b},
                 {"orientation", c.strip.orientation == Orientation::vertical ? "vertical" : "horizontal"}};
  j["bump"] = J{{"n_quad", c.bump.n_quad}};
  j["solver"] = J{{"dt", c.solver.dt},
                  {"dealias", c.solver.dealias},
                  {"max_picard", c.solver.max_picard},
                  {"picard_tol", c.solver.picard_tol},
                  {"R", c.solver.R},
                  {"nonlinear", c.solver.nonlinear}};
  const auto& w = c.sweep;
  J s = J::object();
  switch (c.experiment) {
    case Experiment::hum:
      s["pairs"] = w.pairs;
      s["data_norm"] = w.data_norm;
      s["samples_per_unit_time"] = w.samples_per_unit_time;
      s["monolithic"] = w.monolithic;
      break;
    case Experiment::scan_lambda:
    case Experiment::transit:
      s["lambdas"] = w.lambdas;
      if (w.lambda_range)
        s["lambda_range"] = J{{"start", w.lambda_range->start},
                              {"stop", w.lambda_range->stop},
                              {"step", w.lambda_range->step}};
      s["resonant_kmax"] = w.resonant_kmax;
      if (c.experiment == Experiment::scan_lambda) {
        s["weak"] = w.weak;
        s["weak_kappa"] = w.weak_kappa;
      }
      break;
    case Experiment::ingham:
      if (w.cubes > 0)
        s["cubes"] = w.cubes;
      else
        s["freqs"] = w.freqs;
      s["T_list"] = w.T_list;
      break;
    case Experiment::counterexample:
      s["n_list"] = w.n_list;
      if (w.B) s["B"] = *w.B;
      if (w.b_small) s["b_small"] = *w.b_small;
      s["samples_per_unit_time"] = w.samples_per_unit_time;
      s["ny"] = w.ny;
      break;
    case Experiment::nonlinear_steer:
      s["snapshots"] = w.snapshots;
      s["samples_per_unit_time"] = w.samples_per_unit_time;
      break;
    case Experiment::selftest:
      break;
  }
  j["sweep"] = s;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace kplab
