#pragma once

// Experiment description: JSON (comments allowed) in, fully resolved JSON out.
// Requires nlohmann/json on the include path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "superrad/analysis.hpp"
#include "superrad/couplings.hpp"
#include "superrad/error.hpp"
#include "superrad/sweep.hpp"
#include "superrad/units.hpp"

namespace superrad {

enum class DipoleKind { SigmaMinus, Linear };

struct DipoleSpec {
  DipoleKind kind = DipoleKind::SigmaMinus;
  Vec3 axis = Vec3::UnitY();

  CVec3 vector() const {
    return kind == DipoleKind::SigmaMinus ? sigma_minus_dipole(axis) : linear_dipole(axis);
  }
};

struct OutputSpec {
  std::string dir = "out";
  std::string format = "csv";
  bool keep_realizations = false;
};

struct ExperimentConfig {
  TransitionSpec transition;
  DipoleSpec dipole;
  Scenario scenario;             // scenario.drive.t_off holds the pulse duration
  bool has_duration = false;     // duration given (required by simulate/analyze)
  DecayWindows windows;
  std::vector<double> sweep_durations;
  AnalysisOptions analysis;
  OutputSpec outputs;
};

inline constexpr std::size_t kDefaultConfigRealizations = 1000;

namespace config_detail {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

inline std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

[[noreturn]] inline void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

inline void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) {
    fail(path.empty() ? "config" : path, "must be an object");
  }
}

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<std::string_view> allowed) {
  check_object(j, path);
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      std::string list;
      for (auto a : allowed) {
        list += (list.empty() ? "" : ", ") + std::string(a);
      }
      fail(join(path, item.key()), "unknown key (allowed: " + list + ")");
    }
  }
}

inline double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) {
    fail(field, "must be a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    fail(field, "must be finite");
  }
  return x;
}

inline std::optional<double> opt_number(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) {
    return std::nullopt;
  }
  return as_number(j.at(key), join(path, key));
}

inline double number(const json& j, const std::string& path, const char* key, double def) {
  return opt_number(j, path, key).value_or(def);
}

inline std::uint64_t as_unsigned(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) {
    return v.get<std::uint64_t>();
  }
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  fail(field, "must be a non-negative integer");
}

inline std::uint64_t unsigned_or(const json& j, const std::string& path, const char* key,
                                 std::uint64_t def) {
  return j.contains(key) ? as_unsigned(j.at(key), join(path, key)) : def;
}

inline std::string string_or(const json& j, const std::string& path, const char* key,
                             std::string def) {
  if (!j.contains(key)) {
    return def;
  }
  if (!j.at(key).is_string()) {
    fail(join(path, key), "must be a string");
  }
  return j.at(key).get<std::string>();
}

inline bool bool_or(const json& j, const std::string& path, const char* key, bool def) {
  if (!j.contains(key)) {
    return def;
  }
  if (!j.at(key).is_boolean()) {
    fail(join(path, key), "must be true or false");
  }
  return j.at(key).get<bool>();
}

inline Vec3 as_vec3(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 3) {
    fail(field, "must be an array of 3 numbers");
  }
  return {as_number(v[0], field + "[0]"), as_number(v[1], field + "[1]"),
          as_number(v[2], field + "[2]")};
}

inline Vec3 unit_vec3(const json& j, const std::string& path, const char* key, Vec3 def) {
  if (!j.contains(key)) {
    return def;
  }
  const std::string field = join(path, key);
  const Vec3 v = as_vec3(j.at(key), field);
  if (!(v.norm() > 0.0)) {
    fail(field, "must be a nonzero vector");
  }
  // Leave already-normalized input untouched so the resolved echo is a fixed point.
  return std::abs(v.norm() - 1.0) <= 1e-15 ? v : v.normalized();
}

inline std::string list_names(std::initializer_list<const char*> keys) {
  std::string names;
  for (const char* k : keys) {
    names += (names.empty() ? "" : ", ") + std::string(k);
  }
  return names;
}

inline int exactly_one_or_none(const json& j, const std::string& path,
                               std::initializer_list<const char*> keys) {
  int found = -1;
  int idx = 0;
  for (const char* k : keys) {
    if (j.contains(k)) {
      if (found >= 0) {
        fail(path, "exactly one of {" + list_names(keys) + "} may be given");
      }
      found = idx;
    }
    ++idx;
  }
  return found;
}

inline const char* key_at(std::initializer_list<const char*> keys, int i) {
  return *(keys.begin() + i);
}

inline double ns_to_gamma(double ns, const TransitionSpec& tr) {
  return si_time_to_gamma_units(ns * 1e-9, tr);
}

inline std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1;
  int col = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline TransitionSpec parse_transition(const json& root) {
  TransitionSpec tr;
  if (!root.contains("transition")) {
    return tr;
  }
  const json& j = root.at("transition");
  check_keys(j, "transition", {"lambda0_m", "gamma0_rad_per_s", "isat_w_per_m2"});
  tr.lambda0 = number(j, "transition", "lambda0_m", tr.lambda0);
  tr.gamma0 = number(j, "transition", "gamma0_rad_per_s", tr.gamma0);
  tr.isat = number(j, "transition", "isat_w_per_m2", tr.isat);
  try {
    tr.validate();
  } catch (const InputError& e) {
    fail("transition", e.what());
  }
  return tr;
}

inline GeometrySampler parse_geometry(const json& root, const TransitionSpec& tr) {
  if (!root.contains("geometry")) {
    return FixedPairSampler{};
  }
  const std::string path = "geometry";
  const json& j = root.at(path);
  check_object(j, path);
  const std::string type = string_or(j, path, "type", "pair");
  if (type == "pair") {
    check_keys(j, path, {"type", "distance", "distance_nm", "orientation"});
    FixedPairSampler s;
    const int which = exactly_one_or_none(j, path, {"distance", "distance_nm"});
    if (which == 0) {
      s.distance = as_number(j.at("distance"), join(path, "distance"));
    } else if (which == 1) {
      s.distance = si_length_to_lambda_units(
          1e-9 * as_number(j.at("distance_nm"), join(path, "distance_nm")), tr);
    }
    if (!(s.distance > 0.0)) {
      fail(join(path, "distance"), "must be > 0");
    }
    const std::string o = string_or(j, path, "orientation", "solid_angle");
    if (o == "solid_angle") {
      s.orientation = OrientationSampling::SolidAngle;
    } else if (o == "polar_angle") {
      s.orientation = OrientationSampling::PolarAngle;
    } else {
      fail(join(path, "orientation"), "must be \"solid_angle\" or \"polar_angle\"");
    }
    return s;
  }
  if (type == "gaussian_cloud") {
    check_keys(j, path, {"type", "n_atoms", "sigma_ax", "sigma_rad"});
    GaussianCloudSampler s;
    s.n_atoms = unsigned_or(j, path, "n_atoms", s.n_atoms);
    s.sigma_ax = number(j, path, "sigma_ax", s.sigma_ax);
    s.sigma_rad = number(j, path, "sigma_rad", s.sigma_rad);
    if (s.n_atoms < 1) {
      fail(join(path, "n_atoms"), "must be >= 1");
    }
    if (!(s.sigma_ax > 0.0) || !(s.sigma_rad > 0.0)) {
      fail(path, "sigma_ax and sigma_rad must be > 0");
    }
    return s;
  }
  if (type == "chain") {
    check_keys(j, path, {"type", "n_atoms", "spacing", "axis"});
    const std::size_t n = unsigned_or(j, path, "n_atoms", 2);
    const double spacing = number(j, path, "spacing", 1.0 / 3.0);
    const Vec3 axis = unit_vec3(j, path, "axis", Vec3::UnitX());
    if (n < 1) {
      fail(join(path, "n_atoms"), "must be >= 1");
    }
    if (!(spacing > 0.0)) {
      fail(join(path, "spacing"), "must be > 0");
    }
    ExplicitPositions e;
    for (std::size_t i = 0; i < n; ++i) {
      e.positions.push_back(static_cast<double>(i) * spacing * axis);
    }
    return e;
  }
  if (type == "explicit") {
    check_keys(j, path, {"type", "positions"});
    const std::string field = join(path, "positions");
    if (!j.contains("positions") || !j.at("positions").is_array() || j.at("positions").empty()) {
      fail(field, "must be a nonempty array of [x, y, z]");
    }
    ExplicitPositions e;
    for (std::size_t i = 0; i < j.at("positions").size(); ++i) {
      e.positions.push_back(
          as_vec3(j.at("positions")[i], field + "[" + std::to_string(i) + "]"));
    }
    return e;
  }
  fail(join(path, "type"), "must be one of pair, gaussian_cloud, chain, explicit");
}

inline DipoleSpec parse_dipole(const json& root) {
  DipoleSpec d;
  if (!root.contains("dipole")) {
    return d;
  }
  const json& j = root.at("dipole");
  check_keys(j, "dipole", {"type", "axis"});
  const std::string type = string_or(j, "dipole", "type", "sigma_minus");
  if (type == "sigma_minus") {
    d.kind = DipoleKind::SigmaMinus;
  } else if (type == "linear") {
    d.kind = DipoleKind::Linear;
  } else {
    fail("dipole.type", "must be \"sigma_minus\" or \"linear\"");
  }
  d.axis = unit_vec3(j, "dipole", "axis", d.axis);
  return d;
}

inline StateLabel parse_named_state(const std::string& name, const std::string& field) {
  if (name == "plus") return NamedState::Plus;
  if (name == "minus") return NamedState::Minus;
  if (name == "ground") return NamedState::Ground;
  if (name == "all_excited") return NamedState::AllExcited;
  fail(field, "unknown state \"" + name + "\" (plus, minus, ground, all_excited)");
}

inline std::vector<TaggedState> parse_tags(const json& j, const std::string& path) {
  std::vector<TaggedState> tags;
  if (!j.is_array()) {
    fail(path, "must be an array");
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string field = path + "[" + std::to_string(i) + "]";
    const json& t = j[i];
    if (t.is_string()) {
      tags.push_back({t.get<std::string>(), parse_named_state(t.get<std::string>(), field)});
      continue;
    }
    check_keys(t, field, {"label", "vector"});
    if (!t.contains("label") || !t.at("label").is_string() ||
        t.at("label").get<std::string>().empty()) {
      fail(join(field, "label"), "must be a nonempty string");
    }
    const std::string label = t.at("label").get<std::string>();
    if (!t.contains("vector") || !t.at("vector").is_array() || t.at("vector").empty()) {
      fail(join(field, "vector"), "must be a nonempty array of [re, im] pairs");
    }
    const json& v = t.at("vector");
    Eigen::VectorXcd psi(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::string f = join(field, "vector") + "[" + std::to_string(k) + "]";
      if (!v[k].is_array() || v[k].size() != 2) {
        fail(f, "must be [re, im]");
      }
      psi(static_cast<Eigen::Index>(k)) = cplx{as_number(v[k][0], f), as_number(v[k][1], f)};
    }
    tags.push_back({label, psi});
  }
  for (std::size_t a = 0; a < tags.size(); ++a) {
    for (std::size_t b = a + 1; b < tags.size(); ++b) {
      if (tags[a].label == tags[b].label) {
        fail(path, "duplicate tag label \"" + tags[a].label + "\"");
      }
    }
  }
  return tags;
}

inline std::vector<double> parse_sweep(const json& root, const TransitionSpec& tr) {
  if (!root.contains("sweep")) {
    return {};
  }
  const std::string path = "sweep";
  const json& j = root.at(path);
  check_keys(j, path, {"durations", "durations_ns", "start", "stop", "count", "start_ns", "stop_ns"});
  std::vector<double> out;
  const bool list = j.contains("durations") || j.contains("durations_ns");
  const bool range = j.contains("start") || j.contains("stop") || j.contains("count") ||
                     j.contains("start_ns") || j.contains("stop_ns");
  if (list == range) {
    fail(path, "give either a duration list (durations or durations_ns) or a range "
               "(start, stop, count)");
  }
  if (list) {
    const int which = exactly_one_or_none(j, path, {"durations", "durations_ns"});
    const char* key = which == 0 ? "durations" : "durations_ns";
    const std::string field = join(path, key);
    if (!j.at(key).is_array() || j.at(key).empty()) {
      fail(field, "must be a nonempty array of numbers");
    }
    for (std::size_t i = 0; i < j.at(key).size(); ++i) {
      const double d = as_number(j.at(key)[i], field + "[" + std::to_string(i) + "]");
      out.push_back(which == 0 ? d : ns_to_gamma(d, tr));
    }
  } else {
    const int ws = exactly_one_or_none(j, path, {"start", "start_ns"});
    const int we = exactly_one_or_none(j, path, {"stop", "stop_ns"});
    if (ws < 0 || we < 0 || !j.contains("count")) {
      fail(path, "a range needs start, stop and count");
    }
    const double start = ws == 0 ? as_number(j.at("start"), join(path, "start"))
                                 : ns_to_gamma(as_number(j.at("start_ns"), join(path, "start_ns")), tr);
    const double stop = we == 0 ? as_number(j.at("stop"), join(path, "stop"))
                                : ns_to_gamma(as_number(j.at("stop_ns"), join(path, "stop_ns")), tr);
    const std::uint64_t count = as_unsigned(j.at("count"), join(path, "count"));
    if (count < 1) {
      fail(join(path, "count"), "must be >= 1");
    }
    if (count == 1) {
      out.push_back(start);
    } else {
      for (std::uint64_t i = 0; i < count; ++i) {
        out.push_back(start + (stop - start) * static_cast<double>(i) /
                                  static_cast<double>(count - 1));
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0) || (i > 0 && !(out[i] > out[i - 1]))) {
      fail(path, "durations must be positive and strictly increasing");
    }
  }
  return out;
}

inline ojson vec3_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }

inline ojson number_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

}  // namespace config_detail

/// Builds a validated configuration from a parsed JSON tree.
inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  using namespace config_detail;
  check_keys(root, "", {"transition", "geometry", "dipole", "ensemble", "drive", "schedule",
                        "windows", "observables", "sweep", "analysis", "limits", "outputs"});
  ExperimentConfig cfg;
  cfg.transition = parse_transition(root);
  const TransitionSpec& tr = cfg.transition;
  Scenario& sc = cfg.scenario;

  sc.ensemble.sampler = parse_geometry(root, tr);
  cfg.dipole = parse_dipole(root);
  sc.ensemble.dipole = cfg.dipole.vector();

  sc.ensemble.n_realizations = kDefaultConfigRealizations;
  if (root.contains("ensemble")) {
    const json& j = root.at("ensemble");
    check_keys(j, "ensemble", {"n_realizations", "seed", "intensity_jitter_rel"});
    sc.ensemble.n_realizations = unsigned_or(j, "ensemble", "n_realizations", sc.ensemble.n_realizations);
    sc.ensemble.seed = unsigned_or(j, "ensemble", "seed", sc.ensemble.seed);
    sc.ensemble.intensity_jitter_rel =
        number(j, "ensemble", "intensity_jitter_rel", sc.ensemble.intensity_jitter_rel);
    if (sc.ensemble.n_realizations < 1) {
      fail("ensemble.n_realizations", "must be >= 1");
    }
    if (!(sc.ensemble.intensity_jitter_rel >= 0.0)) {
      fail("ensemble.intensity_jitter_rel", "must be >= 0");
    }
  }

  if (!root.contains("drive")) {
    fail("drive", "missing; give one of rabi, s, intensity_mw_per_cm2");
  }
  {
    const json& j = root.at("drive");
    check_keys(j, "drive", {"rabi", "s", "intensity_mw_per_cm2", "detuning", "k_hat", "duration",
                            "duration_ns"});
    const int which = exactly_one_or_none(j, "drive", {"rabi", "s", "intensity_mw_per_cm2"});
    if (which < 0) {
      fail("drive", "exactly one of {rabi, s, intensity_mw_per_cm2} must be given");
    }
    const char* key = key_at({"rabi", "s", "intensity_mw_per_cm2"}, which);
    const double value = as_number(j.at(key), join("drive", key));
    if (!(value >= 0.0)) {
      fail(join("drive", key), "must be >= 0");
    }
    if (which == 0) {
      sc.drive.rabi = value;
    } else if (which == 1) {
      sc.drive.rabi = saturation_to_rabi(value);
    } else {
      // 1 mW/cm^2 = 10 W/m^2
      sc.drive.rabi = saturation_to_rabi(intensity_to_saturation(10.0 * value, tr));
    }
    sc.drive.detuning = number(j, "drive", "detuning", 0.0);
    sc.drive.k_hat = unit_vec3(j, "drive", "k_hat", sc.drive.k_hat);
    const int wd = exactly_one_or_none(j, "drive", {"duration", "duration_ns"});
    if (wd >= 0) {
      cfg.has_duration = true;
      sc.drive.t_off = wd == 0 ? as_number(j.at("duration"), "drive.duration")
                               : ns_to_gamma(as_number(j.at("duration_ns"), "drive.duration_ns"), tr);
      if (!(sc.drive.t_off >= 0.0)) {
        fail("drive.duration", "must be >= 0");
      }
    }
  }

  if (root.contains("schedule")) {
    const json& j = root.at("schedule");
    check_keys(j, "schedule", {"sample_dt", "sample_dt_ns", "record_after", "record_after_ns",
                               "rtol", "atol", "max_step", "method"});
    SamplingSettings& s = sc.sampling;
    if (exactly_one_or_none(j, "schedule", {"sample_dt", "sample_dt_ns"}) == 1) {
      s.sample_dt = ns_to_gamma(as_number(j.at("sample_dt_ns"), "schedule.sample_dt_ns"), tr);
    } else {
      s.sample_dt = number(j, "schedule", "sample_dt", s.sample_dt);
    }
    if (exactly_one_or_none(j, "schedule", {"record_after", "record_after_ns"}) == 1) {
      s.record_after =
          ns_to_gamma(as_number(j.at("record_after_ns"), "schedule.record_after_ns"), tr);
    } else {
      s.record_after = number(j, "schedule", "record_after", s.record_after);
    }
    s.rtol = number(j, "schedule", "rtol", s.rtol);
    s.atol = number(j, "schedule", "atol", s.atol);
    s.max_step = number(j, "schedule", "max_step", s.max_step);
    const std::string method = string_or(j, "schedule", "method", "dopri54");
    if (method == "dopri54") {
      s.method = IntegrationMethod::DormandPrince54;
    } else if (method == "rk4") {
      s.method = IntegrationMethod::Rk4;
    } else {
      fail("schedule.method", "must be \"dopri54\" or \"rk4\"");
    }
    if (!(s.sample_dt > 0.0)) fail("schedule.sample_dt", "must be > 0");
    if (!(s.record_after >= 0.0)) fail("schedule.record_after", "must be >= 0");
    if (!(s.rtol > 0.0)) fail("schedule.rtol", "must be > 0");
    if (!(s.atol > 0.0)) fail("schedule.atol", "must be > 0");
    if (!(s.max_step >= 0.0)) fail("schedule.max_step", "must be >= 0 (0 selects automatic)");
  }

  cfg.windows.super_fit_start = si_time_to_gamma_units(5e-9, tr);
  if (root.contains("windows")) {
    const json& j = root.at("windows");
    check_keys(j, "windows", {"super_fit_start", "super_fit_start_ns", "super_fit_end",
                              "super_count_end", "sub_start", "sub_end"});
    DecayWindows& w = cfg.windows;
    if (exactly_one_or_none(j, "windows", {"super_fit_start", "super_fit_start_ns"}) == 1) {
      w.super_fit_start =
          ns_to_gamma(as_number(j.at("super_fit_start_ns"), "windows.super_fit_start_ns"), tr);
    } else {
      w.super_fit_start = number(j, "windows", "super_fit_start", w.super_fit_start);
    }
    w.super_fit_end = number(j, "windows", "super_fit_end", w.super_fit_end);
    w.super_count_end = number(j, "windows", "super_count_end", w.super_count_end);
    w.sub_start = number(j, "windows", "sub_start", w.sub_start);
    if (j.contains("sub_end") && !j.at("sub_end").is_null()) {
      w.sub_end = as_number(j.at("sub_end"), "windows.sub_end");
    }
  }
  try {
    cfg.windows.validate();
  } catch (const InputError& e) {
    fail("windows", e.what());
  }

  if (root.contains("observables")) {
    const json& j = root.at("observables");
    check_keys(j, "observables", {"k_ax_hat", "tags"});
    sc.observables.k_ax_hat = unit_vec3(j, "observables", "k_ax_hat", sc.observables.k_ax_hat);
    if (j.contains("tags")) {
      sc.observables.tags = parse_tags(j.at("tags"), "observables.tags");
    }
  }

  cfg.sweep_durations = parse_sweep(root, tr);

  if (root.contains("analysis")) {
    const json& j = root.at("analysis");
    check_keys(j, "analysis", {"background"});
    cfg.analysis.background = number(j, "analysis", "background", 0.0);
  }

  if (root.contains("limits")) {
    const json& j = root.at("limits");
    check_keys(j, "limits", {"n_max"});
    sc.n_max = unsigned_or(j, "limits", "n_max", sc.n_max);
    if (sc.n_max < 1) {
      fail("limits.n_max", "must be >= 1");
    }
  }

  if (root.contains("outputs")) {
    const json& j = root.at("outputs");
    check_keys(j, "outputs", {"dir", "format", "keep_realizations"});
    cfg.outputs.dir = string_or(j, "outputs", "dir", cfg.outputs.dir);
    cfg.outputs.format = string_or(j, "outputs", "format", cfg.outputs.format);
    cfg.outputs.keep_realizations =
        bool_or(j, "outputs", "keep_realizations", cfg.outputs.keep_realizations);
    if (cfg.outputs.format != "csv") {
      fail("outputs.format", "only \"csv\" is supported");
    }
    if (cfg.outputs.dir.empty()) {
      fail("outputs.dir", "must be nonempty");
    }
  }

  // Cross-references.
  const std::size_t n_atoms = sc.ensemble.n_atoms();
  if (n_atoms > sc.n_max) {
    fail("geometry", "N=" + std::to_string(n_atoms) + " exceeds limits.n_max=" +
                         std::to_string(sc.n_max));
  }
  for (std::size_t i = 0; i < sc.observables.tags.size(); ++i) {
    try {
      (void)state_vector(sc.observables.tags[i].state, n_atoms);
    } catch (const InputError& e) {
      fail("observables.tags[" + std::to_string(i) + "]", e.what());
    }
  }
  if (sc.sampling.record_after < cfg.windows.sub_start + 2.0) {
    fail("schedule.record_after",
         "must be >= windows.sub_start + 2 so the subradiant window can be fitted");
  }
  if (const auto* e = std::get_if<ExplicitPositions>(&sc.ensemble.sampler)) {
    try {
      AtomConfiguration(e->positions, sc.ensemble.dipole);
    } catch (const std::exception& ex) {
      fail("geometry", ex.what());
    }
  }
  return cfg;
}

/// Parses config text; syntax errors carry line and column.
inline ExperimentConfig parse_config(std::string_view text) {
  using namespace config_detail;
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ConfigError("syntax error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what(),
                      line, col);
  }
  check_object(root, "");
  // A run manifest carries the resolved config under "config".
  if (root.contains("config") && root.contains("run") && root.size() == 2) {
    return config_from_json(root.at("config"));
  }
  return config_from_json(root);
}

/// Resolved configuration with every default filled in, in library units.
inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  using namespace config_detail;
  const Scenario& sc = cfg.scenario;
  ojson out;
  out["transition"] = {{"lambda0_m", cfg.transition.lambda0},
                       {"gamma0_rad_per_s", cfg.transition.gamma0},
                       {"isat_w_per_m2", cfg.transition.isat}};

  ojson geom;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FixedPairSampler>) {
          geom["type"] = "pair";
          geom["distance"] = s.distance;
          geom["orientation"] =
              s.orientation == OrientationSampling::SolidAngle ? "solid_angle" : "polar_angle";
        } else if constexpr (std::is_same_v<T, GaussianCloudSampler>) {
          geom["type"] = "gaussian_cloud";
          geom["n_atoms"] = s.n_atoms;
          geom["sigma_ax"] = s.sigma_ax;
          geom["sigma_rad"] = s.sigma_rad;
        } else {
          geom["type"] = "explicit";
          geom["positions"] = ojson::array();
          for (const Vec3& p : s.positions) {
            geom["positions"].push_back(vec3_json(p));
          }
        }
      },
      sc.ensemble.sampler);
  out["geometry"] = geom;

  out["dipole"] = {{"type", cfg.dipole.kind == DipoleKind::SigmaMinus ? "sigma_minus" : "linear"},
                   {"axis", vec3_json(cfg.dipole.axis)}};
  out["ensemble"] = {{"n_realizations", sc.ensemble.n_realizations},
                     {"seed", sc.ensemble.seed},
                     {"intensity_jitter_rel", sc.ensemble.intensity_jitter_rel}};

  ojson drive = {{"rabi", sc.drive.rabi},
                 {"detuning", sc.drive.detuning},
                 {"k_hat", vec3_json(sc.drive.k_hat)}};
  if (cfg.has_duration) {
    drive["duration"] = sc.drive.t_off;
  }
  out["drive"] = drive;

  out["schedule"] = {{"sample_dt", sc.sampling.sample_dt},
                     {"record_after", sc.sampling.record_after},
                     {"rtol", sc.sampling.rtol},
                     {"atol", sc.sampling.atol},
                     {"max_step", sc.sampling.max_step},
                     {"method", sc.sampling.method == IntegrationMethod::Rk4 ? "rk4" : "dopri54"}};
  out["windows"] = {{"super_fit_start", cfg.windows.super_fit_start},
                    {"super_fit_end", cfg.windows.super_fit_end},
                    {"super_count_end", cfg.windows.super_count_end},
                    {"sub_start", cfg.windows.sub_start},
                    {"sub_end", number_or_null(cfg.windows.sub_end)}};

  ojson tags = ojson::array();
  for (const TaggedState& t : sc.observables.tags) {
    if (const auto* named = std::get_if<NamedState>(&t.state)) {
      static constexpr const char* kNames[] = {"plus", "minus", "ground", "all_excited"};
      const std::string name = kNames[static_cast<int>(*named)];
      if (name == t.label) {
        tags.push_back(name);
        continue;
      }
    }
    const Eigen::VectorXcd psi = state_vector(t.state, sc.ensemble.n_atoms());
    ojson vec = ojson::array();
    for (Eigen::Index k = 0; k < psi.size(); ++k) {
      vec.push_back(ojson::array({psi(k).real(), psi(k).imag()}));
    }
    tags.push_back({{"label", t.label}, {"vector", vec}});
  }
  out["observables"] = {{"k_ax_hat", vec3_json(sc.observables.k_ax_hat)}, {"tags", tags}};
  if (!cfg.sweep_durations.empty()) {
    out["sweep"] = {{"durations", cfg.sweep_durations}};
  }
  out["analysis"] = {{"background", cfg.analysis.background}};
  out["limits"] = {{"n_max", sc.n_max}};
  out["outputs"] = {{"dir", cfg.outputs.dir},
                    {"format", cfg.outputs.format},
                    {"keep_realizations", cfg.outputs.keep_realizations}};
  return out;
}

inline std::string echo_config(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

}  // namespace superrad
