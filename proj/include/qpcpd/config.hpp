#pragma once

// Flat key=value configuration with section prefixes (device., traps.,
// source., exposure., sweep., analysis., figures.). Doubles are written in
// shortest round-trip form, so parse(serialize(c)) == c exactly.

#include <charconv>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include "qpcpd/analyze.hpp"
#include "qpcpd/charge.hpp"
#include "qpcpd/random.hpp"
#include "qpcpd/simulate.hpp"
#include "qpcpd/transport.hpp"

namespace qpcpd {

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or unwritable file (CLI exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// ---------------------------------------------------------------------------
// scalar codecs

inline std::string format_value(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}
template <std::integral T>
  requires(!std::is_same_v<T, bool>)
std::string format_value(T v) {
  return std::to_string(v);
}
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(CouplingDistribution v) { return to_string(v); }

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
void parse_number(std::string_view text, T& out, std::string_view key) {
  text = trim(text);
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  out = value;
}

}  // namespace detail

inline void parse_value(std::string_view text, double& out, std::string_view key) {
  text = detail::trim(text);
  if (text == "nan" || text == "inf" || text == "-inf") {
    throw ConfigError("non-finite value for " + std::string(key));
  }
  detail::parse_number(text, out, key);
}
template <std::integral T>
  requires(!std::is_same_v<T, bool>)
void parse_value(std::string_view text, T& out, std::string_view key) {
  detail::parse_number(text, out, key);
}
inline void parse_value(std::string_view text, bool& out, std::string_view key) {
  text = detail::trim(text);
  if (text == "true" || text == "1") {
    out = true;
  } else if (text == "false" || text == "0") {
    out = false;
  } else {
    throw ConfigError("bad boolean for " + std::string(key) + ": '" + std::string(text) + "'");
  }
}
inline void parse_value(std::string_view text, std::string& out, std::string_view) { out = detail::trim(text); }
inline void parse_value(std::string_view text, CouplingDistribution& out, std::string_view key) {
  try {
    out = parse_coupling_distribution(detail::trim(text));
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad coupling distribution for " + std::string(key) + ": '" + std::string(text) + "'");
  }
}

// ---------------------------------------------------------------------------
// field tables

template <typename Self, typename Visitor>
  requires std::is_same_v<std::remove_const_t<Self>, DeviceParams>
void visit_fields(Self& p, Visitor&& v) {
  v("fermi_energy", p.fermi_energy);
  v("temperature", p.temperature);
  v("mode_spacing", p.mode_spacing);
  v("tunnel_width", p.tunnel_width);
  v("lever_arm", p.lever_arm);
  v("threshold_voltage", p.threshold_voltage);
  v("pinchoff_margin", p.pinchoff_margin);
  v("num_modes", p.num_modes);
  v("anomaly_enabled", p.anomaly_enabled);
  v("anomaly_weight", p.anomaly_weight);
  v("anomaly_split", p.anomaly_split);
  v("source_drain_bias", p.source_drain_bias);
  v("quadrature_order", p.quadrature_order);
}

template <typename Self, typename Visitor>
  requires std::is_same_v<std::remove_const_t<Self>, TrapConfig>
void visit_fields(Self& c, Visitor&& v) {
  v("carrier_density", c.carrier_density);
  v("active_area", c.active_area);
  v("channel_capacitance", c.channel_capacitance);
  v("saturation_gate_shift", c.saturation_gate_shift);
  v("coupling_distribution", c.coupling_distribution);
  v("dx_fraction", c.dx_fraction);
  v("buffer_trap_count", c.buffer_trap_count);
  v("buffer_coupling_scale", c.buffer_coupling_scale);
  v("buffer_at_short_wavelength", c.buffer_at_short_wavelength);
}

template <typename Self, typename Visitor>
  requires std::is_same_v<std::remove_const_t<Self>, PhotonSource>
void visit_fields(Self& s, Visitor&& v) {
  v("wavelength", s.wavelength);
  v("incident_rate", s.incident_rate);
  v("quantum_efficiency", s.quantum_efficiency);
}

/// The exposure seed is derived from the master seed in run configs and is
/// only listed where a trace records the resolved value.
template <typename Self, typename Visitor>
  requires std::is_same_v<std::remove_const_t<Self>, ExposureConfig>
void visit_fields(Self& c, Visitor&& v, bool include_seed = true) {
  v("duration", c.duration);
  v("sample_interval", c.sample_interval);
  v("dark_lead", c.dark_lead);
  v("gate_bias", c.gate_bias);
  v("noise_sigma", c.noise_sigma);
  if (include_seed) v("seed", c.seed);
  v("rts_amplitude", c.rts_amplitude);
  v("rts_rate", c.rts_rate);
}

struct SweepSettings {
  double v_start = -1.6;
  double v_end = -1.1;
  int n_points = 501;
  double noise_sigma = 0.0;

  bool operator==(const SweepSettings&) const = default;
};

struct AnalysisSettings {
  int window = 24;
  double threshold = 5.0;
  double bin_width = 0.0;  // 0 selects mean interval / 3
  double min_transconductance = 1.0;  // (2e^2/h)/V

  bool operator==(const AnalysisSettings&) const = default;

  AnalysisParams params() const {
    AnalysisParams p;
    p.detector.window = static_cast<std::size_t>(window);
    p.detector.threshold = threshold;
    p.bin_width = bin_width;
    p.min_transconductance = min_transconductance;
    return p;
  }
};

struct FigureSettings {
  int interval_events = 10000;  // photon-counting run behind the interval figure

  bool operator==(const FigureSettings&) const = default;
};

template <typename Self, typename Visitor>
  requires std::is_same_v<std::remove_const_t<Self>, SweepSettings>
void visit_fields(Self& s, Visitor&& v) {
  v("v_start", s.v_start);
  v("v_end", s.v_end);
  v("n_points", s.n_points);
  v("noise_sigma", s.noise_sigma);
}

template <typename Self, typename Visitor>
  requires std::is_same_v<std::remove_const_t<Self>, AnalysisSettings>
void visit_fields(Self& s, Visitor&& v) {
  v("window", s.window);
  v("threshold", s.threshold);
  v("bin_width", s.bin_width);
  v("min_transconductance", s.min_transconductance);
}

template <typename Self, typename Visitor>
  requires std::is_same_v<std::remove_const_t<Self>, FigureSettings>
void visit_fields(Self& s, Visitor&& v) {
  v("interval_events", s.interval_events);
}

struct RunConfig {
  DeviceParams device;
  TrapConfig traps;
  PhotonSource source;
  ExposureConfig exposure;
  SweepSettings sweep;
  AnalysisSettings analysis;
  FigureSettings figures;
  std::string output_dir = "out";
  std::uint64_t seed = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Sub-seed of the trap ensemble.
inline std::uint64_t ensemble_seed(const RunConfig& c) { return sub_seed(c.seed, "ensemble"); }
/// Sub-seed of the exposure (photon arrivals, capture choice, noise, RTS).
inline std::uint64_t exposure_seed(const RunConfig& c) { return sub_seed(c.seed, "exposure"); }
inline std::uint64_t sweep_seed(const RunConfig& c) { return sub_seed(c.seed, "sweep"); }
inline std::uint64_t interval_figure_seed(const RunConfig& c) { return sub_seed(c.seed, "interval-figure"); }

/// Exposure settings with the derived seed filled in.
inline ExposureConfig resolved_exposure(const RunConfig& c) {
  ExposureConfig e = c.exposure;
  e.seed = exposure_seed(c);
  return e;
}

inline void validate(const RunConfig& c) {
  try {
    validate(c.device);
    validate(c.traps);
    validate(c.source);
    validate(c.exposure);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  if (!(c.sweep.v_start < c.sweep.v_end)) throw ConfigError("sweep.v_start must be < sweep.v_end");
  if (c.sweep.n_points < 2) throw ConfigError("sweep.n_points must be >= 2");
  if (c.sweep.noise_sigma < 0.0) throw ConfigError("sweep.noise_sigma must be >= 0");
  if (c.analysis.window < 2) throw ConfigError("analysis.window must be >= 2");
  if (!(c.analysis.threshold > 0.0)) throw ConfigError("analysis.threshold must be > 0");
  if (c.analysis.bin_width < 0.0) throw ConfigError("analysis.bin_width must be >= 0");
  if (c.analysis.min_transconductance < 0.0) throw ConfigError("analysis.min_transconductance must be >= 0");
  if (c.figures.interval_events < 3) throw ConfigError("figures.interval_events must be >= 3");
}

namespace detail {

template <typename T, typename... Extra>
void emit_section(KeyValues& out, const std::string& prefix, const T& section, Extra... extra) {
  visit_fields(section, [&](const char* name, const auto& value) {
    out.emplace_back(prefix + name, format_value(value));
  }, extra...);
}

template <typename T, typename... Extra>
bool assign_in_section(std::string_view key, std::string_view value, std::string_view prefix, T& section,
                       Extra... extra) {
  if (key.substr(0, prefix.size()) != prefix) {
    return false;
  }
  const std::string_view name = key.substr(prefix.size());
  bool found = false;
  visit_fields(section, [&](const char* field, auto& member) {
    if (!found && name == field) {
      parse_value(value, member, key);
      found = true;
    }
  }, extra...);
  return found;
}

}  // namespace detail

inline KeyValues to_key_values(const DeviceParams& d) {
  KeyValues kv;
  detail::emit_section(kv, "device.", d);
  return kv;
}

inline KeyValues to_key_values(const RunConfig& c) {
  KeyValues kv;
  kv.emplace_back("seed", format_value(c.seed));
  kv.emplace_back("output.dir", c.output_dir);
  detail::emit_section(kv, "device.", c.device);
  detail::emit_section(kv, "traps.", c.traps);
  detail::emit_section(kv, "source.", c.source);
  detail::emit_section(kv, "exposure.", c.exposure, false);
  detail::emit_section(kv, "sweep.", c.sweep);
  detail::emit_section(kv, "analysis.", c.analysis);
  detail::emit_section(kv, "figures.", c.figures);
  return kv;
}

/// Applies one key; false when the key is unknown.
inline bool apply_key(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "seed") {
    parse_value(value, c.seed, key);
    return true;
  }
  if (key == "output.dir") {
    parse_value(value, c.output_dir, key);
    return true;
  }
  return detail::assign_in_section(key, value, "device.", c.device) ||
         detail::assign_in_section(key, value, "traps.", c.traps) ||
         detail::assign_in_section(key, value, "source.", c.source) ||
         detail::assign_in_section(key, value, "exposure.", c.exposure, false) ||
         detail::assign_in_section(key, value, "sweep.", c.sweep) ||
         detail::assign_in_section(key, value, "analysis.", c.analysis) ||
         detail::assign_in_section(key, value, "figures.", c.figures);
}

inline std::string serialize(const RunConfig& c) {
  std::string out;
  for (const auto& [key, value] : to_key_values(c)) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

/// Parses key=value lines; blank lines and lines starting with '#' are
/// skipped. Unknown keys are errors.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = detail::trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (!apply_key(base, key, value)) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  return base;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

}  // namespace qpcpd
