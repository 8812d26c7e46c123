#pragma once

// Event-driven Monte Carlo of a photo-exposure: absorbed photons arrive as a
// homogeneous Poisson process at incident_rate * quantum_efficiency, each one
// tries to fill a trap, and the channel is sampled on a uniform clock at
//   G(gate_bias + effective_gate_shift) + noise.
// Streams (tags under the exposure seed): "photons", "capture", "noise", "rts".

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qpcpd/charge.hpp"
#include "qpcpd/random.hpp"
#include "qpcpd/transport.hpp"

namespace qpcpd {

struct ExposureConfig {
  double duration = 7200.0;        // s
  double sample_interval = 0.5;    // s
  double dark_lead = 60.0;         // s before the shutter opens
  double gate_bias = -1.5;         // V
  double noise_sigma = 0.005;      // 2e^2/h
  std::uint64_t seed = 0;
  // Optional two-level fluctuator added on top of the noise. Off when the
  // amplitude is zero.
  double rts_amplitude = 0.0;      // 2e^2/h
  double rts_rate = 0.05;          // switches / s

  bool operator==(const ExposureConfig&) const = default;
};

inline void validate(const ExposureConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::domain_error(std::string("invalid exposure configuration: ") + what);
    }
  };
  require(c.duration > 0.0 && std::isfinite(c.duration), "duration must be > 0");
  require(c.sample_interval > 0.0, "sample_interval must be > 0");
  require(c.dark_lead >= 0.0, "dark_lead must be >= 0");
  require(std::isfinite(c.gate_bias), "gate_bias must be finite");
  require(c.noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(c.rts_amplitude >= 0.0, "rts_amplitude must be >= 0");
  require(c.rts_amplitude == 0.0 || c.rts_rate > 0.0, "rts_rate must be > 0 when rts is enabled");
}

/// One captured photo-hole: when, the trap's coupling, and the total
/// effective gate shift right after the capture.
struct TruthEvent {
  double time = 0.0;
  double coupling = 0.0;
  double gate_shift = 0.0;

  bool operator==(const TruthEvent&) const = default;
};

struct Trace {
  AxisKind axis_kind = AxisKind::exposure_time;
  DeviceParams device;
  PhotonSource source;
  ExposureConfig exposure;
  double initial_gate_shift = 0.0;
  // Configuration keys not covered by the typed snapshot (trap settings,
  // master seed, ...), kept verbatim in header order.
  std::vector<std::pair<std::string, std::string>> extra;

  std::vector<double> axis;         // time (s) or gate voltage (V)
  std::vector<double> conductance;  // 2e^2/h
  std::vector<TruthEvent> truth_events;
  std::vector<double> photon_times;  // every absorbed photon, captured or not

  std::size_t size() const { return axis.size(); }

  ConductanceCurve as_curve() const { return ConductanceCurve{axis_kind, axis, conductance}; }

  bool operator==(const Trace&) const = default;
};

/// Arrival times of a homogeneous Poisson process on (0, duration].
inline std::vector<double> poisson_arrivals(double rate, double duration, Rng& rng) {
  std::vector<double> times;
  if (rate <= 0.0) {
    return times;
  }
  double t = rng.exponential(rate);
  while (t <= duration) {
    times.push_back(t);
    t += rng.exponential(rate);
  }
  return times;
}

/// The first n arrival times of a Poisson process (no duration cap).
inline std::vector<double> poisson_arrivals_count(double rate, std::size_t n, Rng& rng) {
  std::vector<double> times;
  times.reserve(n);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t += rng.exponential(rate);
    times.push_back(t);
  }
  return times;
}

/// Sample clock from -dark_lead to duration inclusive.
inline std::vector<double> sample_times(const ExposureConfig& c) {
  const double span = c.duration + c.dark_lead;
  const auto n = static_cast<std::size_t>(std::floor(span / c.sample_interval + 1e-9)) + 1;
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) {
    times[k] = -c.dark_lead + c.sample_interval * static_cast<double>(k);
  }
  return times;
}

namespace detail {

/// Two-level fluctuator state (0 or 1) at each sample time.
inline std::vector<int> telegraph_states(const std::vector<double>& times, double rate, Rng& rng) {
  std::vector<int> states(times.size(), 0);
  if (times.empty()) {
    return states;
  }
  int state = 0;
  double next_switch = times.front() + rng.exponential(rate);
  for (std::size_t k = 0; k < times.size(); ++k) {
    while (next_switch <= times[k]) {
      state = 1 - state;
      next_switch += rng.exponential(rate);
    }
    states[k] = state;
  }
  return states;
}

inline void add_noise(std::vector<double>& values, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) {
    return;
  }
  Rng rng(seed);
  for (double& v : values) {
    v += sigma * rng.normal();
  }
}

}  // namespace detail

/// Runs one exposure. The ensemble is updated in place and ends in the
/// post-exposure occupancy. buffer_at_short_wavelength lets AlGaAs-absorbed
/// photons also fill buffer micro-traps.
inline Trace simulate_exposure(const DeviceParams& device, TrapEnsemble& ensemble, const PhotonSource& source,
                               const ExposureConfig& config, bool buffer_at_short_wavelength = false) {
  validate(device);
  validate(source);
  validate(config);

  Trace trace;
  trace.axis_kind = AxisKind::exposure_time;
  trace.device = device;
  trace.source = source;
  trace.exposure = config;
  trace.initial_gate_shift = effective_gate_shift(ensemble);

  const AbsorptionLayer layer = absorption_target(source.wavelength);
  if (layer != AbsorptionLayer::none) {
    Rng photons(sub_seed(config.seed, "photons"));
    trace.photon_times = poisson_arrivals(source.detection_rate(), config.duration, photons);
  }

  Rng capture_rng(sub_seed(config.seed, "capture"));
  for (const double t : trace.photon_times) {
    const auto captured = capture_photon(ensemble, layer, capture_rng, buffer_at_short_wavelength);
    if (captured) {
      trace.truth_events.push_back({t, ensemble.traps[*captured].coupling, effective_gate_shift(ensemble)});
    }
  }

  trace.axis = sample_times(config);
  trace.conductance.resize(trace.axis.size());
  double level = conductance(config.gate_bias + trace.initial_gate_shift, device);
  std::size_t next_event = 0;
  for (std::size_t k = 0; k < trace.axis.size(); ++k) {
    bool moved = false;
    while (next_event < trace.truth_events.size() && trace.truth_events[next_event].time <= trace.axis[k]) {
      ++next_event;
      moved = true;
    }
    if (moved) {
      level = conductance(config.gate_bias + trace.truth_events[next_event - 1].gate_shift, device);
    }
    trace.conductance[k] = level;
  }

  detail::add_noise(trace.conductance, config.noise_sigma, sub_seed(config.seed, "noise"));
  if (config.rts_amplitude > 0.0) {
    Rng rts(sub_seed(config.seed, "rts"));
    const auto states = detail::telegraph_states(trace.axis, config.rts_rate, rts);
    for (std::size_t k = 0; k < states.size(); ++k) {
      trace.conductance[k] += config.rts_amplitude * states[k];
    }
  }
  return trace;
}

/// Gate sweep with additive white noise on the conductance.
inline Trace simulate_gate_sweep(const DeviceParams& device, double v_start, double v_end, std::size_t n_points,
                                 double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) {
    throw std::domain_error("noise_sigma must be >= 0");
  }
  const ConductanceCurve curve = sweep(v_start, v_end, n_points, device);
  Trace trace;
  trace.axis_kind = AxisKind::gate_voltage;
  trace.device = device;
  trace.exposure.noise_sigma = noise_sigma;
  trace.exposure.seed = seed;
  trace.axis = curve.axis;
  trace.conductance = curve.values;
  detail::add_noise(trace.conductance, noise_sigma, sub_seed(seed, "sweep-noise"));
  return trace;
}

/// Effective gate shift in force at each sample of an exposure trace.
inline std::vector<double> gate_shift_at_samples(const Trace& trace) {
  std::vector<double> shifts(trace.size(), trace.initial_gate_shift);
  std::size_t next_event = 0;
  double shift = trace.initial_gate_shift;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    while (next_event < trace.truth_events.size() && trace.truth_events[next_event].time <= trace.axis[k]) {
      shift = trace.truth_events[next_event].gate_shift;
      ++next_event;
    }
    shifts[k] = shift;
  }
  return shifts;
}

/// Pre-noise conductance of an exposure trace, rebuilt from its truth events.
inline std::vector<double> noiseless_conductance(const Trace& trace) {
  if (trace.axis_kind != AxisKind::exposure_time) {
    throw std::domain_error("noiseless reconstruction needs an exposure trace");
  }
  const auto shifts = gate_shift_at_samples(trace);
  std::vector<double> out(shifts.size());
  for (std::size_t k = 0; k < shifts.size(); ++k) {
    if (k > 0 && shifts[k] == shifts[k - 1]) {
      out[k] = out[k - 1];
    } else {
      out[k] = conductance(trace.exposure.gate_bias + shifts[k], trace.device);
    }
  }
  return out;
}

/// Re-plots an exposure against the effective gate voltage
/// gate_bias + trapped-charge shift. Samples sharing one shift are averaged
/// into a single point, so the axis is strictly increasing.
inline ConductanceCurve exposure_to_gate_equivalence(const Trace& trace) {
  if (trace.axis_kind != AxisKind::exposure_time) {
    throw std::domain_error("gate equivalence needs an exposure trace with truth events");
  }
  if (trace.size() == 0) {
    throw std::domain_error("gate equivalence needs at least one sample");
  }
  ConductanceCurve curve;
  curve.axis_kind = AxisKind::gate_voltage;
  const auto shifts = gate_shift_at_samples(trace);
  std::size_t k = 0;
  while (k < shifts.size()) {
    std::size_t end = k;
    double sum = 0.0;
    while (end < shifts.size() && shifts[end] == shifts[k]) {
      sum += trace.conductance[end];
      ++end;
    }
    const double v = trace.exposure.gate_bias + shifts[k];
    if (curve.axis.empty() || v > curve.axis.back()) {
      curve.axis.push_back(v);
      curve.values.push_back(sum / static_cast<double>(end - k));
    }
    k = end;
  }
  return curve;
}

}  // namespace qpcpd
