#pragma once

// Linear-response Landauer conductance of a saddle-point constriction.
//
// Each transverse subband n has bottom
//   eps_n(V) = mode_spacing * (n + 1/2) - lever_arm * (V - V_offset)
// and transmits with the saddle-point (logistic) probability
//   T_n(E) = 1 / (1 + exp(-2 pi (E - eps_n) / tunnel_width)).
// V_offset places the first subband bottom pinchoff_margin above the Fermi
// energy at threshold_voltage, so the channel is just pinched off there.
// Conductance is in units of 2e^2/h.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpcpd/constants.hpp"
#include "qpcpd/quadrature.hpp"

namespace qpcpd {

struct DeviceParams {
  double fermi_energy = 1.8;        // meV
  double temperature = 4.2;         // K
  double mode_spacing = 6.0;        // meV
  double tunnel_width = 0.6;        // meV
  double lever_arm = 60.0;          // meV / V
  double threshold_voltage = -1.5;  // V
  double pinchoff_margin = 1.75;    // meV above E_F of eps_0 at threshold
  int num_modes = 5;
  bool anomaly_enabled = false;
  double anomaly_weight = 0.7;
  double anomaly_split = 2.0;       // meV
  double source_drain_bias = 0.5;   // mV, metadata only
  int quadrature_order = 384;

  bool operator==(const DeviceParams&) const = default;
};

inline void validate(const DeviceParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::domain_error(std::string("invalid device parameters: ") + what);
    }
  };
  require(std::isfinite(p.fermi_energy), "fermi_energy must be finite");
  require(p.temperature > 0.0 && std::isfinite(p.temperature), "temperature must be > 0");
  require(p.mode_spacing > 0.0, "mode_spacing must be > 0");
  require(p.tunnel_width > 0.0, "tunnel_width must be > 0");
  require(p.lever_arm > 0.0, "lever_arm must be > 0");
  require(std::isfinite(p.threshold_voltage), "threshold_voltage must be finite");
  require(std::isfinite(p.pinchoff_margin), "pinchoff_margin must be finite");
  require(p.num_modes >= 1, "num_modes must be >= 1");
  require(!p.anomaly_enabled || (p.anomaly_weight > 0.0 && p.anomaly_weight < 1.0),
          "anomaly_weight must lie in (0, 1)");
  require(!p.anomaly_enabled || p.anomaly_split >= 0.0, "anomaly_split must be >= 0");
  require(p.quadrature_order >= 2, "quadrature_order must be >= 2");
}

enum class AxisKind { gate_voltage, exposure_time };

inline const char* to_string(AxisKind kind) {
  return kind == AxisKind::gate_voltage ? "gate_voltage" : "time";
}

/// Sampled conductance (units 2e^2/h) against gate voltage or exposure time.
struct ConductanceCurve {
  AxisKind axis_kind = AxisKind::gate_voltage;
  std::vector<double> axis;
  std::vector<double> values;

  std::size_t size() const { return axis.size(); }

  bool axis_strictly_increasing() const {
    return std::adjacent_find(axis.begin(), axis.end(), std::greater_equal<>()) == axis.end();
  }
};

namespace detail {

inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// T(1 - T) for T = logistic(x), without cancellation.
inline double logistic_slope(double x) {
  const double e = std::exp(-std::abs(x));
  return e / ((1.0 + e) * (1.0 + e));
}

inline double saddle_exponent(double energy, double bottom, double tunnel_width) {
  return 2.0 * constants::pi * (energy - bottom) / tunnel_width;
}

}  // namespace detail

/// Gate voltage at which eps_n = mode_spacing * (n + 1/2). Chosen so that eps_0 sits
/// pinchoff_margin above the Fermi energy at threshold_voltage.
inline double gate_offset(const DeviceParams& p) {
  return p.threshold_voltage + (p.fermi_energy + p.pinchoff_margin - 0.5 * p.mode_spacing) / p.lever_arm;
}

/// Subband bottom eps_n in meV.
inline double subband_energy(int mode_index, double gate_voltage, const DeviceParams& p) {
  return p.mode_spacing * (mode_index + 0.5) - p.lever_arm * (gate_voltage - gate_offset(p));
}

/// Saddle-point transmission of a single subband.
inline double mode_transmission(double energy, int mode_index, double gate_voltage, const DeviceParams& p) {
  if (mode_index < 0 || mode_index >= p.num_modes) {
    throw std::domain_error("mode_index out of range");
  }
  const double bottom = subband_energy(mode_index, gate_voltage, p);
  return detail::logistic(detail::saddle_exponent(energy, bottom, p.tunnel_width));
}

/// Transmission of subband n as used in the Landauer sum. With the anomaly
/// enabled, mode 0 is split into two weighted logistic components.
inline double channel_transmission(double energy, int mode_index, double gate_voltage, const DeviceParams& p) {
  const double bottom = subband_energy(mode_index, gate_voltage, p);
  if (mode_index == 0 && p.anomaly_enabled) {
    const double lower = detail::logistic(detail::saddle_exponent(energy, bottom, p.tunnel_width));
    const double upper =
        detail::logistic(detail::saddle_exponent(energy, bottom + p.anomaly_split, p.tunnel_width));
    return p.anomaly_weight * lower + (1.0 - p.anomaly_weight) * upper;
  }
  return detail::logistic(detail::saddle_exponent(energy, bottom, p.tunnel_width));
}

/// d(channel_transmission)/dV at fixed energy.
inline double channel_transmission_gate_derivative(double energy, int mode_index, double gate_voltage,
                                                   const DeviceParams& p) {
  const double scale = 2.0 * constants::pi * p.lever_arm / p.tunnel_width;
  const double bottom = subband_energy(mode_index, gate_voltage, p);
  const double lower = detail::logistic_slope(detail::saddle_exponent(energy, bottom, p.tunnel_width));
  if (mode_index == 0 && p.anomaly_enabled) {
    const double upper =
        detail::logistic_slope(detail::saddle_exponent(energy, bottom + p.anomaly_split, p.tunnel_width));
    return scale * (p.anomaly_weight * lower + (1.0 - p.anomaly_weight) * upper);
  }
  return scale * lower;
}

/// Unbroadened Landauer sum at the Fermi energy (the T -> 0 limit).
inline double zero_temperature_conductance(double gate_voltage, const DeviceParams& p) {
  double g = 0.0;
  for (int n = 0; n < p.num_modes; ++n) {
    g += channel_transmission(p.fermi_energy, n, gate_voltage, p);
  }
  return g;
}

namespace detail {

// Thermal average of integrand(E) against -df/dE over E_F +- 10 kT. The
// kernel is renormalised on the window so a constant integrand is exact.
template <typename Integrand>
double thermal_average(const DeviceParams& p, Integrand&& integrand) {
  const GaussLegendreRule& rule = gauss_legendre(static_cast<std::size_t>(p.quadrature_order));
  const double kt = constants::boltzmann_meV_per_K * p.temperature;
  const double half_width = 10.0 * kt;
  double weighted = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < rule.order(); ++i) {
    const double offset = half_width * rule.nodes[i];
    const double c = std::cosh(0.5 * offset / kt);
    const double kernel = rule.weights[i] / (c * c);
    norm += kernel;
    weighted += kernel * integrand(p.fermi_energy + offset);
  }
  return weighted / norm;
}

}  // namespace detail

/// Thermally broadened conductance in units of 2e^2/h.
inline double conductance(double gate_voltage, const DeviceParams& p) {
  double g = 0.0;
  for (int n = 0; n < p.num_modes; ++n) {
    const double mode = detail::thermal_average(
        p, [&](double energy) { return channel_transmission(energy, n, gate_voltage, p); });
    g += std::clamp(mode, 0.0, 1.0);
  }
  return g;
}

/// Analytic dG/dV_g in (2e^2/h) per volt.
inline double transconductance(double gate_voltage, const DeviceParams& p) {
  double g = 0.0;
  for (int n = 0; n < p.num_modes; ++n) {
    g += detail::thermal_average(
        p, [&](double energy) { return channel_transmission_gate_derivative(energy, n, gate_voltage, p); });
  }
  return g;
}

inline ConductanceCurve sweep(double v_start, double v_end, std::size_t n_points, const DeviceParams& p) {
  validate(p);
  if (!(v_start < v_end)) {
    throw std::domain_error("sweep range must satisfy v_start < v_end");
  }
  if (n_points < 2) {
    throw std::domain_error("sweep needs at least 2 points");
  }
  ConductanceCurve curve;
  curve.axis_kind = AxisKind::gate_voltage;
  curve.axis.resize(n_points);
  curve.values.resize(n_points);
  const double step = (v_end - v_start) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double v = i + 1 == n_points ? v_end : v_start + step * static_cast<double>(i);
    curve.axis[i] = v;
    curve.values[i] = conductance(v, p);
  }
  return curve;
}

/// Central differences, one-sided at the ends.
inline ConductanceCurve differential_conductance(const ConductanceCurve& curve) {
  if (curve.axis_kind != AxisKind::gate_voltage) {
    throw std::domain_error("differential conductance needs a gate-voltage axis");
  }
  const std::size_t n = curve.size();
  if (n < 3 || curve.values.size() != n) {
    throw std::domain_error("differential conductance needs at least 3 points");
  }
  const auto& x = curve.axis;
  const auto& y = curve.values;
  ConductanceCurve out;
  out.axis_kind = AxisKind::gate_voltage;
  out.axis = x;
  out.values.resize(n);
  out.values[0] = (y[1] - y[0]) / (x[1] - x[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out.values[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
  }
  out.values[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
  return out;
}

/// Smallest gate voltage in [lo, hi] whose conductance reaches target,
/// by bisection. Targets outside the bracket clamp to its ends.
inline double gate_voltage_for_conductance(double target, double lo, double hi, const DeviceParams& p) {
  if (!(lo < hi)) {
    throw std::domain_error("inversion bracket must satisfy lo < hi");
  }
  if (conductance(lo, p) >= target) {
    return lo;
  }
  if (conductance(hi, p) <= target) {
    return hi;
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (conductance(mid, p) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Conductance quantum in siemens for a value in units of 2e^2/h.
inline double to_siemens(double g) { return g * constants::conductance_quantum_S; }

}  // namespace qpcpd
