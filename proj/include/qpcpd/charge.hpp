#pragma once

// Photo-hole trapping. Dopant traps (DX- centres and neutral donors in the
// doped AlGaAs) each shift the channel's effective gate voltage by their
// coupling once occupied; dilute buffer traps do the same with couplings too
// small to resolve individually. Occupancy only ever goes from empty to
// occupied within a run.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qpcpd/constants.hpp"
#include "qpcpd/random.hpp"

namespace qpcpd {

enum class CouplingDistribution { exponential, constant, uniform };

inline const char* to_string(CouplingDistribution d) {
  switch (d) {
    case CouplingDistribution::exponential: return "exponential";
    case CouplingDistribution::constant: return "constant";
    case CouplingDistribution::uniform: return "uniform";
  }
  return "exponential";
}

inline CouplingDistribution parse_coupling_distribution(std::string_view name) {
  if (name == "exponential") return CouplingDistribution::exponential;
  if (name == "constant") return CouplingDistribution::constant;
  if (name == "uniform") return CouplingDistribution::uniform;
  throw std::invalid_argument("unknown coupling distribution: " + std::string(name));
}

struct TrapConfig {
  double carrier_density = 3.3e11;  // cm^-2
  double active_area = 3e-10;       // cm^2
  double channel_capacitance = 1e-16;  // F
  double saturation_gate_shift = 0.2;  // V, all dopant traps filled
  CouplingDistribution coupling_distribution = CouplingDistribution::exponential;
  double dx_fraction = 0.5;  // share of dopant traps that are DX- centres
  int buffer_trap_count = 2000;
  double buffer_coupling_scale = 1e-5;  // V
  bool buffer_at_short_wavelength = false;

  bool operator==(const TrapConfig&) const = default;
};

inline std::size_t dopant_trap_count(const TrapConfig& c) {
  const double n = std::round(c.carrier_density * c.active_area);
  return n > 0.0 ? static_cast<std::size_t>(n) : 0;
}

/// Mean coupling of a dopant trap, so that filling all of them shifts the
/// gate by saturation_gate_shift on average.
inline double mean_dopant_coupling(const TrapConfig& c) {
  const std::size_t n = dopant_trap_count(c);
  if (n == 0) {
    throw std::domain_error("trap configuration yields zero dopant traps");
  }
  return c.saturation_gate_shift / static_cast<double>(n);
}

/// Effective gate shift of a single elementary charge on the channel
/// capacitance, e / C.
inline double single_charge_gate_shift(const TrapConfig& c) {
  return constants::elementary_charge_C / c.channel_capacitance;
}

inline void validate(const TrapConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::domain_error(std::string("invalid trap configuration: ") + what);
    }
  };
  require(c.carrier_density > 0.0, "carrier_density must be > 0");
  require(c.active_area > 0.0, "active_area must be > 0");
  require(c.channel_capacitance > 0.0, "channel_capacitance must be > 0");
  require(c.saturation_gate_shift > 0.0, "saturation_gate_shift must be > 0");
  require(c.dx_fraction >= 0.0 && c.dx_fraction <= 1.0, "dx_fraction must lie in [0, 1]");
  require(c.buffer_trap_count >= 0, "buffer_trap_count must be >= 0");
  require(c.buffer_coupling_scale > 0.0, "buffer_coupling_scale must be > 0");
  require(dopant_trap_count(c) > 0, "zero dopant traps");
}

enum class TrapKind { dx_center, neutral_donor, buffer_micro };

struct Trap {
  TrapKind kind = TrapKind::dx_center;
  double coupling = 0.0;  // V
  bool occupied = false;

  bool operator==(const Trap&) const = default;
};

inline bool is_dopant(TrapKind kind) { return kind != TrapKind::buffer_micro; }

struct TrapEnsemble {
  std::vector<Trap> traps;
  std::uint64_t rng_seed = 0;

  std::size_t occupied_count() const {
    std::size_t n = 0;
    for (const auto& t : traps) n += t.occupied ? 1 : 0;
    return n;
  }

  std::size_t dopant_count() const {
    std::size_t n = 0;
    for (const auto& t : traps) n += is_dopant(t.kind) ? 1 : 0;
    return n;
  }

  /// Sum of all dopant couplings, in index order.
  double total_dopant_coupling() const {
    double s = 0.0;
    for (const auto& t : traps) {
      if (is_dopant(t.kind)) s += t.coupling;
    }
    return s;
  }

  bool operator==(const TrapEnsemble&) const = default;
};

/// Dopant traps first, then buffer micro-traps. Deterministic in seed.
inline TrapEnsemble build_ensemble(const TrapConfig& config, std::uint64_t seed) {
  validate(config);
  const std::size_t dopants = dopant_trap_count(config);
  const double mean = mean_dopant_coupling(config);

  TrapEnsemble ensemble;
  ensemble.rng_seed = seed;
  ensemble.traps.reserve(dopants + static_cast<std::size_t>(config.buffer_trap_count));
  Rng rng(seed);
  for (std::size_t i = 0; i < dopants; ++i) {
    Trap trap;
    trap.kind = rng.uniform() < config.dx_fraction ? TrapKind::dx_center : TrapKind::neutral_donor;
    switch (config.coupling_distribution) {
      case CouplingDistribution::exponential:
        trap.coupling = rng.exponential(1.0 / mean);
        break;
      case CouplingDistribution::constant:
        trap.coupling = mean;
        break;
      case CouplingDistribution::uniform:
        trap.coupling = 2.0 * mean * rng.uniform_open_low();
        break;
    }
    ensemble.traps.push_back(trap);
  }
  for (int i = 0; i < config.buffer_trap_count; ++i) {
    Trap trap;
    trap.kind = TrapKind::buffer_micro;
    // (scale/2, scale]: never above the scale, never vanishingly small.
    trap.coupling = config.buffer_coupling_scale * (0.5 + 0.5 * rng.uniform_open_low());
    ensemble.traps.push_back(trap);
  }
  return ensemble;
}

enum class AbsorptionLayer { algaas, gaas_buffer, none };

inline const char* to_string(AbsorptionLayer layer) {
  switch (layer) {
    case AbsorptionLayer::algaas: return "algaas";
    case AbsorptionLayer::gaas_buffer: return "gaas_buffer";
    case AbsorptionLayer::none: return "none";
  }
  return "none";
}

/// AlGaAs edge (1.9 eV) and GaAs edge, in nm.
inline constexpr double algaas_edge_nm = 650.0;
inline constexpr double gaas_edge_nm = 870.0;

inline AbsorptionLayer absorption_target(double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) {
    throw std::domain_error("wavelength must be positive");
  }
  if (wavelength_nm <= algaas_edge_nm) return AbsorptionLayer::algaas;
  if (wavelength_nm <= gaas_edge_nm) return AbsorptionLayer::gaas_buffer;
  return AbsorptionLayer::none;
}

inline bool eligible(TrapKind kind, AbsorptionLayer layer, bool buffer_at_short_wavelength) {
  switch (layer) {
    case AbsorptionLayer::algaas:
      return is_dopant(kind) || (buffer_at_short_wavelength && kind == TrapKind::buffer_micro);
    case AbsorptionLayer::gaas_buffer:
      return kind == TrapKind::buffer_micro;
    case AbsorptionLayer::none:
      return false;
  }
  return false;
}

/// Occupies one eligible empty trap chosen uniformly, returning its index;
/// empty when every eligible trap is already full.
inline std::optional<std::size_t> capture_photon(TrapEnsemble& ensemble, AbsorptionLayer layer, Rng& rng,
                                                 bool buffer_at_short_wavelength = false) {
  if (layer == AbsorptionLayer::none) {
    throw std::domain_error("capture_photon called for a non-absorbed photon");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < ensemble.traps.size(); ++i) {
    const Trap& t = ensemble.traps[i];
    if (!t.occupied && eligible(t.kind, layer, buffer_at_short_wavelength)) {
      candidates.push_back(i);
    }
  }
  if (candidates.empty()) {
    return std::nullopt;
  }
  const std::size_t chosen = candidates[rng.index(candidates.size())];
  ensemble.traps[chosen].occupied = true;
  return chosen;
}

/// Sum of couplings of occupied traps, in index order.
inline double effective_gate_shift(const TrapEnsemble& ensemble) {
  double shift = 0.0;
  for (const auto& t : ensemble.traps) {
    if (t.occupied) shift += t.coupling;
  }
  return shift;
}

struct PhotonSource {
  double wavelength = 550.0;        // nm
  double incident_rate = 0.1;       // photons / s on the active area
  double quantum_efficiency = 0.3;

  double detection_rate() const { return incident_rate * quantum_efficiency; }

  bool operator==(const PhotonSource&) const = default;
};

inline void validate(const PhotonSource& s) {
  if (!(s.wavelength > 0.0)) throw std::domain_error("invalid photon source: wavelength must be > 0");
  if (!(s.incident_rate >= 0.0)) throw std::domain_error("invalid photon source: incident_rate must be >= 0");
  if (!(s.quantum_efficiency >= 0.0 && s.quantum_efficiency <= 1.0)) {
    throw std::domain_error("invalid photon source: quantum_efficiency must lie in [0, 1]");
  }
}

}  // namespace qpcpd
