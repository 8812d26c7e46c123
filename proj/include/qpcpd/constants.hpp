#pragma once

namespace qpcpd::constants {

/// Boltzmann constant in meV/K.
inline constexpr double boltzmann_meV_per_K = 8.617333262e-2;

/// Elementary charge in coulombs.
inline constexpr double elementary_charge_C = 1.602176634e-19;

/// Planck constant in J s.
inline constexpr double planck_Js = 6.62607015e-34;

/// Spin-degenerate conductance quantum 2e^2/h in siemens.
inline constexpr double conductance_quantum_S =
    2.0 * elementary_charge_C * elementary_charge_C / planck_Js;

inline constexpr double pi = 3.14159265358979323846;

}  // namespace qpcpd::constants
