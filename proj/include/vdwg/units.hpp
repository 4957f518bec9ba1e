#pragma once

#include <numbers>

//! Physical constants and unit conversions.
//!
//! Internal units: lengths in nm, energies in eV, C3 in meV nm^3,
//! velocities in m/s, angles in rad.
namespace vdwg::units
{
inline constexpr double pi = std::numbers::pi;

inline constexpr double hbar_ev_s = 6.582119569e-16;
inline constexpr double planck_ev_s = 4.135667696e-15;
inline constexpr double elementary_charge_c = 1.602176634e-19;
inline constexpr double atomic_mass_kg = 1.66053906660e-27;

inline constexpr double nm_per_m = 1e9;
inline constexpr double mev_per_ev = 1e3;
inline constexpr double nm3_per_angstrom3 = 1e-3;

//! Hartree * bohr^6 expressed in eV A^6, for literature C6 values in a.u.
inline constexpr double hartree_bohr6_ev_a6 = 0.597;
//! Hartree * bohr^6 in eV nm^6.
inline constexpr double hartree_bohr6_ev_nm6 = hartree_bohr6_ev_a6 * 1e-6;

constexpr double degrees_to_radians(double deg) { return deg * pi / 180.0; }

}  // namespace vdwg::units
