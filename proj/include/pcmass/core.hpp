#pragma once

#include <string>
#include <vector>

namespace pcmass {

/// Fundamental constants used throughout. Energies are eV everywhere; lengths
/// enter in nm and are converted at module boundaries (hbar = c = 1 internally).
namespace constants {
inline constexpr double alpha = 7.2973525693e-3;      // fine-structure constant
inline constexpr double hbar_c_ev_nm = 197.3269804;   // eV*nm
inline constexpr double k_boltzmann_ev = 8.617333262e-5; // eV/K
inline constexpr double r_gas_j_mol_k = 8.31446261815324; // J/(mol*K), display only
} // namespace constants

/// One-electron angular state (l, m_l).
struct AtomicState {
    int l = 0;
    int m_l = 0;

    AtomicState() = default;
    AtomicState(int l_, int m_l_);
};

/// Element label plus its vacuum ionization energy.
struct AtomRecord {
    std::string symbol;
    double ionization_energy_ev = 0.0;
};

/// Propagation direction relative to the stack axis.
struct Direction {
    double theta = 0.0; // polar angle vs PC axis, [0, pi]
    double phi = 0.0;

    Direction() = default;
    Direction(double theta_, double phi_);
};

/// k [1/nm] = E [eV] / (hbar c). Throws std::domain_error for E < 0.
double energy_to_wavenumber(double energy_ev);

/// Inverse of energy_to_wavenumber.
double wavenumber_to_energy(double k_invnm);

/// Cutoff electromagnetic mass (4 alpha / 3 pi) * k0, k0 given in energy units.
double vacuum_mass_correction(double k0_ev);

/// <l,m| cos^2(theta) |l,m> over the spherical harmonic Y_{l,m}.
double cos2_expectation(const AtomicState& state);

/// Hydrogen + alkali metals, vacuum ionization energies (eV).
const std::vector<AtomRecord>& default_atom_table();

/// CSV override, header `symbol,ionization_eV`. Throws std::runtime_error with
/// the offending line number on malformed input.
std::vector<AtomRecord> load_atom_table(const std::string& path);

} // namespace pcmass
