#include "pcmass/core.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pcmass {

AtomicState::AtomicState(int l_, int m_l_) : l(l_), m_l(m_l_) {
    if (l < 0) throw std::invalid_argument("AtomicState: l must be >= 0");
    if (std::abs(m_l) > l) throw std::invalid_argument("AtomicState: |m_l| must be <= l");
}

Direction::Direction(double theta_, double phi_) : theta(theta_), phi(phi_) {
    if (!(theta >= 0.0 && theta <= std::numbers::pi))
        throw std::invalid_argument("Direction: theta must lie in [0, pi]");
}

double energy_to_wavenumber(double energy_ev) {
    if (energy_ev < 0.0) throw std::domain_error("energy_to_wavenumber: negative energy");
    return energy_ev / constants::hbar_c_ev_nm;
}

double wavenumber_to_energy(double k_invnm) {
    return k_invnm * constants::hbar_c_ev_nm;
}

double vacuum_mass_correction(double k0_ev) {
    if (k0_ev < 0.0) throw std::domain_error("vacuum_mass_correction: negative cutoff");
    return 4.0 * constants::alpha / (3.0 * std::numbers::pi) * k0_ev;
}

double cos2_expectation(const AtomicState& state) {
    if (state.l < 0 || std::abs(state.m_l) > state.l)
        throw std::invalid_argument("cos2_expectation: invalid (l, m_l)");
    // Associated-Legendre second moment:
    //   <cos^2> = (2l^2 + 2l - 2m^2 - 1) / ((2l - 1)(2l + 3))
    const double l = state.l;
    const double m = state.m_l;
    return (2.0 * l * l + 2.0 * l - 2.0 * m * m - 1.0) / ((2.0 * l - 1.0) * (2.0 * l + 3.0));
}

const std::vector<AtomRecord>& default_atom_table() {
    static const std::vector<AtomRecord> table = {
        {"H", 13.60}, {"Li", 5.39}, {"Na", 5.14}, {"K", 4.34},
        {"Rb", 4.18}, {"Cs", 3.90}, {"Fr", 4.07},
    };
    return table;
}

std::vector<AtomRecord> load_atom_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("atom table: cannot open " + path);

    std::vector<AtomRecord> out;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.find("symbol") == std::string::npos)
                throw std::runtime_error("atom table: missing `symbol,ionization_eV` header in " + path);
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string sym, val;
        if (!std::getline(ss, sym, ',') || !std::getline(ss, val)) {
            throw std::runtime_error("atom table: malformed row at line " + std::to_string(lineno));
        }
        char* end = nullptr;
        const double e = std::strtod(val.c_str(), &end);
        if (end == val.c_str() || !(e > 0.0)) {
            throw std::runtime_error("atom table: bad ionization energy at line " + std::to_string(lineno));
        }
        out.push_back({sym, e});
    }
    if (out.empty()) throw std::runtime_error("atom table: no data rows in " + path);
    return out;
}

} // namespace pcmass
