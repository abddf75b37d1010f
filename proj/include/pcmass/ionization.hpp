#pragma once

#include <string>
#include <vector>

#include "pcmass/core.hpp"
#include "pcmass/mass_correction.hpp"

namespace pcmass {

enum class BSign { Negative, Positive, ZeroWithinTol };
enum class IonizationRoute { General, ClosedForm };

const char* to_string(BSign s);
const char* to_string(IonizationRoute r);

struct IonizationResult {
    double delta_e_ion_ev = 0.0;
    double delta_m_min_ev = 0.0;
    double delta_m_expect_ev = 0.0;
    BSign b_sign = BSign::ZeroWithinTol;
    IonizationRoute route = IonizationRoute::General;
};

/// min over directions of A + cos^2(theta) B = A + min(0, B).
double delta_m_min(const MassCorrection& mc);

/// delta_E_ion = delta_m_min - <l,m|delta_m|l,m>; A cancels exactly.
IonizationResult ionization_correction_general(const MassCorrection& mc, const AtomicState& state,
                                               double b_tol_ev = 1e-9);

/// Direct quadrature of the ionization integrand (algebraically (2/3) B).
/// Valid as the minimum-energy correction only on the B <= 0 branch; the
/// returned b_sign flags when the general route must be preferred.
IonizationResult ionization_correction_closed_form(const LayerStack& stack,
                                                   const QuadratureConfig& quad,
                                                   const RegularizationConfig& reg,
                                                   unsigned threads = 1);

struct IonizationRow {
    std::string symbol;
    double i_vac_ev = 0.0;
    double delta_ev = 0.0;
    double i_pc_ev = 0.0;
    bool unbound = false; // I_pc <= 0: valence electron no longer bound
};

/// I_pc = I_vac + delta_E_ion per atom; unbound rows flagged, not suppressed.
std::vector<IonizationRow> pc_ionization_table(const std::vector<AtomRecord>& atoms,
                                               double delta_e_ion_ev);

struct RateFactorInput {
    double delta_ea_ev = 0.0; // activation-energy change
    double temperature_k = 300.0;
};

struct RateFactor {
    double factor = 1.0; // exp(-dEa / kB T); may overflow to inf for large |dEa|
    double log10_factor = 0.0;
};

RateFactor arrhenius_factor(const RateFactorInput& input);

} // namespace pcmass
