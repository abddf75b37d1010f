#include "pcmass/ionization.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pcmass {

namespace {

BSign classify_b(double b_ev, double tol) {
    if (b_ev < -tol) return BSign::Negative;
    if (b_ev > tol) return BSign::Positive;
    return BSign::ZeroWithinTol;
}

} // namespace

const char* to_string(BSign s) {
    switch (s) {
        case BSign::Negative: return "negative";
        case BSign::Positive: return "positive";
        default: return "zero-within-tol";
    }
}

const char* to_string(IonizationRoute r) {
    return r == IonizationRoute::General ? "general" : "closed_form";
}

double delta_m_min(const MassCorrection& mc) {
    if (!std::isfinite(mc.a_ev) || !std::isfinite(mc.b_ev))
        throw std::invalid_argument("delta_m_min: non-finite mass correction");
    return mc.a_ev + std::min(0.0, mc.b_ev);
}

IonizationResult ionization_correction_general(const MassCorrection& mc, const AtomicState& state,
                                               double b_tol_ev) {
    IonizationResult out;
    out.route = IonizationRoute::General;
    out.delta_m_min_ev = delta_m_min(mc);
    out.delta_m_expect_ev = mc.a_ev + cos2_expectation(state) * mc.b_ev;
    out.delta_e_ion_ev = out.delta_m_min_ev - out.delta_m_expect_ev;
    out.b_sign = classify_b(mc.b_ev, b_tol_ev);
    return out;
}

IonizationResult ionization_correction_closed_form(const LayerStack& stack,
                                                   const QuadratureConfig& quad,
                                                   const RegularizationConfig& reg,
                                                   unsigned threads) {
    const MassCorrection mc = ab_coefficients(stack, quad, reg, threads);
    IonizationResult out;
    out.route = IonizationRoute::ClosedForm;
    out.delta_e_ion_ev = mc.diag.closed_form_delta_e_ion_ev;
    out.delta_m_min_ev = delta_m_min(mc);
    out.delta_m_expect_ev = mc.a_ev + mc.b_ev / 3.0; // l = 0, m = 0
    out.b_sign = classify_b(mc.b_ev, 1e-9);
    return out;
}

std::vector<IonizationRow> pc_ionization_table(const std::vector<AtomRecord>& atoms,
                                               double delta_e_ion_ev) {
    if (!std::isfinite(delta_e_ion_ev))
        throw std::invalid_argument("pc_ionization_table: non-finite correction");
    std::vector<IonizationRow> rows;
    rows.reserve(atoms.size());
    for (const auto& atom : atoms) {
        IonizationRow row;
        row.symbol = atom.symbol;
        row.i_vac_ev = atom.ionization_energy_ev;
        row.delta_ev = delta_e_ion_ev;
        row.i_pc_ev = atom.ionization_energy_ev + delta_e_ion_ev;
        row.unbound = !(row.i_pc_ev > 0.0);
        rows.push_back(row);
    }
    return rows;
}

RateFactor arrhenius_factor(const RateFactorInput& input) {
    if (!(input.temperature_k > 0.0))
        throw std::domain_error("arrhenius_factor: temperature must be > 0");
    RateFactor out;
    const double exponent = -input.delta_ea_ev / (constants::k_boltzmann_ev * input.temperature_k);
    out.factor = std::exp(exponent);
    out.log10_factor = exponent / std::numbers::ln10;
    return out;
}

} // namespace pcmass
