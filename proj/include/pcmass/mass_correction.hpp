#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcmass/band_solver.hpp"
#include "pcmass/core.hpp"

namespace pcmass {

struct QuadratureConfig {
    double k_rho_max_invnm = 0.0; // 0 = automatic: just past the lowest-band support
    int n_rho = 24;               // Gauss-Legendre panels in k_rho at level 0
    int n_z = 6;                  // panels over half the FBZ at level 0
    int gauss_order = 6;
    int max_refinements = 4;      // panel halvings
    double tol_rel = 1e-3;
    double floor_ev = 5e-6;       // absolute delta floor so near-zero results
                                  // (vacuum stack) are not chased indefinitely
    int m_cutoff = 0;             // G cutoff; 0 = automatic from the stack
};

enum class SubtractionScheme { ModeMatched, FrequencyMatched };

const char* to_string(SubtractionScheme s);

struct RegularizationConfig {
    double omega_max_ev = 10.65;
    SubtractionScheme scheme = SubtractionScheme::ModeMatched;
    double k0_ev = 0.0; // auxiliary tail cutoff; 0 = 10 * omega_max
};

/// Anisotropic mass-correction pair: delta_m(theta) = A + cos^2(theta) B.
struct MassCorrection {
    double a_ev = 0.0;
    double b_ev = 0.0;

    struct Diagnostics {
        double vacuum_term_ev = 0.0;
        double closed_form_delta_e_ion_ev = 0.0; // direct ionization-integrand route
        double tol_achieved = 0.0;
        bool converged = false;
        int refinement_levels = 0;
        int m_cutoff = 0;
        int max_bands = 0;
        double k_rho_max_ev = 0.0;
        double longitudinal_residual_max = 0.0;
        double longitudinal_residual_mean = 0.0;
        SubtractionScheme scheme = SubtractionScheme::ModeMatched;
        std::vector<double> band_a_ev; // coarse-grid breakdown by band index
        std::vector<double> band_b_ev;
        std::vector<double> level_a_ev; // per-refinement-level history
        std::vector<double> level_b_ev;
    } diag;
};

class QuadratureNonConvergence : public std::runtime_error {
public:
    QuadratureNonConvergence(std::string msg, MassCorrection best)
        : std::runtime_error(std::move(msg)), best_estimate(std::move(best)) {}
    MassCorrection best_estimate;
};

/// Assembles A and B by band summation, G summation, and (k_rho, k_z)
/// quadrature with the vacuum term removed per the configured scheme.
/// Panel halving continues until |dA| and |dB| fall under
/// max(tol_rel * max(|A|, |B|), floor_ev); otherwise throws
/// QuadratureNonConvergence carrying the best estimate.
MassCorrection ab_coefficients(const LayerStack& stack, const QuadratureConfig& quad,
                               const RegularizationConfig& reg, unsigned threads = 1);

/// A + cos^2(theta) B; independent of phi.
double delta_m(const Direction& direction, const MassCorrection& mc);

/// Matched extended-zone cell counts at one quadrature node.
struct VacuumMatchNode {
    double k_rho_ev = 0.0;
    double k_z_ev = 0.0;   // inside the FBZ
    double weight_ev2 = 0.0; // quadrature weight for dk_rho dk_z (k_rho factor applied inside)
    int n_te = 0;          // matched cells for the TE-band family
    int n_tm = 0;
};

/// Isotropic free-space term (alpha/3 pi^2) Int d^3k / k^2 over the
/// extended-zone region described by the matched cells (half weight per
/// polarization family). For a full sphere of radius k0 this reduces to
/// (4 alpha / 3 pi) k0.
double vacuum_subtraction_term(double b_z_ev, std::span<const VacuumMatchNode> nodes);

/// Frequency-matched variant: sphere |k| <= omega_max.
double vacuum_subtraction_term_sphere(double omega_max_ev);

/// Angular sample for the azimuthal-reduction verification.
struct AngularSample {
    double k_rho_ev = 0.0;
    double k_z_ev = 0.0;
    int m = 0;          // reciprocal index, q = k_z + m b_z
    double theta = 0.0; // electron direction polar angle
    double phi = 0.0;
};

struct AzimuthalCheckReport {
    double max_te_discrepancy = 0.0;
    double max_tm_discrepancy = 0.0;
    double max_cross_term = 0.0;
    bool pass = true;
    std::vector<std::string> failures; // points exceeding 1e-10
};

/// Verifies the closed-form angular factors against direct numerical
/// phi-integration of |I_p . eps_lambda(k_G)|^2 at each sample, and that the
/// TE x TM cross term integrates to zero.
AzimuthalCheckReport azimuthal_reduction_check(const LayerStack& stack,
                                               std::span<const AngularSample> samples);

struct TailEstimate {
    double c1_ev2 = 0.0;
    double k0_ev = 0.0;
    double magnitude_ev = 0.0;
    double rel_error_c1 = 0.0;  // O(C1/k0) validity scale
    double rel_error_bz2 = 0.0; // O(b_z^2/k0) validity scale
};

/// Residual ultraviolet tail beyond k0 for a host with Sellmeier tail C1:
/// (alpha / 6 pi^2) (C1 d_h / L) Int_{k>k0} d^3k/k^4 = (2 alpha / 3 pi) (C1 d_h / L) / k0.
/// Throws std::domain_error unless k0 exceeds the FBZ width.
TailEstimate tail_estimate(const LayerStack& stack, double k0_ev, double c1_ev2);

/// Leading Sellmeier coefficient of the host model at k0: (n(k0) - 1) k0^2.
double fit_sellmeier_c1(const DispersionModel& model, double k0_ev);

} // namespace pcmass
