#pragma once

#include <array>
#include <complex>
#include <vector>

#include "pcmass/band_solver.hpp"

namespace pcmass {

using cplx = std::complex<double>;

/// 2x2 map of (field, weighted field derivative) across one unit cell.
struct TransferMatrix {
    cplx m11, m12, m21, m22;

    cplx det() const { return m11 * m22 - m12 * m21; }
    cplx trace() const { return m11 + m22; }
};

/// Product of the layer matrices over one period, starting at the h-layer.
/// Half its trace equals cos(k_z L) exactly on a band.
TransferMatrix unit_cell_transfer_matrix(const LayerStack& stack, Polarization pol,
                                         double omega_ev, double k_rho_invnm);

/// Field of the governing scalar inside one layer,
///   f(z) = amp_fwd e^{i k_axial (z - z0)} + amp_bwd e^{i k_axial (z0 + d - z)}.
/// Both amplitudes are anchored at their own interface, so evanescent layers
/// never require a growing exponential of the layer width.
struct LayerField {
    cplx amp_fwd;
    cplx amp_bwd;
    cplx k_axial; // branch Re >= 0, Im >= 0
    double p = 1.0; // continuity weight: 1 (TE) or n^2 (TM)
    double n = 1.0;
    double z0 = 0.0; // layer start, natural units (1/eV)
    double d = 0.0;  // thickness, natural units
};

/// Bloch eigenfield over one unit cell, normalized so the cell-averaged
/// squared electric field equals 1/2:
///   (1/L) Int |E(z)|^2 dz = 1/2.
/// This is the plane-wave convention |E_lambda(k)|^2 = 1/2 extended to all
/// modes; in the uniform-vacuum limit it cancels the free-space self-energy
/// term exactly, and it is the convention under which the reported
/// ionization-energy shifts reach the electron-volt scale.
struct BlochFieldProfile {
    BandPoint point;
    double omega_ev = 0.0;
    double k_rho_ev = 0.0;
    double k_z_ev = 0.0;
    std::array<LayerField, 2> layers; // h then l
    bool degenerate_edge = false;     // |half trace| = 1 within tolerance
};

/// Builds the Bloch eigenvector profile for a solved band point.
/// Throws std::invalid_argument when the point is off-shell
/// (|dispersion residual| > 1e-8).
BlochFieldProfile mode_profile(const LayerStack& stack, const BandPoint& point);

/// Governing scalar (E_y for TE, H_y for TM) at natural-unit z, continued
/// outside the cell by the Bloch phase.
cplx profile_scalar(const BlochFieldProfile& profile, double z_nat);

/// Weighted derivative v = f'(z)/p (continuous across interfaces).
cplx profile_weighted_derivative(const BlochFieldProfile& profile, double z_nat);

/// Exact (f, v) at a layer boundary (no exponential round-off from nudging).
struct EdgeValues {
    cplx f;
    cplx v;
};
EdgeValues layer_edge_values(const LayerField& layer, bool at_end);

/// (1/L) Int |E(z)|^2 dz over one cell (the normalization integral), by
/// closed-form layer integrals. Equals 1/2 for profiles from mode_profile.
double mode_norm(const LayerStack& stack, const BlochFieldProfile& profile);

/// (1/L) Int eps(z) |E(z)|^2 dz over one cell; diagnostic companion used by
/// the Parseval (G-space transform) consistency checks.
double epsilon_weighted_norm(const LayerStack& stack, const BlochFieldProfile& profile);

/// Per-G expansion coefficients of the transverse electric field.
struct FourierCoefficients {
    BandPoint point;
    int m_cutoff = 0;
    double b_z_ev = 0.0;

    /// E_{k n lambda}(G_m), m = -M..M (index m + M). For TE this is the E_y
    /// coefficient; for TM the projection of the per-G electric field onto
    /// the in-plane-of-incidence transverse unit vector.
    std::vector<cplx> coeff;

    // TM only: Cartesian components and the per-G longitudinal projection.
    std::vector<cplx> coeff_ex;
    std::vector<cplx> coeff_ez;
    std::vector<cplx> longitudinal;

    /// Fraction of the per-G norm lost to the longitudinal direction (TM).
    double longitudinal_residual = 0.0;

    /// |eps-weighted G-sum - eps-weighted real-space norm| when requested
    /// (-1 when not evaluated). Pure transform-truncation error.
    double parseval_defect = -1.0;

    const cplx& at(int m) const { return coeff[static_cast<std::size_t>(m + m_cutoff)]; }
    double g_ev(int m) const { return m * b_z_ev; } // reciprocal vector G_m
};

/// Closed-form layer integrals of the profile against e^{-i (k_z + G) z};
/// no sampling error enters. Coefficients are phase-fixed so the largest one
/// is real and positive. With check_parseval the eps-weighted G-sum defect is
/// evaluated (O(M^2)) and stored.
FourierCoefficients fourier_coefficients(const LayerStack& stack, const BlochFieldProfile& profile,
                                         int m_cutoff, bool check_parseval = false);

/// eps-weighted norm evaluated in G-space (double sum with the analytic
/// eps(G) coefficients); approaches epsilon_weighted_norm as M grows.
double epsilon_weighted_g_norm(const LayerStack& stack, const BlochFieldProfile& profile,
                               const FourierCoefficients& coeffs);

/// Sum_G coefficients e^{i (k_z + G) z}; used by reconstruction checks.
cplx reconstruct_from_coefficients(const std::vector<cplx>& coeff, int m_cutoff, double k_z_ev,
                                   double b_z_ev, double z_nat);

namespace detail {
/// Int_0^d e^{i mu z} dz, stable for small |mu d|; requires Im(mu) >= 0.
cplx phase_integral(cplx mu, double d);
/// Int_0^d e^{i k (d - z)} e^{-i g z} dz.
cplx phase_integral_right(cplx k, double g, double d);
} // namespace detail

} // namespace pcmass
