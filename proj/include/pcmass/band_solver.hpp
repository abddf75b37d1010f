#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "pcmass/dispersion.hpp"

namespace pcmass {

enum class Polarization { TE, TM };

const char* to_string(Polarization pol);

/// One unit cell of the 1D stack: a high-index layer of thickness d_h followed
/// by a void layer of thickness d_l with n_l = 1.
class LayerStack {
public:
    LayerStack(double d_h_nm, double d_l_nm, std::shared_ptr<const DispersionModel> model_h);

    double d_h_nm() const { return d_h_nm_; }
    double d_l_nm() const { return d_l_nm_; }
    double period_nm() const { return d_h_nm_ + d_l_nm_; }
    const DispersionModel& model_h() const { return *model_h_; }
    std::shared_ptr<const DispersionModel> model_h_ptr() const { return model_h_; }

    // natural-unit geometry (hbar = c = 1, energies in eV)
    double d_h_nat() const { return d_h_nat_; }   // 1/eV
    double d_l_nat() const { return d_l_nat_; }
    double period_nat() const { return d_h_nat_ + d_l_nat_; }
    double b_z_ev() const { return b_z_ev_; }     // reciprocal basis, energy units
    double b_z_invnm() const;
    double fbz_edge_invnm() const;                // pi / period

private:
    double d_h_nm_, d_l_nm_;
    std::shared_ptr<const DispersionModel> model_h_;
    double d_h_nat_, d_l_nat_, b_z_ev_;
};

struct BrillouinZone {
    double b_z_invnm = 0.0;
    double edge_invnm = 0.0; // FBZ is [-edge, edge]
};

BrillouinZone brillouin_zone(const LayerStack& stack);

/// One solved Bloch eigenfrequency.
struct BandPoint {
    double k_rho_invnm = 0.0;
    double k_z_invnm = 0.0;
    int band = 0;            // 1-based, ascending in omega
    Polarization pol = Polarization::TE;
    double omega_ev = 0.0;
};

/// Axial wavenumber sqrt(omega^2 n^2 - k_rho^2) in natural units, on the
/// branch with non-negative real part; purely imaginary when evanescent.
std::complex<double> layer_axial_wavenumber(double n, double omega_ev, double k_rho_ev);

/// Residual of the Bloch relation,
///   f = cos(k_z L) - [cos(kh dh) cos(kl dl) - (r + 1/r)/2 sin(kh dh) sin(kl dl)],
/// r = kl/kh for TE and n_h^2 kl/kh for TM. Evaluated in real arithmetic
/// through the evanescent branches (never NaN for finite input) and even in
/// k_z by construction. Evanescent layers contribute cosh/sinh factors whose
/// common envelope is divided out, so the returned value is the literal
/// residual divided by a positive bounded-below scale: same zeros, same signs,
/// and O(1) magnitude even for deeply evanescent voids where the raw
/// combination exceeds double-precision resolution.
/// k inputs in 1/nm; requires k_z inside the FBZ.
double dispersion_residual(const LayerStack& stack, Polarization pol, double omega_ev,
                           double k_rho_invnm, double k_z_invnm);

struct SolveOptions {
    double scan_step_ev = 0.0; // 0 = automatic from the averaged index
    double n_scan_max = 0.0;   // largest in-band index; 0 = sample the model
    int max_rescans = 3;
};

/// All Bloch eigenfrequencies in (0, omega_max], ascending. Bracketing scan +
/// Brent refinement to ~1e-13 relative bracket width. Throws std::runtime_error
/// if the root count still disagrees with the mode-count estimate after
/// max_rescans step halvings.
std::vector<BandPoint> solve_bands(const LayerStack& stack, Polarization pol,
                                   double k_rho_invnm, double k_z_invnm, double omega_max_ev,
                                   const SolveOptions& opts = {});

struct BandSurface {
    std::vector<double> k_rho_invnm;
    std::vector<double> k_z_invnm;
    std::vector<BandPoint> points; // row-major over (k_rho, k_z), bands ascending
};

BandSurface band_surface(const LayerStack& stack, Polarization pol,
                         const std::vector<double>& k_rho_grid_invnm,
                         const std::vector<double>& k_z_grid_invnm, double omega_max_ev,
                         unsigned threads = 1);

namespace detail {

/// cos-like and sin-like layer factors for signed x = k_axial^2:
///   c = cos(k d)  (cosh for x < 0),  s = sin(k d)/k  (sinh(K d)/K for x < 0),
/// with a series through x ~ 0. Always real and finite.
struct TrigPair {
    double c;
    double s;
};
TrigPair layer_trig(double x, double d);

/// Phase-integral estimate of the number of bands below omega_max.
double mode_count_estimate(const LayerStack& stack, double omega_max_ev, double k_rho_ev);

} // namespace detail

} // namespace pcmass
