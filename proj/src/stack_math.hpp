// Internal layer/transfer-matrix arithmetic shared by the band solver and the
// Bloch field construction. Not installed.
#pragma once

#include <cmath>
#include <numbers>

#include "pcmass/band_solver.hpp"

namespace pcmass::detail {

inline TrigPair layer_trig_impl(double x, double d) {
    const double u = x * d * d;
    if (std::abs(u) < 1e-8) {
        // sin(kd)/k = d (1 - u/6 + u^2/120 - ...), valid through the branch point
        return {1.0 - 0.5 * u * (1.0 - u / 12.0), d * (1.0 - u / 6.0 * (1.0 - u / 20.0))};
    }
    if (x > 0.0) {
        const double k = std::sqrt(x);
        return {std::cos(k * d), std::sin(k * d) / k};
    }
    const double kappa = std::sqrt(-x);
    return {std::cosh(kappa * d), std::sinh(kappa * d) / kappa};
}

// Layer factors divided by the growing envelope: c = env * c_s, sin(kd)/k =
// env * s_s with env = cosh(kappa d) on the evanescent branch and 1 otherwise.
// Scaled quantities stay O(1), which keeps residuals evaluable for void layers
// with kappa*d of order 10^2 where the raw cosh swamps double resolution.
struct TrigScaled {
    double c_s;
    double s_s;
    double env;
};

inline TrigScaled layer_trig_scaled(double x, double d) {
    const double u = x * d * d;
    if (std::abs(u) < 1e-8)
        return {1.0 - 0.5 * u * (1.0 - u / 12.0), d * (1.0 - u / 6.0 * (1.0 - u / 20.0)), 1.0};
    if (x > 0.0) {
        const double k = std::sqrt(x);
        return {std::cos(k * d), std::sin(k * d) / k, 1.0};
    }
    const double kappa = std::sqrt(-x);
    return {1.0, std::tanh(kappa * d) / kappa, std::cosh(kappa * d)};
}

struct Mat2 {
    double a11, a12, a21, a22;
};

inline Mat2 mul(const Mat2& a, const Mat2& b) {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
}

// Transfer across one layer in the (field, weighted-derivative) basis,
//   [[c, p*s], [-(x/p)*s, c]],  p = 1 (TE) or n^2 (TM), x = axial k^2.
inline Mat2 layer_matrix(double x, double p, double d) {
    const TrigPair t = layer_trig_impl(x, d);
    return {t.c, p * t.s, -(x / p) * t.s, t.c};
}

inline Mat2 layer_matrix_scaled(double x, double p, double d) {
    const TrigScaled t = layer_trig_scaled(x, d);
    return {t.c_s, p * t.s_s, -(x / p) * t.s_s, t.c_s};
}

struct StackEval {
    double x_h, x_l; // axial k^2 per layer
    double p_h, p_l; // polarization weights
    double n_h;
};

inline StackEval eval_stack(const LayerStack& stack, Polarization pol, double omega_ev,
                            double k_rho_ev) {
    StackEval e;
    e.n_h = stack.model_h()(omega_ev);
    const double w2 = omega_ev * omega_ev;
    const double kr2 = k_rho_ev * k_rho_ev;
    e.x_h = w2 * e.n_h * e.n_h - kr2;
    e.x_l = w2 - kr2;
    e.p_h = (pol == Polarization::TM) ? e.n_h * e.n_h : 1.0;
    e.p_l = 1.0;
    return e;
}

// Envelope-scaled half trace of the unit-cell matrix: F = f_s * env. On a
// band F = cos(k_z L), so in-band means |f_s| * env <= 1.
struct HalfTrace {
    double f_s;
    double env;
};

inline HalfTrace half_trace_scaled(const LayerStack& stack, const StackEval& e) {
    const TrigScaled th = layer_trig_scaled(e.x_h, stack.d_h_nat());
    const TrigScaled tl = layer_trig_scaled(e.x_l, stack.d_l_nat());
    const double w = e.p_l * e.x_h / e.p_h + e.p_h * e.x_l / e.p_l;
    return {th.c_s * tl.c_s - 0.5 * w * th.s_s * tl.s_s, th.env * tl.env};
}

// Half-cell matrix of the symmetric cell (origin at the h-layer center),
// envelope-scaled: half of l, then half of h. Band edges satisfy
// F = +1 <=> A12 A21 = 0 and F = -1 <=> A11 A22 = 0; the entry functions have
// simple zeros even where a gap closes, so scanning them enumerates bands
// robustly (the plain residual has tangent double roots exactly there in the
// empty lattice).
inline Mat2 half_cell_scaled(const LayerStack& stack, const StackEval& e) {
    const Mat2 mh = layer_matrix_scaled(e.x_h, e.p_h, 0.5 * stack.d_h_nat());
    const Mat2 ml = layer_matrix_scaled(e.x_l, e.p_l, 0.5 * stack.d_l_nat());
    return mul(mh, ml);
}

} // namespace pcmass::detail
