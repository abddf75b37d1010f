#include "pcmass/bloch_fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pcmass/core.hpp"
#include "stack_math.hpp"

namespace pcmass {

namespace {

constexpr cplx kImag{0.0, 1.0};

// Axial wavenumber with the branch Re >= 0, Im >= 0; clamped away from the
// light-line zero so amplitude extraction never divides by zero.
cplx axial_k(double x) {
    if (x >= 0.0) return {std::max(std::sqrt(x), 1e-14), 0.0};
    return {0.0, std::max(std::sqrt(-x), 1e-14)};
}

// Integral helpers for |P e^{ikz} + Q e^{ik(d-z)}|^2 over a layer.
double decay_integral(cplx k, double d) { // Int |e^{ikz}|^2
    const double kappa = k.imag();
    if (kappa < 1e-14) return d;
    return (1.0 - std::exp(-2.0 * kappa * d)) / (2.0 * kappa);
}

cplx oscillation_integral(cplx k, double d) { // Int e^{i(k + conj k) z}
    const double r = k.real();
    if (std::abs(r) < 1e-14) return {d, 0.0};
    return (std::exp(2.0 * kImag * r * d) - 1.0) / (2.0 * kImag * r);
}

double abs2(cplx z) { return std::norm(z); }

double field_square_integral(cplx p_amp, cplx q_amp, cplx k, double d) {
    const double w = decay_integral(k, d);
    const cplx v = oscillation_integral(k, d);
    const cplx cross = p_amp * std::conj(q_amp) * std::exp(-kImag * std::conj(k) * d) * v;
    return (abs2(p_amp) + abs2(q_amp)) * w + 2.0 * cross.real();
}

} // namespace

namespace detail {

cplx phase_integral(cplx mu, double d) {
    const cplx z = kImag * mu * d;
    if (std::abs(z) < 1e-6) return d * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)));
    return (std::exp(z) - 1.0) / (kImag * mu);
}

cplx phase_integral_right(cplx k, double g, double d) {
    const cplx s = k + g;
    if (std::abs(s) * d < 1e-6) {
        const cplx z = -kImag * s * d;
        return std::exp(kImag * k * d) * d * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)));
    }
    return (std::exp(kImag * k * d) - std::exp(-kImag * g * d)) / (kImag * s);
}

} // namespace detail

TransferMatrix unit_cell_transfer_matrix(const LayerStack& stack, Polarization pol,
                                         double omega_ev, double k_rho_invnm) {
    if (!(omega_ev > 0.0))
        throw std::domain_error("unit_cell_transfer_matrix: omega must be > 0");
    const double k_rho_ev = wavenumber_to_energy(k_rho_invnm);
    const auto e = detail::eval_stack(stack, pol, omega_ev, k_rho_ev);
    const auto mh = detail::layer_matrix(e.x_h, e.p_h, stack.d_h_nat());
    const auto ml = detail::layer_matrix(e.x_l, e.p_l, stack.d_l_nat());
    const auto m = detail::mul(ml, mh); // cell starts at the h layer
    return {cplx(m.a11), cplx(m.a12), cplx(m.a21), cplx(m.a22)};
}

BlochFieldProfile mode_profile(const LayerStack& stack, const BandPoint& point) {
    const double res =
        dispersion_residual(stack, point.pol, point.omega_ev, point.k_rho_invnm, point.k_z_invnm);
    if (!(std::abs(res) < 1e-8)) {
        // steep flat-band residuals: judge by the backward error in omega
        const double h = 1e-7 * point.omega_ev;
        const double slope =
            (dispersion_residual(stack, point.pol, point.omega_ev + h, point.k_rho_invnm,
                                 point.k_z_invnm) -
             dispersion_residual(stack, point.pol, point.omega_ev - h, point.k_rho_invnm,
                                 point.k_z_invnm)) /
            (2.0 * h);
        const double backward = std::abs(slope) > 0.0
                                    ? std::abs(res / slope)
                                    : std::numeric_limits<double>::infinity();
        if (!(backward < 1e-8 * point.omega_ev))
            throw std::invalid_argument("mode_profile: band point off-shell (residual " +
                                        std::to_string(res) + ")");
    }

    BlochFieldProfile prof;
    prof.point = point;
    prof.omega_ev = point.omega_ev;
    prof.k_rho_ev = wavenumber_to_energy(point.k_rho_invnm);
    prof.k_z_ev = wavenumber_to_energy(point.k_z_invnm);

    const auto e = detail::eval_stack(stack, point.pol, point.omega_ev, prof.k_rho_ev);
    if (e.x_h <= 0.0)
        throw std::invalid_argument("mode_profile: no propagating layer at this point");

    const double d_h = stack.d_h_nat();
    const double d_l = stack.d_l_nat();
    const double period = stack.period_nat();

    // Bloch eigenvector of the envelope-scaled cell matrix. Scaling the void
    // envelope out keeps every entry O(1) for deeply evanescent voids.
    const auto mh = detail::layer_matrix(e.x_h, e.p_h, d_h);
    const auto ml_s = detail::layer_matrix_scaled(e.x_l, e.p_l, d_l);
    const double env_l = detail::layer_trig_scaled(e.x_l, d_l).env;
    const auto m_s = detail::mul(ml_s, mh);

    const cplx lambda = std::exp(kImag * prof.k_z_ev * period);
    const cplx lambda_s = lambda / env_l;

    prof.degenerate_edge = std::abs(lambda.imag()) < 1e-9;

    // Null vector of (M_s - lambda_s); take the better-conditioned row.
    const cplx r1a = m_s.a11 - lambda_s, r1b = cplx(m_s.a12);
    const cplx r2a = cplx(m_s.a21), r2b = m_s.a22 - lambda_s;
    cplx u0, v0;
    if (abs2(r1a) + abs2(r1b) >= abs2(r2a) + abs2(r2b)) {
        u0 = -r1b;
        v0 = r1a;
    } else {
        u0 = -r2b;
        v0 = r2a;
    }

    const cplx k_h = axial_k(e.x_h);
    const cplx k_l = axial_k(e.x_l);

    // Layer h amplitudes from the left interface (propagating, both stable).
    LayerField& h = prof.layers[0];
    h.k_axial = k_h;
    h.p = e.p_h;
    h.n = e.n_h;
    h.z0 = 0.0;
    h.d = d_h;
    h.amp_fwd = 0.5 * (u0 + h.p * v0 / (kImag * k_h));
    {
        // right-anchored amplitude from the right interface data
        const cplx u_r = mh.a11 * u0 + mh.a12 * v0;
        const cplx v_r = mh.a21 * u0 + mh.a22 * v0;
        h.amp_bwd = 0.5 * (u_r - h.p * v_r / (kImag * k_h));
    }

    // Void layer: forward amplitude anchored at its left interface, backward
    // amplitude anchored at its right interface via the Bloch condition, so
    // no growing exponential is ever evaluated.
    LayerField& l = prof.layers[1];
    l.k_axial = k_l;
    l.p = e.p_l;
    l.n = 1.0;
    l.z0 = d_h;
    l.d = d_l;
    {
        const cplx u_l = mh.a11 * u0 + mh.a12 * v0;
        const cplx v_l = mh.a21 * u0 + mh.a22 * v0;
        l.amp_fwd = 0.5 * (u_l + l.p * v_l / (kImag * k_l));
        const cplx u_r = lambda * u0;
        const cplx v_r = lambda * v0;
        l.amp_bwd = 0.5 * (u_r - l.p * v_r / (kImag * k_l));
    }

    const double norm = mode_norm(stack, prof);
    if (!(norm > 0.0)) throw std::runtime_error("mode_profile: degenerate field norm");
    const double scale = std::sqrt(0.5 / norm);
    for (auto& layer : prof.layers) {
        layer.amp_fwd *= scale;
        layer.amp_bwd *= scale;
    }
    return prof;
}

cplx profile_scalar(const BlochFieldProfile& profile, double z_nat) {
    const double period = profile.layers[0].d + profile.layers[1].d;
    const double cell = std::floor(z_nat / period);
    const double zc = z_nat - cell * period;
    const cplx bloch = std::exp(kImag * profile.k_z_ev * period * cell);
    const LayerField& lay = (zc < profile.layers[0].d) ? profile.layers[0] : profile.layers[1];
    const double zl = zc - lay.z0;
    return bloch * (lay.amp_fwd * std::exp(kImag * lay.k_axial * zl) +
                    lay.amp_bwd * std::exp(kImag * lay.k_axial * (lay.d - zl)));
}

cplx profile_weighted_derivative(const BlochFieldProfile& profile, double z_nat) {
    const double period = profile.layers[0].d + profile.layers[1].d;
    const double cell = std::floor(z_nat / period);
    const double zc = z_nat - cell * period;
    const cplx bloch = std::exp(kImag * profile.k_z_ev * period * cell);
    const LayerField& lay = (zc < profile.layers[0].d) ? profile.layers[0] : profile.layers[1];
    const double zl = zc - lay.z0;
    const cplx df = kImag * lay.k_axial *
                    (lay.amp_fwd * std::exp(kImag * lay.k_axial * zl) -
                     lay.amp_bwd * std::exp(kImag * lay.k_axial * (lay.d - zl)));
    return bloch * df / lay.p;
}

EdgeValues layer_edge_values(const LayerField& layer, bool at_end) {
    const cplx phase = std::exp(kImag * layer.k_axial * layer.d);
    if (!at_end) {
        const cplx f = layer.amp_fwd + layer.amp_bwd * phase;
        const cplx v = kImag * layer.k_axial * (layer.amp_fwd - layer.amp_bwd * phase) / layer.p;
        return {f, v};
    }
    const cplx f = layer.amp_fwd * phase + layer.amp_bwd;
    const cplx v = kImag * layer.k_axial * (layer.amp_fwd * phase - layer.amp_bwd) / layer.p;
    return {f, v};
}

namespace {

// (1/L) Int w(z) |E(z)|^2 with per-layer weight w = n^(2*eps_power).
// eps_power 0 gives the normalization integral, 1 the eps-weighted one.
double field_norm_impl(const LayerStack& stack, const BlochFieldProfile& profile, int eps_power) {
    const double period = stack.period_nat();
    const double omega = profile.omega_ev;
    const double kr2 = profile.k_rho_ev * profile.k_rho_ev;

    double total = 0.0;
    for (const auto& lay : profile.layers) {
        const double n2 = lay.n * lay.n;
        const double weight = eps_power == 0 ? 1.0 : n2;
        const double ff = field_square_integral(lay.amp_fwd, lay.amp_bwd, lay.k_axial, lay.d);
        if (profile.point.pol == Polarization::TE) {
            total += weight * ff;
        } else {
            // |E_x|^2 + |E_z|^2 = (|f'|^2/n^4 + k_rho^2 |f|^2/n^4) / omega^2
            const double dfdf = field_square_integral(kImag * lay.k_axial * lay.amp_fwd,
                                                      -kImag * lay.k_axial * lay.amp_bwd,
                                                      lay.k_axial, lay.d);
            total += weight * (dfdf + kr2 * ff) / (omega * omega * n2 * n2);
        }
    }
    return total / period;
}

} // namespace

double mode_norm(const LayerStack& stack, const BlochFieldProfile& profile) {
    return field_norm_impl(stack, profile, 0);
}

double epsilon_weighted_norm(const LayerStack& stack, const BlochFieldProfile& profile) {
    return field_norm_impl(stack, profile, 1);
}

FourierCoefficients fourier_coefficients(const LayerStack& stack, const BlochFieldProfile& profile,
                                         int m_cutoff, bool check_parseval) {
    if (m_cutoff < 1) throw std::invalid_argument("fourier_coefficients: m_cutoff must be >= 1");

    FourierCoefficients out;
    out.point = profile.point;
    out.m_cutoff = m_cutoff;
    out.b_z_ev = stack.b_z_ev();

    const double b_z = stack.b_z_ev();
    const double period = stack.period_nat();
    const double omega = profile.omega_ev;
    const double k_rho = profile.k_rho_ev;
    const bool tm = profile.point.pol == Polarization::TM;

    const std::size_t count = static_cast<std::size_t>(2 * m_cutoff + 1);
    out.coeff.assign(count, {});
    if (tm) {
        out.coeff_ex.assign(count, {});
        out.coeff_ez.assign(count, {});
        out.longitudinal.assign(count, {});
    }

    for (int m = -m_cutoff; m <= m_cutoff; ++m) {
        const double gamma = profile.k_z_ev + m * b_z;
        const std::size_t idx = static_cast<std::size_t>(m + m_cutoff);
        cplx f_int{}; // Int f(z) e^{-i gamma z} over the cell (TE)
        cplx ex{};    // TM: E_x = -i f'/(p w), E_z = -k_rho f/(p w), 1/p per layer
        cplx ez{};
        for (const auto& lay : profile.layers) {
            const cplx phase0 = std::exp(-kImag * gamma * lay.z0);
            const cplx fwd = detail::phase_integral(lay.k_axial - gamma, lay.d);
            const cplx bwd = detail::phase_integral_right(lay.k_axial, gamma, lay.d);
            const cplx f_lay = phase0 * (lay.amp_fwd * fwd + lay.amp_bwd * bwd);
            if (!tm) {
                f_int += f_lay;
            } else {
                const cplx df_lay =
                    phase0 * kImag * lay.k_axial * (lay.amp_fwd * fwd - lay.amp_bwd * bwd);
                ex += -kImag * df_lay / (lay.p * omega);
                ez += -k_rho * f_lay / (lay.p * omega);
            }
        }
        if (!tm) {
            out.coeff[idx] = f_int / period; // E_y coefficient directly
            continue;
        }
        ex /= period;
        ez /= period;
        out.coeff_ex[idx] = ex;
        out.coeff_ez[idx] = ez;
        const double q = gamma;
        const double kg = std::sqrt(k_rho * k_rho + q * q);
        if (kg > 0.0) {
            out.coeff[idx] = (q * ex - k_rho * ez) / kg;        // transverse (in-plane) part
            out.longitudinal[idx] = (k_rho * ex + q * ez) / kg; // discarded, tracked
        }
    }

    // Gauge: rotate so the largest-magnitude coefficient is real positive.
    std::size_t imax = 0;
    for (std::size_t i = 1; i < out.coeff.size(); ++i)
        if (std::abs(out.coeff[i]) > std::abs(out.coeff[imax])) imax = i;
    const double mag = std::abs(out.coeff[imax]);
    if (mag > 0.0) {
        const cplx rot = std::conj(out.coeff[imax]) / mag;
        for (auto& c : out.coeff) c *= rot;
        for (auto& c : out.coeff_ex) c *= rot;
        for (auto& c : out.coeff_ez) c *= rot;
        for (auto& c : out.longitudinal) c *= rot;
    }

    if (tm) {
        double trans = 0.0, lon = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            trans += abs2(out.coeff[i]);
            lon += abs2(out.longitudinal[i]);
        }
        out.longitudinal_residual = (trans + lon) > 0.0 ? lon / (trans + lon) : 0.0;
    }

    if (check_parseval)
        out.parseval_defect = std::abs(epsilon_weighted_g_norm(stack, profile, out) -
                                       epsilon_weighted_norm(stack, profile));
    return out;
}

double epsilon_weighted_g_norm(const LayerStack& stack, const BlochFieldProfile& profile,
                               const FourierCoefficients& coeffs) {
    const int m_max = coeffs.m_cutoff;
    const double b_z = stack.b_z_ev();
    const double d_h = stack.d_h_nat();
    const double period = stack.period_nat();
    const double n_h = profile.layers[0].n;
    const double contrast = n_h * n_h - 1.0;

    // eps(z) Fourier coefficients, h layer on [0, d_h]
    std::vector<cplx> eps_hat(static_cast<std::size_t>(4 * m_max + 1));
    for (int dm = -2 * m_max; dm <= 2 * m_max; ++dm) {
        cplx v = contrast * detail::phase_integral(cplx(-dm * b_z), d_h) / period;
        if (dm == 0) v += 1.0;
        eps_hat[static_cast<std::size_t>(dm + 2 * m_max)] = v;
    }

    const bool tm = profile.point.pol == Polarization::TM;
    cplx total{};
    for (int m = -m_max; m <= m_max; ++m) {
        for (int mp = -m_max; mp <= m_max; ++mp) {
            const cplx eps = eps_hat[static_cast<std::size_t>(m - mp + 2 * m_max)];
            const std::size_t i = static_cast<std::size_t>(m + m_max);
            const std::size_t j = static_cast<std::size_t>(mp + m_max);
            if (tm) {
                total += eps * (std::conj(coeffs.coeff_ex[i]) * coeffs.coeff_ex[j] +
                                std::conj(coeffs.coeff_ez[i]) * coeffs.coeff_ez[j]);
            } else {
                total += eps * std::conj(coeffs.coeff[i]) * coeffs.coeff[j];
            }
        }
    }
    return total.real();
}

cplx reconstruct_from_coefficients(const std::vector<cplx>& coeff, int m_cutoff, double k_z_ev,
                                   double b_z_ev, double z_nat) {
    cplx sum{};
    for (int m = -m_cutoff; m <= m_cutoff; ++m) {
        const double q = k_z_ev + m * b_z_ev;
        sum += coeff[static_cast<std::size_t>(m + m_cutoff)] * std::exp(kImag * q * z_nat);
    }
    return sum;
}

} // namespace pcmass
