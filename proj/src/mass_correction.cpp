#include "pcmass/mass_correction.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <mutex>
#include <numbers>

#include "pcmass/bloch_fields.hpp"
#include "pcmass/numerics.hpp"
#include "pcmass/parallel.hpp"

namespace pcmass {

namespace {

constexpr double kPi = std::numbers::pi;

double max_omega_n(const LayerStack& stack, double omega_max_ev) {
    // sup of omega * n_h(omega) over the included band range; bands at k_rho
    // require omega n_h(omega) > k_rho for some omega <= omega_max, so this
    // bounds the integrand support in k_rho.
    double best = omega_max_ev;
    for (int i = 1; i <= 256; ++i) {
        const double w = omega_max_ev * i / 256.0;
        best = std::max(best, w * stack.model_h()(w));
    }
    return best;
}

double max_index(const LayerStack& stack, double omega_max_ev) {
    double best = 1.0;
    for (int i = 1; i <= 256; ++i)
        best = std::max(best, stack.model_h()(omega_max_ev * i / 256.0));
    return best;
}

// Sum of 1/(k_rho^2 + q_j^2) over the n extended-zone cells closest to the
// axis, q = k_z + m b_z sorted by |q|.
double matched_cell_sum(double k_rho_ev, double k_z_ev, double b_z_ev, int n) {
    if (n <= 0) return 0.0;
    std::vector<double> q2;
    q2.reserve(static_cast<std::size_t>(2 * n + 13));
    for (int m = -(n + 6); m <= n + 6; ++m) {
        const double q = k_z_ev + m * b_z_ev;
        q2.push_back(q * q);
    }
    std::sort(q2.begin(), q2.end());
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += 1.0 / (k_rho_ev * k_rho_ev + q2[static_cast<std::size_t>(j)]);
    return sum;
}

struct NodeResult {
    double a_pc = 0.0; // PC-band A integrand (before prefactor and vacuum term)
    double b_pc = 0.0;
    double e17 = 0.0;  // direct ionization integrand
    double vac = 0.0;  // matched vacuum A integrand
    double lr_sum = 0.0;
    double lr_max = 0.0;
    int lr_count = 0;
    int max_band = 0;
    std::vector<double> band_a; // filled on the diagnostic (coarse) level only
    std::vector<double> band_b;
};

struct EngineContext {
    const LayerStack* stack;
    const RegularizationConfig* reg;
    SolveOptions solve_opts;
    int m_cutoff;
    bool per_band;
};

NodeResult compute_node(const EngineContext& ctx, double k_rho_ev, double k_z_ev) {
    const LayerStack& stack = *ctx.stack;
    const double omega_max = ctx.reg->omega_max_ev;
    const double b_z = stack.b_z_ev();
    const double kr2 = k_rho_ev * k_rho_ev;
    const double k_rho_invnm = energy_to_wavenumber(k_rho_ev);
    const double k_z_invnm = energy_to_wavenumber(k_z_ev);

    NodeResult out;
    for (const Polarization pol : {Polarization::TE, Polarization::TM}) {
        const auto bands =
            solve_bands(stack, pol, k_rho_invnm, k_z_invnm, omega_max, ctx.solve_opts);
        out.max_band = std::max(out.max_band, static_cast<int>(bands.size()));
        if (ctx.per_band && out.band_a.size() < bands.size()) {
            out.band_a.resize(bands.size(), 0.0);
            out.band_b.resize(bands.size(), 0.0);
        }
        for (const auto& bp : bands) {
            const auto profile = mode_profile(stack, bp);
            const auto co = fourier_coefficients(stack, profile, ctx.m_cutoff);
            const double inv_w2 = 1.0 / (bp.omega_ev * bp.omega_ev);
            double band_a = 0.0, band_b = 0.0, band_e = 0.0;
            for (int m = -ctx.m_cutoff; m <= ctx.m_cutoff; ++m) {
                const double w2 = std::norm(co.at(m));
                if (w2 == 0.0) continue;
                const double q = k_z_ev + m * b_z;
                const double kg2 = kr2 + q * q;
                assert(kg2 > 0.0); // open quadrature rule never lands on the origin
                if (pol == Polarization::TE) {
                    // azimuthal field direction: A factor 1, B factor -1
                    band_a += w2 * inv_w2;
                    band_b -= w2 * inv_w2;
                    band_e += w2 * inv_w2;
                } else {
                    // in-plane field direction: (q^2, 2 k_rho^2 - q^2) / k_G^2
                    band_a += w2 * inv_w2 * (q * q / kg2);
                    band_b += w2 * inv_w2 * (2.0 * kr2 - q * q) / kg2;
                    band_e += w2 * inv_w2 * (q * q - 2.0 * kr2) / kg2;
                }
            }
            out.a_pc += band_a;
            out.b_pc += band_b;
            out.e17 += band_e;
            if (ctx.per_band) {
                out.band_a[static_cast<std::size_t>(bp.band - 1)] += band_a;
                out.band_b[static_cast<std::size_t>(bp.band - 1)] += band_b;
            }
            if (pol == Polarization::TM) {
                out.lr_sum += co.longitudinal_residual;
                out.lr_max = std::max(out.lr_max, co.longitudinal_residual);
                ++out.lr_count;
            }
        }
        if (ctx.reg->scheme == SubtractionScheme::ModeMatched)
            out.vac += matched_cell_sum(k_rho_ev, k_z_ev, b_z, static_cast<int>(bands.size())) / 3.0;
    }
    return out;
}

struct LevelTotals {
    double a = 0.0;
    double b = 0.0;
    double e17 = 0.0;
    double vac = 0.0;
};

} // namespace

const char* to_string(SubtractionScheme s) {
    return s == SubtractionScheme::ModeMatched ? "mode" : "freq";
}

MassCorrection ab_coefficients(const LayerStack& stack, const QuadratureConfig& quad,
                               const RegularizationConfig& reg, unsigned threads) {
    if (!(reg.omega_max_ev > 0.0))
        throw std::invalid_argument("ab_coefficients: omega_max must be > 0");
    if (!(quad.tol_rel > 0.0) || !(quad.floor_ev > 0.0))
        throw std::invalid_argument("ab_coefficients: tolerances must be > 0");
    if (quad.n_rho < 1 || quad.n_z < 1 || quad.gauss_order < 2)
        throw std::invalid_argument("ab_coefficients: bad quadrature grid");

    const double support = max_omega_n(stack, reg.omega_max_ev);
    const double k_rho_max_ev = quad.k_rho_max_invnm > 0.0
                                    ? wavenumber_to_energy(quad.k_rho_max_invnm)
                                    : 1.05 * support;
    if (!(k_rho_max_ev > 0.0))
        throw std::invalid_argument("ab_coefficients: k_rho_max must be > 0");

    const double b_z = stack.b_z_ev();
    int m_cutoff = quad.m_cutoff;
    if (m_cutoff <= 0)
        m_cutoff = std::clamp(static_cast<int>(std::ceil(1.25 * support / b_z)) + 8, 8, 160);

    EngineContext ctx;
    ctx.stack = &stack;
    ctx.reg = &reg;
    ctx.m_cutoff = m_cutoff;
    ctx.per_band = false;
    {
        const double n_max = max_index(stack, reg.omega_max_ev);
        const double n_path = (n_max * stack.d_h_nat() + stack.d_l_nat()) / stack.period_nat();
        ctx.solve_opts.scan_step_ev = 0.5 * b_z / (8.0 * std::max(1.0, n_path));
        ctx.solve_opts.n_scan_max = n_max;
    }

    const GaussRule gauss(quad.gauss_order);
    const double prefactor = constants::alpha / kPi;

    MassCorrection result;
    result.diag.scheme = reg.scheme;
    result.diag.m_cutoff = m_cutoff;
    result.diag.k_rho_max_ev = k_rho_max_ev;

    LevelTotals prev{};
    bool have_prev = false;

    for (int level = 0; level <= quad.max_refinements; ++level) {
        const int pr = quad.n_rho << level;
        const int pz = quad.n_z << level;
        const PanelRule rho_rule(0.0, k_rho_max_ev, pr, gauss);
        const PanelRule z_rule(0.0, 0.5 * b_z, pz, gauss); // even in k_z: half zone, doubled
        ctx.per_band = (level == 0);

        const std::size_t n_nodes = rho_rule.node.size() * z_rule.node.size();
        std::vector<NodeResult> slots(n_nodes);
        std::exception_ptr err;
        std::mutex err_mutex;
        parallel_for_indexed(n_nodes, threads, [&](std::size_t idx) {
            try {
                const std::size_t i = idx / z_rule.node.size();
                const std::size_t j = idx % z_rule.node.size();
                slots[idx] = compute_node(ctx, rho_rule.node[i], z_rule.node[j]);
            } catch (...) {
                std::scoped_lock lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
        if (err) std::rethrow_exception(err);

        // Deterministic reduction: fixed slot order, compensated sums.
        KahanSum acc_a, acc_b, acc_e, acc_vac, acc_lr;
        double lr_max = 0.0;
        long lr_count = 0;
        int max_band = 0;
        std::vector<double> band_a, band_b;
        for (std::size_t idx = 0; idx < n_nodes; ++idx) {
            const std::size_t i = idx / z_rule.node.size();
            const std::size_t j = idx % z_rule.node.size();
            const double k_rho = rho_rule.node[i];
            const double w = 2.0 * rho_rule.weight[i] * z_rule.weight[j] * k_rho;
            const NodeResult& nr = slots[idx];
            acc_a.add(w * (nr.a_pc - nr.vac));
            acc_b.add(w * nr.b_pc);
            acc_e.add(w * nr.e17);
            acc_vac.add(w * nr.vac);
            acc_lr.add(nr.lr_sum);
            lr_max = std::max(lr_max, nr.lr_max);
            lr_count += nr.lr_count;
            max_band = std::max(max_band, nr.max_band);
            if (ctx.per_band && !nr.band_a.empty()) {
                if (band_a.size() < nr.band_a.size()) {
                    band_a.resize(nr.band_a.size(), 0.0);
                    band_b.resize(nr.band_b.size(), 0.0);
                }
                for (std::size_t bidx = 0; bidx < nr.band_a.size(); ++bidx) {
                    band_a[bidx] += w * prefactor * nr.band_a[bidx];
                    band_b[bidx] += w * prefactor * nr.band_b[bidx];
                }
            }
        }

        LevelTotals cur;
        cur.a = prefactor * acc_a.value();
        cur.b = prefactor * acc_b.value();
        cur.e17 = -(2.0 / 3.0) * prefactor * acc_e.value();
        cur.vac = prefactor * acc_vac.value();
        if (reg.scheme == SubtractionScheme::FrequencyMatched) {
            const double sphere = vacuum_subtraction_term_sphere(reg.omega_max_ev);
            cur.a -= sphere;
            cur.vac = sphere;
        }

        result.a_ev = cur.a;
        result.b_ev = cur.b;
        result.diag.level_a_ev.push_back(cur.a);
        result.diag.level_b_ev.push_back(cur.b);
        result.diag.vacuum_term_ev = cur.vac;
        result.diag.closed_form_delta_e_ion_ev = cur.e17;
        result.diag.refinement_levels = level;
        result.diag.max_bands = std::max(result.diag.max_bands, max_band);
        result.diag.longitudinal_residual_max =
            std::max(result.diag.longitudinal_residual_max, lr_max);
        if (lr_count > 0) result.diag.longitudinal_residual_mean = acc_lr.value() / lr_count;
        if (ctx.per_band) {
            result.diag.band_a_ev = std::move(band_a);
            result.diag.band_b_ev = std::move(band_b);
        }

        if (have_prev) {
            const double scale = std::max(std::abs(cur.a), std::abs(cur.b));
            const double delta = std::max(std::abs(cur.a - prev.a), std::abs(cur.b - prev.b));
            result.diag.tol_achieved = delta / std::max(scale, quad.floor_ev);
            if (delta <= std::max(quad.tol_rel * scale, quad.floor_ev)) {
                result.diag.converged = true;
                return result;
            }
        }
        prev = cur;
        have_prev = true;
    }

    throw QuadratureNonConvergence(
        "ab_coefficients: quadrature not converged after " +
            std::to_string(quad.max_refinements) + " refinements (achieved " +
            std::to_string(result.diag.tol_achieved) + ", target " + std::to_string(quad.tol_rel) +
            ")",
        result);
}

double delta_m(const Direction& direction, const MassCorrection& mc) {
    const double c = std::cos(direction.theta);
    return mc.a_ev + c * c * mc.b_ev;
}

double vacuum_subtraction_term(double b_z_ev, std::span<const VacuumMatchNode> nodes) {
    KahanSum acc;
    for (const auto& node : nodes) {
        const double s_te = matched_cell_sum(node.k_rho_ev, node.k_z_ev, b_z_ev, node.n_te);
        const double s_tm = matched_cell_sum(node.k_rho_ev, node.k_z_ev, b_z_ev, node.n_tm);
        acc.add(node.weight_ev2 * node.k_rho_ev * (s_te + s_tm) / 3.0);
    }
    return constants::alpha / kPi * acc.value();
}

double vacuum_subtraction_term_sphere(double omega_max_ev) {
    return vacuum_mass_correction(omega_max_ev);
}

AzimuthalCheckReport azimuthal_reduction_check(const LayerStack& stack,
                                               std::span<const AngularSample> samples) {
    AzimuthalCheckReport report;
    constexpr int kPhiPoints = 64; // periodic trapezoid: exact for trig polynomials
    constexpr double kTol = 1e-10;
    const double b_z = stack.b_z_ev();

    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& smp = samples[s];
        const double q = smp.k_z_ev + smp.m * b_z;
        const double kr = smp.k_rho_ev;
        const double kg2 = kr * kr + q * q;
        if (!(kg2 > 0.0)) continue;
        const double kg = std::sqrt(kg2);
        const double st = std::sin(smp.theta), ct = std::cos(smp.theta);
        const double ip[3] = {st * std::cos(smp.phi), st * std::sin(smp.phi), ct};

        double te_num = 0.0, tm_num = 0.0, cross_num = 0.0;
        for (int i = 0; i < kPhiPoints; ++i) {
            const double phi = 2.0 * kPi * i / kPhiPoints;
            const double cp = std::cos(phi), sp = std::sin(phi);
            // azimuthal unit vector (TE field direction)
            const double e_te[3] = {-sp, cp, 0.0};
            // in-plane transverse unit vector (TM field direction)
            const double e_tm[3] = {q * cp / kg, q * sp / kg, -kr / kg};
            const double d_te = ip[0] * e_te[0] + ip[1] * e_te[1];
            const double d_tm = ip[0] * e_tm[0] + ip[1] * e_tm[1] + ip[2] * e_tm[2];
            te_num += d_te * d_te;
            tm_num += d_tm * d_tm;
            cross_num += d_te * d_tm;
        }
        const double scale = 2.0 / kPhiPoints; // (1/pi) * (2 pi / N)
        te_num *= scale;
        tm_num *= scale;
        cross_num *= scale;

        const double te_closed = st * st;
        const double tm_closed = (q * q * st * st + 2.0 * kr * kr * ct * ct) / kg2;

        const double d_te = std::abs(te_num - te_closed);
        const double d_tm = std::abs(tm_num - tm_closed);
        const double d_x = std::abs(cross_num);
        report.max_te_discrepancy = std::max(report.max_te_discrepancy, d_te);
        report.max_tm_discrepancy = std::max(report.max_tm_discrepancy, d_tm);
        report.max_cross_term = std::max(report.max_cross_term, d_x);
        if (d_te > kTol || d_tm > kTol || d_x > kTol) {
            report.pass = false;
            report.failures.push_back("sample " + std::to_string(s) + " (k_rho " +
                                      std::to_string(kr) + " eV, q " + std::to_string(q) +
                                      " eV, theta " + std::to_string(smp.theta) + ")");
        }
    }
    return report;
}

TailEstimate tail_estimate(const LayerStack& stack, double k0_ev, double c1_ev2) {
    if (!(k0_ev > stack.b_z_ev()))
        throw std::domain_error("tail_estimate: k0 must exceed the FBZ width");
    TailEstimate out;
    out.c1_ev2 = c1_ev2;
    out.k0_ev = k0_ev;
    out.magnitude_ev = 2.0 * constants::alpha / (3.0 * kPi) * c1_ev2 *
                       (stack.d_h_nat() / stack.period_nat()) / k0_ev;
    out.rel_error_c1 = c1_ev2 / k0_ev;
    out.rel_error_bz2 = stack.b_z_ev() * stack.b_z_ev() / k0_ev;
    return out;
}

double fit_sellmeier_c1(const DispersionModel& model, double k0_ev) {
    return (model(k0_ev) - 1.0) * k0_ev * k0_ev;
}

} // namespace pcmass
