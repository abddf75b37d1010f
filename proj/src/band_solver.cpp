#include "pcmass/band_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "pcmass/core.hpp"
#include "pcmass/numerics.hpp"
#include "pcmass/parallel.hpp"
#include "stack_math.hpp"

namespace pcmass {

const char* to_string(Polarization pol) { return pol == Polarization::TE ? "TE" : "TM"; }

LayerStack::LayerStack(double d_h_nm, double d_l_nm, std::shared_ptr<const DispersionModel> model_h)
    : d_h_nm_(d_h_nm), d_l_nm_(d_l_nm), model_h_(std::move(model_h)) {
    if (!(d_h_nm_ > 0.0 && d_l_nm_ > 0.0))
        throw std::invalid_argument("LayerStack: layer thicknesses must be > 0");
    if (!model_h_) throw std::invalid_argument("LayerStack: missing host dispersion model");
    d_h_nat_ = d_h_nm_ / constants::hbar_c_ev_nm;
    d_l_nat_ = d_l_nm_ / constants::hbar_c_ev_nm;
    b_z_ev_ = 2.0 * std::numbers::pi / (d_h_nat_ + d_l_nat_);
}

double LayerStack::b_z_invnm() const { return 2.0 * std::numbers::pi / period_nm(); }
double LayerStack::fbz_edge_invnm() const { return std::numbers::pi / period_nm(); }

BrillouinZone brillouin_zone(const LayerStack& stack) {
    return {stack.b_z_invnm(), stack.fbz_edge_invnm()};
}

std::complex<double> layer_axial_wavenumber(double n, double omega_ev, double k_rho_ev) {
    if (!(omega_ev > 0.0)) throw std::domain_error("layer_axial_wavenumber: omega must be > 0");
    if (k_rho_ev < 0.0) throw std::domain_error("layer_axial_wavenumber: k_rho must be >= 0");
    const double x = omega_ev * n * omega_ev * n - k_rho_ev * k_rho_ev;
    if (x >= 0.0) return {std::sqrt(x), 0.0};
    return {0.0, std::sqrt(-x)};
}

namespace detail {

TrigPair layer_trig(double x, double d) { return layer_trig_impl(x, d); }

double mode_count_estimate(const LayerStack& stack, double omega_max_ev, double k_rho_ev) {
    const double n_h = stack.model_h()(omega_max_ev);
    const double xh = omega_max_ev * n_h * omega_max_ev * n_h - k_rho_ev * k_rho_ev;
    const double xl = omega_max_ev * omega_max_ev - k_rho_ev * k_rho_ev;
    double phase = 0.0;
    if (xh > 0.0) phase += std::sqrt(xh) * stack.d_h_nat();
    if (xl > 0.0) phase += std::sqrt(xl) * stack.d_l_nat();
    return phase / std::numbers::pi;
}

} // namespace detail

double dispersion_residual(const LayerStack& stack, Polarization pol, double omega_ev,
                           double k_rho_invnm, double k_z_invnm) {
    if (!(omega_ev > 0.0)) throw std::domain_error("dispersion_residual: omega must be > 0");
    if (k_rho_invnm < 0.0) throw std::domain_error("dispersion_residual: k_rho must be >= 0");
    const double edge = stack.fbz_edge_invnm();
    if (std::abs(k_z_invnm) > edge * (1.0 + 1e-12))
        throw std::domain_error("dispersion_residual: k_z outside the first Brillouin zone");
    const double k_rho_ev = wavenumber_to_energy(k_rho_invnm);
    const double k_z_ev = wavenumber_to_energy(std::abs(k_z_invnm)); // even in k_z, bitwise
    const auto e = detail::eval_stack(stack, pol, omega_ev, k_rho_ev);
    const auto ht = detail::half_trace_scaled(stack, e);
    return std::cos(k_z_ev * stack.period_nat()) / ht.env - ht.f_s;
}

namespace {

using detail::eval_stack;
using detail::half_cell_scaled;
using detail::half_trace_scaled;
using detail::Mat2;

struct EdgeRoot {
    double omega;
    int family; // +1: F = +1 edge, -1: F = -1 edge
};

double auto_scan_step(const LayerStack& stack, double omega_max_ev) {
    // (pi/L)/(8 n) in energy units, with n the largest in-band optical-path
    // average, so closely spaced high-band roots cannot share a scan cell.
    double n_max = 1.0;
    for (int i = 1; i <= 64; ++i) {
        const double w = omega_max_ev * i / 64.0;
        n_max = std::max(n_max, stack.model_h()(w));
    }
    const double n_path = (n_max * stack.d_h_nat() + stack.d_l_nat()) / stack.period_nat();
    return 0.5 * stack.b_z_ev() / (8.0 * std::max(1.0, n_path));
}

// All zeros of the four half-cell entry functions in (omega_lo, omega_hi],
// located by sign-change scanning at `step` plus Brent refinement.
std::vector<EdgeRoot> band_edges(const LayerStack& stack, Polarization pol, double k_rho_ev,
                                 double omega_lo, double omega_hi, double step) {
    std::vector<EdgeRoot> edges;
    const auto entry = [&](double w, int which) {
        const Mat2 a = half_cell_scaled(stack, eval_stack(stack, pol, w, k_rho_ev));
        switch (which) {
            case 0: return a.a12;
            case 1: return a.a21;
            case 2: return a.a11;
            default: return a.a22;
        }
    };

    const int n_steps = std::max(2, static_cast<int>(std::ceil((omega_hi - omega_lo) / step)));
    const double h = (omega_hi - omega_lo) / n_steps;
    double prev[4];
    double w_prev = omega_lo;
    {
        const Mat2 a = half_cell_scaled(stack, eval_stack(stack, pol, w_prev, k_rho_ev));
        prev[0] = a.a12; prev[1] = a.a21; prev[2] = a.a11; prev[3] = a.a22;
    }
    for (int i = 1; i <= n_steps; ++i) {
        const double w = omega_lo + i * h;
        const Mat2 a = half_cell_scaled(stack, eval_stack(stack, pol, w, k_rho_ev));
        const double cur[4] = {a.a12, a.a21, a.a11, a.a22};
        for (int which = 0; which < 4; ++which) {
            if (prev[which] == 0.0 || prev[which] * cur[which] < 0.0) {
                const double root = refine_root([&](double ww) { return entry(ww, which); },
                                                w_prev, w, prev[which], cur[which], 1e-13);
                edges.push_back({root, which < 2 ? +1 : -1});
            }
            prev[which] = cur[which];
        }
        w_prev = w;
    }
    std::sort(edges.begin(), edges.end(),
              [](const EdgeRoot& a, const EdgeRoot& b) { return a.omega < b.omega; });
    return edges;
}

} // namespace

std::vector<BandPoint> solve_bands(const LayerStack& stack, Polarization pol, double k_rho_invnm,
                                   double k_z_invnm, double omega_max_ev, const SolveOptions& opts) {
    if (!(omega_max_ev > 0.0)) throw std::domain_error("solve_bands: omega_max must be > 0");
    if (k_rho_invnm < 0.0) throw std::domain_error("solve_bands: k_rho must be >= 0");
    const double edge_invnm = stack.fbz_edge_invnm();
    if (std::abs(k_z_invnm) > edge_invnm * (1.0 + 1e-12))
        throw std::domain_error("solve_bands: k_z outside the first Brillouin zone");

    const double k_rho_ev = wavenumber_to_energy(k_rho_invnm);
    const double k_z_ev = wavenumber_to_energy(std::abs(k_z_invnm));
    const double c_target = std::cos(k_z_ev * stack.period_nat());

    // The lowest band needs a propagating h-layer: omega n_h(omega) > k_rho.
    double n_scan_max = opts.n_scan_max;
    if (!(n_scan_max > 0.0)) {
        n_scan_max = 1.0;
        for (int i = 1; i <= 64; ++i)
            n_scan_max = std::max(n_scan_max, stack.model_h()(omega_max_ev * i / 64.0));
    }
    const double omega_lo = std::max(1e-9 * omega_max_ev, 0.98 * k_rho_ev / n_scan_max);
    if (omega_lo >= omega_max_ev) return {};

    double step = opts.scan_step_ev > 0.0 ? opts.scan_step_ev : auto_scan_step(stack, omega_max_ev);
    const double estimate = detail::mode_count_estimate(stack, omega_max_ev, k_rho_ev);

    const auto residual = [&](double w) {
        const auto ht = half_trace_scaled(stack, eval_stack(stack, pol, w, k_rho_ev));
        return c_target / ht.env - ht.f_s;
    };

    for (int attempt = 0; attempt <= opts.max_rescans; ++attempt, step *= 0.5) {
        const auto edges = band_edges(stack, pol, k_rho_ev, omega_lo, omega_max_ev, step);

        std::vector<double> roots;
        const bool at_center = std::abs(c_target - 1.0) < 1e-14;
        const bool at_edge = std::abs(c_target + 1.0) < 1e-14;
        if (at_center || at_edge) {
            // Degenerate targets cos(k_z L) = +-1: the Bloch states are the
            // band-edge states of the matching family themselves.
            const int family = at_center ? +1 : -1;
            for (const auto& e : edges)
                if (e.family == family) roots.push_back(e.omega);
        } else {
            // One root per band interval; a short sub-scan guards against
            // non-monotone trace excursions with dispersive hosts. Deeply
            // guided flat bands (evanescent void) can be narrower than the
            // edge-refinement precision; any k_z root then coincides with the
            // band itself, so the midpoint is emitted directly.
            const double narrow = 1e-10 * omega_max_ev;
            std::vector<std::pair<double, int>> seps; // omega, family (0 = domain end)
            seps.emplace_back(omega_lo, 0);
            for (const auto& e : edges) seps.emplace_back(e.omega, e.family);
            seps.emplace_back(omega_max_ev, 0);
            for (std::size_t i = 0; i + 1 < seps.size(); ++i) {
                const double a = seps[i].first, b = seps[i + 1].first;
                if (b - a <= narrow) {
                    if (seps[i].second != 0 && seps[i + 1].second != 0 &&
                        seps[i].second != seps[i + 1].second) {
                        // a band narrower than the edge spacing: the residual
                        // still changes sign across it, so polish to machine
                        // precision (these flat guided bands carry residual
                        // slopes of order 1/bandwidth)
                        const double fa = residual(a);
                        const double fb = residual(b);
                        if ((fa > 0.0 && fb < 0.0) || (fa < 0.0 && fb > 0.0))
                            roots.push_back(refine_root(residual, a, b, fa, fb,
                                                        8.0 * std::numeric_limits<double>::epsilon()));
                        else
                            roots.push_back(0.5 * (a + b));
                    }
                    continue;
                }
                const auto mid =
                    half_trace_scaled(stack, eval_stack(stack, pol, 0.5 * (a + b), k_rho_ev));
                if (!(std::abs(mid.f_s) * mid.env < 1.0)) continue; // gap interval
                constexpr int kSub = 8;
                const double nudge = 1e-10 * (b - a);
                double wa = a + nudge;
                double fa = residual(wa);
                for (int j = 1; j <= kSub; ++j) {
                    const double wb = (j == kSub) ? b - nudge : a + (b - a) * j / kSub;
                    const double fb = residual(wb);
                    if (fa == 0.0) {
                        roots.push_back(wa);
                    } else if ((fa > 0.0 && fb < 0.0) || (fa < 0.0 && fb > 0.0)) {
                        // sign test without the product: deep-evanescent
                        // residuals can underflow when multiplied
                        roots.push_back(refine_root(residual, wa, wb, fa, fb, 1e-13));
                    }
                    wa = wb;
                    fa = fb;
                }
            }
        }

        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end(),
                                [&](double a, double b) { return b - a < 1e-13 * omega_max_ev; }),
                    roots.end());
        while (!roots.empty() && roots.back() > omega_max_ev) roots.pop_back();

        const double slack = 2.0 + 0.1 * estimate;
        const bool count_ok = std::abs(static_cast<double>(roots.size()) - estimate) <= slack;
        if (count_ok || attempt == opts.max_rescans) {
            if (!count_ok)
                throw std::runtime_error(
                    "solve_bands: root count disagrees with the mode-count estimate after " +
                    std::to_string(opts.max_rescans) + " rescans (found " +
                    std::to_string(roots.size()) + ", expected ~" + std::to_string(estimate) + ")");
            std::vector<BandPoint> out;
            out.reserve(roots.size());
            for (std::size_t i = 0; i < roots.size(); ++i)
                out.push_back({k_rho_invnm, k_z_invnm, static_cast<int>(i) + 1, pol, roots[i]});
            return out;
        }
    }
    return {}; // unreachable
}

BandSurface band_surface(const LayerStack& stack, Polarization pol,
                         const std::vector<double>& k_rho_grid_invnm,
                         const std::vector<double>& k_z_grid_invnm, double omega_max_ev,
                         unsigned threads) {
    if (k_rho_grid_invnm.empty() || k_z_grid_invnm.empty())
        throw std::invalid_argument("band_surface: empty grid");

    BandSurface surf;
    surf.k_rho_invnm = k_rho_grid_invnm;
    surf.k_z_invnm = k_z_grid_invnm;

    const std::size_t n = k_rho_grid_invnm.size() * k_z_grid_invnm.size();
    std::vector<std::vector<BandPoint>> slots(n);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    parallel_for_indexed(n, threads, [&](std::size_t idx) {
        try {
            const std::size_t i = idx / k_z_grid_invnm.size();
            const std::size_t j = idx % k_z_grid_invnm.size();
            slots[idx] =
                solve_bands(stack, pol, k_rho_grid_invnm[i], k_z_grid_invnm[j], omega_max_ev);
        } catch (...) {
            std::scoped_lock lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    });
    if (first_error) std::rethrow_exception(first_error);

    for (auto& s : slots)
        surf.points.insert(surf.points.end(), s.begin(), s.end());
    return surf;
}

} // namespace pcmass
