#include "pcmass/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pcmass/bloch_fields.hpp"
#include "pcmass/ionization.hpp"
#include "pcmass/numerics.hpp"

namespace pcmass {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Writes a CSV and re-parses it against its own schema before committing.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
    const std::size_t n_cols = static_cast<std::size_t>(
        std::count(header.begin(), header.end(), ',') + 1);
    std::ostringstream out;
    out << header << "\n";
    for (const auto& row : rows) {
        if (row.size() != n_cols)
            throw std::runtime_error("csv self-check: row width mismatch in " + path);
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "");
        out << "\n";
    }

    // self-check: every line splits into the declared column count
    std::istringstream check(out.str());
    std::string line;
    while (std::getline(check, line)) {
        if (line.empty()) continue;
        const std::size_t cols = static_cast<std::size_t>(
            std::count(line.begin(), line.end(), ',') + 1);
        if (cols != n_cols) throw std::runtime_error("csv self-check failed for " + path);
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << out.str();
}

void write_text(const std::string& path, const std::string& text, std::ostream& log) {
    if (path.empty() || path == "-") {
        log << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

nlohmann::json mass_report_json(const MassCorrection& mc, const LayerStack& stack,
                                const RegularizationConfig& reg) {
    nlohmann::json j;
    j["A_eV"] = mc.a_ev;
    j["B_eV"] = mc.b_ev;
    j["tol_achieved"] = mc.diag.tol_achieved;
    j["converged"] = mc.diag.converged;
    j["bands_included"] = mc.diag.max_bands;
    j["M"] = mc.diag.m_cutoff;
    j["vacuum_term_eV"] = mc.diag.vacuum_term_ev;
    j["scheme"] = to_string(mc.diag.scheme);
    j["closed_form_delta_E_ion_eV"] = mc.diag.closed_form_delta_e_ion_ev;
    j["refinement_levels"] = mc.diag.refinement_levels;
    j["k_rho_max_invnm"] = energy_to_wavenumber(mc.diag.k_rho_max_ev);
    j["longitudinal_residual_max"] = mc.diag.longitudinal_residual_max;
    j["longitudinal_residual_mean"] = mc.diag.longitudinal_residual_mean;
    j["band_A_eV_coarse"] = mc.diag.band_a_ev;
    j["band_B_eV_coarse"] = mc.diag.band_b_ev;

    const double k0 = reg.k0_ev > 0.0 ? reg.k0_ev : 10.0 * reg.omega_max_ev;
    if (k0 > stack.b_z_ev()) {
        const double c1 = fit_sellmeier_c1(stack.model_h(), k0);
        const auto tail = tail_estimate(stack, k0, c1);
        j["tail_estimate_eV"] = tail.magnitude_ev;
        j["tail_C1_eV2"] = tail.c1_ev2;
        j["tail_k0_eV"] = tail.k0_ev;
    } else {
        j["tail_estimate_eV"] = 0.0;
    }
    return j;
}

} // namespace

int cmd_bands(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
    const LayerStack stack = config.build_stack();
    const double edge = stack.fbz_edge_invnm();

    std::vector<double> k_z_grid;
    const int n = config.bands.k_z_points;
    k_z_grid.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) k_z_grid.push_back(-edge + 2.0 * edge * j / (n - 1));

    std::vector<std::vector<std::string>> rows;
    for (const auto& pol_name : config.bands.polarizations) {
        const Polarization pol = pol_name == "TE" ? Polarization::TE : Polarization::TM;
        const auto surf = band_surface(stack, pol, config.bands.k_rho_invnm, k_z_grid,
                                       config.regularization.omega_max_ev, opts.threads);
        for (const auto& bp : surf.points)
            rows.push_back({fmt(bp.k_rho_invnm), fmt(bp.k_z_invnm), to_string(bp.pol),
                            std::to_string(bp.band), fmt(bp.omega_ev)});
    }

    const std::string path = opts.out_path.empty() ? "bands.csv" : opts.out_path;
    write_csv(path, "k_rho_invnm,k_z_invnm,pol,band,omega_eV", rows);
    log << "wrote " << rows.size() << " band points to " << path << "\n";
    return kExitOk;
}

int cmd_mass(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
    const LayerStack stack = config.build_stack();
    int code = kExitOk;
    MassCorrection mc;
    try {
        mc = ab_coefficients(stack, config.quadrature, config.regularization, opts.threads);
    } catch (const QuadratureNonConvergence& e) {
        log << "warning: " << e.what() << "\n";
        mc = e.best_estimate;
        code = kExitNoConverge;
    }
    const auto j = mass_report_json(mc, stack, config.regularization);
    const std::string path = opts.out_path.empty() ? "mass.json" : opts.out_path;
    write_text(path, j.dump(2) + "\n", log);
    if (path != "-" && !path.empty())
        log << "A = " << mc.a_ev << " eV, B = " << mc.b_ev << " eV -> " << path << "\n";
    return code;
}

int cmd_ionize(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
    const LayerStack stack = config.build_stack();
    const auto atoms = config.resolve_atoms();

    int code = kExitOk;
    double delta_e = 0.0;
    std::string route = "injected";
    std::string b_sign = "n/a";

    if (config.delta_e_ion_override_ev) {
        delta_e = *config.delta_e_ion_override_ev;
    } else {
        MassCorrection mc;
        try {
            mc = ab_coefficients(stack, config.quadrature, config.regularization, opts.threads);
        } catch (const QuadratureNonConvergence& e) {
            log << "warning: " << e.what() << "\n";
            mc = e.best_estimate;
            code = kExitNoConverge;
        }
        const auto general = ionization_correction_general(mc, AtomicState(0, 0));
        const double closed = mc.diag.closed_form_delta_e_ion_ev;
        delta_e = general.delta_e_ion_ev;
        route = to_string(general.route);
        b_sign = to_string(general.b_sign);
        if (general.b_sign == BSign::Positive) {
            log << "NOTE: B > 0 (" << mc.b_ev << " eV); the closed-form route (" << closed
                << " eV) is not the minimum-energy correction here, the general route ("
                << delta_e << " eV) is authoritative.\n";
        } else {
            log << "closed-form route: " << closed << " eV, general route: " << delta_e
                << " eV\n";
        }
    }

    const auto table = pc_ionization_table(atoms, delta_e);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : table)
        rows.push_back({r.symbol, fmt(r.i_vac_ev), fmt(r.delta_ev), fmt(r.i_pc_ev),
                        r.unbound ? "unbound" : "ok"});
    const std::string path = opts.out_path.empty() ? "ionization.csv" : opts.out_path;
    write_csv(path, "symbol,I_vac_eV,delta_eV,I_pc_eV,flag", rows);

    log << "delta_E_ion = " << delta_e << " eV (route: " << route << ", B sign: " << b_sign
        << ")\n";
    for (const auto& r : table)
        if (r.unbound)
            log << "WARNING: " << r.symbol << " has I_pc = " << r.i_pc_ev
                << " eV <= 0 (model predicts an unbound valence electron)\n";
    log << "wrote " << rows.size() << " rows to " << path << "\n";
    return code;
}

int cmd_sweep(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
    struct Point {
        std::string label;
        std::shared_ptr<const DispersionModel> model;
    };
    std::vector<Point> points;
    for (const double n : config.sweep.n_h)
        points.push_back({fmt(n), std::make_shared<ConstantIndex>(n)});
    for (const auto& [a, g] : config.sweep.meta_ag) {
        // reuse the configured dielectric when present
        std::shared_ptr<const DispersionModel> diel =
            (config.host.type == "metamaterial" && config.host.dielectric)
                ? config.host.dielectric->build()
                : std::make_shared<ConstantIndex>(1.0);
        auto model = std::make_shared<MetamaterialIndex>(a, g, diel, config.host.blend_start_ev,
                                                         config.host.blend_end_ev);
        const auto avg =
            average_index(*model, 0.05 * config.regularization.omega_max_ev,
                          config.regularization.omega_max_ev);
        points.push_back({fmt(avg.n_bar), model});
    }
    if (points.empty()) throw std::runtime_error("sweep: no points configured");

    double d_h = config.d_h_nm, d_l = config.d_l_nm;
    if (config.sweep.d_h_fraction > 0.0) {
        const double period = config.d_h_nm + config.d_l_nm;
        d_h = config.sweep.d_h_fraction * period;
        d_l = period - d_h;
    }

    std::vector<std::vector<std::string>> rows;
    for (const auto& pt : points) {
        std::string value, error;
        try {
            const LayerStack stack(d_h, d_l, pt.model);
            const MassCorrection mc =
                ab_coefficients(stack, config.quadrature, config.regularization, opts.threads);
            const auto res = ionization_correction_general(mc, AtomicState(0, 0));
            value = fmt(std::abs(res.delta_e_ion_ev));
        } catch (const QuadratureNonConvergence& e) {
            value = fmt(std::abs(
                ionization_correction_general(e.best_estimate, AtomicState(0, 0)).delta_e_ion_ev));
            error = "not-converged";
        } catch (const std::exception& e) {
            value = "";
            error = e.what();
            // commas would break the row
            for (auto& c : error)
                if (c == ',') c = ';';
        }
        rows.push_back({pt.label, value, error});
        log << "n_h = " << pt.label << ": |dE_ion| = " << (value.empty() ? "failed" : value)
            << (error.empty() ? "" : " (" + error + ")") << "\n";
    }

    const std::string path = opts.out_path.empty() ? "sweep.csv" : opts.out_path;
    write_csv(path, "n_h,abs_delta_E_ion_eV,error", rows);
    log << "wrote " << rows.size() << " sweep points to " << path << "\n";
    return kExitOk;
}

int cmd_check(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
    (void)opts;
    const LayerStack stack = config.build_stack();
    const double omega_max = config.regularization.omega_max_ev;
    const double edge = stack.fbz_edge_invnm();
    bool ok = true;

    const auto report = [&](const char* name, bool pass, double value) {
        log << (pass ? "[PASS] " : "[FAIL] ") << name << " (" << value << ")\n";
        ok = ok && pass;
    };

    // dispersion roots re-evaluate to ~0 and are even in k_z
    double worst_res = 0.0, worst_even = 0.0;
    int n_roots = 0;
    for (const double kr_frac : {0.0, 0.35, 0.8}) {
        const double k_rho = kr_frac * energy_to_wavenumber(omega_max);
        const double k_z = 0.37 * edge;
        for (const auto pol : {Polarization::TE, Polarization::TM}) {
            for (const auto& bp : solve_bands(stack, pol, k_rho, k_z, omega_max)) {
                ++n_roots;
                worst_res = std::max(worst_res, std::abs(dispersion_residual(
                                                    stack, pol, bp.omega_ev, k_rho, k_z)));
                worst_even = std::max(
                    worst_even, std::abs(dispersion_residual(stack, pol, bp.omega_ev, k_rho, k_z) -
                                         dispersion_residual(stack, pol, bp.omega_ev, k_rho, -k_z)));
            }
        }
    }
    report("dispersion roots re-evaluate (<1e-10)", worst_res < 1e-10 && n_roots > 0, worst_res);
    report("residual even in k_z (exact)", worst_even == 0.0, worst_even);

    // transfer matrix determinant (moderate-evanescence samples)
    double worst_det = 0.0;
    for (const double w_frac : {0.3, 0.7, 1.0})
        for (const double kr_frac : {0.0, 0.5})
            for (const auto pol : {Polarization::TE, Polarization::TM}) {
                const auto m = unit_cell_transfer_matrix(stack, pol, w_frac * omega_max,
                                                         kr_frac * energy_to_wavenumber(omega_max) *
                                                             w_frac);
                worst_det = std::max(worst_det, std::abs(m.det() - cplx(1.0)));
            }
    report("unit-cell transfer det = 1 (<1e-9)", worst_det < 1e-9, worst_det);

    // profile continuity, Bloch condition, normalization
    double worst_cont = 0.0, worst_norm = 0.0;
    {
        const double k_rho = 0.25 * energy_to_wavenumber(omega_max);
        const double k_z = 0.41 * edge;
        for (const auto pol : {Polarization::TE, Polarization::TM}) {
            const auto bands = solve_bands(stack, pol, k_rho, k_z, omega_max);
            for (std::size_t i = 0; i < bands.size(); i += 2) {
                const auto prof = mode_profile(stack, bands[i]);
                const auto h_end = layer_edge_values(prof.layers[0], true);
                const auto l_start = layer_edge_values(prof.layers[1], false);
                const auto l_end = layer_edge_values(prof.layers[1], true);
                const auto h_start = layer_edge_values(prof.layers[0], false);
                const double scale = std::max(std::abs(h_end.f), 1e-30);
                worst_cont = std::max(worst_cont, std::abs(h_end.f - l_start.f) / scale);
                worst_cont = std::max(worst_cont, std::abs(h_end.v - l_start.v) /
                                                      std::max(std::abs(h_end.v), 1e-30));
                const cplx bloch = std::exp(cplx(0, 1) * prof.k_z_ev * stack.period_nat());
                worst_cont =
                    std::max(worst_cont, std::abs(l_end.f - bloch * h_start.f) / scale);
                worst_norm = std::max(worst_norm,
                                      std::abs(mode_norm(stack, prof) - 0.5));
            }
        }
    }
    report("interface continuity + Bloch (<1e-10)", worst_cont < 1e-10, worst_cont);
    report("profile norm = 1/2 (<1e-12)", worst_norm < 1e-12, worst_norm);

    // azimuthal reduction at 100 random points
    {
        std::mt19937 rng(20240811u);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<AngularSample> samples;
        for (int i = 0; i < 100; ++i) {
            AngularSample s;
            s.k_rho_ev = 0.05 + 3.0 * u(rng);
            s.k_z_ev = (u(rng) - 0.5) * stack.b_z_ev();
            s.m = static_cast<int>(u(rng) * 7) - 3;
            s.theta = u(rng) * 3.14159;
            s.phi = u(rng) * 6.28318;
            samples.push_back(s);
        }
        const auto rep = azimuthal_reduction_check(stack, samples);
        report("azimuthal reduction closed forms (<1e-10)", rep.pass,
               std::max({rep.max_te_discrepancy, rep.max_tm_discrepancy, rep.max_cross_term}));
    }

    // Parseval defect trend (informational threshold: must shrink with M)
    {
        const double k_rho = 0.2 * energy_to_wavenumber(omega_max);
        const double k_z = 0.3 * edge;
        const auto bands = solve_bands(stack, Polarization::TM, k_rho, k_z, omega_max);
        if (!bands.empty()) {
            const auto prof = mode_profile(stack, bands[0]);
            const auto c32 = fourier_coefficients(stack, prof, 32, true);
            const auto c64 = fourier_coefficients(stack, prof, 64, true);
            report("Parseval defect shrinks with M", c64.parseval_defect <= c32.parseval_defect,
                   c64.parseval_defect);
        }
    }

    log << (ok ? "check: all invariants hold\n" : "check: FAILURES detected\n");
    return ok ? kExitOk : 1;
}

} // namespace pcmass
