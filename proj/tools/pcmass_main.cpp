#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pcmass/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pcmass: photonic-crystal electron-mass correction and ionization-energy shifts"};
    app.require_subcommand(1);

    std::string config_path;
    pcmass::CommandOptions opts;
    double omega_max_override = 0.0;
    std::string scheme_override;
    double delta_e_override = 0.0;
    bool has_delta_e = false;

    app.add_option("--config", config_path, "run configuration JSON")->required();
    app.add_option("--out", opts.out_path, "output path (default per subcommand)");
    app.add_option("--threads", opts.threads, "worker threads (0 = auto)")->default_val(1u);
    app.add_option("--omega-max", omega_max_override, "override omega_max (eV)");
    app.add_option("--scheme", scheme_override, "override subtraction scheme: mode|freq");

    auto* bands = app.add_subcommand("bands", "emit the Bloch band surface as CSV");
    auto* mass = app.add_subcommand("mass", "compute A, B and write the convergence report");
    auto* ionize = app.add_subcommand("ionize", "emit the shifted ionization-energy table");
    ionize->add_option("--delta-e", delta_e_override, "inject delta_E_ion (eV) instead of computing")
        ->each([&](const std::string&) { has_delta_e = true; });
    auto* sweep = app.add_subcommand("sweep", "|delta_E_ion| over the configured index sweep");
    auto* check = app.add_subcommand("check", "run the invariant suite on the configured stack");
    for (auto* sub : {bands, mass, ionize, sweep, check}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        pcmass::RunConfig config = pcmass::load_run_config(config_path);
        if (omega_max_override > 0.0) config.regularization.omega_max_ev = omega_max_override;
        if (!scheme_override.empty()) {
            if (scheme_override == "mode")
                config.regularization.scheme = pcmass::SubtractionScheme::ModeMatched;
            else if (scheme_override == "freq")
                config.regularization.scheme = pcmass::SubtractionScheme::FrequencyMatched;
            else
                throw std::runtime_error("--scheme must be `mode` or `freq`");
        }
        if (has_delta_e) config.delta_e_ion_override_ev = delta_e_override;

        if (bands->parsed()) return pcmass::cmd_bands(config, opts, std::cout);
        if (mass->parsed()) return pcmass::cmd_mass(config, opts, std::cout);
        if (ionize->parsed()) return pcmass::cmd_ionize(config, opts, std::cout);
        if (sweep->parsed()) return pcmass::cmd_sweep(config, opts, std::cout);
        if (check->parsed()) return pcmass::cmd_check(config, opts, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return pcmass::kExitConfig;
    }
    return pcmass::kExitConfig;
}
