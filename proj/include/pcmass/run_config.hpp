#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcmass/band_solver.hpp"
#include "pcmass/mass_correction.hpp"

namespace pcmass {

/// Declarative host-model description; builds a DispersionModel.
struct HostModelSpec {
    std::string type; // constant | sellmeier_tail | table | metamaterial
    double n = 1.0;
    double c1_ev2 = 0.0;
    double c2_ev4 = 0.0;
    std::string path;
    double blend_start_ev = 10.65;
    double blend_end_ev = 40.0;
    double a_nm = 30.0;
    double g_nm = 0.5;
    std::shared_ptr<HostModelSpec> dielectric; // metamaterial only

    std::shared_ptr<const DispersionModel> build() const;
};

struct BandGridSpec {
    std::vector<std::string> polarizations = {"TE", "TM"};
    std::vector<double> k_rho_invnm = {0.0};
    int k_z_points = 65; // uniform over the full FBZ, endpoints included
};

struct SweepSpec {
    std::vector<double> n_h;                          // constant-index sweep values
    std::vector<std::pair<double, double>> meta_ag;   // metamaterial (a, g) pairs
    double d_h_fraction = 0.0;                        // 0 = keep the stack geometry
};

struct RunConfig {
    // default layer scale: voids of order 10^3 Bohr radii
    double d_h_nm = 70.0;
    double d_l_nm = 70.0;
    HostModelSpec host;
    QuadratureConfig quadrature;
    RegularizationConfig regularization;
    std::vector<std::string> atoms = {"H", "Li", "Na", "K", "Rb", "Cs", "Fr"};
    std::string atom_data_csv;                 // optional override file
    std::optional<double> delta_e_ion_override_ev;
    BandGridSpec bands;
    SweepSpec sweep;

    LayerStack build_stack() const;
    std::vector<AtomRecord> resolve_atoms() const;
};

/// Throws std::runtime_error with a descriptive message on schema violations
/// or missing referenced files. `_`-prefixed keys are comments and ignored.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir = ".");

/// Canonical serialization (all defaults materialized, keys sorted);
/// parse(serialize(parse(x))) is a fixed point.
std::string serialize_run_config(const RunConfig& config);

} // namespace pcmass
