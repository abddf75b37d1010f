#include "pcmass/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pcmass {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw std::runtime_error("config: " + where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!key.empty() && key[0] == '_') continue; // comment convention
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok) fail(where, "unknown key `" + key + "`");
    }
}

double get_number(const json& obj, const std::string& where, const char* key, double fallback,
                  bool required = false) {
    if (!obj.contains(key)) {
        if (required) fail(where, std::string("missing `") + key + "`");
        return fallback;
    }
    if (!obj[key].is_number()) fail(where, std::string("`") + key + "` must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& where, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) fail(where, std::string("`") + key + "` must be an integer");
    return obj[key].get<int>();
}

std::string get_string(const json& obj, const std::string& where, const char* key,
                       const std::string& fallback, bool required = false) {
    if (!obj.contains(key)) {
        if (required) fail(where, std::string("missing `") + key + "`");
        return fallback;
    }
    if (!obj[key].is_string()) fail(where, std::string("`") + key + "` must be a string");
    return obj[key].get<std::string>();
}

HostModelSpec parse_host(const json& obj, const std::string& where, const std::string& base_dir);

HostModelSpec parse_host(const json& obj, const std::string& where, const std::string& base_dir) {
    if (!obj.is_object()) fail(where, "host model must be an object");
    HostModelSpec spec;
    spec.type = get_string(obj, where, "type", "", true);
    if (spec.type == "constant") {
        reject_unknown_keys(obj, where, {"type", "n"});
        spec.n = get_number(obj, where, "n", 1.0, true);
    } else if (spec.type == "sellmeier_tail") {
        reject_unknown_keys(obj, where, {"type", "C1_eV2", "C2_eV4"});
        spec.c1_ev2 = get_number(obj, where, "C1_eV2", 0.0, true);
        spec.c2_ev4 = get_number(obj, where, "C2_eV4", 0.0);
    } else if (spec.type == "table") {
        reject_unknown_keys(obj, where, {"type", "path", "blend_end_eV"});
        spec.path = get_string(obj, where, "path", "", true);
        spec.blend_end_ev = get_number(obj, where, "blend_end_eV", 0.0);
        std::filesystem::path p(spec.path);
        if (p.is_relative()) spec.path = (std::filesystem::path(base_dir) / p).string();
        if (!std::filesystem::exists(spec.path)) fail(where, "table file not found: " + spec.path);
    } else if (spec.type == "metamaterial") {
        reject_unknown_keys(obj, where,
                            {"type", "a_nm", "g_nm", "blend_start_eV", "blend_end_eV", "dielectric"});
        spec.a_nm = get_number(obj, where, "a_nm", 30.0, true);
        spec.g_nm = get_number(obj, where, "g_nm", 0.5, true);
        spec.blend_start_ev = get_number(obj, where, "blend_start_eV", 10.65);
        spec.blend_end_ev = get_number(obj, where, "blend_end_eV", 40.0);
        if (!obj.contains("dielectric")) fail(where, "metamaterial requires `dielectric`");
        spec.dielectric = std::make_shared<HostModelSpec>(
            parse_host(obj["dielectric"], where + ".dielectric", base_dir));
    } else {
        fail(where, "unknown host model type `" + spec.type + "`");
    }
    return spec;
}

json host_to_json(const HostModelSpec& spec) {
    json j;
    j["type"] = spec.type;
    if (spec.type == "constant") {
        j["n"] = spec.n;
    } else if (spec.type == "sellmeier_tail") {
        j["C1_eV2"] = spec.c1_ev2;
        j["C2_eV4"] = spec.c2_ev4;
    } else if (spec.type == "table") {
        j["path"] = spec.path;
        j["blend_end_eV"] = spec.blend_end_ev;
    } else if (spec.type == "metamaterial") {
        j["a_nm"] = spec.a_nm;
        j["g_nm"] = spec.g_nm;
        j["blend_start_eV"] = spec.blend_start_ev;
        j["blend_end_eV"] = spec.blend_end_ev;
        if (spec.dielectric) j["dielectric"] = host_to_json(*spec.dielectric);
    }
    return j;
}

} // namespace

std::shared_ptr<const DispersionModel> HostModelSpec::build() const {
    if (type == "constant") return std::make_shared<ConstantIndex>(n);
    if (type == "sellmeier_tail") return std::make_shared<SellmeierTail>(c1_ev2, c2_ev4);
    if (type == "table") return load_dispersion_table(path, blend_end_ev);
    if (type == "metamaterial") {
        if (!dielectric) throw std::runtime_error("metamaterial host: missing dielectric");
        return std::make_shared<MetamaterialIndex>(a_nm, g_nm, dielectric->build(), blend_start_ev,
                                                   blend_end_ev);
    }
    throw std::runtime_error("host model: unknown type `" + type + "`");
}

LayerStack RunConfig::build_stack() const {
    return LayerStack(d_h_nm, d_l_nm, host.build());
}

std::vector<AtomRecord> RunConfig::resolve_atoms() const {
    const std::vector<AtomRecord> base =
        atom_data_csv.empty() ? default_atom_table() : load_atom_table(atom_data_csv);
    std::vector<AtomRecord> out;
    for (const auto& symbol : atoms) {
        bool found = false;
        for (const auto& rec : base) {
            if (rec.symbol == symbol) {
                out.push_back(rec);
                found = true;
                break;
            }
        }
        if (!found) throw std::runtime_error("config: unknown atom symbol `" + symbol + "`");
    }
    return out;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: JSON parse error: ") + e.what());
    }
    if (!root.is_object()) throw std::runtime_error("config: top level must be an object");
    reject_unknown_keys(root, "top level",
                        {"stack", "quadrature", "regularization", "atoms", "atom_data_csv",
                         "delta_e_ion_override_eV", "bands", "sweep"});

    RunConfig cfg;

    if (!root.contains("stack")) throw std::runtime_error("config: missing `stack`");
    {
        const json& s = root["stack"];
        reject_unknown_keys(s, "stack", {"d_h_nm", "d_l_nm", "host"});
        cfg.d_h_nm = get_number(s, "stack", "d_h_nm", 70.0, true);
        cfg.d_l_nm = get_number(s, "stack", "d_l_nm", 70.0, true);
        if (!s.contains("host")) throw std::runtime_error("config: stack needs `host`");
        cfg.host = parse_host(s["host"], "stack.host", base_dir);
        if (!(cfg.d_h_nm > 0.0 && cfg.d_l_nm > 0.0))
            throw std::runtime_error("config: layer thicknesses must be > 0");
    }

    if (root.contains("quadrature")) {
        const json& q = root["quadrature"];
        reject_unknown_keys(q, "quadrature",
                            {"k_rho_max_invnm", "n_rho", "n_z", "gauss_order", "max_refinements",
                             "tol_rel", "floor_ev", "m_cutoff"});
        cfg.quadrature.k_rho_max_invnm = get_number(q, "quadrature", "k_rho_max_invnm", 0.0);
        cfg.quadrature.n_rho = get_int(q, "quadrature", "n_rho", cfg.quadrature.n_rho);
        cfg.quadrature.n_z = get_int(q, "quadrature", "n_z", cfg.quadrature.n_z);
        cfg.quadrature.gauss_order = get_int(q, "quadrature", "gauss_order", cfg.quadrature.gauss_order);
        cfg.quadrature.max_refinements =
            get_int(q, "quadrature", "max_refinements", cfg.quadrature.max_refinements);
        cfg.quadrature.tol_rel = get_number(q, "quadrature", "tol_rel", cfg.quadrature.tol_rel);
        cfg.quadrature.floor_ev = get_number(q, "quadrature", "floor_ev", cfg.quadrature.floor_ev);
        cfg.quadrature.m_cutoff = get_int(q, "quadrature", "m_cutoff", cfg.quadrature.m_cutoff);
    }

    if (root.contains("regularization")) {
        const json& r = root["regularization"];
        reject_unknown_keys(r, "regularization", {"omega_max_eV", "scheme", "k0_eV"});
        cfg.regularization.omega_max_ev =
            get_number(r, "regularization", "omega_max_eV", cfg.regularization.omega_max_ev);
        const std::string scheme = get_string(r, "regularization", "scheme", "mode");
        if (scheme == "mode")
            cfg.regularization.scheme = SubtractionScheme::ModeMatched;
        else if (scheme == "freq")
            cfg.regularization.scheme = SubtractionScheme::FrequencyMatched;
        else
            throw std::runtime_error("config: scheme must be `mode` or `freq`");
        cfg.regularization.k0_ev = get_number(r, "regularization", "k0_eV", 0.0);
    }

    if (root.contains("atoms")) {
        if (!root["atoms"].is_array()) throw std::runtime_error("config: `atoms` must be an array");
        cfg.atoms.clear();
        for (const auto& a : root["atoms"]) {
            if (!a.is_string()) throw std::runtime_error("config: atom symbols must be strings");
            cfg.atoms.push_back(a.get<std::string>());
        }
    }

    if (root.contains("atom_data_csv")) {
        cfg.atom_data_csv = get_string(root, "top level", "atom_data_csv", "");
        if (!cfg.atom_data_csv.empty()) {
            std::filesystem::path p(cfg.atom_data_csv);
            if (p.is_relative()) cfg.atom_data_csv = (std::filesystem::path(base_dir) / p).string();
            if (!std::filesystem::exists(cfg.atom_data_csv))
                throw std::runtime_error("config: atom data file not found: " + cfg.atom_data_csv);
        }
    }

    if (root.contains("delta_e_ion_override_eV") && !root["delta_e_ion_override_eV"].is_null()) {
        if (!root["delta_e_ion_override_eV"].is_number())
            throw std::runtime_error("config: delta_e_ion_override_eV must be a number");
        cfg.delta_e_ion_override_ev = root["delta_e_ion_override_eV"].get<double>();
    }

    if (root.contains("bands")) {
        const json& b = root["bands"];
        reject_unknown_keys(b, "bands", {"polarizations", "k_rho_invnm", "k_z_points"});
        if (b.contains("polarizations")) {
            cfg.bands.polarizations.clear();
            for (const auto& p : b["polarizations"]) {
                const std::string s = p.get<std::string>();
                if (s != "TE" && s != "TM")
                    throw std::runtime_error("config: polarization must be TE or TM");
                cfg.bands.polarizations.push_back(s);
            }
        }
        if (b.contains("k_rho_invnm")) {
            cfg.bands.k_rho_invnm.clear();
            for (const auto& k : b["k_rho_invnm"]) cfg.bands.k_rho_invnm.push_back(k.get<double>());
        }
        cfg.bands.k_z_points = get_int(b, "bands", "k_z_points", cfg.bands.k_z_points);
        if (cfg.bands.k_z_points < 2) throw std::runtime_error("config: k_z_points must be >= 2");
    }

    if (root.contains("sweep")) {
        const json& s = root["sweep"];
        reject_unknown_keys(s, "sweep", {"n_h", "metamaterial", "d_h_fraction"});
        if (s.contains("n_h")) {
            const json& n = s["n_h"];
            if (n.is_array()) {
                for (const auto& v : n) cfg.sweep.n_h.push_back(v.get<double>());
            } else if (n.is_object()) {
                reject_unknown_keys(n, "sweep.n_h", {"start", "stop", "step"});
                const double start = get_number(n, "sweep.n_h", "start", 1.0, true);
                const double stop = get_number(n, "sweep.n_h", "stop", start, true);
                const double step = get_number(n, "sweep.n_h", "step", 1.0, true);
                if (!(start >= 1.0) || !(step > 0.0))
                    throw std::runtime_error("config: sweep range needs start >= 1, step > 0");
                for (double v = start; v <= stop + 1e-12; v += step) cfg.sweep.n_h.push_back(v);
            } else {
                throw std::runtime_error("config: sweep n_h must be an array or {start,stop,step}");
            }
        }
        if (s.contains("metamaterial")) {
            for (const auto& pair : s["metamaterial"]) {
                const double a = get_number(pair, "sweep.metamaterial", "a_nm", 0.0, true);
                const double g = get_number(pair, "sweep.metamaterial", "g_nm", 0.0, true);
                cfg.sweep.meta_ag.emplace_back(a, g);
            }
        }
        cfg.sweep.d_h_fraction = get_number(s, "sweep", "d_h_fraction", 0.0);
        const double f = cfg.sweep.d_h_fraction;
        if (f != 0.0 && !(f > 0.0 && f < 1.0)) // 0 keeps the stack geometry
            throw std::runtime_error("config: d_h_fraction must lie in (0, 1)");
    }

    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string serialize_run_config(const RunConfig& cfg) {
    json root;
    root["stack"]["d_h_nm"] = cfg.d_h_nm;
    root["stack"]["d_l_nm"] = cfg.d_l_nm;
    root["stack"]["host"] = host_to_json(cfg.host);
    root["quadrature"] = {{"k_rho_max_invnm", cfg.quadrature.k_rho_max_invnm},
                          {"n_rho", cfg.quadrature.n_rho},
                          {"n_z", cfg.quadrature.n_z},
                          {"gauss_order", cfg.quadrature.gauss_order},
                          {"max_refinements", cfg.quadrature.max_refinements},
                          {"tol_rel", cfg.quadrature.tol_rel},
                          {"floor_ev", cfg.quadrature.floor_ev},
                          {"m_cutoff", cfg.quadrature.m_cutoff}};
    root["regularization"] = {{"omega_max_eV", cfg.regularization.omega_max_ev},
                              {"scheme", to_string(cfg.regularization.scheme)},
                              {"k0_eV", cfg.regularization.k0_ev}};
    root["atoms"] = cfg.atoms;
    if (!cfg.atom_data_csv.empty()) root["atom_data_csv"] = cfg.atom_data_csv;
    if (cfg.delta_e_ion_override_ev) root["delta_e_ion_override_eV"] = *cfg.delta_e_ion_override_ev;
    root["bands"] = {{"polarizations", cfg.bands.polarizations},
                     {"k_rho_invnm", cfg.bands.k_rho_invnm},
                     {"k_z_points", cfg.bands.k_z_points}};
    json sweep;
    sweep["n_h"] = cfg.sweep.n_h;
    if (!cfg.sweep.meta_ag.empty()) {
        json pairs = json::array();
        for (const auto& [a, g] : cfg.sweep.meta_ag) pairs.push_back({{"a_nm", a}, {"g_nm", g}});
        sweep["metamaterial"] = pairs;
    }
    sweep["d_h_fraction"] = cfg.sweep.d_h_fraction;
    root["sweep"] = sweep;
    return root.dump(2) + "\n";
}

} // namespace pcmass
