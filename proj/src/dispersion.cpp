#include "pcmass/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pcmass/numerics.hpp"

namespace pcmass {

double DispersionModel::operator()(double omega_ev, DispersionEvalFlags* flags) const {
    if (!(omega_ev > 0.0)) throw std::domain_error("refractive index: omega must be > 0");
    if (omega_ev >= blend_end()) return 1.0;
    return evaluate(omega_ev, flags);
}

ConstantIndex::ConstantIndex(double n) : n_(n) {
    if (!(n >= 1.0)) throw std::invalid_argument("ConstantIndex: n must be >= 1");
}

std::string ConstantIndex::describe() const {
    return "constant n = " + std::to_string(n_);
}

SellmeierTail::SellmeierTail(double c1_ev2, double c2_ev4) : c1_(c1_ev2), c2_(c2_ev4) {
    if (c1_ < 0.0 || c2_ < 0.0) throw std::invalid_argument("SellmeierTail: coefficients must be >= 0");
}

double SellmeierTail::evaluate(double omega_ev, DispersionEvalFlags*) const {
    const double w2 = omega_ev * omega_ev;
    return 1.0 + c1_ / w2 + c2_ / (w2 * w2);
}

std::string SellmeierTail::describe() const {
    return "sellmeier tail C1 = " + std::to_string(c1_) + " eV^2, C2 = " + std::to_string(c2_) + " eV^4";
}

TabulatedIndex::TabulatedIndex(std::vector<std::pair<double, double>> samples, double blend_end_ev)
    : samples_(std::move(samples)) {
    if (samples_.empty()) throw std::invalid_argument("TabulatedIndex: no samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!(samples_[i].first > 0.0))
            throw std::invalid_argument("TabulatedIndex: omega must be > 0 at sample " + std::to_string(i + 1));
        if (!(samples_[i].second >= 1.0))
            throw std::invalid_argument("TabulatedIndex: n must be >= 1 at sample " + std::to_string(i + 1));
        if (i > 0 && !(samples_[i].first > samples_[i - 1].first))
            throw std::invalid_argument("TabulatedIndex: omega not strictly increasing at sample " +
                                        std::to_string(i + 1));
    }
    const double last = samples_.back().first;
    blend_end_ = blend_end_ev > 0.0 ? blend_end_ev : 2.0 * last;
    if (!(blend_end_ > last))
        throw std::invalid_argument("TabulatedIndex: blend_end must exceed the last sample");
}

double TabulatedIndex::evaluate(double omega_ev, DispersionEvalFlags* flags) const {
    if (omega_ev <= samples_.front().first) {
        if (flags && omega_ev < samples_.front().first) flags->clamped_below_table = true;
        return samples_.front().second;
    }
    const double last_w = samples_.back().first;
    if (omega_ev >= last_w) {
        // blend the last tabulated value to unity
        const double s = (omega_ev - last_w) / (blend_end_ - last_w);
        return 1.0 + (samples_.back().second - 1.0) * smoothstep_down(s);
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), omega_ev,
                               [](double w, const std::pair<double, double>& s) { return w < s.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (omega_ev - lo.first) / (hi.first - lo.first);
    return lo.second + t * (hi.second - lo.second);
}

std::string TabulatedIndex::describe() const {
    return "tabulated, " + std::to_string(samples_.size()) + " samples on [" +
           std::to_string(samples_.front().first) + ", " + std::to_string(samples_.back().first) + "] eV";
}

MetamaterialIndex::MetamaterialIndex(double a_nm, double g_nm,
                                     std::shared_ptr<const DispersionModel> dielectric,
                                     double blend_start_ev, double blend_end_ev)
    : a_nm_(a_nm), g_nm_(g_nm), dielectric_(std::move(dielectric)),
      blend_start_(blend_start_ev), blend_end_(blend_end_ev) {
    if (!(a_nm_ > 0.0 && g_nm_ > 0.0)) throw std::invalid_argument("MetamaterialIndex: need a, g > 0");
    if (!(a_nm_ >= g_nm_)) throw std::invalid_argument("MetamaterialIndex: need a >= g");
    if (!dielectric_) throw std::invalid_argument("MetamaterialIndex: missing dielectric model");
    if (!(blend_start_ > 0.0 && blend_end_ > blend_start_))
        throw std::invalid_argument("MetamaterialIndex: need 0 < blend_start < blend_end");
}

double MetamaterialIndex::raw(double omega_ev, DispersionEvalFlags* flags) const {
    const double n_d = (*dielectric_)(omega_ev, flags);
    // n_eff = sqrt((a/g) eps_d) = sqrt(a/g) * n_d
    return std::sqrt(a_nm_ / g_nm_) * n_d;
}

double MetamaterialIndex::evaluate(double omega_ev, DispersionEvalFlags* flags) const {
    if (omega_ev < blend_start_) return std::max(1.0, raw(omega_ev, flags));
    const double s = (omega_ev - blend_start_) / (blend_end_ - blend_start_);
    const double n0 = std::max(1.0, raw(blend_start_, flags));
    return 1.0 + (n0 - 1.0) * smoothstep_down(s);
}

std::string MetamaterialIndex::describe() const {
    return "metamaterial a = " + std::to_string(a_nm_) + " nm, g = " + std::to_string(g_nm_) +
           " nm over (" + dielectric_->describe() + "), blend [" + std::to_string(blend_start_) +
           ", " + std::to_string(blend_end_) + "] eV";
}

AveragedIndex average_index(const DispersionModel& model, double omega_lo_ev, double omega_hi_ev,
                            std::string note) {
    if (!(omega_lo_ev > 0.0 && omega_hi_ev > omega_lo_ev))
        throw std::domain_error("average_index: need 0 < omega_lo < omega_hi");
    constexpr int kSamples = 1024;
    KahanSum acc;
    for (int i = 0; i < kSamples; ++i) {
        const double w = omega_lo_ev + (omega_hi_ev - omega_lo_ev) * (i + 0.5) / kSamples;
        acc.add(model(w));
    }
    AveragedIndex out;
    out.n_bar = acc.value() / kSamples;
    out.omega_lo_ev = omega_lo_ev;
    out.omega_hi_ev = omega_hi_ev;
    out.note = std::move(note);
    return out;
}

std::shared_ptr<TabulatedIndex> load_dispersion_table(const std::string& path, double blend_end_ev) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dispersion table: cannot open " + path);

    std::vector<std::pair<double, double>> samples;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.find("omega_eV") == std::string::npos)
                throw std::runtime_error("dispersion table: missing `omega_eV,n` header in " + path);
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string w_str, n_str;
        if (!std::getline(ss, w_str, ',') || !std::getline(ss, n_str))
            throw std::runtime_error("dispersion table: malformed row at line " + std::to_string(lineno));
        char* end = nullptr;
        const double w = std::strtod(w_str.c_str(), &end);
        if (end == w_str.c_str())
            throw std::runtime_error("dispersion table: bad omega at line " + std::to_string(lineno));
        const double n = std::strtod(n_str.c_str(), &end);
        if (end == n_str.c_str())
            throw std::runtime_error("dispersion table: bad n at line " + std::to_string(lineno));
        if (!samples.empty() && !(w > samples.back().first))
            throw std::runtime_error("dispersion table: omega not increasing at line " + std::to_string(lineno));
        samples.emplace_back(w, n);
    }
    if (samples.empty()) throw std::runtime_error("dispersion table: no data rows in " + path);
    try {
        return std::make_shared<TabulatedIndex>(std::move(samples), blend_end_ev);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("dispersion table: ") + e.what());
    }
}

} // namespace pcmass
