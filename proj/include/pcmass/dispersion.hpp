#pragma once

#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pcmass {

/// Flags reported by dispersion evaluation (kept out of the model so that
/// evaluation stays pure and concurrently callable).
struct DispersionEvalFlags {
    bool clamped_below_table = false;
};

/// Frequency-dependent refractive index of the high-index layer.
///
/// Every concrete model guarantees n(omega) >= 1 on its evaluation range and
/// n(omega) = 1.0 exactly (bitwise) for omega >= blend_end() when blend_end()
/// is finite.
class DispersionModel {
public:
    virtual ~DispersionModel() = default;

    /// n(omega). Throws std::domain_error for omega <= 0.
    double operator()(double omega_ev, DispersionEvalFlags* flags = nullptr) const;

    /// Frequency above which the index is exactly 1 (+inf if never forced).
    virtual double blend_end() const { return std::numeric_limits<double>::infinity(); }

    virtual std::string describe() const = 0;

protected:
    virtual double evaluate(double omega_ev, DispersionEvalFlags* flags) const = 0;
};

class ConstantIndex final : public DispersionModel {
public:
    explicit ConstantIndex(double n);
    std::string describe() const override;

protected:
    double evaluate(double, DispersionEvalFlags*) const override { return n_; }

private:
    double n_;
};

/// n(omega) = 1 + C1/omega^2 + C2/omega^4 (high-frequency power-series tail).
class SellmeierTail final : public DispersionModel {
public:
    SellmeierTail(double c1_ev2, double c2_ev4);
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    std::string describe() const override;

protected:
    double evaluate(double omega_ev, DispersionEvalFlags*) const override;

private:
    double c1_, c2_;
};

/// Linear interpolation of measured (omega, n) samples, clamped below the
/// first sample, blended monotonically to unity above the last sample.
class TabulatedIndex final : public DispersionModel {
public:
    /// Samples must be strictly increasing in omega; n >= 1. blend_end_ev <= 0
    /// selects the default window (twice the last sample frequency).
    TabulatedIndex(std::vector<std::pair<double, double>> samples, double blend_end_ev = 0.0);

    double blend_end() const override { return blend_end_; }
    const std::vector<std::pair<double, double>>& samples() const { return samples_; }
    std::string describe() const override;

protected:
    double evaluate(double omega_ev, DispersionEvalFlags* flags) const override;

private:
    std::vector<std::pair<double, double>> samples_;
    double blend_end_;
};

/// Effective index of a nanoparticle-superlattice metamaterial,
/// n_eff = sqrt((a/g) eps_d(omega)), blended to unity across
/// [blend_start, blend_end] and exactly 1 above.
class MetamaterialIndex final : public DispersionModel {
public:
    MetamaterialIndex(double a_nm, double g_nm, std::shared_ptr<const DispersionModel> dielectric,
                      double blend_start_ev, double blend_end_ev);

    double blend_end() const override { return blend_end_; }
    double blend_start() const { return blend_start_; }
    std::string describe() const override;

private:
    double raw(double omega_ev, DispersionEvalFlags* flags) const;

protected:
    double evaluate(double omega_ev, DispersionEvalFlags* flags) const override;

private:
    double a_nm_, g_nm_;
    std::shared_ptr<const DispersionModel> dielectric_;
    double blend_start_, blend_end_;
};

struct AveragedIndex {
    double n_bar = 1.0;
    double omega_lo_ev = 0.0;
    double omega_hi_ev = 0.0;
    std::string note;
};

/// Arithmetic mean of n(omega) over a uniform grid (>= 512 points).
AveragedIndex average_index(const DispersionModel& model, double omega_lo_ev, double omega_hi_ev,
                            std::string note = {});

/// Dispersion CSV: header `omega_eV,n`, strictly increasing omega, `#` comments.
/// Parse/validation errors carry the offending line number.
std::shared_ptr<TabulatedIndex> load_dispersion_table(const std::string& path,
                                                      double blend_end_ev = 0.0);

} // namespace pcmass
