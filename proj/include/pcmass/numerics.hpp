#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace pcmass {

/// Neumaier-compensated accumulator. Summation order is fixed by the caller,
/// which keeps parallel reductions bit-reproducible.
class KahanSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> node;
    std::vector<double> weight;

    explicit GaussRule(int order);
};

/// Nodes/weights of a composite rule: `panels` equal Gauss-Legendre panels on [a, b].
/// Node order is ascending, deterministic.
struct PanelRule {
    std::vector<double> node;
    std::vector<double> weight;

    PanelRule(double a, double b, int panels, const GaussRule& g);
};

/// Brent-style bracketing root refinement of f on [a, b] with f(a)*f(b) <= 0.
/// Refines until the bracket width drops below xtol_rel * |x| + xtol_abs.
double refine_root(const std::function<double(double)>& f, double a, double b,
                   double fa, double fb, double xtol_rel, double xtol_abs = 0.0);

/// Monotone cubic step: 1 at s<=0, 0 at s>=1, C1, strictly decreasing inside.
inline double smoothstep_down(double s) {
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    return 1.0 - s * s * (3.0 - 2.0 * s);
}

} // namespace pcmass
