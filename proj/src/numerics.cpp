#include "pcmass/numerics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace pcmass {

GaussRule::GaussRule(int order) {
    if (order < 1) throw std::invalid_argument("GaussRule: order must be >= 1");
    node.resize(order);
    weight.resize(order);
    // Newton iteration on P_n; roots are symmetric, solve the upper half.
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        node[i] = -x;
        node[order - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        weight[i] = w;
        weight[order - 1 - i] = w;
    }
}

PanelRule::PanelRule(double a, double b, int panels, const GaussRule& g) {
    if (!(b > a)) throw std::invalid_argument("PanelRule: need b > a");
    if (panels < 1) throw std::invalid_argument("PanelRule: need panels >= 1");
    const std::size_t n = static_cast<std::size_t>(panels) * g.node.size();
    node.reserve(n);
    weight.reserve(n);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        for (std::size_t j = 0; j < g.node.size(); ++j) {
            node.push_back(mid + 0.5 * h * g.node[j]);
            weight.push_back(0.5 * h * g.weight[j]);
        }
    }
}

double refine_root(const std::function<double(double)>& f, double a, double b,
                   double fa, double fb, double xtol_rel, double xtol_abs) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::invalid_argument("refine_root: not a bracket");

    // Brent: inverse quadratic / secant with bisection fallback.
    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 0.5 * (xtol_rel * std::abs(b) + xtol_abs) +
                           2.0 * std::numeric_limits<double>::epsilon() * std::abs(b);
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) return b;

        if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
            d = e = m; // bisection
        } else {
            double p, q;
            const double s = fb / fa;
            if (a == c) { // secant
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else { // inverse quadratic
                const double qa = fa / fc, r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = e = m;
            }
        }
        a = b; fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) { c = a; fc = fa; d = e = b - a; }
    }
    return b;
}

} // namespace pcmass
