#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "pcmass/bloch_fields.hpp"
#include "pcmass/core.hpp"

using namespace pcmass;

namespace {

LayerStack make_stack(double n_h, double d_h_nm = 100.0, double d_l_nm = 100.0) {
    return LayerStack(d_h_nm, d_l_nm, std::make_shared<ConstantIndex>(n_h));
}

// Simpson-rule oracle for the closed-form layer integrals.
cplx simpson_phase_integral(cplx mu, double d, int n = 4000) {
    cplx sum{};
    const double h = d / n;
    for (int i = 0; i <= n; ++i) {
        const double z = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * std::exp(cplx(0, 1) * mu * z);
    }
    return sum * h / 3.0;
}

cplx simpson_right_integral(cplx k, double g, double d, int n = 4000) {
    cplx sum{};
    const double h = d / n;
    for (int i = 0; i <= n; ++i) {
        const double z = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * std::exp(cplx(0, 1) * k * (d - z)) * std::exp(cplx(0, -1) * g * z);
    }
    return sum * h / 3.0;
}

} // namespace

TEST_CASE("phase integrals match the quadrature oracle") {
    const std::vector<cplx> mus = {{2.3, 0.0}, {0.0, 1.7}, {1e-9, 0.0}, {-3.1, 0.0},
                                   {1e-5, 2e-5}, {0.0, 12.0}};
    for (const cplx mu : mus) {
        const cplx mine = detail::phase_integral(mu, 0.8);
        const cplx oracle = simpson_phase_integral(mu, 0.8);
        CHECK(std::abs(mine - oracle) < 1e-9);
    }
    for (const cplx k : {cplx(3.0, 0.0), cplx(0.0, 2.0), cplx(1e-8, 0.0)}) {
        for (const double g : {-3.0, -1e-9, 0.7, 12.0}) {
            const cplx mine = detail::phase_integral_right(k, g, 0.6);
            const cplx oracle = simpson_right_integral(k, g, 0.6);
            CHECK(std::abs(mine - oracle) < 1e-9);
        }
    }
}

TEST_CASE("uniform-medium transfer matrix trace") {
    const auto stack = make_stack(1.0);
    const double omega = 3.7;
    const double k_rho = 0.008;
    const auto m = unit_cell_transfer_matrix(stack, Polarization::TE, omega, k_rho);
    const double k_ax = std::sqrt(omega * omega -
                                  wavenumber_to_energy(k_rho) * wavenumber_to_energy(k_rho));
    CHECK(m.trace().real() ==
          doctest::Approx(2.0 * std::cos(k_ax * stack.period_nat())).epsilon(1e-12));
    CHECK(std::abs(m.trace().imag()) < 1e-15);
}

TEST_CASE("transfer matrix determinant is 1 (lossless)") {
    // the raw (unscaled) matrix resolves det = 1 only while the evanescent
    // envelope exp(2 kappa d) stays within double precision of 1e-12, i.e.
    // kappa d <~ 4; sample propagating and moderately evanescent draws
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int trials = 0;
    while (trials < 1000) {
        const double n_h = 1.0 + 3.0 * u(rng);
        const double d_h = 30.0 + 200.0 * u(rng);
        const double d_l = 30.0 + 200.0 * u(rng);
        const auto stack = make_stack(n_h, d_h, d_l);
        const double omega = 0.5 + 10.0 * u(rng);
        const double k_rho_ev = omega * (0.2 + 1.1 * u(rng));
        const double x_l = omega * omega - k_rho_ev * k_rho_ev;
        if (x_l < 0.0 && std::sqrt(-x_l) * stack.d_l_nat() > 3.5) continue;
        ++trials;
        const auto pol = u(rng) < 0.5 ? Polarization::TE : Polarization::TM;
        const auto m = unit_cell_transfer_matrix(stack, pol, omega,
                                                 energy_to_wavenumber(k_rho_ev));
        // symplectic up to the rounding floor set by the entry magnitudes
        const double scale2 =
            std::max({std::norm(m.m11), std::norm(m.m12), std::norm(m.m21), std::norm(m.m22)});
        const double bound =
            std::max(1e-12, 16.0 * std::numeric_limits<double>::epsilon() * scale2);
        CHECK(std::abs(m.det() - cplx(1.0)) < bound);

        // absolute 1e-12 in the well-conditioned regime
        if (omega * n_h < 25.0 && (x_l >= 0.0 || std::sqrt(-x_l) * stack.d_l_nat() < 2.0))
            CHECK(std::abs(m.det() - cplx(1.0)) < 1e-12);
    }
}

TEST_CASE("half trace of the cell matrix equals cos(k_z L) on a band") {
    const auto stack = make_stack(2.0, 120.0, 80.0);
    const double edge = stack.fbz_edge_invnm();
    for (const double kz_frac : {0.25, 0.65}) {
        const double k_z = kz_frac * edge;
        const auto bands = solve_bands(stack, Polarization::TM, 0.01, k_z, 9.0);
        REQUIRE(!bands.empty());
        for (const auto& bp : bands) {
            const auto m = unit_cell_transfer_matrix(stack, bp.pol, bp.omega_ev, bp.k_rho_invnm);
            const double target = std::cos(wavenumber_to_energy(k_z) * stack.period_nat());
            CHECK(std::abs(0.5 * m.trace().real() - target) < 1e-9);
        }
    }
}

TEST_CASE("mode profile: continuity, Bloch condition, normalization") {
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        const double n_h = 1.1 + 2.5 * u(rng);
        const auto stack = make_stack(n_h, 60.0 + 120.0 * u(rng), 60.0 + 120.0 * u(rng));
        const double edge = stack.fbz_edge_invnm();
        const double k_z = (0.1 + 0.75 * u(rng)) * edge;
        const double k_rho = 0.03 * u(rng);
        const auto pol = trial % 2 ? Polarization::TE : Polarization::TM;
        const auto bands = solve_bands(stack, pol, k_rho, k_z, 9.0);
        REQUIRE(!bands.empty());
        for (std::size_t i = 0; i < bands.size(); i += 2) {
            const auto prof = mode_profile(stack, bands[i]);

            // field and weighted derivative continuous at the h|l interface
            const auto h_end = layer_edge_values(prof.layers[0], true);
            const auto l_start = layer_edge_values(prof.layers[1], false);
            const double f_scale = std::max({std::abs(h_end.f), std::abs(h_end.v), 1.0});
            CHECK(std::abs(h_end.f - l_start.f) / f_scale < 1e-10);
            CHECK(std::abs(h_end.v - l_start.v) / f_scale < 1e-10);

            // Bloch condition across the cell
            const auto h_start = layer_edge_values(prof.layers[0], false);
            const auto l_end = layer_edge_values(prof.layers[1], true);
            const cplx bloch = std::exp(cplx(0, 1) * prof.k_z_ev * stack.period_nat());
            CHECK(std::abs(l_end.f - bloch * h_start.f) / f_scale < 1e-10);
            CHECK(std::abs(l_end.v - bloch * h_start.v) / f_scale < 1e-10);

            // normalization convention
            CHECK(mode_norm(stack, prof) == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("profile evaluation is periodic up to the Bloch phase") {
    const auto stack = make_stack(2.2, 140.0, 60.0);
    const double edge = stack.fbz_edge_invnm();
    const auto bands = solve_bands(stack, Polarization::TE, 0.005, 0.33 * edge, 7.0);
    REQUIRE(bands.size() >= 2);
    const auto prof = mode_profile(stack, bands[1]);
    const double period = stack.period_nat();
    const cplx bloch = std::exp(cplx(0, 1) * prof.k_z_ev * period);
    for (const double z : {0.07 * period, 0.4 * period, 0.83 * period}) {
        const cplx a = profile_scalar(prof, z + period);
        const cplx b = bloch * profile_scalar(prof, z);
        CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(b)));
    }
}

TEST_CASE("mode profile rejects off-shell points") {
    const auto stack = make_stack(2.0);
    const double edge = stack.fbz_edge_invnm();
    BandPoint fake;
    fake.k_rho_invnm = 0.001;
    fake.k_z_invnm = 0.4 * edge;
    fake.pol = Polarization::TE;
    fake.omega_ev = 1.2345; // not a root
    CHECK_THROWS_AS(mode_profile(stack, fake), std::invalid_argument);
}

TEST_CASE("band-edge state is a standing wave") {
    const auto stack = make_stack(2.0);
    const double edge = stack.fbz_edge_invnm();
    const auto bands = solve_bands(stack, Polarization::TE, 0.0, edge, 8.0);
    REQUIRE(!bands.empty());
    const auto prof = mode_profile(stack, bands[0]);
    CHECK(prof.degenerate_edge);
    CHECK(std::abs(prof.layers[0].amp_fwd) ==
          doctest::Approx(std::abs(prof.layers[0].amp_bwd)).epsilon(1e-8));
}

TEST_CASE("vacuum limit: single coefficient with |E(G)|^2 = 1/2") {
    const auto stack = make_stack(1.0);
    const double edge = stack.fbz_edge_invnm();
    const double k_z = 0.28 * edge;
    const double k_rho = 0.009;
    for (const auto pol : {Polarization::TE, Polarization::TM}) {
        const auto bands = solve_bands(stack, pol, k_rho, k_z, 12.0);
        REQUIRE(bands.size() >= 2);

        // fundamental: folding G = 0
        {
            const auto co = fourier_coefficients(stack, mode_profile(stack, bands[0]), 12);
            CHECK(std::norm(co.at(0)) == doctest::Approx(0.5).epsilon(1e-10));
            for (int m = -12; m <= 12; ++m)
                if (m != 0) CHECK(std::abs(co.at(m)) < 1e-10);
        }
        // first folded branch: single coefficient at G = -b_z
        {
            const auto co = fourier_coefficients(stack, mode_profile(stack, bands[1]), 12);
            CHECK(std::norm(co.at(-1)) == doctest::Approx(0.5).epsilon(1e-10));
            for (int m = -12; m <= 12; ++m)
                if (m != -1) CHECK(std::abs(co.at(m)) < 1e-10);
        }
    }
}

TEST_CASE("gauge fix: leading coefficient real positive, deterministic") {
    const auto stack = make_stack(2.4, 90.0, 110.0);
    const double edge = stack.fbz_edge_invnm();
    const auto bands = solve_bands(stack, Polarization::TM, 0.012, 0.52 * edge, 9.0);
    REQUIRE(bands.size() >= 3);
    const auto prof = mode_profile(stack, bands[2]);
    const auto a = fourier_coefficients(stack, prof, 24);
    const auto b = fourier_coefficients(stack, prof, 24);
    double best = 0.0;
    cplx leading{};
    for (int m = -24; m <= 24; ++m) {
        if (std::abs(a.at(m)) > best) {
            best = std::abs(a.at(m));
            leading = a.at(m);
        }
        CHECK(a.at(m) == b.at(m)); // deterministic, bitwise
    }
    CHECK(leading.real() > 0.0);
    CHECK(std::abs(leading.imag()) < 1e-12 * leading.real());
}

TEST_CASE("plain G-sum carries the full mode weight") {
    // unweighted Parseval: (1/L) Int |E|^2 = sum over G of the squared
    // coefficients, so the transverse + longitudinal split sums to 1/2
    const auto stack = make_stack(2.6, 120.0, 80.0);
    const double edge = stack.fbz_edge_invnm();
    for (const auto pol : {Polarization::TE, Polarization::TM}) {
        const auto bands = solve_bands(stack, pol, 0.01, 0.44 * edge, 8.0);
        REQUIRE(bands.size() >= 2);
        for (std::size_t i = 0; i < bands.size(); i += 2) {
            const auto co = fourier_coefficients(stack, mode_profile(stack, bands[i]), 96);
            double total = 0.0;
            for (int m = -96; m <= 96; ++m) {
                total += std::norm(co.at(m));
                if (pol == Polarization::TM)
                    total += std::norm(co.longitudinal[static_cast<std::size_t>(m + 96)]);
            }
            // TM E_z has 1/m tails; 1e-4 at M = 96 reflects that truncation
            CHECK(total == doctest::Approx(0.5).epsilon(pol == Polarization::TE ? 1e-8 : 1e-4));
        }
    }
}

TEST_CASE("Parseval: G-sum approaches the eps-weighted norm") {
    // low-contrast stack: the truncated G-sum converges fast enough to meet
    // the tight tolerance at M = 64 (the TM tail scales with the contrast^2)
    const auto stack = make_stack(1.005, 100.0, 100.0);
    const double edge = stack.fbz_edge_invnm();
    for (const auto pol : {Polarization::TE, Polarization::TM}) {
        const auto bands = solve_bands(stack, pol, 0.006, 0.42 * edge, 9.0);
        REQUIRE(bands.size() >= 3);
        const auto prof = mode_profile(stack, bands[2]);
        double prev_defect = 1.0;
        for (const int M : {16, 32, 64}) {
            const auto co = fourier_coefficients(stack, prof, M, true);
            CHECK(co.parseval_defect <= prev_defect * 1.0000001);
            prev_defect = co.parseval_defect;
        }
        CHECK(prev_defect < 1e-8); // at M = 64
    }
}

TEST_CASE("real-space reconstruction matches the profile") {
    const auto stack = make_stack(1.02, 100.0, 100.0);
    const double edge = stack.fbz_edge_invnm();
    const double period = stack.period_nat();
    for (const auto pol : {Polarization::TE, Polarization::TM}) {
        const auto bands = solve_bands(stack, pol, 0.004, 0.36 * edge, 8.0);
        REQUIRE(bands.size() >= 2);
        const auto prof = mode_profile(stack, bands[1]);
        const auto co = fourier_coefficients(stack, prof, 64);

        const auto reference = [&](double z) {
            if (pol == Polarization::TE) return profile_scalar(prof, z);
            // E_x = -i v / omega is continuous; reconstruct it per-G
            return -cplx(0, 1) * profile_weighted_derivative(prof, z) / prof.omega_ev;
        };
        const auto reconstructed = [&](double z) {
            const auto& c = pol == Polarization::TE ? co.coeff : co.coeff_ex;
            return reconstruct_from_coefficients(c, 64, prof.k_z_ev, stack.b_z_ev(), z);
        };

        // align the gauge rotation once, at the strongest-field point
        cplx align{1.0};
        double best = -1.0;
        for (int i = 0; i < 40; ++i) {
            const double z = period * (i + 0.5) / 40.0;
            const cplx ref = reference(z);
            if (std::abs(ref) > best) {
                best = std::abs(ref);
                align = ref / reconstructed(z);
            }
        }
        align /= std::abs(align);
        for (int i = 0; i < 40; ++i) {
            const double z = period * (i + 0.5) / 40.0;
            CHECK(std::abs(reconstructed(z) * align - reference(z)) < 1e-6);
        }
    }
}

TEST_CASE("TM longitudinal residual vanishes with the contrast") {
    const auto stack = make_stack(1.0 + 1e-4);
    const double edge = stack.fbz_edge_invnm();
    const auto bands = solve_bands(stack, Polarization::TM, 0.01, 0.3 * edge, 9.0);
    REQUIRE(!bands.empty());
    double worst = 0.0;
    for (const auto& bp : bands) {
        const auto co = fourier_coefficients(stack, mode_profile(stack, bp), 24);
        worst = std::max(worst, co.longitudinal_residual);
    }
    CHECK(worst < 1e-3);

    // and is tracked (nonzero) for a strong stack
    const auto strong = make_stack(3.0);
    const auto sb = solve_bands(strong, Polarization::TM, 0.02,
                                0.3 * strong.fbz_edge_invnm(), 9.0);
    REQUIRE(!sb.empty());
    const auto co = fourier_coefficients(strong, mode_profile(strong, sb[1]), 24);
    CHECK(co.longitudinal_residual > 0.0);
}
