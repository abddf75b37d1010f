#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "pcmass/ionization.hpp"

using namespace pcmass;

namespace {

MassCorrection make_mc(double a, double b) {
    MassCorrection mc;
    mc.a_ev = a;
    mc.b_ev = b;
    return mc;
}

} // namespace

TEST_CASE("delta_m_min branches") {
    CHECK(delta_m_min(make_mc(1.0, -2.0)) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(delta_m_min(make_mc(1.0, 2.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(delta_m_min(make_mc(0.0, 0.0)) == 0.0);
}

TEST_CASE("general ionization correction") {
    const AtomicState ground(0, 0);

    // B < 0: (2/3) B
    {
        const auto r = ionization_correction_general(make_mc(5.0, -3.0), ground);
        CHECK(r.delta_e_ion_ev == doctest::Approx(-2.0).epsilon(1e-14));
        CHECK(r.b_sign == BSign::Negative);
    }
    // B > 0: -B/3
    {
        const auto r = ionization_correction_general(make_mc(5.0, 3.0), ground);
        CHECK(r.delta_e_ion_ev == doctest::Approx(-1.0).epsilon(1e-14));
        CHECK(r.b_sign == BSign::Positive);
    }
    // A cancels exactly, whatever its value
    for (const double a : {-7.3, 0.0, 123.456}) {
        const auto r1 = ionization_correction_general(make_mc(a, -3.0), ground);
        const auto r2 = ionization_correction_general(make_mc(a + 17.0, -3.0), ground);
        CHECK(r1.delta_e_ion_ev == r2.delta_e_ion_ev); // bitwise
    }
    // excited state expectation enters through <cos^2>
    {
        const auto r = ionization_correction_general(make_mc(0.0, -5.0), AtomicState(1, 0));
        CHECK(r.delta_e_ion_ev == doctest::Approx(-5.0 + 3.0).epsilon(1e-14)); // min - 3/5 B
    }
}

TEST_CASE("route equivalence on a B < 0 stack") {
    const LayerStack stack(100.0, 100.0, std::make_shared<ConstantIndex>(3.0));
    QuadratureConfig quad;
    quad.n_rho = 10;
    quad.n_z = 4;
    quad.gauss_order = 4;
    quad.max_refinements = 3;
    quad.tol_rel = 5e-3;
    quad.floor_ev = 1e-5;
    RegularizationConfig reg;
    reg.omega_max_ev = 6.0;

    const auto mc = ab_coefficients(stack, quad, reg);
    REQUIRE(mc.b_ev < 0.0);
    const auto general = ionization_correction_general(mc, AtomicState(0, 0));
    const auto closed = ionization_correction_closed_form(stack, quad, reg);

    const double tol =
        2.0 * std::max(mc.diag.tol_achieved, quad.tol_rel) * std::abs(general.delta_e_ion_ev) +
        1e-9;
    CHECK(std::abs(general.delta_e_ion_ev - closed.delta_e_ion_ev) < tol);
    CHECK(closed.route == IonizationRoute::ClosedForm);
    CHECK(general.route == IonizationRoute::General);
}

TEST_CASE("shifted table") {
    const auto& atoms = default_atom_table();

    // paper operating points, pure addition
    const auto t1 = pc_ionization_table(atoms, -1.82);
    REQUIRE(t1.size() == 7);
    CHECK(t1[0].i_pc_ev == doctest::Approx(11.78).epsilon(1e-12));
    CHECK(t1[5].i_pc_ev == doctest::Approx(2.08).epsilon(1e-12));

    const auto t2 = pc_ionization_table(atoms, -2.64);
    CHECK(t2[5].i_pc_ev == doctest::Approx(1.26).epsilon(1e-12));

    // identity: I_pc - I_vac = delta, up to one rounding of the addition
    for (const auto& row : t2)
        CHECK(std::abs(row.i_pc_ev - row.i_vac_ev - row.delta_ev) <=
              2.0 * std::numeric_limits<double>::epsilon() * std::abs(row.i_vac_ev));

    // zero shift leaves everything unchanged
    const auto t0 = pc_ionization_table(atoms, 0.0);
    for (std::size_t i = 0; i < atoms.size(); ++i)
        CHECK(t0[i].i_pc_ev == atoms[i].ionization_energy_ev);

    // unbound flag fires, rows are kept
    const auto t3 = pc_ionization_table(atoms, -4.0);
    CHECK(t3[0].unbound == false); // H: 13.6 - 4 > 0
    CHECK(t3[5].unbound == true);  // Cs: 3.9 - 4 < 0
    CHECK(t3.size() == 7);

    CHECK(pc_ionization_table({}, -1.0).empty());
}

TEST_CASE("arrhenius factor") {
    CHECK(arrhenius_factor({0.0, 300.0}).factor == doctest::Approx(1.0).epsilon(1e-15));

    // dEa = -kB T ln 10 -> factor 10
    const double kb = constants::k_boltzmann_ev;
    const auto ten = arrhenius_factor({-kb * 300.0 * std::log(10.0), 300.0});
    CHECK(ten.factor == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(ten.log10_factor == doctest::Approx(1.0).epsilon(1e-12));

    // oracle: 1.82 / (kB * 300 * ln 10) = 30.57
    const auto big = arrhenius_factor({-1.82, 300.0});
    CHECK(big.log10_factor == doctest::Approx(30.5746).epsilon(1e-4));

    // reciprocity
    for (const double x : {0.03, 0.4, 1.82}) {
        const double prod =
            arrhenius_factor({x, 350.0}).factor * arrhenius_factor({-x, 350.0}).factor;
        CHECK(prod == doctest::Approx(1.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(arrhenius_factor({1.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(arrhenius_factor({1.0, -10.0}), std::domain_error);
}
