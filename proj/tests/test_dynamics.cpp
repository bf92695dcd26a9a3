#include <doctest.h>

#include <cmath>
#include <random>

#include "impactkam/dynamics.hpp"
#include "impactkam/errors.hpp"
#include "ode_oracle.hpp"

using namespace impactkam;

namespace {

const ForcingSpec& cos_forcing() {
    static const ForcingSpec f = ForcingSpec::cosine();
    return f;
}

ForcingSpec rich_forcing() {
    const double ak[] = {0.8, 0.0, 0.3};
    const double bk[] = {0.0, 0.5};
    return ForcingSpec(0.4, ak, bk);
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("forcing antiderivative chain") {
    const ForcingSpec f = rich_forcing();
    CHECK(f.P0().average() == doctest::Approx(0.0));
    CHECK(f.P1().average() == doctest::Approx(0.0));
    CHECK(f.P2().average() == doctest::Approx(0.0));
    // P0 = p - a0, P1' = P0, P2' = P1, Pm1 = P0' coefficient-wise.
    for (int k = 0; k <= f.p().order(); ++k) {
        CHECK(std::abs(f.P0().coeff(k) + PeriodicFn::constant(f.a0()).coeff(k) -
                       f.p().coeff(k)) < 1e-15);
        CHECK(std::abs(f.P1().derivative().coeff(k) - f.P0().coeff(k)) < 1e-15);
        CHECK(std::abs(f.P2().derivative().coeff(k) - f.P1().coeff(k)) < 1e-15);
        CHECK(std::abs(f.Pm1().coeff(k) - f.P0().derivative().coeff(k)) < 1e-15);
    }
    CHECK(f.p_tilde() > 0.0);
}

TEST_CASE("flow_right parabola") {
    const auto p = flow_right({0.0, 0.0, 2.0}, 1.0, 0.0, cos_forcing());
    CHECK(p.t == doctest::Approx(1.0));
    CHECK(p.x == doctest::Approx(1.5));
    CHECK(p.y == doctest::Approx(1.0));
    const auto same = flow_right({0.3, 0.2, 2.0}, 0.0, 0.01, cos_forcing());
    CHECK(same.t == 0.3);
    CHECK(same.x == 0.2);
    CHECK(same.y == 2.0);
}

TEST_CASE("flow_left mirrored parabola") {
    const auto p = flow_left({0.0, 0.0, -2.0}, 1.0, 0.0, cos_forcing());
    CHECK(p.t == doctest::Approx(1.0));
    CHECK(p.x == doctest::Approx(-1.5));
    CHECK(p.y == doctest::Approx(-1.0));
    const auto same = flow_left({0.1, -0.2, -2.0}, 0.0, 0.01, cos_forcing());
    CHECK(same.x == -0.2);
}

TEST_CASE("flows match the adaptive ODE oracle") {
    const auto p = flow_right({0.0, 0.0, 2.0}, 1.0, 0.01, cos_forcing());
    const auto o = testing::integrate_branch({0.0, 0.0, 2.0}, 1.0, +1.0, 0.01, cos_forcing());
    CHECK(p.x == doctest::Approx(o.x).epsilon(1e-10));
    CHECK(p.y == doctest::Approx(o.y).epsilon(1e-10));

    const ForcingSpec rich = rich_forcing();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const double eps = 0.05 * u(rng);
        const PhasePoint start{kTwoPi * u(rng), 2.0 * u(rng), 3.0 + 4.0 * u(rng)};
        const double tau = 2.0 * u(rng);
        const auto r = flow_right(start, tau, eps, rich);
        const auto ro = testing::integrate_branch({start.t, start.x, start.y}, tau, +1.0, eps, rich);
        CHECK(r.x == doctest::Approx(ro.x).epsilon(1e-10));
        CHECK(r.y == doctest::Approx(ro.y).epsilon(1e-10));

        const PhasePoint startl{kTwoPi * u(rng), -2.0 * u(rng), -3.0 - 4.0 * u(rng)};
        const auto l = flow_left(startl, tau, eps, rich);
        const auto lo =
            testing::integrate_branch({startl.t, startl.x, startl.y}, tau, -1.0, eps, rich);
        CHECK(l.x == doctest::Approx(lo.x).epsilon(1e-10));
        CHECK(l.y == doctest::Approx(lo.y).epsilon(1e-10));
    }
}

TEST_CASE("impact time at eps = 0") {
    const auto dec = impact_time_plus(0.7, 3.0, 0.0, cos_forcing());
    CHECK(dec.tau == doctest::Approx(6.0));
    CHECK(dec.tau0 == doctest::Approx(6.0));
    CHECK(dec.tau_star == 0.0);
    const auto dm = impact_time_minus(0.7, -3.0, 0.0, cos_forcing());
    CHECK(dm.tau == doctest::Approx(6.0));
}

TEST_CASE("impact time: newton and fixed point agree, residual vanishes") {
    const double eps = 0.01;
    for (double t0 : {0.0, 1.3, 4.0}) {
        for (double y0 : {6.0, 10.0, 35.0, 80.0}) {
            const auto n = impact_time_plus(t0, y0, eps, cos_forcing(), RootMethod::newton);
            const auto f = impact_time_plus(t0, y0, eps, cos_forcing(), RootMethod::fixed_point);
            CHECK(std::abs(n.tau - f.tau) < 1e-10);
            CHECK(n.tau == n.tau0 + eps * n.tau_star);
            CHECK(std::abs(impact_residual_plus(n.tau, t0, y0, eps, cos_forcing())) <
                  1e-11 * y0 * y0);

            const auto nm = impact_time_minus(t0, -y0, eps, cos_forcing(), RootMethod::newton);
            const auto fm =
                impact_time_minus(t0, -y0, eps, cos_forcing(), RootMethod::fixed_point);
            CHECK(std::abs(nm.tau - fm.tau) < 1e-10);
            CHECK(std::abs(impact_residual_minus(nm.tau, t0, -y0, eps, cos_forcing())) <
                  1e-11 * y0 * y0);
        }
    }
}

TEST_CASE("tau_star bound from the contraction lemma") {
    const double eps = 0.01;
    const double bound = 32.0 * cos_forcing().p_tilde();
    for (double y : {10.0, 20.0, 40.0, 80.0}) {
        for (int i = 0; i < 8; ++i) {
            const double t0 = kTwoPi * i / 8.0;
            const auto dp = impact_time_plus(t0, y, eps, cos_forcing());
            CHECK(std::abs(dp.tau_star) * y <= bound);
            const auto dm = impact_time_minus(t0, -y, eps, cos_forcing());
            CHECK(std::abs(dm.tau_star) * y <= bound);
        }
    }
}

TEST_CASE("impact time error paths") {
    CHECK_THROWS_AS(impact_time_plus(0.0, 1e-4, 0.0, cos_forcing()), DomainEscape);
    CHECK_THROWS_AS(impact_time_minus(0.0, 1e-4, 0.0, cos_forcing()), DomainEscape);
    // y0 barely above the floor with a strong forcing pulls tau0 negative
    // (P1 = sin peaks at t0 = pi/2).
    const double ak[] = {1.0};
    const ForcingSpec strong(0.0, ak, {});
    CHECK_THROWS_AS(impact_time_plus(kTwoPi / 4.0, 2e-3, 0.4, strong), NonPositiveRoot);
    CHECK_THROWS_AS([] {
        const ForcingSpec mean_heavy(2.0, {}, {});
        impact_time_plus(0.0, 10.0, 0.3, mean_heavy);
    }(), std::invalid_argument);
}

TEST_CASE("half map lands on the section") {
    const double eps = 0.01;
    ImpactTimeDecomposition dec;
    const auto q1 = half_map_plus({0.0, 10.0}, eps, cos_forcing(), &dec);
    CHECK(q1.y0 < 0.0);
    // The flow evaluated at the impact time must sit on x = 0.
    const auto at_impact = flow_right({0.0, 0.0, 10.0}, dec.tau, eps, cos_forcing());
    CHECK(std::abs(at_impact.x) < 1e-10);
    // And the algebraic velocity agrees with the flow velocity.
    CHECK(q1.y0 == doctest::Approx(at_impact.y).epsilon(1e-10));

    const auto q2 = half_map_minus(q1, eps, cos_forcing(), &dec);
    CHECK(q2.y0 > 0.0);
    const auto back = flow_left({q1.t0, 0.0, q1.y0}, dec.tau, eps, cos_forcing());
    CHECK(std::abs(back.x) < 1e-10);
    CHECK(q2.y0 == doctest::Approx(back.y).epsilon(1e-10));
}

TEST_CASE("half map at eps = 0 is the symmetric parabola") {
    const auto q = half_map_plus({1.0, 7.0}, 0.0, cos_forcing());
    CHECK(q.t0 == doctest::Approx(1.0 + 14.0));
    CHECK(q.y0 == doctest::Approx(-7.0));
}

TEST_CASE("unperturbed impact map is the 4 y0 shear") {
    for (double t0 : {0.0, 2.1, 5.7}) {
        for (double y0 : {0.5, 3.0, 40.0}) {
            const auto out = impact_map({t0, y0}, 0.0, cos_forcing());
            CHECK(out.t_bar == t0 + 4.0 * y0);
            CHECK(out.y_bar == y0);
            CHECK(out.f_t0 == 0.0);
            CHECK(out.f_y0 == 0.0);
            CHECK(out.alpha == 4.0 * y0);
        }
    }
}

TEST_CASE("impact map decomposition is exact and matches the flow route") {
    const ForcingSpec rich = rich_forcing();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double eps = 0.03 * u(rng);
        const double t0 = kTwoPi * u(rng);
        const double y0 = 6.0 + 44.0 * u(rng);
        const auto out = impact_map({t0, y0}, eps, rich);
        CHECK(out.t_bar == t0 + out.alpha + eps * out.f_t0);
        CHECK(out.y_bar == y0 + eps * out.f_y0);

        // Flow route: integrate right to the section crossing, then left.
        ImpactTimeDecomposition dp, dm;
        const auto q1 = half_map_plus({t0, y0}, eps, rich, &dp);
        const auto mid = flow_right({t0, 0.0, y0}, dp.tau, eps, rich);
        CHECK(std::abs(mid.x) < 1e-10);
        const auto q2 = half_map_minus(q1, eps, rich, &dm);
        const auto end = flow_left({q1.t0, 0.0, q1.y0}, dm.tau, eps, rich);
        CHECK(std::abs(end.x) < 1e-10);
        CHECK(out.t_bar == doctest::Approx(end.t).epsilon(1e-10));
        CHECK(out.y_bar == doctest::Approx(end.y).epsilon(1e-10));
        CHECK(out.t_bar == doctest::Approx(q2.t0).epsilon(1e-12));
        CHECK(out.y_bar == doctest::Approx(q2.y0).epsilon(1e-12));
    }
}

TEST_CASE("unperturbed map reversal") {
    for (double y0 : {1.0, 12.0}) {
        const auto out = impact_map({0.4, y0}, 0.0, cos_forcing());
        // Explicit inverse of the eps = 0 map.
        const double t_back = out.t_bar - 4.0 * out.y_bar;
        CHECK(t_back == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(out.y_bar == doctest::Approx(y0).epsilon(1e-12));
    }
}

TEST_CASE("outputs are 2pi periodic in t0") {
    const double eps = 0.02;
    for (double y0 : {7.0, 23.0}) {
        const auto a = impact_map({0.9, y0}, eps, cos_forcing());
        const auto b = impact_map({0.9 + kTwoPi, y0}, eps, cos_forcing());
        CHECK(std::abs((b.t_bar - kTwoPi) - a.t_bar) < 1e-12 * std::max(1.0, a.t_bar));
        CHECK(std::abs(b.y_bar - a.y_bar) < 1e-12 * y0);
    }
}

TEST_CASE("perturbation parts stay bounded while their y-derivative decays") {
    const double eps = 0.01;
    std::vector<double> max_ft, max_fy, max_dft;
    for (double y0 : {10.0, 20.0, 40.0, 80.0}) {
        double ft = 0.0, fy = 0.0, dft = 0.0;
        for (int i = 0; i < 16; ++i) {
            const double t0 = kTwoPi * i / 16.0;
            const auto out = impact_map({t0, y0}, eps, cos_forcing());
            ft = std::max(ft, std::abs(out.f_t0));
            fy = std::max(fy, std::abs(out.f_y0));
            // Centered difference of f_t0 in y0.
            const double h = 1e-4 * y0;
            const auto op = impact_map({t0, y0 + h}, eps, cos_forcing());
            const auto om = impact_map({t0, y0 - h}, eps, cos_forcing());
            dft = std::max(dft, std::abs((op.f_t0 - om.f_t0) / (2 * h)));
        }
        max_ft.push_back(ft);
        max_fy.push_back(fy);
        max_dft.push_back(dft);
    }
    // Bounded by a fixed constant as y0 doubles.
    for (size_t i = 1; i < max_ft.size(); ++i) {
        CHECK(max_ft[i] < 2.0 * max_ft[0]);
        CHECK(max_fy[i] < 2.0 * max_fy[0]);
    }
    // |d f_t0 / d y0| halves per doubling, 0.5 within +-0.15.  Individual
    // steps carry a phase factor from the rotation amount 2 y0 mod 2 pi, so
    // the rate is taken over the whole doubling chain.
    const double rate = std::pow(max_dft.back() / max_dft.front(),
                                 1.0 / double(max_dft.size() - 1));
    CHECK(rate > 0.35);
    CHECK(rate < 0.65);
}

TEST_CASE("energy coordinates: conjugation identity") {
    const double eps = 0.015;
    // y0 = 2 corresponds to E0 = -2.
    CHECK(impact_map_energy(0.0, -2.0, 0.0, cos_forcing()).t_bar ==
          doctest::Approx(4.0 * 2.0));
    for (double t0 : {0.0, 1.7}) {
        for (double E0 : {-18.0, -50.0, -800.0}) {
            const auto em = impact_map_energy(t0, E0, eps, cos_forcing());
            const double y0 = std::sqrt(-2.0 * E0);
            const auto ym = impact_map({t0, y0}, eps, cos_forcing());
            CHECK(std::abs(em.t_bar - ym.t_bar) < 1e-12 * std::max(1.0, std::abs(ym.t_bar)));
            CHECK(std::abs(em.E_bar - (-0.5 * ym.y_bar * ym.y_bar)) <
                  1e-12 * std::abs(E0));
            CHECK(em.E_bar == E0 + eps * em.f_E0);
        }
    }
    // eps = 0: pure twist in energy coordinates.
    const auto e0 = impact_map_energy(0.3, -8.0, 0.0, cos_forcing());
    CHECK(e0.t_bar == doctest::Approx(0.3 + 4.0 * std::sqrt(16.0)));
    CHECK(e0.E_bar == -8.0);
}

TEST_CASE("scaled map at the reference circle") {
    const double eps = 0.01;
    const auto spec = ScaledMapSpec::from_y0_star(7.25, eps);
    CHECK(spec.E0_star == doctest::Approx(-0.5 * 7.25 * 7.25));
    CHECK(spec.I0_star == doctest::Approx(-7.25 / std::sqrt(2.0)));
    CHECK(spec.y0_of_I(spec.I0_star) == doctest::Approx(7.25).epsilon(1e-14));

    const ForcingSpec rich = rich_forcing();
    const auto out = scaled_map(spec, 0.4, spec.I0_star, rich);
    const double denom = 1.0 - rich.a0() * rich.a0() * eps * eps;
    CHECK(out.alpha == doctest::Approx(4.0 * 7.25 / denom).epsilon(1e-14));
    CHECK(out.phi_bar == 0.4 + out.alpha + out.f_phi);
    CHECK(out.I_bar == spec.I0_star + out.f_I);
}

TEST_CASE("scaled map at eps = 0 is a pure twist") {
    const auto spec = ScaledMapSpec::from_y0_star(9.0, 0.0);
    for (double dI : {-0.5, 0.0, 0.7}) {
        const double I = spec.I0_star + dI;
        const auto out = scaled_map(spec, 1.1, I, cos_forcing());
        CHECK(out.phi_bar == doctest::Approx(1.1 + 4.0 * spec.y0_of_I(I)).epsilon(1e-14));
        CHECK(out.I_bar == I);
        CHECK(out.f_phi == 0.0);
        CHECK(out.f_I == 0.0);
    }
}

TEST_CASE("scaled twist bound over the localization disc") {
    const double eps = 0.02;
    for (double y0s : {7.25, 14.5, 58.0}) {
        const auto spec = ScaledMapSpec::from_y0_star(y0s, eps);
        for (double frac : {-0.9, -0.4, 0.0, 0.4, 0.9}) {
            const double I = spec.I0_star + frac * std::min(spec.domain_radius, 0.95);
            const double h = 1e-6;
            const double a_plus = 4.0 * spec.y0_of_I(I + h);
            const double a_minus = 4.0 * spec.y0_of_I(I - h);
            const double twist = std::abs((a_plus - a_minus) / (2 * h));
            CHECK(twist > 5.0 * std::sqrt(2.0) / 3.0);
            CHECK(twist < 10.0 * std::sqrt(2.0) / 3.0);
        }
    }
}

TEST_CASE("jacobian closed forms at eps = 0") {
    const auto J = impact_map_jacobian({0.3, 6.0}, 0.0, cos_forcing());
    CHECK(J.m00 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(J.m01 == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(J.m10) < 1e-14);
    CHECK(J.m11 == doctest::Approx(1.0).epsilon(1e-12));

    const double E0 = -18.0;
    const auto JE = impact_map_energy_jacobian(0.3, E0, 0.0, cos_forcing());
    CHECK(JE.m00 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(JE.m01 == doctest::Approx(-4.0 / std::sqrt(-2.0 * E0)).epsilon(1e-10));
    CHECK(std::abs(JE.m10) < 1e-12);
    CHECK(JE.m11 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("analytic and finite-difference jacobians agree") {
    const ForcingSpec rich = rich_forcing();
    const double eps = 0.02;
    for (double t0 : {0.0, 2.6}) {
        for (double y0 : {8.0, 21.0}) {
            const auto A = impact_map_jacobian({t0, y0}, eps, rich, JacobianMode::analytic);
            const auto F =
                impact_map_jacobian({t0, y0}, eps, rich, JacobianMode::finite_difference);
            CHECK(A.m00 == doctest::Approx(F.m00).epsilon(1e-6));
            CHECK(A.m01 == doctest::Approx(F.m01).epsilon(1e-6));
            CHECK(std::abs(A.m10 - F.m10) < 1e-6);
            CHECK(A.m11 == doctest::Approx(F.m11).epsilon(1e-6));

            const double E0 = -0.5 * y0 * y0;
            const auto AE =
                impact_map_energy_jacobian(t0, E0, eps, rich, JacobianMode::analytic);
            const auto FE =
                impact_map_energy_jacobian(t0, E0, eps, rich, JacobianMode::finite_difference);
            CHECK(AE.m00 == doctest::Approx(FE.m00).epsilon(1e-6));
            CHECK(std::abs(AE.m01 - FE.m01) < 1e-6);
            CHECK(AE.m10 == doctest::Approx(FE.m10).epsilon(1e-5));
            CHECK(AE.m11 == doctest::Approx(FE.m11).epsilon(1e-6));
        }
    }
}

TEST_CASE("energy jacobian is symplectic at eps = 0.01") {
    const double eps = 0.01;
    for (double t0 : {0.0, 1.0, 3.9}) {
        for (double y0 : {8.0, 16.0, 64.0}) {
            const auto J = impact_map_energy_jacobian(t0, -0.5 * y0 * y0, eps, cos_forcing());
            CHECK(std::abs(J.det() - 1.0) < 1e-8);
        }
    }
    // The raw (t0, y0) chart is not area preserving.
    const auto J = impact_map_jacobian({0.7, 9.0}, 0.03, cos_forcing());
    CHECK(std::abs(J.det() - 1.0) > 1e-6);
}

TEST_CASE("grazing guard in the jacobian") {
    CHECK_THROWS_AS(jacobian(MapId::impact, {0.0, 5e-4}, 0.0, cos_forcing(),
                             JacobianMode::analytic),
                    DomainEscape);
}

}  // TEST_SUITE
