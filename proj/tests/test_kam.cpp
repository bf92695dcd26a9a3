#include <doctest.h>

#include <cmath>
#include <vector>

#include "impactkam/kam.hpp"
#include "impactkam/maps.hpp"

using namespace impactkam;

namespace {

constexpr double kGolden = 0.61803398874989484820458683436564;

/// Integrable twist with a genuinely nonlinear frequency profile; exact
/// symplectic since the action is preserved.
class PolyTwistMap final : public TwistedAnnulusMap {
public:
    PolyTwistMap(double w0, double k1, double k2) : w0_(w0), k1_(k1), k2_(k2) {}

    Vec2 apply(const Vec2& p) const override { return {p.a + alpha(p.b), p.b}; }
    Mat2 jacobian(const Vec2& p) const override { return {1.0, alpha_prime(p.b), 0.0, 1.0}; }

    double alpha(double I) const override { return w0_ + k1_ * I + k2_ * I * I; }
    double alpha_prime(double I) const override { return k1_ + 2.0 * k2_ * I; }
    double alpha_inverse(double omega) const override {
        double I = (omega - w0_) / k1_;
        for (int i = 0; i < 60; ++i) {
            const double step = (alpha(I) - omega) / alpha_prime(I);
            I -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(I))) break;
        }
        return I;
    }

private:
    double w0_, k1_, k2_;
};

double sup_error(const AnnulusMap& F, const CurveParametrization& curve) {
    const auto [e_phi, e_I] = invariance_error(F, curve);
    const int m = 4 * std::max(curve.phi_part.order(), 1);
    double worst = 0.0;
    for (double v : e_phi.sample(m)) worst = std::max(worst, std::abs(v));
    for (double v : e_I.sample(m)) worst = std::max(worst, std::abs(v));
    return worst;
}

ScaledImpactMap golden_rung_map(int k, double eps, const ForcingSpec& forcing) {
    const double omega0 = kTwoPi * kGolden;
    const double y0_star = (omega0 + kTwoPi * k) * (1.0 - std::pow(forcing.a0() * eps, 2)) / 4.0;
    return ScaledImpactMap::for_ladder_rung(y0_star, eps, forcing);
}

/// Set distance between two graph-like curves: the action gap at matched
/// angles, which dominates the Hausdorff distance for graphs.
double curve_set_distance(const CurveParametrization& a, const CurveParametrization& b) {
    const PeriodicFn db = b.phi_part.derivative();
    double worst = 0.0;
    for (int i = 0; i < 512; ++i) {
        const double theta_a = kTwoPi * i / 512;
        const double t = theta_a + a.phi_part.eval(theta_a);
        // Invert theta + phi_part_b(theta) = t.
        double theta_b = t;
        for (int it = 0; it < 50; ++it) {
            const double r = theta_b + b.phi_part.eval(theta_b) - t;
            const double step = r / (1.0 + db.eval(theta_b));
            theta_b -= step;
            if (std::abs(step) < 1e-14) break;
        }
        worst = std::max(worst,
                         std::abs(a.I_part.eval(theta_a) - b.I_part.eval(theta_b)));
    }
    return worst;
}

}  // namespace

TEST_SUITE("kam") {

TEST_CASE("invariance error vanishes on an exact invariant circle") {
    const PolyTwistMap F(1.0, 1.0, 0.3);
    const double I0 = 0.5;
    const double omega = F.alpha(I0);
    const auto curve = flat_circle(I0, omega, 16);
    CHECK(sup_error(F, curve) < 1e-13);
}

TEST_CASE("invariance error of an offset circle is the frequency mismatch") {
    const PolyTwistMap F(1.0, 1.0, 0.3);
    const double I0 = 0.5;
    const double omega = F.alpha(I0);
    const auto curve = flat_circle(I0 + 0.1, omega, 16);
    const auto [e_phi, e_I] = invariance_error(F, curve);
    const double expected = F.alpha(I0 + 0.1) - F.alpha(I0);
    CHECK(e_phi.average() == doctest::Approx(expected).epsilon(1e-12));
    // All oscillating content is zero: the mismatch is a pure constant.
    CHECK(std::abs(e_phi.coeff(1)) < 1e-14);
    CHECK(e_I.coeff_max() < 1e-14);
}

TEST_CASE("first invariance error of the scaled impact map is O(eps)") {
    const double eps = 0.01;
    const ForcingSpec forcing = ForcingSpec::cosine();
    const ScaledImpactMap F = golden_rung_map(4, eps, forcing);
    const double omega = kTwoPi * (kGolden + 4.0);
    const auto curve = flat_circle(F.alpha_inverse(omega), omega, 64);
    const double err = sup_error(F, curve);
    CHECK(err > 0.0);
    CHECK(err < 10.0 * eps);
}

TEST_CASE("invariance error surfaces domain escapes") {
    const double eps = 0.01;
    const ForcingSpec forcing = ForcingSpec::cosine();
    const ScaledImpactMap F = golden_rung_map(4, eps, forcing);
    const double omega = kTwoPi * (kGolden + 4.0);
    const auto curve = flat_circle(F.alpha_inverse(omega) - 10.0, omega, 16);
    CHECK_THROWS_AS(invariance_error(F, curve), DomainEscape);
}

TEST_CASE("kam_step is a fixed point on a converged curve") {
    const PolyTwistMap F(1.0, 1.0, 0.3);
    const double I0 = 0.5;
    const auto curve = flat_circle(I0, F.alpha(I0), 16);
    const auto [next, ws] = kam_step(F, curve);
    CHECK(ws.correction_norm < 1e-13);
    CHECK((next.phi_part - curve.phi_part).coeff_max() < 1e-13);
    CHECK((next.I_part - curve.I_part).coeff_max() < 1e-13);
}

TEST_CASE("kam_step contracts quadratically") {
    const PolyTwistMap F(1.0, 1.0, 0.3);
    const double I0 = 0.5;
    const double omega = F.alpha(I0);

    // Constant action offset of 1e-4.
    auto curve = flat_circle(I0 + 1e-4, omega, 16);
    CHECK(sup_error(F, curve) > 1e-5);
    auto [next, ws] = kam_step(F, curve);
    CHECK(sup_error(F, next) < 1e-6);

    // Oscillating perturbation of the same size.
    const double a[] = {1e-4};
    auto wavy = flat_circle(I0, omega, 16);
    wavy.I_part += PeriodicFn::from_cos_sin(0.0, a, {});
    CHECK(sup_error(F, wavy) > 1e-5);
    auto [next2, ws2] = kam_step(F, wavy);
    CHECK(sup_error(F, next2) < 1e-6);
}

TEST_CASE("exactness identity along kam iterations of the impact map") {
    const double eps = 0.01;
    const ForcingSpec forcing = ForcingSpec::cosine();
    const ScaledImpactMap F = golden_rung_map(5, eps, forcing);
    const double omega = kTwoPi * (kGolden + 5.0);
    CurveParametrization curve = flat_circle(F.alpha_inverse(omega), omega, 64);
    for (int it = 0; it < 4; ++it) {
        auto [next, ws] = kam_step(F, curve);
        CHECK(ws.exactness_defect < 1e-9);
        CHECK(ws.Omega.eval(0.0) > 0.0);
        curve = next;
    }
    CHECK(sup_error(F, curve) < 1e-9);
}

TEST_CASE("degenerate average is rejected") {
    // Zero twist: A vanishes identically.
    const PolyTwistMap F(1.0, 0.0, 0.0);
    const auto curve = flat_circle(0.3, 1.0, 8);
    CHECK_THROWS_AS(kam_step(F, curve), DegenerateAverage);
}

TEST_CASE("solve_curve on the unperturbed twist needs one evaluation") {
    const PolyTwistMap F(1.0, 1.0, 0.3);
    const double omega = F.alpha(0.5);
    const auto result = solve_curve(F, omega, std::nullopt, {.order = 16});
    CHECK(result.report.verdict == KamVerdict::converged);
    CHECK(result.report.iterations.size() == 1);
    CHECK(result.report.final_error < result.report.tol);
    CHECK(result.curve.I_part.average() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_curve converges on the golden ladder and rotates correctly") {
    const double eps = 0.01;
    const ForcingSpec forcing = ForcingSpec::cosine();
    const ScaledImpactMap F = golden_rung_map(4, eps, forcing);
    const double omega = kTwoPi * (kGolden + 4.0);
    KamSettings settings;
    settings.order = 64;
    settings.tol = 1e-11;
    const auto result = solve_curve(F, omega, std::nullopt, settings);
    CHECK(result.report.verdict == KamVerdict::converged);
    CHECK(result.report.final_error < 1e-11);
    CHECK(result.report.quadratic_decay);
    // Measured rotation number of the converged curve equals omega/2pi.
    CHECK(std::abs(result.report.rotation_check - omega) / kTwoPi < 1e-8);
    // Idempotence: the converged curve re-checks below tol.
    CHECK(sup_error(F, result.curve) < settings.tol);
    // Fitted strip width of an analytic curve is positive.
    CHECK(result.report.fitted_strip_width > 0.0);
}

TEST_CASE("continuation in eps re-converges quickly") {
    const ForcingSpec forcing = ForcingSpec::cosine();
    const double omega = kTwoPi * (kGolden + 5.0);
    const ScaledImpactMap F1 = golden_rung_map(5, 0.01, forcing);
    const auto first = solve_curve(F1, omega, std::nullopt, {.order = 64});
    REQUIRE(first.report.verdict == KamVerdict::converged);

    const ScaledImpactMap F2 = golden_rung_map(5, 0.02, forcing);
    const auto second = solve_curve(F2, omega, first.curve, {.order = 64});
    CHECK(second.report.verdict == KamVerdict::converged);
    CHECK(second.report.iterations.size() <= 6);  // <= 5 steps
}

TEST_CASE("small divisors near a rational frequency are surfaced") {
    const double eps = 0.01;
    const ForcingSpec forcing = ForcingSpec::cosine();
    // omega/2pi = 4 + 1/3 resonates at k = 3.
    const double omega = kTwoPi * (4.0 + 1.0 / 3.0);
    const double y0_star = omega / 4.0;
    const ScaledImpactMap F = ScaledImpactMap::for_ladder_rung(y0_star, eps, forcing);
    try {
        solve_curve(F, omega, std::nullopt, {.order = 32});
        FAIL("expected CurveSolveFailure");
    } catch (const CurveSolveFailure& e) {
        CHECK(e.report.verdict == KamVerdict::small_divisor_fail);
        CHECK(std::string(e.what()).find("k = 3") != std::string::npos);
    }
}

TEST_CASE("divergence is declared on domain escape") {
    const double eps = 0.01;
    const ForcingSpec forcing = ForcingSpec::cosine();
    const ScaledImpactMap F = golden_rung_map(4, eps, forcing);
    // Frequency far outside the rung's localization disc: the default
    // initial circle lies out of domain.
    const double omega = kTwoPi * (kGolden + 9.0);
    try {
        solve_curve(F, omega, std::nullopt, {.order = 32});
        FAIL("expected CurveSolveFailure");
    } catch (const CurveSolveFailure& e) {
        CHECK(e.report.verdict == KamVerdict::diverged);
    }
}

TEST_CASE("reparametrization origin shift leaves the curve invariant as a set") {
    const double eps = 0.015;
    const ForcingSpec forcing = ForcingSpec::cosine();
    const ScaledImpactMap F = golden_rung_map(5, eps, forcing);
    const double omega = kTwoPi * (kGolden + 5.0);
    const auto base = solve_curve(F, omega, std::nullopt, {.order = 64});
    REQUIRE(base.report.verdict == KamVerdict::converged);

    const double theta0 = 0.37;
    CurveParametrization shifted{base.curve.phi_part.shifted(theta0) +
                                     PeriodicFn::constant(theta0),
                                 base.curve.I_part.shifted(theta0), omega};
    const auto re = solve_curve(F, omega, shifted, {.order = 64});
    REQUIRE(re.report.verdict == KamVerdict::converged);
    CHECK(curve_set_distance(re.curve, base.curve) < 1e-8);
}

TEST_CASE("doubling the truncation leaves converged coefficients in place") {
    const double eps = 0.01;
    const ForcingSpec forcing = ForcingSpec::cosine();
    const ScaledImpactMap F = golden_rung_map(6, eps, forcing);
    const double omega = kTwoPi * (kGolden + 6.0);
    const auto coarse = solve_curve(F, omega, std::nullopt, {.order = 32});
    const auto fine = solve_curve(F, omega, std::nullopt, {.order = 64});
    REQUIRE(coarse.report.verdict == KamVerdict::converged);
    REQUIRE(fine.report.verdict == KamVerdict::converged);
    double worst = 0.0;
    for (int k = 0; k <= 64; ++k) {
        worst = std::max(worst, std::abs(coarse.curve.phi_part.coeff(k) -
                                         fine.curve.phi_part.coeff(k)));
        worst = std::max(worst,
                         std::abs(coarse.curve.I_part.coeff(k) - fine.curve.I_part.coeff(k)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("quadratic decay shows at least three in-band ratios") {
    // A larger perturbation stretches the decaying segment over enough
    // iterations to watch the error-squaring law directly.
    const double eps = 0.04;
    const ForcingSpec forcing = ForcingSpec::cosine();
    const double omega = kTwoPi * (0.14159265358979312 + 5.0);
    const ScaledImpactMap F = ScaledImpactMap::for_ladder_rung(omega / 4.0, eps, forcing);
    KamSettings settings;
    settings.order = 96;
    settings.tol = 1e-11;
    const auto result = solve_curve(F, omega, std::nullopt, settings);
    REQUIRE(result.report.verdict == KamVerdict::converged);

    const auto& its = result.report.iterations;
    int consecutive = 0, best = 0;
    for (size_t n = 0; n + 1 < its.size(); ++n) {
        const double e0 = its[n].error_norm, e1 = its[n + 1].error_norm;
        const bool in_band = e0 > 30 * settings.tol && e1 > 30 * settings.tol && e1 < e0 &&
                             std::log(e1) / std::log(e0) >= 1.5 &&
                             std::log(e1) / std::log(e0) <= 2.5;
        consecutive = in_band ? consecutive + 1 : 0;
        best = std::max(best, consecutive);
    }
    CHECK(best >= 3);
    CHECK(result.report.quadratic_decay);
}

}  // TEST_SUITE
