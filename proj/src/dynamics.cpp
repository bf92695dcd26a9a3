#include "impactkam/dynamics.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "impactkam/errors.hpp"

namespace impactkam {

namespace {

constexpr int kRootBudget = 100;

struct ScalarRoot {
    double tau;
    int iterations;
};

/// Safeguarded Newton on a scalar residual with slope callable, bracketed by
/// [lo, hi] (bisection fallback keeps the iterate inside).
template <typename F, typename G>
ScalarRoot newton_bracketed(F residual, G slope, double guess, double lo, double hi) {
    double tau = guess;
    double g_lo = residual(lo);
    for (int it = 0; it < kRootBudget; ++it) {
        const double g = residual(tau);
        if ((g > 0.0) == (g_lo > 0.0)) lo = tau; else hi = tau;
        const double gp = slope(tau);
        double next;
        if (gp != 0.0) {
            next = tau - g / gp;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        } else {
            next = 0.5 * (lo + hi);
        }
        const double step = std::abs(next - tau);
        tau = next;
        if (step <= 1e-15 * std::max(1.0, std::abs(tau))) return {tau, it + 1};
    }
    throw NoConvergence("impact-time Newton exhausted its iteration budget");
}

ImpactTimeDecomposition solve_impact_time(double t, double y, double eps,
                                          const ForcingSpec& forcing, RootMethod method,
                                          bool positive_branch) {
    forcing.require_valid_eps(eps);
    const double sign = positive_branch ? 1.0 : -1.0;  // sign of the section velocity
    if (sign * y <= kGrazingFloor)
        throw DomainEscape(positive_branch ? "impact_time_plus: y0 at or below grazing floor"
                                           : "impact_time_minus: y1 at or above -grazing floor");

    // Dominant part; the full time is tau = tau0 + eps tau_star.
    const double denom = 1.0 - sign * forcing.a0() * eps;
    const double tau0 = sign * 2.0 * (y - eps * forcing.eval_P1(t)) / denom;
    if (!(tau0 > 0.0)) throw NonPositiveRoot(tau0);
    if (eps == 0.0) return {tau0, tau0, 0.0};

    double tau = 0.0;
    if (method == RootMethod::newton) {
        // Scalar equation: the position of the running flow vanishes at tau.
        auto residual = [&](double s) {
            return s * y - sign * 0.5 * denom * s * s - eps * s * forcing.eval_P1(t) +
                   eps * (forcing.eval_P2(t + s) - forcing.eval_P2(t));
        };
        auto slope = [&](double s) {
            return y - sign * denom * s - eps * forcing.eval_P1(t) + eps * forcing.eval_P1(t + s);
        };
        tau = newton_bracketed(residual, slope, tau0, 0.5 * tau0, 2.0 * tau0).tau;
    } else {
        // Contraction operator for the correction tau_star.
        double ts = 0.0;
        bool done = false;
        for (int it = 0; it < kRootBudget; ++it) {
            const double total = tau0 + eps * ts;
            const double next = sign * 2.0 *
                                (forcing.eval_P2(t + total) - forcing.eval_P2(t)) /
                                (denom * total);
            const double step = std::abs(next - ts);
            ts = next;
            if (step < 1e-12 * std::max(1.0, sign * y)) { done = true; break; }
        }
        if (!done) throw NoConvergence("impact-time fixed point exhausted its iteration budget");
        tau = tau0 + eps * ts;
    }
    if (!(tau > 0.0)) throw NonPositiveRoot(tau);
    return {tau, tau0, (tau - tau0) / eps};
}

Mat2 fd_jacobian_impl(const std::function<Vec2(Vec2)>& f, Vec2 p, double scale_a, double scale_b,
                      double h) {
    const double ha = h * scale_a;
    const double hb = h * scale_b;
    const Vec2 fa1 = f({p.a + ha, p.b});
    const Vec2 fa0 = f({p.a - ha, p.b});
    const Vec2 fb1 = f({p.a, p.b + hb});
    const Vec2 fb0 = f({p.a, p.b - hb});
    return {(fa1.a - fa0.a) / (2 * ha), (fb1.a - fb0.a) / (2 * hb),
            (fa1.b - fa0.b) / (2 * ha), (fb1.b - fb0.b) / (2 * hb)};
}

/// Centered differences with one Richardson extrapolation step.
Mat2 fd_jacobian(const std::function<Vec2(Vec2)>& f, Vec2 p, double scale_a, double scale_b) {
    const Mat2 coarse = fd_jacobian_impl(f, p, scale_a, scale_b, 1e-6);
    const Mat2 fine = fd_jacobian_impl(f, p, scale_a, scale_b, 5e-7);
    return {(4 * fine.m00 - coarse.m00) / 3, (4 * fine.m01 - coarse.m01) / 3,
            (4 * fine.m10 - coarse.m10) / 3, (4 * fine.m11 - coarse.m11) / 3};
}

}  // namespace

PhasePoint flow_right(const PhasePoint& p, double tau, double eps, const ForcingSpec& forcing) {
    forcing.require_valid_eps(eps);
    return {p.t + tau,
            p.x + tau * p.y - 0.5 * tau * tau + eps * forcing.P2_seg(tau, p.t),
            p.y - tau + eps * forcing.P1_seg(tau, p.t)};
}

PhasePoint flow_left(const PhasePoint& p, double tau, double eps, const ForcingSpec& forcing) {
    forcing.require_valid_eps(eps);
    return {p.t + tau,
            p.x + tau * p.y + 0.5 * tau * tau + eps * forcing.P2_seg(tau, p.t),
            p.y + tau + eps * forcing.P1_seg(tau, p.t)};
}

ImpactTimeDecomposition impact_time_plus(double t0, double y0, double eps,
                                         const ForcingSpec& forcing, RootMethod method) {
    return solve_impact_time(t0, y0, eps, forcing, method, true);
}

ImpactTimeDecomposition impact_time_minus(double t1, double y1, double eps,
                                          const ForcingSpec& forcing, RootMethod method) {
    return solve_impact_time(t1, y1, eps, forcing, method, false);
}

double impact_residual_plus(double tau, double t0, double y0, double eps,
                            const ForcingSpec& forcing) {
    const double denom = 1.0 - forcing.a0() * eps;
    return tau * y0 - 0.5 * denom * tau * tau - eps * tau * forcing.eval_P1(t0) +
           eps * (forcing.eval_P2(t0 + tau) - forcing.eval_P2(t0));
}

double impact_residual_minus(double tau, double t1, double y1, double eps,
                             const ForcingSpec& forcing) {
    const double denom = 1.0 + forcing.a0() * eps;
    return tau * y1 + 0.5 * denom * tau * tau - eps * tau * forcing.eval_P1(t1) +
           eps * (forcing.eval_P2(t1 + tau) - forcing.eval_P2(t1));
}

ImpactPoint half_map_plus(const ImpactPoint& q, double eps, const ForcingSpec& forcing,
                          ImpactTimeDecomposition* tau_out) {
    const auto dec = impact_time_plus(q.t0, q.y0, eps, forcing);
    if (tau_out) *tau_out = dec;
    const double t1 = q.t0 + dec.tau;
    const double y1 = -q.y0 + eps * (forcing.eval_P1(t1) + forcing.eval_P1(q.t0) -
                                     (1.0 - forcing.a0() * eps) * dec.tau_star);
    return {t1, y1};
}

ImpactPoint half_map_minus(const ImpactPoint& q, double eps, const ForcingSpec& forcing,
                           ImpactTimeDecomposition* tau_out) {
    const auto dec = impact_time_minus(q.t0, q.y0, eps, forcing);
    if (tau_out) *tau_out = dec;
    const double t_bar = q.t0 + dec.tau;
    const double y_bar = -q.y0 + eps * (forcing.eval_P1(t_bar) + forcing.eval_P1(q.t0) +
                                        (1.0 + forcing.a0() * eps) * dec.tau_star);
    return {t_bar, y_bar};
}

ImpactMapOutput impact_map(const ImpactPoint& q, double eps, const ForcingSpec& forcing) {
    const double a0 = forcing.a0();
    const double one_m = 1.0 - a0 * eps;
    const double one_p = 1.0 + a0 * eps;

    const auto dec_plus = impact_time_plus(q.t0, q.y0, eps, forcing);
    const double t1 = q.t0 + dec_plus.tau;
    const double y1 = -q.y0 + eps * (forcing.eval_P1(t1) + forcing.eval_P1(q.t0) -
                                     one_m * dec_plus.tau_star);
    const auto dec_minus = impact_time_minus(t1, y1, eps, forcing);

    ImpactMapOutput out;
    out.alpha = 4.0 * q.y0 / (one_m * one_p);
    if (eps == 0.0) {
        // The decomposition is insensitive to the f-parts at eps = 0; they
        // are pinned to zero so the unperturbed map is the exact shear.
        out.t_bar = q.t0 + out.alpha;
        out.y_bar = q.y0;
        return out;
    }
    // Assembled so that t_bar = t0 + alpha + eps f_t0 and y_bar = y0 + eps f_y0
    // hold exactly; agreement with the raw flow composition is a test concern.
    out.f_t0 = -4.0 * forcing.eval_P1(q.t0) / (one_m * one_p) +
               (3.0 - a0 * eps) / one_p * dec_plus.tau_star + dec_minus.tau_star;
    out.t_bar = q.t0 + out.alpha + eps * out.f_t0;
    out.f_y0 = forcing.eval_P1(out.t_bar) - forcing.eval_P1(q.t0) + one_m * dec_plus.tau_star +
               one_p * dec_minus.tau_star;
    out.y_bar = q.y0 + eps * out.f_y0;
    return out;
}

EnergyMapOutput impact_map_energy(double t0, double E0, double eps, const ForcingSpec& forcing) {
    if (!(E0 < -0.5 * kGrazingFloor * kGrazingFloor))
        throw DomainEscape("impact_map_energy: E0 must be below -y_min^2/2");
    const double y0 = std::sqrt(-2.0 * E0);
    const auto out = impact_map({t0, y0}, eps, forcing);

    EnergyMapOutput res;
    res.alpha = out.alpha;
    res.f_t0 = out.f_t0;
    res.t_bar = out.t_bar;
    res.f_E0 = -y0 * out.f_y0 - 0.5 * eps * out.f_y0 * out.f_y0;
    res.E_bar = E0 + eps * res.f_E0;  // equals -y_bar^2/2 identically
    return res;
}

ScaledMapSpec ScaledMapSpec::from_y0_star(double y0_star, double epsilon) {
    if (!(y0_star > 5.0))
        throw std::invalid_argument("ScaledMapSpec: y0_star must exceed 5");
    ScaledMapSpec s;
    s.y0_star = y0_star;
    s.E0_star = -0.5 * y0_star * y0_star;
    s.I0_star = -y0_star / std::numbers::sqrt2;
    s.epsilon = epsilon;
    s.domain_radius = 0.5 * std::abs(s.I0_star);
    return s;
}

double ScaledMapSpec::y0_of_I(double I) const {
    const double arg = -std::numbers::sqrt2 * y0_star * I;
    if (!(arg > 0.0)) throw DomainEscape("scaled map: action crossed I = 0");
    return std::sqrt(arg);
}

double ScaledMapSpec::I_of_y0(double y0) const {
    return -y0 * y0 / (std::numbers::sqrt2 * y0_star);
}

double ScaledMapSpec::alpha(double I) const {
    // The a0-eps prefactor lives in scaled_map where the forcing is known;
    // this raw form is the eps = 0 rotation amount.
    return 4.0 * y0_of_I(I);
}

ScaledMapOutput scaled_map(const ScaledMapSpec& spec, double phi, double I,
                           const ForcingSpec& forcing) {
    if (std::abs(I - spec.I0_star) >= spec.domain_radius)
        throw DomainEscape("scaled map: action left the localization disc");
    const double eps = spec.epsilon;
    const double y0 = spec.y0_of_I(I);
    const auto out = impact_map({phi, y0}, eps, forcing);

    ScaledMapOutput res;
    res.alpha = out.alpha;             // 4 y0(I) / (1 - a0^2 eps^2)
    res.f_phi = eps * out.f_t0;
    res.phi_bar = phi + res.alpha + res.f_phi;
    res.f_I = -eps / (std::numbers::sqrt2 * spec.y0_star) *
              (2.0 * y0 * out.f_y0 + eps * out.f_y0 * out.f_y0);
    res.I_bar = I + res.f_I;
    return res;
}

Mat2 half_map_plus_jacobian(const ImpactPoint& q, double eps, const ForcingSpec& forcing) {
    const auto dec = impact_time_plus(q.t0, q.y0, eps, forcing);
    const double tau = dec.tau;
    const double t1 = q.t0 + tau;
    // Slope of the position residual in tau is the impact velocity.
    const double y_imp = q.y0 - tau + eps * forcing.P1_seg(tau, q.t0);
    if (std::abs(y_imp) < kGrazingFloor) throw SingularImpact(y_imp);

    const double dG_dt0 = eps * (-tau * forcing.eval_P0(q.t0) + forcing.eval_P1(t1) -
                                 forcing.eval_P1(q.t0));
    const double dtau_dt0 = -dG_dt0 / y_imp;
    const double dtau_dy0 = -tau / y_imp;

    const double dy_dtau = -1.0 + eps * forcing.eval_p(t1);
    Mat2 J;
    J.m00 = 1.0 + dtau_dt0;
    J.m01 = dtau_dy0;
    J.m10 = dy_dtau * dtau_dt0 + eps * (forcing.eval_P0(t1) - forcing.eval_P0(q.t0));
    J.m11 = 1.0 + dy_dtau * dtau_dy0;
    return J;
}

Mat2 half_map_minus_jacobian(const ImpactPoint& q, double eps, const ForcingSpec& forcing) {
    const auto dec = impact_time_minus(q.t0, q.y0, eps, forcing);
    const double tau = dec.tau;
    const double t_bar = q.t0 + tau;
    const double y_imp = q.y0 + tau + eps * forcing.P1_seg(tau, q.t0);
    if (std::abs(y_imp) < kGrazingFloor) throw SingularImpact(y_imp);

    const double dG_dt1 = eps * (-tau * forcing.eval_P0(q.t0) + forcing.eval_P1(t_bar) -
                                 forcing.eval_P1(q.t0));
    const double dtau_dt1 = -dG_dt1 / y_imp;
    const double dtau_dy1 = -tau / y_imp;

    const double dy_dtau = 1.0 + eps * forcing.eval_p(t_bar);
    Mat2 J;
    J.m00 = 1.0 + dtau_dt1;
    J.m01 = dtau_dy1;
    J.m10 = dy_dtau * dtau_dt1 + eps * (forcing.eval_P0(t_bar) - forcing.eval_P0(q.t0));
    J.m11 = 1.0 + dy_dtau * dtau_dy1;
    return J;
}

Mat2 impact_map_jacobian(const ImpactPoint& q, double eps, const ForcingSpec& forcing,
                         JacobianMode mode) {
    if (mode == JacobianMode::finite_difference) {
        auto f = [&](Vec2 p) {
            const auto out = impact_map({p.a, p.b}, eps, forcing);
            return Vec2{out.t_bar, out.y_bar};
        };
        return fd_jacobian(f, {q.t0, q.y0}, 1.0, std::max(1.0, std::abs(q.y0)));
    }
    const ImpactPoint mid = half_map_plus(q, eps, forcing);
    return half_map_minus_jacobian(mid, eps, forcing) * half_map_plus_jacobian(q, eps, forcing);
}

Mat2 impact_map_energy_jacobian(double t0, double E0, double eps, const ForcingSpec& forcing,
                                JacobianMode mode) {
    if (mode == JacobianMode::finite_difference) {
        auto f = [&](Vec2 p) {
            const auto out = impact_map_energy(p.a, p.b, eps, forcing);
            return Vec2{out.t_bar, out.E_bar};
        };
        return fd_jacobian(f, {t0, E0}, 1.0, std::max(1.0, std::abs(E0)));
    }
    const double y0 = std::sqrt(-2.0 * E0);
    const auto out = impact_map({t0, y0}, eps, forcing);
    const Mat2 M = impact_map_jacobian({t0, y0}, eps, forcing, JacobianMode::analytic);
    // Conjugate by E = -y^2/2 (dE = -y dy) on both sides.
    return {M.m00, -M.m01 / y0, -out.y_bar * M.m10, (out.y_bar / y0) * M.m11};
}

Mat2 scaled_map_jacobian(const ScaledMapSpec& spec, double phi, double I,
                         const ForcingSpec& forcing, JacobianMode mode) {
    if (mode == JacobianMode::finite_difference) {
        auto f = [&](Vec2 p) {
            const auto out = scaled_map(spec, p.a, p.b, forcing);
            return Vec2{out.phi_bar, out.I_bar};
        };
        return fd_jacobian(f, {phi, I}, 1.0, std::max(1.0, std::abs(I)));
    }
    const double s = std::sqrt(-spec.E0_star);
    const Mat2 M = impact_map_energy_jacobian(phi, s * I, spec.epsilon, forcing,
                                              JacobianMode::analytic);
    return {M.m00, s * M.m01, M.m10 / s, M.m11};
}

Mat2 jacobian(MapId map_id, const Vec2& point, double eps, const ForcingSpec& forcing,
              JacobianMode mode, const ScaledMapSpec* spec) {
    switch (map_id) {
        case MapId::half_plus:
            return half_map_plus_jacobian({point.a, point.b}, eps, forcing);
        case MapId::half_minus:
            return half_map_minus_jacobian({point.a, point.b}, eps, forcing);
        case MapId::impact:
            return impact_map_jacobian({point.a, point.b}, eps, forcing, mode);
        case MapId::impact_energy:
            return impact_map_energy_jacobian(point.a, point.b, eps, forcing, mode);
        case MapId::scaled:
            if (!spec) throw std::invalid_argument("jacobian: scaled map needs a ScaledMapSpec");
            return scaled_map_jacobian(*spec, point.a, point.b, forcing, mode);
    }
    throw std::invalid_argument("jacobian: unknown map id");
}

MapId map_id_from_string(const std::string& name) {
    if (name == "half_plus") return MapId::half_plus;
    if (name == "half_minus") return MapId::half_minus;
    if (name == "impact") return MapId::impact;
    if (name == "impact_energy") return MapId::impact_energy;
    if (name == "scaled") return MapId::scaled;
    throw std::invalid_argument("unknown map id: " + name);
}

}  // namespace impactkam
