#include "impactkam/kam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace impactkam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CurveGrid {
    int m = 0;
    std::vector<double> theta;
    std::vector<double> u_phi, u_I;        // curve values
    std::vector<double> d_phi, d_I;        // derivative values
    std::vector<double> u_phi_p, u_I_p;    // curve at theta + omega
    std::vector<double> d_phi_p, d_I_p;    // derivative at theta + omega
    std::vector<double> e_phi, e_I;        // invariance error
    std::vector<Mat2> DF;                  // map Jacobian along the curve
    double error_norm = 0.0;
    double deriv_error_norm = 0.0;
};

double sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double grid_mean(const std::vector<double>& v) {
    double acc = 0.0, c = 0.0;
    for (double x : v) {
        const double t = x - c;
        const double s = acc + t;
        c = (s - acc) - t;
        acc = s;
    }
    return acc / double(v.size());
}

CurveGrid evaluate_on_grid(const AnnulusMap& F, const CurveParametrization& phi,
                           bool with_jacobian) {
    CurveGrid g;
    const int n = std::max(phi.phi_part.order(), phi.I_part.order());
    g.m = 4 * std::max(n, 1);
    g.theta.resize(static_cast<size_t>(g.m));
    for (int j = 0; j < g.m; ++j) g.theta[static_cast<size_t>(j)] = kTwoPi * double(j) / double(g.m);

    const double w = phi.omega;
    g.u_phi = phi.phi_part.sample(g.m);
    g.u_I = phi.I_part.sample(g.m);
    const PeriodicFn dphi = phi.phi_part.derivative();
    const PeriodicFn dI = phi.I_part.derivative();
    g.d_phi = dphi.sample(g.m);
    g.d_I = dI.sample(g.m);
    g.u_phi_p = phi.phi_part.shifted(w).sample(g.m);
    g.u_I_p = phi.I_part.shifted(w).sample(g.m);
    g.d_phi_p = dphi.shifted(w).sample(g.m);
    g.d_I_p = dI.shifted(w).sample(g.m);

    g.e_phi.resize(static_cast<size_t>(g.m));
    g.e_I.resize(static_cast<size_t>(g.m));
    if (with_jacobian) g.DF.resize(static_cast<size_t>(g.m));
    for (int j = 0; j < g.m; ++j) {
        const size_t k = static_cast<size_t>(j);
        const Vec2 p{g.theta[k] + g.u_phi[k], g.u_I[k]};
        const Vec2 q = F.apply(p);
        g.e_phi[k] = q.a - (g.theta[k] + w + g.u_phi_p[k]);
        g.e_I[k] = q.b - g.u_I_p[k];
        if (with_jacobian) g.DF[k] = F.jacobian(p);
    }
    g.error_norm = std::max(sup_abs(g.e_phi), sup_abs(g.e_I));

    const int order = std::max(n, 1);
    const PeriodicFn ephi_fn = PeriodicFn::from_samples(g.e_phi, order);
    const PeriodicFn eI_fn = PeriodicFn::from_samples(g.e_I, order);
    g.deriv_error_norm = std::max(sup_abs(ephi_fn.derivative().sample(g.m)),
                                  sup_abs(eI_fn.derivative().sample(g.m)));
    return g;
}

/// Least-squares slope of log|c_k| against k over the decaying coefficient
/// range; the negated slope estimates the analyticity strip width.
double fit_strip_width(const CurveParametrization& phi) {
    std::vector<double> ks, logs;
    const double floor_phi = 1e-14 * std::max(phi.phi_part.coeff_max(), 1e-300);
    const double floor_I = 1e-14 * std::max(phi.I_part.coeff_max(), 1e-300);
    for (int k = 1; k <= std::max(phi.phi_part.order(), phi.I_part.order()); ++k) {
        const double mag = std::max(std::abs(phi.phi_part.coeff(k)),
                                    std::abs(phi.I_part.coeff(k)));
        if (mag > std::max(floor_phi, floor_I) && mag > 1e-280) {
            ks.push_back(double(k));
            logs.push_back(std::log(mag));
        }
    }
    if (ks.size() < 3) return 0.0;
    double sk = 0, sl = 0, skk = 0, skl = 0;
    for (size_t i = 0; i < ks.size(); ++i) {
        sk += ks[i]; sl += logs[i]; skk += ks[i] * ks[i]; skl += ks[i] * logs[i];
    }
    const double nn = double(ks.size());
    const double slope = (nn * skl - sk * sl) / (nn * skk - sk * sk);
    return -slope;
}

bool quadratic_decay_flag(const std::vector<KamIteration>& iterations, double tol) {
    // Ratios log(err_{n+1}) / log(err_n) over the decaying segment: pairs of
    // quasi-Newton iterates that sit clearly above the convergence floor.
    // The pair off the supplied initial curve (n = 0) is excluded; that step
    // measures the initializer, not the err^2 law of the scheme.
    const double floor = 30.0 * tol;
    int in_band = 0, total = 0;
    for (size_t n = 1; n + 1 < iterations.size(); ++n) {
        const double e0 = iterations[n].error_norm;
        const double e1 = iterations[n + 1].error_norm;
        if (!(e0 > floor && e1 > floor)) continue;
        if (!(e1 < e0 && e0 < 0.5)) continue;
        ++total;
        const double r = std::log(e1) / std::log(e0);
        if (r >= 1.5 && r <= 2.5) ++in_band;
    }
    return total >= 1 && in_band == total;
}

}  // namespace

std::string to_string(KamVerdict v) {
    switch (v) {
        case KamVerdict::converged: return "converged";
        case KamVerdict::diverged: return "diverged";
        case KamVerdict::small_divisor_fail: return "small_divisor_fail";
        case KamVerdict::stalled: return "stalled";
    }
    return "unknown";
}

CurveParametrization flat_circle(double I, double omega, int order) {
    CurveParametrization phi{PeriodicFn(order), PeriodicFn(order), omega};
    phi.I_part += PeriodicFn::constant(I);
    return phi;
}

std::pair<PeriodicFn, PeriodicFn> invariance_error(const AnnulusMap& F,
                                                   const CurveParametrization& phi) {
    const CurveGrid g = evaluate_on_grid(F, phi, false);
    const int order = std::max({phi.phi_part.order(), phi.I_part.order(), 1});
    return {PeriodicFn::from_samples(g.e_phi, order), PeriodicFn::from_samples(g.e_I, order)};
}

std::pair<CurveParametrization, KamStepWorkspace> kam_step(const AnnulusMap& F,
                                                           const CurveParametrization& phi,
                                                           const KamSettings& settings) {
    const CurveGrid g = evaluate_on_grid(F, phi, true);
    const int m = g.m;
    const int order = std::max({phi.phi_part.order(), phi.I_part.order(), 1});
    const double w = phi.omega;

    // J = [[0, 1], [-1, 0]] throughout, the convention under which the
    // exactness identity reads <(phi_+')^T J e> = -<e_phi' e_I>.
    std::vector<double> Omega(static_cast<size_t>(m)), Omega_p(static_cast<size_t>(m));
    std::vector<double> A(static_cast<size_t>(m)), P(static_cast<size_t>(m)),
        Q(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const size_t k = static_cast<size_t>(j);
        const double Ta = 1.0 + g.d_phi[k], Tb = g.d_I[k];
        const double Sa = 1.0 + g.d_phi_p[k], Sb = g.d_I_p[k];
        Omega[k] = Ta * Ta + Tb * Tb;
        Omega_p[k] = Sa * Sa + Sb * Sb;
        const Vec2 JT{Tb, -Ta};
        const Vec2 DFJT = g.DF[k] * JT;
        A[k] = (Sa * DFJT.a + Sb * DFJT.b) / (Omega[k] * Omega_p[k]);
        P[k] = Sa * g.e_I[k] - Sb * g.e_phi[k];
        Q[k] = (Sa * g.e_phi[k] + Sb * g.e_I[k]) / Omega_p[k];
    }

    const double avgA = grid_mean(A);
    const double floor = settings.avg_a_floor > 0.0 ? settings.avg_a_floor
                                                    : 1e-4 * std::abs(avgA);
    if (std::abs(avgA) < floor || avgA == 0.0) throw DegenerateAverage(avgA, floor);

    const double meanP = grid_mean(P);
    // <(phi_+')^T J e> = -<e_phi' e_I> holds when F is exact symplectic; the
    // residual of that identity is the measured exactness defect.
    const PeriodicFn e_phi_fn = PeriodicFn::from_samples(g.e_phi, order);
    const PeriodicFn e_I_fn = PeriodicFn::from_samples(g.e_I, order);
    double exactness_defect;
    {
        const auto de_phi = e_phi_fn.derivative().sample(m);
        std::vector<double> cross(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j)
            cross[static_cast<size_t>(j)] = de_phi[static_cast<size_t>(j)] * g.e_I[static_cast<size_t>(j)];
        exactness_defect = std::abs(meanP + grid_mean(cross));
    }
    std::vector<double> rhs_b(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) rhs_b[static_cast<size_t>(j)] = meanP - P[static_cast<size_t>(j)];
    PeriodicFn Rb = PeriodicFn::from_samples(rhs_b, order);
    Rb -= PeriodicFn::constant(Rb.average());
    const CohomologySettings coh{settings.divisor_floor, 1e-9};
    const PeriodicFn b_tilde = solve_cohomological(Rb, w, coh);
    const std::vector<double> bt = b_tilde.sample(m);

    std::vector<double> Abt(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) Abt[static_cast<size_t>(j)] = A[static_cast<size_t>(j)] * bt[static_cast<size_t>(j)];
    const double mean_b = -(grid_mean(Abt) + grid_mean(Q)) / avgA;

    std::vector<double> b(static_cast<size_t>(m)), rhs_a(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const size_t k = static_cast<size_t>(j);
        b[k] = mean_b + bt[k];
        rhs_a[k] = A[k] * b[k] + Q[k];
    }
    PeriodicFn Ra = PeriodicFn::from_samples(rhs_a, order);
    Ra -= PeriodicFn::constant(Ra.average());
    const PeriodicFn a_fn = solve_cohomological(Ra, w, coh);
    const std::vector<double> a = a_fn.sample(m);

    std::vector<double> d_phi_new(static_cast<size_t>(m)), d_I_new(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const size_t k = static_cast<size_t>(j);
        const double Ta = 1.0 + g.d_phi[k], Tb = g.d_I[k];
        d_phi_new[k] = a[k] * Ta + b[k] * Tb / Omega[k];
        d_I_new[k] = a[k] * Tb - b[k] * Ta / Omega[k];
    }
    const PeriodicFn delta_phi = PeriodicFn::from_samples(d_phi_new, order);
    const PeriodicFn delta_I = PeriodicFn::from_samples(d_I_new, order);

    CurveParametrization next{phi.phi_part + delta_phi, phi.I_part + delta_I, w};

    KamStepWorkspace ws{e_phi_fn,
                        e_I_fn,
                        PeriodicFn::from_samples(Omega, order),
                        PeriodicFn::from_samples(A, order),
                        a_fn,
                        PeriodicFn::from_samples(b, order),
                        avgA,
                        g.error_norm,
                        g.deriv_error_norm,
                        std::max(sup_abs(d_phi_new), sup_abs(d_I_new)),
                        exactness_defect};
    return {std::move(next), std::move(ws)};
}

KamSolveResult solve_curve(const AnnulusMap& F, double omega,
                           std::optional<CurveParametrization> phi_init,
                           const KamSettings& settings) {
    KamSettings s = settings;
    if (!phi_init) {
        const auto* twisted = dynamic_cast<const TwistedAnnulusMap*>(&F);
        if (!twisted)
            throw std::invalid_argument(
                "solve_curve: map exposes no twist data, supply an initial curve");
        phi_init = flat_circle(twisted->alpha_inverse(omega), omega, s.order);
    }
    if (s.tol <= 0.0) s.tol = 1e-11 * std::max(1.0, std::abs(omega));
    double first_avgA = 0.0;

    CurveParametrization phi = std::move(*phi_init);
    phi.omega = omega;
    phi.phi_part = phi.phi_part.truncated(s.order);
    phi.I_part = phi.I_part.truncated(s.order);

    KamReport report;
    report.tol = s.tol;

    auto fail = [&](KamVerdict v, const std::string& msg) -> KamSolveResult {
        report.verdict = v;
        report.failure_message = msg;
        report.quadratic_decay = quadratic_decay_flag(report.iterations, s.tol);
        throw CurveSolveFailure("solve_curve: " + msg, report);
    };

    int grow_count = 0;
    double prev_err = std::numeric_limits<double>::infinity();
    bool converged = false;

    for (int it = 0; it <= s.max_iter; ++it) {
        CurveGrid g;
        try {
            g = evaluate_on_grid(F, phi, false);
        } catch (const DomainEscape& e) {
            return fail(KamVerdict::diverged, std::string("domain escape: ") + e.what());
        }
        report.iterations.push_back({g.error_norm, g.deriv_error_norm, kNaN, kNaN});
        report.final_error = g.error_norm;

        if (g.error_norm < s.tol) {
            converged = true;
            break;
        }
        if (!std::isfinite(g.error_norm))
            return fail(KamVerdict::diverged, "invariance error is not finite");
        grow_count = g.error_norm > prev_err ? grow_count + 1 : 0;
        if (grow_count >= 3)
            return fail(KamVerdict::diverged, "error grew for 3 consecutive iterations");
        prev_err = g.error_norm;
        if (it == s.max_iter) break;

        // Graph-like parametrization guard: 1 + phi_part' must stay away
        // from zero for the tangent frame to exist.
        const auto dphi = phi.phi_part.derivative().sample(g.m);
        double min_t = std::numeric_limits<double>::infinity();
        for (double d : dphi) min_t = std::min(min_t, std::abs(1.0 + d));
        if (min_t < 0.05)
            return fail(KamVerdict::diverged, "curve lost its graph-like parametrization");

        try {
            KamSettings step_settings = s;
            if (s.avg_a_floor <= 0.0 && first_avgA != 0.0)
                step_settings.avg_a_floor = 1e-4 * std::abs(first_avgA);
            auto [next, ws] = kam_step(F, phi, step_settings);
            if (first_avgA == 0.0) first_avgA = ws.avgA;
            report.iterations.back().avgA = ws.avgA;
            report.iterations.back().correction_norm = ws.correction_norm;
            phi = std::move(next);
        } catch (const SmallDivisorBreakdown& e) {
            return fail(KamVerdict::small_divisor_fail, e.what());
        } catch (const DomainEscape& e) {
            return fail(KamVerdict::diverged, std::string("domain escape: ") + e.what());
        }
    }

    if (!converged)
        return fail(KamVerdict::stalled, "iteration budget exhausted before reaching tol");

    report.verdict = KamVerdict::converged;
    report.quadratic_decay = quadratic_decay_flag(report.iterations, s.tol);
    report.fitted_strip_width = fit_strip_width(phi);
    report.rotation_check = kNaN;
    if (s.rotation_check) {
        Vec2 p = phi.eval(0.0);
        double sw = 0.0, swx = 0.0;
        const int n = s.rotation_iters;
        for (int k = 0; k < n; ++k) {
            const Vec2 q = F.apply(p);
            const double frac = (double(k) + 1.0) / (double(n) + 1.0);
            const double wgt = std::exp(-1.0 / (frac * (1.0 - frac)));
            sw += wgt;
            swx += wgt * (q.a - p.a);
            p = q;
        }
        report.rotation_check = swx / sw;
    }

    return {std::move(phi), std::move(report)};
}

}  // namespace impactkam
