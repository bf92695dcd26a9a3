#include "impactkam/certify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace impactkam {

SectionCurve SectionCurve::flat(double y, int order) {
    PeriodicFn radius(order);
    radius += PeriodicFn::constant(y);
    return SectionCurve(PeriodicFn(order), radius);
}

SectionCurve SectionCurve::from_scaled(const CurveParametrization& curve,
                                       const ScaledMapSpec& spec) {
    const int n = std::max({curve.phi_part.order(), curve.I_part.order(), 1});
    const int m = 4 * n;
    const auto I_values = curve.I_part.sample(m);
    std::vector<double> y_values(I_values.size());
    for (size_t j = 0; j < I_values.size(); ++j) y_values[j] = spec.y0_of_I(I_values[j]);
    return SectionCurve(curve.phi_part, PeriodicFn::from_samples(y_values, n));
}

double SectionCurve::y_at_angle(double t) const {
    // Invert theta + offset(theta) = t; the offset derivative is small, so
    // plain Newton from theta = t settles in a few steps.
    const PeriodicFn d = offset_.derivative();
    double theta = t;
    for (int it = 0; it < 50; ++it) {
        const double r = theta + offset_.eval(theta) - t;
        const double slope = 1.0 + d.eval(theta);
        const double step = r / slope;
        theta -= step;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(t))) return radius_.eval(theta);
    }
    throw NoConvergence("SectionCurve::y_at_angle: angle inversion stalled");
}

double SectionCurve::min_y() const {
    const int m = 4 * std::max(radius_.order(), 1);
    double v = 1e300;
    for (double y : radius_.sample(m)) v = std::min(v, y);
    return v;
}

double SectionCurve::max_y() const {
    const int m = 4 * std::max(radius_.order(), 1);
    double v = -1e300;
    for (double y : radius_.sample(m)) v = std::max(v, y);
    return v;
}

double check_symplectic(MapId map_id, std::vector<double> t_grid, std::vector<double> y_grid,
                        double eps, const ForcingSpec& forcing, JacobianMode mode) {
    double worst = 0.0;
    for (double t : t_grid) {
        for (double y : y_grid) {
            Vec2 p{t, y};
            if (map_id == MapId::impact_energy) p = {t, -0.5 * y * y};
            const Mat2 J = jacobian(map_id, p, eps, forcing, mode);
            worst = std::max(worst, std::abs(J.det() - 1.0));
        }
    }
    return worst;
}

double check_exactness(MapId map_id, double E0, double eps, const ForcingSpec& forcing,
                       int n_quad) {
    if (n_quad < 2) throw std::invalid_argument("check_exactness: n_quad must be >= 2");
    if (!(E0 < 0.0)) throw std::invalid_argument("check_exactness: E0 must be negative");
    const double y0 = std::sqrt(-2.0 * E0);

    double acc = 0.0, comp = 0.0;
    for (int j = 0; j < n_quad; ++j) {
        const double t = kTwoPi * double(j) / double(n_quad);
        double term = 0.0;
        if (map_id == MapId::impact_energy) {
            const auto out = impact_map_energy(t, E0, eps, forcing);
            const Mat2 J = impact_map_energy_jacobian(t, E0, eps, forcing);
            term = out.E_bar * J.m00 - E0;
        } else if (map_id == MapId::impact) {
            const auto out = impact_map({t, y0}, eps, forcing);
            const Mat2 J = impact_map_jacobian({t, y0}, eps, forcing);
            term = out.y_bar * J.m00 - y0;
        } else {
            throw std::invalid_argument("check_exactness: unsupported map id");
        }
        const double c = term - comp;
        const double s = acc + c;
        comp = (s - acc) - c;
        acc = s;
    }
    return std::abs(acc * kTwoPi / double(n_quad));
}

TauStarBounds check_tau_star_bounds(double eps, const ForcingSpec& forcing,
                                    std::vector<double> y_grid, std::vector<double> t_grid) {
    TauStarBounds out;
    const double bound = 32.0 * forcing.p_tilde();
    for (double y : y_grid) {
        if (!(y > 5.0))
            throw std::invalid_argument("check_tau_star_bounds: y grid must stay above 5");
        double worst_here = 0.0;
        for (double t : t_grid) {
            const auto dec = impact_time_plus(t, y, eps, forcing);
            worst_here = std::max(worst_here, std::abs(dec.tau_star));
            out.worst_ratio = std::max(out.worst_ratio, std::abs(dec.tau_star) * y / bound);
        }
        out.y_values.push_back(y);
        out.max_tau_star.push_back(worst_here);
    }
    if (out.y_values.size() >= 2 && eps > 0.0) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < out.y_values.size(); ++i) {
            const double lx = std::log(out.y_values[i]);
            const double ly = std::log(std::max(out.max_tau_star[i], 1e-300));
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        }
        const double n = double(out.y_values.size());
        out.decay_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return out;
}

double curve_invariance_defect(const SectionCurve& curve, double eps,
                               const ForcingSpec& forcing, int n_samples) {
    double worst = 0.0;
    for (int j = 0; j < n_samples; ++j) {
        const double theta = kTwoPi * double(j) / double(n_samples);
        const auto out = impact_map({curve.t_at_theta(theta), curve.y_at_theta(theta)}, eps,
                                    forcing);
        worst = std::max(worst, std::abs(out.y_bar - curve.y_at_angle(out.t_bar)));
    }
    return worst;
}

ConfinementReport confinement_run(const SectionCurve& inner, const SectionCurve& outer,
                                  double eps, const ForcingSpec& forcing,
                                  const ConfinementSettings& settings) {
    ConfinementReport report;
    report.seed = settings.seed;
    report.n_impacts = settings.n_impacts;

    // Band sanity: disjoint y ranges at every angle.
    {
        double min_gap = 1e300;
        const int m = 512;
        for (int j = 0; j < m; ++j) {
            const double t = kTwoPi * double(j) / double(m);
            min_gap = std::min(min_gap, outer.y_at_angle(t) - inner.y_at_angle(t));
        }
        report.band_min_gap = min_gap;
        if (!(min_gap > 0.0))
            throw std::invalid_argument("confinement_run: curves are not nested");
    }
    if (!settings.skip_invariance_check) {
        report.inner_invariance_defect = curve_invariance_defect(inner, eps, forcing);
        report.outer_invariance_defect = curve_invariance_defect(outer, eps, forcing);
    }

    // All initial conditions come from one seeded stream so the report is
    // reproducible regardless of scheduling.
    std::mt19937_64 rng(settings.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    report.trials.resize(static_cast<size_t>(settings.n_trials));
    for (auto& trial : report.trials) {
        const double t = kTwoPi * uniform(rng);
        double s = uniform(rng);
        s = std::min(std::max(s, 1e-9), 1.0 - 1e-9);  // strictly between
        const double lo = inner.y_at_angle(t);
        const double hi = outer.y_at_angle(t);
        trial.t0 = t;
        trial.y0 = lo + s * (hi - lo);
        trial.min_y = trial.max_y = trial.y0;
    }

    std::atomic<int> next_index{0};
    std::atomic<int> done_count{0};
    std::mutex progress_mutex;

    auto run_trial = [&](ConfinementTrial& trial) {
        double t = trial.t0;
        double y = trial.y0;
        for (long n = 0; n < settings.n_impacts; ++n) {
            ImpactMapOutput out;
            try {
                out = impact_map({t, y}, eps, forcing);
            } catch (const Error&) {
                trial.escaped = true;
                trial.breached = true;
                return;
            }
            t = out.t_bar;
            y = out.y_bar;
            trial.min_y = std::min(trial.min_y, y);
            trial.max_y = std::max(trial.max_y, y);
            trial.impacts_survived = n + 1;
            if (y <= inner.y_at_angle(t) || y >= outer.y_at_angle(t)) {
                trial.breached = true;
                return;
            }
        }
    };

    const int workers = std::max(1, settings.workers);
    auto worker = [&]() {
        while (true) {
            const int i = next_index.fetch_add(1);
            if (i >= settings.n_trials) return;
            run_trial(report.trials[static_cast<size_t>(i)]);
            const int done = ++done_count;
            if (settings.progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                settings.progress(done, settings.n_trials);
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const auto& trial : report.trials) {
        if (trial.breached) ++report.breach_count;
        if (trial.escaped) ++report.escape_count;
    }
    return report;
}

}  // namespace impactkam
