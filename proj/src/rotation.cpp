#include "impactkam/rotation.hpp"

#include <cmath>
#include <stdexcept>

#include "impactkam/errors.hpp"
#include "impactkam/linalg.hpp"

namespace impactkam {

namespace {

double dist_to_integer(double x) {
    return std::abs(x - std::nearbyint(x));
}

double margin_at(double x, double nu, long q) {
    return std::pow(double(q), nu) * dist_to_integer(double(q) * x);
}

}  // namespace

DiophantineMargin diophantine_margin(double omega, double nu, long q_max) {
    if (q_max < 1) throw std::invalid_argument("diophantine_margin: q_max must be >= 1");
    const double x = omega / kTwoPi;

    DiophantineMargin best{margin_at(x, nu, 1), 1};
    // Walk the continued-fraction convergent denominators of the fractional
    // part; best approximations of the second kind live exactly there.
    long q_prev = 0, q_cur = 1;  // q_{-1}, q_0
    double rem = x - std::floor(x);
    while (q_cur <= q_max) {
        const double m = margin_at(x, nu, q_cur);
        if (m < best.gamma_best) best = {m, q_cur};
        if (rem < 1e-15) break;  // rational within double precision
        rem = 1.0 / rem;
        const double a = std::floor(rem);
        rem -= a;
        if (a > 9e17 / double(q_cur)) break;  // overflow guard
        const long q_next = static_cast<long>(a) * q_cur + q_prev;
        q_prev = q_cur;
        q_cur = q_next;
    }
    return best;
}

DiophantineMargin diophantine_margin_brute(double omega, double nu, long q_max) {
    if (q_max < 1) throw std::invalid_argument("diophantine_margin_brute: q_max must be >= 1");
    const double x = omega / kTwoPi;
    DiophantineMargin best{margin_at(x, nu, 1), 1};
    for (long q = 2; q <= q_max; ++q) {
        const double m = margin_at(x, nu, q);
        if (m < best.gamma_best) best = {m, q};
    }
    return best;
}

FrequencySpec make_frequency_spec(double omega, double nu, long q_max) {
    const auto margin = diophantine_margin(omega, nu, q_max);
    return {omega, margin.gamma_best, nu, q_max};
}

RotationEstimate rotation_number(const std::function<double()>& next_angle, double start_angle,
                                 int n_iter, BirkhoffWeight weight) {
    if (n_iter < 2) throw std::invalid_argument("rotation_number: need at least 2 iterates");

    std::vector<double> increments(static_cast<size_t>(n_iter));
    double prev = start_angle;
    for (int n = 0; n < n_iter; ++n) {
        const double t = next_angle();
        increments[static_cast<size_t>(n)] = t - prev;
        prev = t;
    }

    auto weighted_mean = [&](int count) {
        double sw = 0.0, swx = 0.0;
        double cw = 0.0, cwx = 0.0;  // Kahan compensations
        for (int n = 0; n < count; ++n) {
            double w = 1.0;
            if (weight == BirkhoffWeight::bump) {
                const double s = (double(n) + 1.0) / (double(count) + 1.0);
                w = std::exp(-1.0 / (s * (1.0 - s)));
            }
            double term = w - cw;
            double tmp = sw + term;
            cw = (tmp - sw) - term;
            sw = tmp;

            term = w * increments[static_cast<size_t>(n)] - cwx;
            tmp = swx + term;
            cwx = (tmp - swx) - term;
            swx = tmp;
        }
        return swx / sw;
    };

    const double full = weighted_mean(n_iter);
    const double half = weighted_mean(n_iter / 2);
    return {full, std::abs(full - half)};
}

std::vector<LadderRung> frequency_ladder(double eps, double a0, double omega0, int k_min,
                                         int k_max) {
    if (std::abs(a0 * eps) >= 0.5)
        throw std::invalid_argument("frequency_ladder: |a0 * eps| must stay below 1/2");
    std::vector<LadderRung> rungs;
    const double factor = (1.0 - a0 * a0 * eps * eps) / 4.0;
    for (int k = k_min; k <= k_max; ++k) {
        LadderRung r;
        r.k = k;
        r.omega_k = omega0 + kTwoPi * double(k);
        r.y0_star = r.omega_k * factor;
        r.usable = r.y0_star > 5.0;
        rungs.push_back(r);
    }
    return rungs;
}

}  // namespace impactkam
