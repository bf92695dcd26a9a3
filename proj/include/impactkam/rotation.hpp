#pragma once

#include <functional>
#include <vector>

namespace impactkam {

/// A target frequency with its verified Diophantine data:
/// |omega/2pi - p/q| >= gamma / q^nu for all q <= q_max.
struct FrequencySpec {
    double omega = 0.0;
    double gamma = 0.0;
    double nu = 2.0;
    long q_max = 100000;
};

struct DiophantineMargin {
    double gamma_best = 0.0;
    long worst_q = 1;
};

/// gamma_best = min_{1 <= q <= q_max} q^nu * dist(q * omega / 2pi, Z).
/// Evaluated over continued-fraction convergents, which is exact: the
/// minimum is always attained at a convergent denominator.
DiophantineMargin diophantine_margin(double omega, double nu, long q_max);

/// Brute-force counterpart, O(q_max); used as the oracle in tests.
DiophantineMargin diophantine_margin_brute(double omega, double nu, long q_max);

/// Checks the (gamma, nu) condition up to q_max and fills gamma with the
/// measured margin.
FrequencySpec make_frequency_spec(double omega, double nu = 2.0, long q_max = 100000);

struct RotationEstimate {
    double omega = 0.0;       // mean lifted-angle advance per iterate
    double error_bound = 0.0; // half-sample consistency estimate
};

enum class BirkhoffWeight { bump, plain };

/// Rotation number of a lifted circle/annulus map from the Birkhoff average
/// of the angle increments.  The advance function must return the lifted
/// angle of the next iterate given the current state and update the state.
/// With the bump weight the average converges super-polynomially on
/// quasi-periodic orbits.
RotationEstimate rotation_number(const std::function<double()>& next_angle, double start_angle,
                                 int n_iter, BirkhoffWeight weight = BirkhoffWeight::bump);

struct LadderRung {
    int k = 0;
    double omega_k = 0.0;
    double y0_star = 0.0;
    bool usable = true;  // false when y0_star <= 5 (filtered out)
};

/// Theorem-A frequency ladder omega_k = omega0 + 2 pi k with the matching
/// reference amplitudes y0_star = omega_k (1 - a0^2 eps^2) / 4.
std::vector<LadderRung> frequency_ladder(double eps, double a0, double omega0, int k_min,
                                         int k_max);

}  // namespace impactkam
