#pragma once

#include <optional>
#include <string>
#include <vector>

#include "impactkam/errors.hpp"
#include "impactkam/fourier.hpp"
#include "impactkam/linalg.hpp"

namespace impactkam {

/// Exact-symplectic annulus map supplied as callable-with-Jacobian.  The
/// first component of apply() must be a lift (no angle wrapping): values the
/// solver feeds back differ from the previous output by about the rotation
/// amount.  Implementations throw DomainEscape when the point leaves their
/// validity region.
class AnnulusMap {
public:
    virtual ~AnnulusMap() = default;
    virtual Vec2 apply(const Vec2& p) const = 0;
    virtual Mat2 jacobian(const Vec2& p) const = 0;
};

/// Annulus map with an invertible twist alpha(I); lets the solver build its
/// default initial circle I = alpha^{-1}(omega).
class TwistedAnnulusMap : public AnnulusMap {
public:
    virtual double alpha(double I) const = 0;
    virtual double alpha_prime(double I) const = 0;
    virtual double alpha_inverse(double omega) const = 0;
};

/// Embedding of a closed curve isotopic to a horizontal circle,
///   phi(theta) = (theta + phi_part(theta), I_part(theta)),
/// intended to satisfy F(phi(theta)) = phi(theta + omega).
struct CurveParametrization {
    PeriodicFn phi_part;
    PeriodicFn I_part;
    double omega = 0.0;

    Vec2 eval(double theta) const {
        return {theta + phi_part.eval(theta), I_part.eval(theta)};
    }
};

/// Flat circle I = const as a starting parametrization.
CurveParametrization flat_circle(double I, double omega, int order);

/// Intermediate objects of one quasi-Newton step, kept for diagnostics:
/// invariance error e, metric Omega = (phi')^T phi', torsion-like average A,
/// and the scalar corrections a, b solving the cohomological equations.
struct KamStepWorkspace {
    PeriodicFn e_phi;
    PeriodicFn e_I;
    PeriodicFn Omega;
    PeriodicFn A;
    PeriodicFn a;
    PeriodicFn b;
    double avgA = 0.0;
    double error_norm = 0.0;
    double deriv_error_norm = 0.0;
    double correction_norm = 0.0;
    /// Mean of the RHS of the a-equation before normalization; its size is
    /// the measured exactness defect of the supplied map.
    double exactness_defect = 0.0;
};

enum class KamVerdict { converged, diverged, small_divisor_fail, stalled };

std::string to_string(KamVerdict v);

struct KamIteration {
    double error_norm = 0.0;
    double deriv_error_norm = 0.0;
    double avgA = 0.0;             // NaN when no step was taken
    double correction_norm = 0.0;  // NaN when no step was taken
};

struct KamReport {
    std::vector<KamIteration> iterations;
    KamVerdict verdict = KamVerdict::stalled;
    bool quadratic_decay = false;
    double final_error = 0.0;
    double tol = 0.0;
    /// Rotation number of the converged curve measured by iterating the map
    /// (lifted advance per iterate); NaN when not computed.
    double rotation_check = 0.0;
    /// Analyticity width fitted from the coefficient decay of the curve.
    double fitted_strip_width = 0.0;
    std::string failure_message;
};

struct KamSettings {
    int order = 128;       // Fourier truncation of the curve
    int max_iter = 30;
    double tol = 0.0;      // 0 selects 1e-11 * max(1, |omega|)
    double avg_a_floor = 0.0;  // 0 selects 1e-4 |<A>| of the first iterate
    double divisor_floor = 1e-12;
    bool rotation_check = true;
    int rotation_iters = 4096;
};

/// Invariance error e(theta) = F(phi(theta)) - phi(theta + omega), returned
/// as PeriodicFns built from samples on the 4N grid.  The angular component
/// is assembled from lifts, so no branch cuts contaminate the coefficients.
std::pair<PeriodicFn, PeriodicFn> invariance_error(const AnnulusMap& F,
                                                   const CurveParametrization& phi);

/// One quasi-Newton correction: solves the two cohomological equations for
/// the tangential/normal corrections (a, b) and returns phi + a phi' +
/// b Omega^{-1} J phi'.  Throws DegenerateAverage when |<A>| is below the
/// floor, and propagates SmallDivisorBreakdown / DomainEscape.
std::pair<CurveParametrization, KamStepWorkspace> kam_step(const AnnulusMap& F,
                                                           const CurveParametrization& phi,
                                                           const KamSettings& settings = {});

struct KamSolveResult {
    CurveParametrization curve;
    KamReport report;
};

/// Failure carrying the diagnostic history of the attempted solve.
class CurveSolveFailure : public NotConverged {
public:
    CurveSolveFailure(const std::string& what, KamReport r)
        : NotConverged(what), report(std::move(r)) {}
    KamReport report;
};

/// Quasi-Newton outer loop: iterates kam_step until sup|e| < tol.
/// Divergence is declared after 3 consecutive error increases or on
/// DomainEscape; small-divisor breakdown and a degenerate average are
/// reported with their own verdicts.  Throws CurveSolveFailure on any
/// non-converged outcome.
KamSolveResult solve_curve(const AnnulusMap& F, double omega,
                           std::optional<CurveParametrization> phi_init,
                           const KamSettings& settings = {});

}  // namespace impactkam
