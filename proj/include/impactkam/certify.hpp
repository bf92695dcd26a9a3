#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "impactkam/dynamics.hpp"
#include "impactkam/kam.hpp"
#include "impactkam/maps.hpp"

namespace impactkam {

/// Closed curve on the section in (t0, y0) coordinates, stored as the
/// graph-like parametrization t(theta) = theta + offset(theta),
/// y(theta) = radius(theta).  Band membership queries invert the angle map
/// by Newton iteration and evaluate trigonometrically, so no interpolation
/// error enters breach detection.
class SectionCurve {
public:
    SectionCurve(PeriodicFn offset, PeriodicFn radius)
        : offset_(std::move(offset)), radius_(std::move(radius)) {}

    static SectionCurve flat(double y, int order = 4);

    /// Converged scaled-map curve pulled back to (t0, y0).
    static SectionCurve from_scaled(const CurveParametrization& curve,
                                    const ScaledMapSpec& spec);

    double y_at_angle(double t) const;
    double y_at_theta(double theta) const { return radius_.eval(theta); }
    double t_at_theta(double theta) const { return theta + offset_.eval(theta); }

    double min_y() const;
    double max_y() const;

    const PeriodicFn& offset() const { return offset_; }
    const PeriodicFn& radius() const { return radius_; }

private:
    PeriodicFn offset_;
    PeriodicFn radius_;
};

// --- structural audits -------------------------------------------------------

/// max |det DF - 1| over the grid (t values x y0 values).  The energy map
/// is symplectic so its defect sits at rounding level; the raw (t0, y0)
/// chart is not, which this same functional exposes.
double check_symplectic(MapId map_id, std::vector<double> t_grid, std::vector<double> y_grid,
                        double eps, const ForcingSpec& forcing,
                        JacobianMode mode = JacobianMode::analytic);

/// Loop functional | (1/1) oint (E1(t0) d t1/d t0 - E0) dt0 | on the circle
/// E0 = const, via trapezoid quadrature on n_quad nodes (spectral here).
/// Exactness of the energy-coordinate map drives it to the quadrature
/// floor; evaluated for MapId::impact it uses the y0 dt0 form instead and
/// stays materially nonzero.
double check_exactness(MapId map_id, double E0, double eps, const ForcingSpec& forcing,
                       int n_quad);

struct TauStarBounds {
    double worst_ratio = 0.0;     // max |tau_star| |y0| / (32 p_tilde)
    double decay_exponent = 0.0;  // log-log slope of max_t |tau_star| vs y0
    std::vector<double> y_values;
    std::vector<double> max_tau_star;
};

TauStarBounds check_tau_star_bounds(double eps, const ForcingSpec& forcing,
                                    std::vector<double> y_grid, std::vector<double> t_grid);

// --- confinement -------------------------------------------------------------

struct ConfinementTrial {
    double t0 = 0.0;
    double y0 = 0.0;
    long impacts_survived = 0;
    double min_y = 0.0;
    double max_y = 0.0;
    bool breached = false;
    bool escaped = false;  // DomainEscape recorded, not fatal
};

struct ConfinementReport {
    std::vector<ConfinementTrial> trials;
    std::uint64_t seed = 0;
    long n_impacts = 0;
    int breach_count = 0;
    int escape_count = 0;
    double band_min_gap = 0.0;         // min over angles of outer - inner
    double inner_invariance_defect = 0.0;
    double outer_invariance_defect = 0.0;
};

struct ConfinementSettings {
    int n_trials = 64;
    long n_impacts = 100000;
    std::uint64_t seed = 0;
    int workers = 1;
    /// Called after each finished trial with (done, total).
    std::function<void(int, int)> progress;
    /// Skip the curve-invariance precheck (used by the negative control,
    /// whose band is deliberately not invariant).
    bool skip_invariance_check = false;
};

/// Iterate the impact map from seeded starts strictly between the curves;
/// breached = true iff some iterate's y0 exits the band at its own angle.
/// Deterministic for a fixed seed and configuration; trials are independent
/// and run on a small worker pool.
ConfinementReport confinement_run(const SectionCurve& inner, const SectionCurve& outer,
                                  double eps, const ForcingSpec& forcing,
                                  const ConfinementSettings& settings);

/// Invariance re-check used at export time: max over a theta grid of the
/// distance between the image of a curve point and the curve at the image
/// angle.
double curve_invariance_defect(const SectionCurve& curve, double eps,
                               const ForcingSpec& forcing, int n_samples = 256);

}  // namespace impactkam
