#pragma once

#include <string>

#include "impactkam/forcing.hpp"
#include "impactkam/linalg.hpp"

namespace impactkam {

/// Velocity floor below which the section maps are rejected as grazing.
inline constexpr double kGrazingFloor = 1e-3;

struct PhasePoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
};

/// Point on the upper section x = 0, y > 0.  t0 is kept as a lift; reduce
/// mod 2 pi only for bookkeeping.
struct ImpactPoint {
    double t0 = 0.0;
    double y0 = 0.0;
};

/// Impact time split tau = tau0 + eps * tau_star, where tau0 is the dominant
/// part 2 (y - eps P1(t)) / (1 -+ a0 eps) and tau_star the bounded
/// correction (|tau_star| <= 32 p_tilde / |y| in the proven regime).
struct ImpactTimeDecomposition {
    double tau = 0.0;
    double tau0 = 0.0;
    double tau_star = 0.0;
};

enum class RootMethod { newton, fixed_point };

/// Full impact map output with its perturbative decomposition:
///   t_bar = t0 + alpha + eps f_t0,   y_bar = y0 + eps f_y0,
/// both identities holding exactly by construction.
struct ImpactMapOutput {
    double t_bar = 0.0;
    double y_bar = 0.0;
    double alpha = 0.0;
    double f_t0 = 0.0;
    double f_y0 = 0.0;
};

struct EnergyMapOutput {
    double t_bar = 0.0;
    double E_bar = 0.0;
    double alpha = 0.0;
    double f_t0 = 0.0;
    double f_E0 = 0.0;
};

/// Localization data around a reference amplitude y0_star > 5:
///   E0_star = -y0_star^2/2,  I0_star = -y0_star/sqrt(2),
/// with the action rescaled by sqrt(-E0_star) so that the twist is order one
/// uniformly in the amplitude.
struct ScaledMapSpec {
    double y0_star = 0.0;
    double E0_star = 0.0;
    double I0_star = 0.0;
    double epsilon = 0.0;
    /// Real restriction |I - I0_star| < domain_radius accepted by the map.
    /// The default covers the numerically relevant band around the circle.
    double domain_radius = 0.0;

    static ScaledMapSpec from_y0_star(double y0_star, double epsilon);

    double y0_of_I(double I) const;   // y0(I) = sqrt(-sqrt(2) y0_star I)
    double I_of_y0(double y0) const;  // inverse of the above
    double alpha(double I) const;     // 4 y0(I) / (1 - a0^2 eps^2) needs a0: see ScaledImpactMap
};

struct ScaledMapOutput {
    double phi_bar = 0.0;
    double I_bar = 0.0;
    double alpha = 0.0;
    double f_phi = 0.0;
    double f_I = 0.0;
};

// --- flows -----------------------------------------------------------------

/// Closed-form right flow (branch x > 0):
///   x(tau) = x0 + tau y0 - tau^2/2 + eps P2(tau, t0)
PhasePoint flow_right(const PhasePoint& p, double tau, double eps, const ForcingSpec& forcing);

/// Closed-form left flow (branch x < 0), sign-mirrored parabola.
PhasePoint flow_left(const PhasePoint& p, double tau, double eps, const ForcingSpec& forcing);

// --- impact times ----------------------------------------------------------

ImpactTimeDecomposition impact_time_plus(double t0, double y0, double eps,
                                         const ForcingSpec& forcing,
                                         RootMethod method = RootMethod::newton);

ImpactTimeDecomposition impact_time_minus(double t1, double y1, double eps,
                                          const ForcingSpec& forcing,
                                          RootMethod method = RootMethod::newton);

/// Residual of the scalar impact-time equation at tau (zero at the root).
double impact_residual_plus(double tau, double t0, double y0, double eps,
                            const ForcingSpec& forcing);
double impact_residual_minus(double tau, double t1, double y1, double eps,
                             const ForcingSpec& forcing);

// --- section maps ----------------------------------------------------------

/// Upper half map: (t0, y0) on Sigma+ to (t1, y1) on Sigma-.
ImpactPoint half_map_plus(const ImpactPoint& q, double eps, const ForcingSpec& forcing,
                          ImpactTimeDecomposition* tau_out = nullptr);

/// Lower half map: (t1, y1) on Sigma- back to Sigma+.
ImpactPoint half_map_minus(const ImpactPoint& q, double eps, const ForcingSpec& forcing,
                           ImpactTimeDecomposition* tau_out = nullptr);

ImpactMapOutput impact_map(const ImpactPoint& q, double eps, const ForcingSpec& forcing);

/// The impact map conjugated to time-energy coordinates (E = -y^2/2 < 0),
/// where it is exact symplectic.
EnergyMapOutput impact_map_energy(double t0, double E0, double eps, const ForcingSpec& forcing);

ScaledMapOutput scaled_map(const ScaledMapSpec& spec, double phi, double I,
                           const ForcingSpec& forcing);

// --- Jacobians ---------------------------------------------------------------

enum class JacobianMode { analytic, finite_difference };

enum class MapId { half_plus, half_minus, impact, impact_energy, scaled };

Mat2 half_map_plus_jacobian(const ImpactPoint& q, double eps, const ForcingSpec& forcing);
Mat2 half_map_minus_jacobian(const ImpactPoint& q, double eps, const ForcingSpec& forcing);
Mat2 impact_map_jacobian(const ImpactPoint& q, double eps, const ForcingSpec& forcing,
                         JacobianMode mode = JacobianMode::analytic);
Mat2 impact_map_energy_jacobian(double t0, double E0, double eps, const ForcingSpec& forcing,
                                JacobianMode mode = JacobianMode::analytic);
Mat2 scaled_map_jacobian(const ScaledMapSpec& spec, double phi, double I,
                         const ForcingSpec& forcing,
                         JacobianMode mode = JacobianMode::analytic);

/// Dispatcher used by the audit tooling; point is (t0,y0), (t0,E0) or
/// (phi,I) according to map_id.  The scaled variant requires spec.
Mat2 jacobian(MapId map_id, const Vec2& point, double eps, const ForcingSpec& forcing,
              JacobianMode mode, const ScaledMapSpec* spec = nullptr);

MapId map_id_from_string(const std::string& name);

}  // namespace impactkam
