#pragma once

#include <cmath>
#include <numbers>

#include "impactkam/dynamics.hpp"
#include "impactkam/kam.hpp"

namespace impactkam {

/// The localized and scaled impact map as a KAM-ready annulus map.  The
/// angular output is the lift t_bar = t0 + alpha + eps f_t0, so no wrapping
/// takes place anywhere in the chain.
class ScaledImpactMap final : public TwistedAnnulusMap {
public:
    ScaledImpactMap(ScaledMapSpec spec, const ForcingSpec& forcing)
        : spec_(spec), forcing_(&forcing) {}

    static ScaledImpactMap for_ladder_rung(double y0_star, double eps,
                                           const ForcingSpec& forcing) {
        return ScaledImpactMap(ScaledMapSpec::from_y0_star(y0_star, eps), forcing);
    }

    Vec2 apply(const Vec2& p) const override {
        const auto out = scaled_map(spec_, p.a, p.b, *forcing_);
        return {out.phi_bar, out.I_bar};
    }

    Mat2 jacobian(const Vec2& p) const override {
        return scaled_map_jacobian(spec_, p.a, p.b, *forcing_, jacobian_mode);
    }

    double alpha(double I) const override {
        return spec_.alpha(I) / twist_denominator();
    }

    double alpha_prime(double I) const override {
        const double y0 = spec_.y0_of_I(I);
        return -2.0 * std::numbers::sqrt2 * spec_.y0_star / (twist_denominator() * y0);
    }

    double alpha_inverse(double omega) const override {
        const double y0 = 0.25 * omega * twist_denominator();
        return spec_.I_of_y0(y0);
    }

    const ScaledMapSpec& spec() const { return spec_; }
    const ForcingSpec& forcing() const { return *forcing_; }

    /// Curve point mapped back to section coordinates (t0, y0).
    Vec2 to_section(double theta, const CurveParametrization& curve) const {
        const Vec2 p = curve.eval(theta);
        return {p.a, spec_.y0_of_I(p.b)};
    }

    JacobianMode jacobian_mode = JacobianMode::analytic;

private:
    double twist_denominator() const {
        const double a0e = forcing_->a0() * spec_.epsilon;
        return 1.0 - a0e * a0e;
    }

    ScaledMapSpec spec_;
    const ForcingSpec* forcing_;
};

}  // namespace impactkam
