#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impactkam/fourier.hpp"

namespace impactkam {

/// The 2 pi periodic forcing p(t) = a0 + sum_k (a_k cos kt + b_k sin kt)
/// together with the derived chain of antiderivatives
///
///   P0 = p - a0,   P1' = P0,   P2' = P1   (<P1> = <P2> = 0),   Pm1 = P0',
///
/// and the bound p_tilde = max_j ||P_j||_rho used by the validity estimates.
class ForcingSpec {
public:
    ForcingSpec(double a0, std::span<const double> ak, std::span<const double> bk,
                double rho = 0.25);

    static ForcingSpec cosine(double amplitude = 1.0, double rho = 0.25) {
        const double a[] = {amplitude};
        return ForcingSpec(0.0, a, {}, rho);
    }

    double a0() const { return a0_; }
    double rho() const { return rho_; }
    double p_tilde() const { return p_tilde_; }

    const PeriodicFn& p() const { return p_; }
    const PeriodicFn& P0() const { return P0_; }
    const PeriodicFn& P1() const { return P1_; }
    const PeriodicFn& P2() const { return P2_; }
    const PeriodicFn& Pm1() const { return Pm1_; }

    double eval_p(double t) const { return p_.eval(t); }
    double eval_P0(double t) const { return P0_.eval(t); }
    double eval_P1(double t) const { return P1_.eval(t); }
    double eval_P2(double t) const { return P2_.eval(t); }

    /// Running integrals along a flow segment started at time t0:
    ///   P1(tau, t0) = a0 tau + P1(t0 + tau) - P1(t0)
    ///   P2(tau, t0) = a0 tau^2/2 - tau P1(t0) + P2(t0 + tau) - P2(t0)
    double P1_seg(double tau, double t0) const;
    double P2_seg(double tau, double t0) const;

    /// Largest epsilon with |a0 eps| < 1/2; infinity when a0 = 0.
    double eps_ceiling() const;

    /// Non-empty when the proven smallness condition 864 eps p_tilde < rho
    /// fails: numerics are still run but flagged.
    std::optional<std::string> validity_warning(double eps) const;

    /// Hard check of |a0 eps| < 1/2; throws std::invalid_argument.
    void require_valid_eps(double eps) const;

private:
    double a0_;
    double rho_;
    double p_tilde_;
    PeriodicFn p_, P0_, P1_, P2_, Pm1_;
};

}  // namespace impactkam
