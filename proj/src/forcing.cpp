#include "impactkam/forcing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace impactkam {

ForcingSpec::ForcingSpec(double a0, std::span<const double> ak, std::span<const double> bk,
                         double rho)
    : a0_(a0),
      rho_(rho),
      p_tilde_(0.0),
      p_(PeriodicFn::from_cos_sin(a0, ak, bk)),
      P0_(p_ - PeriodicFn::constant(a0)),
      P1_(P0_.antiderivative()),
      P2_(P1_.antiderivative()),
      Pm1_(P0_.derivative()) {
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("ForcingSpec: rho must lie in (0, 1)");
    for (const PeriodicFn* f : {&Pm1_, &P0_, &P1_, &P2_})
        p_tilde_ = std::max(p_tilde_, strip_norm(*f, rho).value);
}

double ForcingSpec::P1_seg(double tau, double t0) const {
    return a0_ * tau + P1_.eval(t0 + tau) - P1_.eval(t0);
}

double ForcingSpec::P2_seg(double tau, double t0) const {
    return 0.5 * a0_ * tau * tau - tau * P1_.eval(t0) + P2_.eval(t0 + tau) - P2_.eval(t0);
}

double ForcingSpec::eps_ceiling() const {
    if (a0_ == 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 / std::abs(a0_);
}

std::optional<std::string> ForcingSpec::validity_warning(double eps) const {
    if (864.0 * eps * p_tilde_ >= rho_) {
        return "epsilon = " + std::to_string(eps) +
               " exceeds the proven smallness condition 864*eps*p_tilde < rho "
               "(p_tilde = " + std::to_string(p_tilde_) + ", rho = " + std::to_string(rho_) +
               "); results are exploratory";
    }
    return std::nullopt;
}

void ForcingSpec::require_valid_eps(double eps) const {
    if (eps < 0.0) throw std::invalid_argument("epsilon must be >= 0");
    if (std::abs(a0_ * eps) >= 0.5)
        throw std::invalid_argument("|a0 * epsilon| must stay below 1/2");
}

}  // namespace impactkam
