#pragma once

#include <stdexcept>
#include <string>

namespace impactkam {

/// Base class for all numerical failures raised by this library.
/// Configuration problems use ConfigError instead; both carry a
/// machine-readable kind() tag for the CLI failure records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Small-divisor solve asked for a function with nonzero mean.
class NonzeroAverage : public Error {
public:
    explicit NonzeroAverage(double avg)
        : Error("NonzeroAverage",
                "cohomological equation requires zero average, got " + std::to_string(avg)),
          average(avg) {}
    double average;
};

/// A divisor e^{ik w} - 1 fell below the configured floor.
class SmallDivisorBreakdown : public Error {
public:
    SmallDivisorBreakdown(int k, double magnitude)
        : Error("SmallDivisorBreakdown",
                "small divisor |e^{ikw}-1| = " + std::to_string(magnitude) +
                    " at k = " + std::to_string(k)),
          offending_k(k), divisor_magnitude(magnitude) {}
    int offending_k;
    double divisor_magnitude;
};

/// Root finder or fixed-point iteration exhausted its budget.
class NoConvergence : public Error {
public:
    explicit NoConvergence(const std::string& what) : Error("NoConvergence", what) {}
};

/// Impact-time solve produced a root <= 0: the point left the validity regime.
class NonPositiveRoot : public Error {
public:
    explicit NonPositiveRoot(double root)
        : Error("NonPositiveRoot", "impact time root " + std::to_string(root) + " <= 0"),
          root_value(root) {}
    double root_value;
};

/// Grazing impact: |velocity| at the section below the floor, Jacobian undefined.
class SingularImpact : public Error {
public:
    explicit SingularImpact(double y)
        : Error("SingularImpact", "grazing impact, |y| = " + std::to_string(y)),
          impact_velocity(y) {}
    double impact_velocity;
};

/// KAM step nondegeneracy |<A>| fell below the floor.
class DegenerateAverage : public Error {
public:
    DegenerateAverage(double avg, double floor)
        : Error("DegenerateAverage",
                "|<A>| = " + std::to_string(avg) + " below floor " + std::to_string(floor)),
          average(avg), floor(floor) {}
    double average;
    double floor;
};

/// A point left the domain of the map being iterated.
class DomainEscape : public Error {
public:
    explicit DomainEscape(const std::string& what) : Error("DomainEscape", what) {}
};

/// solve_curve failed; the report carries the diagnostic history.
class NotConverged : public Error {
public:
    explicit NotConverged(const std::string& what) : Error("NotConverged", what) {}
};

/// Invalid run configuration (schema violation, bad value, unknown key).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace impactkam
