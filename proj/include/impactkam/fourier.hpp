#pragma once

#include <complex>
#include <span>
#include <vector>

namespace impactkam {

/// Estimated strip norm ||f||_rho on the complex strip |Im(theta)| < rho,
/// computed as the coefficient majorant sum_k |c_k| e^{|k| rho}.  Always an
/// upper bound for the true sup; for rho = 0 it upper-bounds the real sup.
struct StripNorm {
    double rho = 0.0;
    double value = 0.0;
};

/// Real trigonometric polynomial of one angle,
///
///   f(theta) = sum_{|k| <= N} c_k e^{i k theta},  c_{-k} = conj(c_k).
///
/// Only the coefficients for k >= 0 are stored, so Hermitian symmetry (and
/// with it real point values) holds by construction.  All operations are
/// pure and the class is safe to share across threads.
class PeriodicFn {
public:
    /// Zero function of truncation order n.
    explicit PeriodicFn(int order = 0);

    /// Build from half-spectrum coefficients c_k, k = 0..N.  The imaginary
    /// part of c_0 is dropped.
    explicit PeriodicFn(std::vector<std::complex<double>> coeffs);

    /// f(theta) = a0 + sum_k (a_k cos(k theta) + b_k sin(k theta)).
    /// Missing tail entries of either list are treated as zero.
    static PeriodicFn from_cos_sin(double a0, std::span<const double> ak,
                                   std::span<const double> bk);

    /// Recover coefficients from samples on the uniform grid
    /// theta_j = 2 pi j / m, j = 0..m-1, truncated to the given order
    /// (defaults to the largest order the grid determines).
    static PeriodicFn from_samples(std::span<const double> values, int order = -1);

    static PeriodicFn constant(double value) {
        return PeriodicFn(std::vector<std::complex<double>>{{value, 0.0}});
    }

    int order() const { return static_cast<int>(coeffs_.size()) - 1; }
    std::span<const std::complex<double>> coeffs() const { return coeffs_; }
    std::complex<double> coeff(int k) const;  // any k, Hermitian extension

    double eval(double theta) const;
    double average() const { return coeffs_[0].real(); }

    /// Spectral derivative c_k -> i k c_k.  The result has zero average.
    PeriodicFn derivative() const;

    /// Zero-mean antiderivative c_k -> c_k / (i k); requires zero average.
    PeriodicFn antiderivative() const;

    /// f(. + delta), computed exactly in coefficient space.
    PeriodicFn shifted(double delta) const;

    PeriodicFn truncated(int order) const;

    /// Values on the uniform grid theta_j = 2 pi j / m.
    std::vector<double> sample(int m) const;

    /// Largest |c_k| over all k (coefficient sup norm).
    double coeff_max() const;

    PeriodicFn& operator+=(const PeriodicFn& g);
    PeriodicFn& operator-=(const PeriodicFn& g);
    PeriodicFn& operator*=(double s);

private:
    std::vector<std::complex<double>> coeffs_;  // k = 0..N
};

PeriodicFn operator+(PeriodicFn f, const PeriodicFn& g);
PeriodicFn operator-(PeriodicFn f, const PeriodicFn& g);
PeriodicFn operator*(PeriodicFn f, double s);
PeriodicFn operator*(double s, PeriodicFn f);

/// Pointwise product, computed on a 4N oversampled grid and truncated back
/// to max(order f, order g) to suppress spectral spill.
PeriodicFn product(const PeriodicFn& f, const PeriodicFn& g);

/// Composition f(theta + g(theta)) evaluated pointwise on an oversampled
/// grid by direct trigonometric evaluation.
PeriodicFn compose_shift(const PeriodicFn& f, const PeriodicFn& g, int order);

struct CohomologySettings {
    double divisor_floor = 1e-12;  // reject |e^{ikw} - 1| at or below this
    double tol_avg = 1e-10;        // largest |<g>| accepted as "zero mean"
};

/// Solve the difference equation f(theta + omega) - f(theta) = g(theta) with
/// normalization <f> = 0:  f_k = g_k / (e^{i k omega} - 1).
///
/// Throws NonzeroAverage when |<g>| >= tol_avg and SmallDivisorBreakdown
/// (with the offending k) when a divisor is at or below divisor_floor.
PeriodicFn solve_cohomological(const PeriodicFn& g, double omega,
                               const CohomologySettings& settings = {});

StripNorm strip_norm(const PeriodicFn& f, double rho);

namespace fft {
/// Unnormalized half-spectrum DFT of real samples (FFTW r2c); result has
/// m/2 + 1 entries.  Thread safe.
std::vector<std::complex<double>> real_to_spectrum(std::span<const double> values);
/// Inverse of real_to_spectrum including the 1/m normalization convention
/// used by PeriodicFn (spectrum entries are the c_k themselves).
std::vector<double> spectrum_to_real(std::span<const std::complex<double>> coeffs, int m);
}  // namespace fft

}  // namespace impactkam
