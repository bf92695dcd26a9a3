#include "impactkam/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "impactkam/errors.hpp"
#include "impactkam/linalg.hpp"

namespace impactkam {

namespace fft {

namespace {
// FFTW's planner is not thread safe; execution through the plain execute
// call reuses the buffers the plan was created with, so the whole transform
// is serialized.  Transform sizes here are tiny (a few thousand points) and
// never sit in a hot loop.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

std::vector<std::complex<double>> real_to_spectrum(std::span<const double> values) {
    const int m = static_cast<int>(values.size());
    if (m <= 0) throw std::invalid_argument("real_to_spectrum: empty sample vector");
    std::vector<std::complex<double>> out(static_cast<size_t>(m / 2 + 1));

    std::lock_guard<std::mutex> lock(planner_mutex());
    double* in = fftw_alloc_real(static_cast<size_t>(m));
    fftw_complex* spec = fftw_alloc_complex(out.size());
    std::copy(values.begin(), values.end(), in);
    fftw_plan plan = fftw_plan_dft_r2c_1d(m, in, spec, FFTW_ESTIMATE);
    fftw_execute(plan);
    for (size_t k = 0; k < out.size(); ++k) out[k] = {spec[k][0], spec[k][1]};
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(spec);
    return out;
}

std::vector<double> spectrum_to_real(std::span<const std::complex<double>> coeffs, int m) {
    if (m <= 0) throw std::invalid_argument("spectrum_to_real: nonpositive grid size");
    const size_t half = static_cast<size_t>(m / 2 + 1);
    std::vector<double> out(static_cast<size_t>(m));

    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_complex* spec = fftw_alloc_complex(half);
    double* re = fftw_alloc_real(static_cast<size_t>(m));
    for (size_t k = 0; k < half; ++k) {
        if (k < coeffs.size()) {
            spec[k][0] = coeffs[k].real();
            spec[k][1] = coeffs[k].imag();
        } else {
            spec[k][0] = spec[k][1] = 0.0;
        }
    }
    fftw_plan plan = fftw_plan_dft_c2r_1d(m, spec, re, FFTW_ESTIMATE);
    fftw_execute(plan);
    std::copy(re, re + m, out.begin());
    fftw_destroy_plan(plan);
    fftw_free(spec);
    fftw_free(re);
    return out;
}

}  // namespace fft

PeriodicFn::PeriodicFn(int order) : coeffs_(static_cast<size_t>(std::max(order, 0)) + 1) {}

PeriodicFn::PeriodicFn(std::vector<std::complex<double>> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.resize(1);
    coeffs_[0] = {coeffs_[0].real(), 0.0};
}

PeriodicFn PeriodicFn::from_cos_sin(double a0, std::span<const double> ak,
                                    std::span<const double> bk) {
    const size_t n = std::max(ak.size(), bk.size());
    std::vector<std::complex<double>> c(n + 1);
    c[0] = {a0, 0.0};
    for (size_t k = 1; k <= n; ++k) {
        const double a = k <= ak.size() ? ak[k - 1] : 0.0;
        const double b = k <= bk.size() ? bk[k - 1] : 0.0;
        c[k] = {0.5 * a, -0.5 * b};
    }
    return PeriodicFn(std::move(c));
}

PeriodicFn PeriodicFn::from_samples(std::span<const double> values, int order) {
    const int m = static_cast<int>(values.size());
    const int max_order = (m - 1) / 2;
    if (order < 0 || order > max_order) order = max_order;
    auto spec = fft::real_to_spectrum(values);
    std::vector<std::complex<double>> c(static_cast<size_t>(order) + 1);
    for (int k = 0; k <= order; ++k) c[static_cast<size_t>(k)] = spec[static_cast<size_t>(k)] / double(m);
    return PeriodicFn(std::move(c));
}

std::complex<double> PeriodicFn::coeff(int k) const {
    const int n = order();
    if (k > n || k < -n) return {0.0, 0.0};
    if (k >= 0) return coeffs_[static_cast<size_t>(k)];
    return std::conj(coeffs_[static_cast<size_t>(-k)]);
}

double PeriodicFn::eval(double theta) const {
    const std::complex<double> z = std::polar(1.0, theta);
    std::complex<double> zk = z;
    std::complex<double> acc{0.0, 0.0};
    for (size_t k = 1; k < coeffs_.size(); ++k) {
        acc += coeffs_[k] * zk;
        zk *= z;
    }
    return coeffs_[0].real() + 2.0 * acc.real();
}

PeriodicFn PeriodicFn::derivative() const {
    std::vector<std::complex<double>> c(coeffs_.size());
    for (size_t k = 1; k < coeffs_.size(); ++k)
        c[k] = std::complex<double>(0.0, double(k)) * coeffs_[k];
    return PeriodicFn(std::move(c));
}

PeriodicFn PeriodicFn::antiderivative() const {
    if (std::abs(coeffs_[0].real()) > 1e-10)
        throw NonzeroAverage(coeffs_[0].real());
    std::vector<std::complex<double>> c(coeffs_.size());
    for (size_t k = 1; k < coeffs_.size(); ++k)
        c[k] = coeffs_[k] / std::complex<double>(0.0, double(k));
    return PeriodicFn(std::move(c));
}

PeriodicFn PeriodicFn::shifted(double delta) const {
    std::vector<std::complex<double>> c(coeffs_.size());
    c[0] = coeffs_[0];
    for (size_t k = 1; k < coeffs_.size(); ++k)
        c[k] = coeffs_[k] * std::polar(1.0, double(k) * delta);
    return PeriodicFn(std::move(c));
}

PeriodicFn PeriodicFn::truncated(int order) const {
    std::vector<std::complex<double>> c(coeffs_.begin(),
                                        coeffs_.begin() + std::min<size_t>(coeffs_.size(),
                                                                           static_cast<size_t>(order) + 1));
    c.resize(static_cast<size_t>(order) + 1);
    return PeriodicFn(std::move(c));
}

std::vector<double> PeriodicFn::sample(int m) const {
    if (m < 2 * order() + 1)
        throw std::invalid_argument("PeriodicFn::sample: grid too coarse for the stored order");
    return fft::spectrum_to_real(coeffs_, m);
}

double PeriodicFn::coeff_max() const {
    double v = 0.0;
    for (const auto& c : coeffs_) v = std::max(v, std::abs(c));
    return v;
}

PeriodicFn& PeriodicFn::operator+=(const PeriodicFn& g) {
    if (g.coeffs_.size() > coeffs_.size()) coeffs_.resize(g.coeffs_.size());
    for (size_t k = 0; k < g.coeffs_.size(); ++k) coeffs_[k] += g.coeffs_[k];
    return *this;
}

PeriodicFn& PeriodicFn::operator-=(const PeriodicFn& g) {
    if (g.coeffs_.size() > coeffs_.size()) coeffs_.resize(g.coeffs_.size());
    for (size_t k = 0; k < g.coeffs_.size(); ++k) coeffs_[k] -= g.coeffs_[k];
    return *this;
}

PeriodicFn& PeriodicFn::operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
}

PeriodicFn operator+(PeriodicFn f, const PeriodicFn& g) { return f += g; }
PeriodicFn operator-(PeriodicFn f, const PeriodicFn& g) { return f -= g; }
PeriodicFn operator*(PeriodicFn f, double s) { return f *= s; }
PeriodicFn operator*(double s, PeriodicFn f) { return f *= s; }

PeriodicFn product(const PeriodicFn& f, const PeriodicFn& g) {
    const int n = std::max({f.order(), g.order(), 1});
    const int m = 4 * n;
    auto fv = f.sample(m);
    auto gv = g.sample(m);
    for (int j = 0; j < m; ++j) fv[static_cast<size_t>(j)] *= gv[static_cast<size_t>(j)];
    return PeriodicFn::from_samples(fv, n);
}

PeriodicFn compose_shift(const PeriodicFn& f, const PeriodicFn& g, int order) {
    const int n = std::max({order, f.order(), g.order(), 1});
    const int m = 4 * n;
    auto gv = g.sample(m);
    std::vector<double> values(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double theta = kTwoPi * double(j) / double(m);
        values[static_cast<size_t>(j)] = f.eval(theta + gv[static_cast<size_t>(j)]);
    }
    return PeriodicFn::from_samples(values, order);
}

PeriodicFn solve_cohomological(const PeriodicFn& g, double omega,
                               const CohomologySettings& settings) {
    if (std::abs(g.average()) >= settings.tol_avg) throw NonzeroAverage(g.average());
    std::vector<std::complex<double>> c(static_cast<size_t>(g.order()) + 1);
    for (int k = 1; k <= g.order(); ++k) {
        const std::complex<double> divisor = std::polar(1.0, double(k) * omega) - 1.0;
        if (std::abs(divisor) <= settings.divisor_floor)
            throw SmallDivisorBreakdown(k, std::abs(divisor));
        c[static_cast<size_t>(k)] = g.coeff(k) / divisor;
    }
    return PeriodicFn(std::move(c));
}

StripNorm strip_norm(const PeriodicFn& f, double rho) {
    if (rho < 0.0 || rho >= 1.0)
        throw std::invalid_argument("strip_norm: rho must lie in [0, 1)");
    double v = std::abs(f.average());
    for (int k = 1; k <= f.order(); ++k)
        v += 2.0 * std::abs(f.coeff(k)) * std::exp(double(k) * rho);
    return {rho, v};
}

}  // namespace impactkam
