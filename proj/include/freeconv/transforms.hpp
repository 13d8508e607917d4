#pragma once

#include "freeconv/measure.hpp"

#include <complex>
#include <optional>
#include <span>

namespace freeconv {

using Complex = std::complex<double>;

// Truncated cone { Im z > alpha, Im z > beta |Re z| } with the horizontal
// band [alpha, alpha + band_height] used for area integrals.
struct StolzRegion {
    double alpha = 1.0;
    double beta = 1.0;
    double band_height = 1.0;

    bool contains(Complex z) const {
        return z.imag() > alpha && z.imag() > beta * std::abs(z.real());
    }
    bool band_contains(Complex z) const {
        return contains(z) && z.imag() < alpha + band_height;
    }
    double band_area() const {
        const double top = alpha + band_height;
        return (top * top - alpha * alpha) / beta;
    }
};

// Cauchy transform G(z) = int dmu(t)/(z - t), Im z != 0. The density part
// integrates in closed form per linear cell, so the only approximation in
// the pipeline is the measure representation itself.
Complex cauchy(const Measure& m, Complex z);
Complex cauchy_derivative(const Measure& m, Complex z);

// F = 1/G on the upper half-plane.
Complex f_transform(const Measure& m, Complex z);
Complex f_derivative(const Measure& m, Complex z);

// Damped-Newton solve of F(w) = z; returns w. Seeds at z unless a warm
// start is supplied. Relative residual target 1e-10, cap 200 iterations.
Complex f_inverse(const Measure& m, Complex z,
                  std::optional<Complex> warm = std::nullopt);

// phi(z) = F^{-1}(z) - z.
Complex phi(const Measure& m, Complex z, std::optional<Complex> warm = std::nullopt);

// Smallest region (doubling from (1,1)) on which every listed measure
// satisfies |F(z) - z| <= slack * |z| at the boundary probes.
StolzRegion stolz_fit(std::span<const Measure> family, double slack = 0.25);
StolzRegion stolz_fit(std::initializer_list<Measure> family, double slack = 0.25);

// psi(z) = int z t / (1 - z t) dmu(t). Positive-halfline or circle
// measures; z off the positive real axis (or real negative).
Complex psi(const Measure& m, Complex z);
Complex psi_derivative(const Measure& m, Complex z);
// eta = psi / (1 + psi).
Complex eta(const Measure& m, Complex z);
Complex eta_derivative(const Measure& m, Complex z);

// Inverse of psi on (mu({0}) - 1, 0); bracketed bisection plus Newton
// polish to |psi(chi) - u| <= 1e-12.
double chi(const Measure& m, double u);

// S(u) = (1 + u)/u * chi(u) on (mu({0}) - 1, 0).
double s_transform(const Measure& m, double u);

// Typed transform evaluator carrying its own validity region; evaluation
// outside validity raises DomainError instead of returning garbage.
enum class TransformKind { G, F, Phi, Psi, Chi, S, Omega1, Omega2 };

class TransformEvaluator {
public:
    static TransformEvaluator make_cauchy(Measure m);
    static TransformEvaluator make_f(Measure m);
    static TransformEvaluator make_phi(Measure m, StolzRegion validity);
    static TransformEvaluator make_psi(Measure m);
    static TransformEvaluator make_chi(Measure m);
    static TransformEvaluator make_s(Measure m);
    static TransformEvaluator make_omega(Measure m1, Measure m2, bool first);

    TransformKind kind() const { return kind_; }
    const Measure& source() const { return m1_; }

    // Complex-argument kinds (G, F, Phi, Psi, Omega*).
    Complex operator()(Complex z) const;
    // Real-argument kinds (Chi, S).
    double eval_real(double u) const;

private:
    TransformKind kind_ = TransformKind::G;
    Measure m1_, m2_;
    std::optional<StolzRegion> region_;
    std::optional<Interval> interval_;
    mutable std::optional<Complex> warm_;  // Newton warm start; single-sweep use
};

}  // namespace freeconv
