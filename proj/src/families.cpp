#include "freeconv/families.hpp"

#include "freeconv/errors.hpp"

#include <cmath>
#include <numbers>

namespace freeconv {

namespace {
constexpr double kPi = std::numbers::pi;

Eigen::ArrayXd linspace(double a, double b, int n) {
    Eigen::ArrayXd g(n);
    for (int i = 0; i < n; ++i) g(i) = a + (b - a) * i / (n - 1);
    return g;
}
}  // namespace

Measure dirac(double c, Domain domain) {
    return Measure::make(domain, {{c, 1.0}}, {}, {});
}

Measure two_point(double a, double b, double pa, Domain domain) {
    if (!(pa > 0.0 && pa < 1.0)) throw ArgumentError("two_point: weight must be in (0,1)");
    return Measure::make(domain, {{a, pa}, {b, 1.0 - pa}}, {}, {});
}

Measure bernoulli() { return two_point(-1.0, 1.0, 0.5); }

Measure semicircle(double mean, double variance, int n) {
    if (!(variance > 0.0)) throw ArgumentError("semicircle: variance must be positive");
    const double r = 2.0 * std::sqrt(variance);
    Eigen::ArrayXd g = linspace(mean - r, mean + r, n);
    Eigen::ArrayXd v(n);
    for (int i = 0; i < n; ++i) {
        const double d = r * r - (g(i) - mean) * (g(i) - mean);
        v(i) = d > 0.0 ? std::sqrt(d) / (kPi * r * r / 2.0) : 0.0;
    }
    return Measure::make(Domain::RealLine, {}, std::move(g), std::move(v));
}

Measure uniform(double a, double b, int n) {
    if (!(a < b)) throw ArgumentError("uniform: need a < b");
    Eigen::ArrayXd g = linspace(a, b, n);
    Eigen::ArrayXd v = Eigen::ArrayXd::Constant(n, 1.0 / (b - a));
    return Measure::make(Domain::RealLine, {}, std::move(g), std::move(v));
}

Measure arcsine(int n) {
    // cosine-graded nodes keep cells small where the density blows up
    Eigen::ArrayXd g(n), v(n);
    const double clip = 1e-7;  // stay off the exact endpoints
    for (int i = 0; i < n; ++i) {
        const double u = double(i) / (n - 1);
        double x = -2.0 * std::cos(kPi * u);
        x = std::clamp(x, -2.0 + clip, 2.0 - clip);
        g(i) = x;
        v(i) = 1.0 / (kPi * std::sqrt(4.0 - x * x));
    }
    // clamping may duplicate endpoints; nudge to keep the grid increasing
    for (int i = 1; i < n; ++i)
        if (g(i) <= g(i - 1)) g(i) = std::nextafter(g(i - 1), 2.0);
    return Measure::make(Domain::RealLine, {}, std::move(g), std::move(v));
}

Measure marchenko_pastur(int n) {
    Eigen::ArrayXd g(n), v(n);
    const double clip = 1e-7;
    for (int i = 0; i < n; ++i) {
        const double u = double(i) / (n - 1);
        double x = 2.0 - 2.0 * std::cos(kPi * u);
        x = std::clamp(x, clip, 4.0 - clip);
        g(i) = x;
        v(i) = std::sqrt((4.0 - x) / x) / (2.0 * kPi);
    }
    for (int i = 1; i < n; ++i)
        if (g(i) <= g(i - 1)) g(i) = std::nextafter(g(i - 1), 4.0);
    return Measure::make(Domain::PositiveHalfline, {}, std::move(g), std::move(v));
}

Measure two_projections() {
    return two_point(0.0, 1.0, 0.5, Domain::PositiveHalfline);
}

Measure projections_product(int n) {
    Eigen::ArrayXd g(n), v(n);
    const double clip = 1e-7;
    for (int i = 0; i < n; ++i) {
        const double u = double(i) / (n - 1);
        double x = 0.5 - 0.5 * std::cos(kPi * u);
        x = std::clamp(x, clip, 1.0 - clip);
        g(i) = x;
        v(i) = 1.0 / (2.0 * kPi * std::sqrt(x * (1.0 - x)));
    }
    for (int i = 1; i < n; ++i)
        if (g(i) <= g(i - 1)) g(i) = std::nextafter(g(i - 1), 1.0);
    return Measure::make(Domain::PositiveHalfline, {{0.0, 0.5}}, std::move(g),
                         std::move(v));
}

Measure from_density(const std::function<double(double)>& f, double lo, double hi,
                     int n, Domain domain, ConstructionReport* report) {
    if (!(lo < hi)) throw ArgumentError("from_density: need lo < hi");
    if (n < 2) throw ArgumentError("from_density: need at least two nodes");
    Eigen::ArrayXd g = linspace(lo, hi, n);
    Eigen::ArrayXd v(n);
    for (int i = 0; i < n; ++i) {
        v(i) = f(g(i));
        if (!std::isfinite(v(i)) || v(i) < 0.0)
            throw ArgumentError("from_density: density must be finite and nonnegative");
    }
    Measure raw = Measure::make(domain, {}, g, v);
    // truncate negligible tails to the [1e-8, 1-1e-8] quantile range
    const double qlo = quantile(raw, 1e-8);
    const double qhi = quantile(raw, 1.0 - 1e-8);
    ConstructionReport rep;
    Measure out = raw;
    if (qlo > lo || qhi < hi) {
        const double kept_lo = cdf(raw, qlo);
        const double kept_hi = 1.0 - cdf(raw, qhi);
        Eigen::ArrayXd g2 = linspace(qlo, qhi, n);
        Eigen::ArrayXd v2(n);
        for (int i = 0; i < n; ++i) v2(i) = raw.density(g2(i));
        out = Measure::make(domain, {}, std::move(g2), std::move(v2), &rep);
        rep.truncated_mass = kept_lo + kept_hi;
    } else {
        out = Measure::make(domain, {}, std::move(g), std::move(v), &rep);
    }
    if (report) *report = rep;
    return out;
}

}  // namespace freeconv
