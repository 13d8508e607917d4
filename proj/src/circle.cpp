#include "freeconv/circle.hpp"

#include "freeconv/errors.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace freeconv {

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;
constexpr double kMeanFloor = 1e-9;
}  // namespace

Complex circle_mean(const Measure& m) {
    if (m.domain() != Domain::UnitCircle)
        throw DomainError("circle_mean requires a circle measure");
    return moment(m, 1);
}

Complex s_zero(const Measure& m) {
    const Complex mean = circle_mean(m);
    if (std::abs(mean) <= kMeanFloor)
        throw ZeroMeanError("zero first moment: measure is not in M_*");
    return 1.0 / mean;
}

double lambda_circle(const Measure& m) { return std::abs(s_zero(m)); }

Measure rotate(const Measure& m, double theta) {
    if (m.domain() != Domain::UnitCircle)
        throw DomainError("rotate requires a circle measure");
    double th = std::fmod(theta, kTau);
    if (th < 0.0) th += kTau;
    if (th == 0.0) return m;

    std::vector<Atom> atoms;
    atoms.reserve(m.atoms().size());
    for (const Atom& a : m.atoms()) {
        double x = a.x + th;
        if (x >= kTau) x -= kTau;
        atoms.push_back({x, a.mass});
    }
    if (!m.has_ac()) return Measure::make(Domain::UnitCircle, atoms, {}, {});

    const Eigen::ArrayXd& g = m.ac_grid();
    const Eigen::ArrayXd& v = m.ac_values();
    const int n = static_cast<int>(g.size());

    std::vector<double> grid, values;
    grid.reserve(n + 4);
    values.reserve(n + 4);
    if (g(0) + th >= kTau) {
        for (int i = 0; i < n; ++i) {
            grid.push_back(g(i) + th - kTau);
            values.push_back(v(i));
        }
    } else if (g(n - 1) + th < kTau) {
        for (int i = 0; i < n; ++i) {
            grid.push_back(g(i) + th);
            values.push_back(v(i));
        }
    } else {
        // The shifted span straddles the seam: wrapped tail first, then the
        // head, with zero-density guard points closing the gap between them.
        int k = 0;
        while (g(k + 1) + th < kTau) ++k;  // seam lies in (g(k), g(k+1)] + th
        const bool seam_on_node = (g(k + 1) + th == kTau);
        const double frac = (kTau - (g(k) + th)) / (g(k + 1) - g(k));
        const double seam_value =
            seam_on_node ? v(k + 1) : v(k) + (v(k + 1) - v(k)) * frac;

        grid.push_back(0.0);
        values.push_back(seam_value);
        for (int i = k + 1; i < n; ++i) {
            const double x = g(i) + th - kTau;
            if (x <= grid.back()) continue;
            grid.push_back(x);
            values.push_back(v(i));
        }
        if (values.size() == 1) {
            grid.pop_back();  // zero-width tail carries no mass
            values.pop_back();
        } else {
            grid.push_back(std::nextafter(grid.back(), kTau));
            values.push_back(0.0);
        }

        const double head_start = g(0) + th;
        const double head_guard = std::nextafter(head_start, 0.0);
        if (!grid.empty() && head_guard > grid.back()) {
            grid.push_back(head_guard);
            values.push_back(0.0);
        }
        for (int i = 0; i <= k; ++i) {
            grid.push_back(g(i) + th);
            values.push_back(v(i));
        }
        grid.push_back(std::nextafter(kTau, 0.0));
        values.push_back(seam_value);
    }

    Eigen::ArrayXd out_grid = Eigen::Map<Eigen::ArrayXd>(grid.data(), grid.size());
    Eigen::ArrayXd out_values = Eigen::Map<Eigen::ArrayXd>(values.data(), values.size());
    return Measure::make(Domain::UnitCircle, atoms, out_grid, out_values);
}

}  // namespace freeconv
