#include "freeconv/multiplicative.hpp"

#include "freeconv/errors.hpp"
#include "freeconv/families.hpp"
#include "freeconv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace freeconv {

namespace {

constexpr int kFixedPointCap = 10000;

void check_mult_inputs(const Measure& m1, const Measure& m2) {
    if (m1.domain() != Domain::PositiveHalfline || m2.domain() != Domain::PositiveHalfline)
        throw DomainError("free multiplicative convolution requires positive-halfline measures");
    if (m1.mass_at_zero() >= 1.0 || m2.mass_at_zero() >= 1.0)
        throw DomainError("free multiplicative convolution is undefined for the point mass at zero");
}

MultSubordinationSolution solve_upper(const Measure& m1, const Measure& m2,
                                      Complex lambda, std::optional<Complex> warm) {
    MultSubordinationSolution sol;
    sol.lambda = lambda;

    // A point mass factor only rescales the argument: omega2 = c*lambda.
    if (m1.is_dirac() || m2.is_dirac()) {
        const bool first = m1.is_dirac();
        const Measure& point = first ? m1 : m2;
        const Measure& other = first ? m2 : m1;
        const double c = point.atoms().front().x;
        const Complex wo = c * lambda;
        const Complex e = eta(other, wo);
        const Complex wp = e / c;  // eta_point(wp) = c*wp matches eta_other(wo)
        sol.omega1 = first ? wp : wo;
        sol.omega2 = first ? wo : wp;
        sol.psi_value = e / (1.0 - e);
        sol.residual = 0.0;
        sol.iterations = 0;
        return sol;
    }

    Complex w1 = warm.value_or(lambda * real_moment(m2, 1));
    if (w1 == Complex(0.0, 0.0)) w1 = lambda * real_moment(m2, 1);

    // Tolerance scales with the iterate as well as with lambda: the rounding
    // floor of one map evaluation grows with |w1|, and a tolerance below that
    // floor can never be met.
    const double tol0 = 1e-12 * (1.0 + std::abs(lambda));
    Complex w2 = w1;
    double prev_delta = std::numeric_limits<double>::infinity();
    bool average = false;
    int it = 0;
    for (; it < kFixedPointCap; ++it) {
        const Complex ratio1 = eta(m1, w1) / w1;
        w2 = lambda * ratio1;
        Complex next = eta(m2, w2) / ratio1;
        if (average) next = 0.5 * (next + w1);
        const double delta = std::abs(next - w1);
        const double tol = tol0 + 1e-13 * std::abs(w1);
        w1 = next;
        if (delta <= tol) break;
        if (!average && it > 8 && delta > prev_delta) average = true;
        prev_delta = delta;
    }

    const Complex ratio1 = eta(m1, w1) / w1;
    w2 = lambda * ratio1;
    const Complex p1 = psi(m1, w1);
    const Complex p2 = psi(m2, w2);
    sol.omega1 = w1;
    sol.omega2 = w2;
    sol.psi_value = 0.5 * (p1 + p2);
    sol.residual = std::abs(p1 - p2);
    sol.iterations = it;
    if (it >= kFixedPointCap && sol.residual > 1e-8 * (1.0 + std::abs(lambda)))
        throw SolverError("multiplicative subordination did not converge", sol.residual, it);
    return sol;
}

}  // namespace

MultSubordinationSolution mult_subordinators(const Measure& m1, const Measure& m2,
                                             Complex lambda, std::optional<Complex> warm) {
    check_mult_inputs(m1, m2);
    if (lambda.imag() == 0.0 && lambda.real() >= 0.0)
        throw DomainError("multiplicative subordination needs Im(lambda) != 0 or lambda < 0");
    if (lambda.imag() < 0.0) {
        std::optional<Complex> cwarm;
        if (warm) cwarm = std::conj(*warm);
        MultSubordinationSolution sol = solve_upper(m1, m2, std::conj(lambda), cwarm);
        sol.lambda = lambda;
        sol.omega1 = std::conj(sol.omega1);
        sol.omega2 = std::conj(sol.omega2);
        sol.psi_value = std::conj(sol.psi_value);
        return sol;
    }
    return solve_upper(m1, m2, lambda, warm);
}

Eigen::ArrayXd default_multiplicative_grid(const Measure& m1, const Measure& m2, int n) {
    const Interval s1 = support_interval(m1);
    const Interval s2 = support_interval(m2);
    const double lo = s1.lo * s2.lo;
    double hi = s1.hi * s2.hi;
    if (hi <= lo) hi = lo + 1.0;
    // hull_grid pads past both ends; the sub-zero overhang soaks up the
    // smoothing bleed of a hard edge at 0 so no recovered mass is lost.
    return hull_grid(lo, hi, n);
}

ConvolutionResult free_mult(const Measure& m1, const Measure& m2,
                            Eigen::ArrayXd grid, std::vector<double> eps_schedule) {
    check_mult_inputs(m1, m2);
    if (grid.size() == 0) grid = default_multiplicative_grid(m1, m2);

    ConvolutionResult out;
    out.report.grid = grid;
    out.report.epsilon_schedule = eps_schedule;

    // A point mass rescales the other factor exactly.
    if (m1.is_dirac() || m2.is_dirac()) {
        const Measure& point = m1.is_dirac() ? m1 : m2;
        const Measure& other = m1.is_dirac() ? m2 : m1;
        out.measure = dilate(other, point.atoms().front().x);
        for (const Atom& a : out.measure.atoms())
            out.report.atom_candidates.push_back({a.x, a.mass, AtomCandidate::Source::Predicted});
        return out;
    }

    // Atom at zero obeys the exact max rule; atoms elsewhere pair up like
    // the additive case on the product location.
    const double p0 = std::max(m1.mass_at_zero(), m2.mass_at_zero());
    std::vector<Atom> seeds;
    if (p0 > 0.0) seeds.push_back({0.0, p0});
    for (const Atom& a : m1.atoms()) {
        if (a.x == 0.0) continue;
        for (const Atom& b : m2.atoms()) {
            if (b.x == 0.0) continue;
            const double mass = a.mass + b.mass - 1.0;
            if (mass > 0.0) seeds.push_back({a.x * b.x, mass});
        }
    }

    std::mutex residual_mutex;
    double max_residual = 0.0;
    BoundaryEvaluator g = [&](double x, double eps) {
        thread_local std::optional<Complex> warm;
        const Complex w(x, eps);
        const Complex lam = 1.0 / w;
        MultSubordinationSolution sol = mult_subordinators(m1, m2, lam, warm);
        warm = sol.omega1;
        {
            std::lock_guard<std::mutex> lock(residual_mutex);
            max_residual = std::max(max_residual, sol.residual);
        }
        return (sol.psi_value + 1.0) / w;
    };

    out.measure = recover_from_boundary(g, grid, eps_schedule, seeds, &out.report);
    out.report.max_residual = max_residual;

    // Project onto the positive half line: pin the zero atom at its exact
    // max-rule mass, drop the sub-zero smoothing overhang, and hand the mass
    // bookkeeping to the continuous part (the atom masses are exact).
    const double cell = grid.size() > 1 ? grid(1) - grid(0) : 0.0;
    const double radius = std::max(1.5 * cell, 4.0 * eps_schedule.back());
    std::vector<Atom> atoms;
    bool zero_seen = false;
    for (const Atom& a : out.measure.atoms()) {
        if (std::abs(a.x) <= radius || a.x < 0.0) {
            if (p0 > 0.0 && !zero_seen) {
                atoms.push_back({0.0, p0});
                zero_seen = true;
            }
            continue;  // no atom at zero unless the max rule says so
        }
        Atom kept = a;
        for (const Atom& seed : seeds)  // undo renormalization drift on exact seeds
            if (seed.x != 0.0 && std::abs(a.x - seed.x) <= radius) kept = seed;
        atoms.push_back(kept);
    }
    if (p0 > 0.0 && !zero_seen) atoms.push_back({0.0, p0});

    const Eigen::ArrayXd& full_grid = out.measure.ac_grid();
    Eigen::Index first = 0;
    while (first < full_grid.size() && full_grid(first) < 0.0) ++first;
    if (first + 2 > full_grid.size())
        throw ResolutionError("free_mult: recovery grid has no positive part", 1.0);
    Eigen::ArrayXd pos_grid = full_grid.tail(full_grid.size() - first);
    Eigen::ArrayXd pos_values = out.measure.ac_values().tail(full_grid.size() - first);

    double atom_mass = 0.0;
    for (const Atom& a : atoms) atom_mass += a.mass;
    // nodal trapezoid shares: total AC mass = sum of share(i) * value(i)
    const Eigen::Index np = pos_grid.size();
    Eigen::ArrayXd share = Eigen::ArrayXd::Zero(np);
    for (Eigen::Index i = 0; i + 1 < np; ++i) {
        const double h = 0.5 * (pos_grid(i + 1) - pos_grid(i));
        share(i) += h;
        share(i + 1) += h;
    }
    const double ac_mass = (share * pos_values).sum();
    const double target = 1.0 - atom_mass;
    if (ac_mass > 0.0 && target > 0.0) {
        // The imbalance is created right at zero (dropped sub-zero overhang,
        // smoothing-flattened hard edge), so repay it to the zone adjacent to
        // zero; only fall back to a uniform rescale when there is no zone.
        const double zone_hi = std::max(8.0 * eps_schedule.back(), 4.0 * cell);
        const double delta = target - ac_mass;
        double zone_mass = 0.0;
        for (Eigen::Index i = 0; i < np && pos_grid(i) <= zone_hi; ++i)
            zone_mass += share(i) * pos_values(i);
        if (zone_mass > 0.0 && zone_mass + delta > 0.0) {
            const double factor = (zone_mass + delta) / zone_mass;
            for (Eigen::Index i = 0; i < np && pos_grid(i) <= zone_hi; ++i)
                pos_values(i) *= factor;
        } else {
            pos_values *= target / ac_mass;
        }
        out.report.trimmed_mass += std::max(0.0, -delta);
    }
    out.measure = Measure::make(Domain::PositiveHalfline, atoms, pos_grid, pos_values);
    return out;
}

double s_transform_of_product(const Measure& m1, const Measure& m2, double u) {
    check_mult_inputs(m1, m2);
    const double p0 = std::max(m1.mass_at_zero(), m2.mass_at_zero());
    if (!(u > p0 - 1.0 && u < 0.0))
        throw DomainError("S-transform argument outside (mass_at_zero - 1, 0)");

    std::optional<Complex> warm;
    auto psi_prod = [&](double lam) {
        MultSubordinationSolution sol = mult_subordinators(m1, m2, Complex(lam, 0.0), warm);
        warm = sol.omega1;
        return sol.psi_value.real();
    };

    // psi of the product increases from mass_at_zero - 1 to 0 on (-inf, 0).
    double lo = -1.0;
    while (psi_prod(lo) > u) {
        lo *= 2.0;
        if (lo < -1e18)
            throw InversionError("could not bracket the product psi value", std::abs(u));
    }
    double hi = -1e-9;
    while (psi_prod(hi) < u) {
        hi *= 0.5;
        if (hi > -1e-300)
            throw InversionError("could not bracket the product psi value", std::abs(u));
    }
    for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (psi_prod(mid) < u ? lo : hi) = mid;
    }
    const double chi_val = 0.5 * (lo + hi);
    return (1.0 + u) * chi_val / u;
}

std::pair<Measure, double> s_normalize(const Measure& m, double beta) {
    if (m.domain() != Domain::PositiveHalfline)
        throw DomainError("s_normalize requires a positive-halfline measure");
    if (m.mass_at_zero() >= 1.0)
        throw DomainError("s_normalize is undefined for the point mass at zero");
    if (!(beta > 0.0 && beta < 1.0 - m.mass_at_zero()))
        throw ArgumentError("beta must lie in (0, 1 - mass at zero)");
    const double c = s_transform(m, -beta);
    return {dilate(m, c), c};
}

std::pair<Measure, double> chi_normalize(const Measure& m, std::optional<double> alpha) {
    if (m.domain() != Domain::PositiveHalfline)
        throw DomainError("chi_normalize requires a positive-halfline measure");
    if (m.mass_at_zero() >= 1.0)
        throw DomainError("chi_normalize is undefined for the point mass at zero");
    const double a = alpha.value_or(1.0 - m.mass_at_zero());
    if (!(a > 0.0 && a < 2.0 * (1.0 - m.mass_at_zero())))
        throw ArgumentError("alpha must lie in (0, 2(1 - mass at zero))");
    const double lambda = -chi(m, -0.5 * a);
    return {dilate(m, lambda), lambda};
}

}  // namespace freeconv
