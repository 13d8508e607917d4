#include "freeconv/khintchine.hpp"

#include "freeconv/errors.hpp"
#include "freeconv/families.hpp"
#include "freeconv/multiplicative.hpp"
#include "freeconv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace freeconv {

namespace {

constexpr double kAtomThreshold = 1e-3;

double lambda_quadrature(const Measure& m, const StolzRegion& region, int nx, int ny) {
    const double hy = region.band_height / ny;
    std::vector<double> row(ny, 0.0);
    parallel_for_chunks(ny, [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            const double y = region.alpha + (j + 0.5) * hy;
            const double half_width = y / region.beta;
            const double hx = 2.0 * half_width / nx;
            std::optional<Complex> warm;
            double s = 0.0;
            for (int i = 0; i < nx; ++i) {
                const double x = -half_width + (i + 0.5) * hx;
                const Complex z(x, y);
                Complex ph;
                try {
                    ph = phi(m, z, warm);
                } catch (const InversionError& e) {
                    std::ostringstream msg;
                    msg << e.what() << " at quadrature node (" << x << ", " << y << ")";
                    throw InversionError(msg.str(), e.residual);
                }
                warm = ph + z;
                s -= ph.imag();
            }
            row[j] = s * hx * hy;
        }
    }, /*min_parallel=*/8);
    return std::accumulate(row.begin(), row.end(), 0.0);
}

}  // namespace

LambdaResult lambda_additive_full(const Measure& m, const LambdaConfig& cfg) {
    if (cfg.nx < 16 || cfg.ny < 16)
        throw ArgumentError("lambda quadrature needs at least 16 panels per axis");
    if (!(cfg.region.band_height > 0.0) || !(cfg.region.beta > 0.0) ||
        !(cfg.region.alpha > 0.0) || !std::isfinite(cfg.region.band_area()))
        throw ArgumentError("lambda region must have positive finite band area");
    const double coarse = lambda_quadrature(m, cfg.region, cfg.nx / 2, cfg.ny / 2);
    const double fine = lambda_quadrature(m, cfg.region, cfg.nx, cfg.ny);
    // midpoint rule is second order: step doubling overestimates by ~3x
    return {fine, std::abs(fine - coarse) / 3.0};
}

double lambda_additive(const Measure& m, const LambdaConfig& cfg) {
    return lambda_additive_full(m, cfg).value;
}

double lambda_mult(const Measure& m, double beta, double gamma) {
    const double cap = 1.0 - m.mass_at_zero();
    if (!(gamma > 0.0 && gamma < beta && beta < cap))
        throw ArgumentError("lambda_mult needs 0 < gamma < beta < 1 - mass at zero");
    return std::log(s_transform(m, -beta)) - std::log(s_transform(m, -gamma));
}

namespace {

CheckResult make_check(std::string name, double measured, double bound) {
    const bool pass = measured <= bound;
    return {std::move(name), measured, bound, pass};
}

// Largest distance from an atom of `from` to its best match in `to`,
// plus the matched mass discrepancy; atoms below threshold are ignored.
std::pair<double, double> atom_mismatch(const std::vector<Atom>& from,
                                        const std::vector<Atom>& to) {
    double worst_loc = 0.0, worst_mass = 0.0;
    for (const Atom& a : from) {
        if (a.mass < kAtomThreshold) continue;
        double best = std::numeric_limits<double>::infinity();
        double mass_err = a.mass;
        for (const Atom& b : to) {
            const double d = std::abs(a.x - b.x);
            if (d < best) {
                best = d;
                mass_err = std::abs(a.mass - b.mass);
            }
        }
        worst_loc = std::max(worst_loc, best);
        worst_mass = std::max(worst_mass, mass_err);
    }
    return {worst_loc, worst_mass};
}

}  // namespace

DecompositionVerdict verify_decomposition(const Measure& target,
                                          const std::vector<Measure>& parts,
                                          Mode mode, const VerifyConfig& cfg) {
    if (parts.size() < 2)
        throw ArgumentError("verify_decomposition needs at least two parts");
    DecompositionVerdict v;
    for (const Measure& p : parts) v.trivial = v.trivial || p.is_dirac();

    try {
        Measure acc = parts[0];
        for (size_t i = 1; i < parts.size(); ++i) {
            acc = (mode == Mode::Additive ? free_add(acc, parts[i])
                                          : free_mult(acc, parts[i]))
                      .measure;
        }

        v.reconstruction_distance = levy_distance(acc, target);
        v.metric_checks.push_back(
            make_check("reconstruction_levy", v.reconstruction_distance, cfg.levy_tolerance));

        if (mode == Mode::Additive) {
            v.lambda_total = lambda_additive(target, cfg.lambda);
            for (const Measure& p : parts) v.lambda_parts_sum += lambda_additive(p, cfg.lambda);
        } else {
            // The S-transform of a measure with mass p0 at zero only exists on
            // (p0 - 1, 0), so shrink the normalization points to fit every
            // measure involved while keeping the configured gamma/beta ratio.
            double cap = 1.0 - target.mass_at_zero();
            for (const Measure& p : parts) cap = std::min(cap, 1.0 - p.mass_at_zero());
            const double beta = std::min(cfg.beta_norm, 0.5 * cap);
            const double gamma = beta * (cfg.gamma / cfg.beta_norm);
            v.lambda_total = lambda_mult(target, beta, gamma);
            for (const Measure& p : parts) v.lambda_parts_sum += lambda_mult(p, beta, gamma);
        }
        v.metric_checks.push_back(
            make_check("lambda_additivity", std::abs(v.lambda_total - v.lambda_parts_sum),
                       cfg.lambda_tolerance * (1.0 + std::abs(v.lambda_total))));

        auto [loc_rt, mass_rt] = atom_mismatch(acc.atoms(), target.atoms());
        auto [loc_tr, mass_tr] = atom_mismatch(target.atoms(), acc.atoms());
        v.atom_checks.push_back(
            make_check("atom_locations", std::max(loc_rt, loc_tr), 2.0 * cfg.grid_slack));
        v.atom_checks.push_back(
            make_check("atom_masses", std::max(mass_rt, mass_tr), 0.01));

        // Support hull of the parts bounds the convolution.
        double hull_lo, hull_hi;
        if (mode == Mode::Additive) {
            hull_lo = 0.0;
            hull_hi = 0.0;
            for (const Measure& p : parts) {
                const Interval s = support_interval(p);
                hull_lo += s.lo;
                hull_hi += s.hi;
            }
        } else {
            hull_lo = 1.0;
            hull_hi = 1.0;
            for (const Measure& p : parts) {
                const Interval s = support_interval(p);
                hull_lo *= s.lo;
                hull_hi *= s.hi;
            }
        }
        const Interval st = support_interval(target);
        const Interval sa = support_interval(acc);
        const double hull_excess =
            std::max({0.0, hull_lo - st.lo, st.hi - hull_hi, hull_lo - sa.lo, sa.hi - hull_hi});
        v.support_checks.push_back(make_check("support_hull", hull_excess, cfg.grid_slack));

        // Diameter never shrinks under convolution with another measure.
        if (mode == Mode::Additive) {
            double excess = 0.0;
            for (const Measure& p : parts)
                excess = std::max(excess, support_diameter(p) - support_diameter(target));
            v.support_checks.push_back(make_check("diameter", excess, cfg.grid_slack));

            if (parts.size() == 2) {
                double omega_excess = 0.0;
                for (double eps : {0.05, 0.1, 0.2}) {
                    const Interval w = omega_interval(target, eps);
                    const Interval w1 = omega_interval(parts[0], eps / 2.0);
                    const Interval w2 = omega_interval(parts[1], eps / 2.0);
                    omega_excess = std::max({omega_excess, (w1.lo + w2.lo) - w.lo,
                                             w.hi - (w1.hi + w2.hi)});
                }
                v.support_checks.push_back(
                    make_check("omega_containment", std::max(0.0, omega_excess), cfg.grid_slack));
            }
        } else {
            bool zero_free = st.lo > 0.0;
            for (const Measure& p : parts) zero_free = zero_free && support_interval(p).lo > 0.0;
            if (zero_free) {
                double excess = 0.0;
                for (const Measure& p : parts)
                    excess = std::max(excess, log_diameter(p) - log_diameter(target));
                v.support_checks.push_back(make_check("log_diameter", excess, cfg.grid_slack));
            }
        }
    } catch (const std::exception& e) {
        v.accepted = false;
        v.cause = e.what();
        return v;
    }

    v.accepted = true;
    for (const auto* list : {&v.metric_checks, &v.atom_checks, &v.support_checks})
        for (const CheckResult& c : *list) v.accepted = v.accepted && c.pass;
    return v;
}

Certificate indecomposable_certificate(const Measure& m) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("indecomposable_certificate works on real-line measures");
    const Interval s = support_interval(m);
    const double tol = 1e-9 * std::max({1.0, std::abs(s.lo), std::abs(s.hi)});
    bool lo_atom = false, hi_atom = false;
    for (const Atom& a : m.atoms()) {
        if (a.mass < kAtomThreshold) continue;
        lo_atom = lo_atom || std::abs(a.x - s.lo) <= tol;
        hi_atom = hi_atom || std::abs(a.x - s.hi) <= tol;
    }
    return (lo_atom && hi_atom) ? Certificate::Certified : Certificate::Inconclusive;
}

std::pair<Measure, SemigroupReport> bernoulli_semigroup(double t, Eigen::ArrayXd grid) {
    if (!(t >= 1.0 && t <= 2.5))
        throw ArgumentError("bernoulli_semigroup expects t in [1, 2.5]");

    const Measure mt = free_power(bernoulli(), t, std::move(grid)).measure;

    SemigroupReport rep;
    rep.t = t;
    rep.atoms = mt.atoms();
    rep.expected_atom_location = t;
    rep.expected_atom_mass = std::max(0.0, 0.5 * (2.0 - t));
    rep.expected_ac_halfwidth = 2.0 * std::sqrt(t - 1.0);

    if (mt.has_ac() && mt.ac_mass() > kAtomThreshold) {
        const Eigen::ArrayXd& g = mt.ac_grid();
        const Eigen::ArrayXd& v = mt.ac_values();
        const double floor = 1e-4 * v.maxCoeff();
        Eigen::Index i0 = 0, i1 = v.size() - 1;
        while (i0 < v.size() && v(i0) <= floor) ++i0;
        while (i1 > i0 && v(i1) <= floor) --i1;
        rep.ac_support = Interval(g(std::max<Eigen::Index>(0, i0 - 1)),
                                  g(std::min(g.size() - 1, i1 + 1)));
        rep.ac_support_error = std::max(std::abs(rep.ac_support.lo + rep.expected_ac_halfwidth),
                                        std::abs(rep.ac_support.hi - rep.expected_ac_halfwidth));
    } else {
        rep.ac_support_error = rep.expected_ac_halfwidth;
    }

    if (rep.expected_atom_mass >= kAtomThreshold) {
        for (double loc : {-t, t}) {
            double best = std::numeric_limits<double>::infinity();
            double mass_err = rep.expected_atom_mass;
            for (const Atom& a : rep.atoms) {
                const double d = std::abs(a.x - loc);
                if (d < best) {
                    best = d;
                    mass_err = std::abs(a.mass - rep.expected_atom_mass);
                }
            }
            rep.max_atom_location_error = std::max(rep.max_atom_location_error, best);
            rep.max_atom_mass_error = std::max(rep.max_atom_mass_error, mass_err);
        }
    } else {
        for (const Atom& a : rep.atoms)
            rep.max_atom_mass_error = std::max(rep.max_atom_mass_error, a.mass);
    }
    return {mt, rep};
}

}  // namespace freeconv
