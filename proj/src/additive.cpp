#include "freeconv/additive.hpp"

#include "freeconv/errors.hpp"
#include "freeconv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

namespace freeconv {

namespace {

constexpr int kFixedPointCap = 10000;
constexpr double kAtomThreshold = 1e-3;
constexpr double kMassDefectCap = 1e-3;
constexpr double kTrimBudget = 1.5e-3;       // max mass removable as edge bleed
constexpr double kOutsideDecayRatio = 0.85;  // -Im G eps-decay marking "off support"

bool line_measure(const Measure& m) { return m.domain() != Domain::UnitCircle; }

}  // namespace

SubordinationSolution subordinators(const Measure& m1, const Measure& m2, Complex z,
                                    std::optional<Complex> warm) {
    if (!line_measure(m1) || !line_measure(m2))
        throw DomainError("subordinators: line measures only");
    if (!(z.imag() > 0.0)) throw DomainError("subordinators: need Im z > 0");

    SubordinationSolution sol;
    sol.z = z;

    // Dirac factors shift exactly; no iteration needed.
    if (m1.is_dirac() || m2.is_dirac()) {
        const bool first = m1.is_dirac();
        const double c = first ? m1.atoms()[0].x : m2.atoms()[0].x;
        const Measure& other = first ? m2 : m1;
        const Complex f = f_transform(other, z - c);
        const Complex omega_other = z - c;
        const Complex omega_dirac = f + c;
        sol.omega1 = first ? omega_dirac : omega_other;
        sol.omega2 = first ? omega_other : omega_dirac;
        sol.f_value = f;
        sol.residual = 0.0;
        sol.iterations = 0;
        return sol;
    }

    auto h1 = [&](Complex w) { return f_transform(m1, w) - w; };
    auto h2 = [&](Complex w) { return f_transform(m2, w) - w; };
    auto step = [&](Complex w) { return z + h1(z + h2(w)); };

    Complex w = warm.value_or(z);
    if (!(w.imag() >= z.imag())) w = z;

    // Picard iteration with Aitken extrapolation.  Near the real axis the
    // map's multiplier approaches modulus one (often with a rotation), so the
    // plain iterate contracts arbitrarily slowly; the delta-squared point
    // removes the dominant geometric mode.  It is accepted only when it stays
    // in the half-plane {Im w >= Im z} and reduces the one-step residual, so
    // the safeguarded scheme never does worse than two plain steps.
    //
    // The tolerance must scale with the iterate, not just with z: inside a
    // spectral gap |w| can reach 1/Im z while z itself stays small, and the
    // rounding floor of one map evaluation grows with |w|.  A tolerance blind
    // to |w| is then unreachable and the loop spins at the fixed point.
    const double tol0 = 1e-12 * (1.0 + std::abs(z));
    bool restarted = false;
    bool converged = false;
    int it = 0;
    double best_delta = std::numeric_limits<double>::infinity();
    int best_it = 0;
    while (it < kFixedPointCap) {
        // A warm start from a neighbouring problem is only a hint; if it has
        // not paid off in a reasonable budget, fall back to the cold start.
        if (!restarted && warm && it >= 2000) {
            w = z;
            restarted = true;
        }
        const double tol = tol0 + 5e-13 * std::abs(w);
        const Complex t1 = step(w);
        ++it;
        const double r1 = std::abs(t1 - w);
        if (r1 <= tol) {
            w = t1;
            converged = true;
            break;
        }
        // Stagnation exit: hopping inside the rounding-noise basin of the
        // fixed point produces no sustained progress; stop and let the
        // residual check decide rather than spinning to the cap.
        if (r1 < best_delta) {
            best_delta = r1;
            best_it = it;
        } else if (it - best_it > 1500) {
            w = t1;
            break;
        }
        const Complex t2 = step(t1);
        ++it;
        const double r2 = std::abs(t2 - t1);
        if (r2 <= tol) {
            w = t2;
            converged = true;
            break;
        }
        Complex next = t2;
        const Complex d = (t2 - t1) - (t1 - w);
        if (std::abs(d) > 0.0) {
            const Complex a = w - (t1 - w) * (t1 - w) / d;
            if (a.imag() >= z.imag()) {
                const Complex sa = step(a);
                ++it;
                if (std::abs(sa - a) < r2) next = sa;
            }
        }
        w = next;
    }
    const Complex omega2 = w;
    const Complex omega1 = z + h2(omega2);
    const Complex f = f_transform(m1, omega1);
    sol.omega1 = omega1;
    sol.omega2 = omega2;
    sol.f_value = f;
    sol.residual = std::abs(omega1 + omega2 - z - f);
    sol.iterations = it;
    if (!converged && sol.residual > 1e-8 * (1.0 + std::abs(z)))
        throw SolverError("subordinators: fixed point did not converge", sol.residual, it);
    return sol;
}

std::vector<Atom> predict_atoms(const Measure& m1, const Measure& m2) {
    if (!line_measure(m1) || !line_measure(m2))
        throw DomainError("predict_atoms: line measures only");
    std::vector<Atom> out;
    if (m1.is_dirac() || m2.is_dirac()) {
        const bool first = m1.is_dirac();
        const double c = first ? m1.atoms()[0].x : m2.atoms()[0].x;
        for (const auto& a : (first ? m2 : m1).atoms())
            out.push_back({a.x + c, a.mass});
        return out;
    }
    for (const auto& a : m1.atoms())
        for (const auto& b : m2.atoms())
            if (a.mass + b.mass > 1.0)
                out.push_back({a.x + b.x, a.mass + b.mass - 1.0});
    std::sort(out.begin(), out.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    return out;
}

const std::vector<double>& default_epsilon_schedule() {
    static const std::vector<double> s{1e-2, 5e-3, 2.5e-3};
    return s;
}

Eigen::ArrayXd hull_grid(double lo, double hi, int n) {
    if (!(lo < hi)) throw ArgumentError("hull_grid: empty interval");
    if (n < 2) throw ArgumentError("hull_grid: need at least two nodes");
    const double pad = 0.05 * (hi - lo);
    Eigen::ArrayXd g(n);
    for (int i = 0; i < n; ++i)
        g(i) = (lo - pad) + (hi - lo + 2.0 * pad) * i / (n - 1);
    return g;
}

Eigen::ArrayXd default_additive_grid(const Measure& m1, const Measure& m2, int n) {
    const Interval s1 = support_interval(m1);
    const Interval s2 = support_interval(m2);
    double lo = s1.lo + s2.lo, hi = s1.hi + s2.hi;
    if (hi - lo < 1e-6) {  // near-Dirac output; open a small window
        const double c = 0.5 * (lo + hi);
        lo = c - 0.5;
        hi = c + 0.5;
    }
    return hull_grid(lo, hi, n);
}

namespace {

// Affine-in-eps extrapolation from the two finest levels; with a halving
// schedule this cancels the linear Poisson-smoothing term.
double extrapolate(double v_coarse, double eps_coarse, double v_fine, double eps_fine) {
    return (eps_coarse * v_fine - eps_fine * v_coarse) / (eps_coarse - eps_fine);
}

struct BoundaryTable {
    Eigen::ArrayXd grid;
    std::vector<double> eps;                // descending
    std::vector<Eigen::ArrayXcd> values;    // values[k](i) = G(x_i + i eps_k)
};

BoundaryTable evaluate_boundary(const BoundaryEvaluator& g, const Eigen::ArrayXd& grid,
                                std::vector<double> eps) {
    std::sort(eps.begin(), eps.end(), std::greater<double>());
    if (eps.size() < 2) throw ArgumentError("recover_from_boundary: need >= 2 eps levels");
    for (double e : eps)
        if (!(e > 0.0)) throw ArgumentError("recover_from_boundary: eps must be positive");

    BoundaryTable tab;
    tab.grid = grid;
    tab.eps = std::move(eps);
    tab.values.assign(tab.eps.size(), Eigen::ArrayXcd(grid.size()));
    parallel_for_chunks(static_cast<std::size_t>(grid.size()), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t k = 0; k < tab.eps.size(); ++k)
                tab.values[k](static_cast<Eigen::Index>(i)) =
                    g(grid(static_cast<Eigen::Index>(i)), tab.eps[k]);
    });
    return tab;
}

}  // namespace

Measure recover_from_boundary(const BoundaryEvaluator& g, const Eigen::ArrayXd& grid,
                              const std::vector<double>& eps_schedule,
                              const std::vector<Atom>& atom_seeds,
                              ConvolutionReport* report) {
    if (grid.size() < 3) throw ArgumentError("recover_from_boundary: grid too small");
    const BoundaryTable tab = evaluate_boundary(g, grid, eps_schedule);
    const std::size_t K = tab.eps.size();
    const double e1 = tab.eps[K - 2], e2 = tab.eps[K - 1];  // two finest
    const double pi = std::numbers::pi;

    ConvolutionReport rep;
    rep.grid = grid;
    rep.epsilon_schedule = tab.eps;

    const Eigen::Index n = grid.size();
    Eigen::ArrayXd density(n);

    // atom candidates: seeds plus grid points where eps * Im G refuses to
    // decay between the two finest levels.  A confirmed seed keeps the mass
    // it was seeded with (the closed-form value); the boundary estimate only
    // decides presence, because near a hard spectral edge the estimate picks
    // up an O(sqrt(eps)) bias that the closed form does not have.
    std::vector<Atom> atoms;
    auto mass_estimate_at = [&](double x) {
        const Complex g1 = g(x, e1), g2 = g(x, e2);
        return extrapolate(-e1 * g1.imag(), e1, -e2 * g2.imag(), e2);
    };
    for (const auto& seed : atom_seeds) {
        const double mass = mass_estimate_at(seed.x);
        if (mass >= kAtomThreshold) {
            atoms.push_back({seed.x, seed.mass});
            rep.atom_candidates.push_back({seed.x, seed.mass, AtomCandidate::Source::Predicted});
        }
    }
    // detection sweep (skip points already claimed by a seed)
    const double cell = (grid(n - 1) - grid(0)) / double(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = grid(i);
        bool near_seed = false;
        for (const auto& a : atoms)
            if (std::abs(a.x - x) <= std::max(2.0 * cell, 4.0 * e2)) near_seed = true;
        if (near_seed) continue;
        const double me1 = -e1 * tab.values[K - 2](i).imag();
        const double me2 = -e2 * tab.values[K - 1](i).imag();
        if (me1 <= 0.0) continue;
        const double ratio = me2 / me1;
        if (ratio < 0.75) continue;  // decaying like eps: no atom here
        const double mass = extrapolate(me1, e1, me2, e2);
        if (mass < kAtomThreshold) continue;
        // keep only the local peak of a flagged cluster
        bool peak = true;
        if (i > 0) {
            const double l = -e2 * tab.values[K - 1](i - 1).imag();
            if (l > me2) peak = false;
        }
        if (i + 1 < n) {
            const double r = -e2 * tab.values[K - 1](i + 1).imag();
            if (r >= me2) peak = false;
        }
        if (!peak) continue;
        atoms.push_back({x, mass});
        rep.atom_candidates.push_back({x, mass, AtomCandidate::Source::Detected});
    }

    // deflate: subtract each atom's Cauchy kernel from G before extracting
    // the continuous density, so the Lorentzian residue of the atoms does not
    // double-count and the continuous part survives right next to an atom
    Eigen::ArrayXd neg_im1(n), neg_im2(n);  // -Im G_ac at the two finest eps
    double min_density = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = grid(i);
        double im1 = tab.values[K - 2](i).imag();
        double im2 = tab.values[K - 1](i).imag();
        for (const auto& a : atoms) {
            const double dx = x - a.x;
            im1 += a.mass * e1 / (dx * dx + e1 * e1);
            im2 += a.mass * e2 / (dx * dx + e2 * e2);
        }
        neg_im1(i) = -im1;
        neg_im2(i) = -im2;
        const double v = extrapolate(-im1 / pi, e1, -im2 / pi, e2);
        min_density = std::min(min_density, v);
        density(i) = std::max(0.0, v);
    }
    rep.min_density_seen = min_density;
    rep.negative_density_warning = min_density < -1e-3;

    // trim smoothing bleed off the support ends: a node genuinely outside the
    // support has -Im G decaying roughly linearly in eps (ratio ~ 1/2 between
    // the two finest levels), while interior nodes hold a stable limit.  Walk
    // inward from each end zeroing such nodes, spending at most a small mass
    // budget, and stop at the first node that looks like real support.
    auto looks_outside = [&](Eigen::Index i) {
        if (neg_im1(i) <= 0.0 || neg_im2(i) <= 0.0) return true;
        return neg_im2(i) / neg_im1(i) < kOutsideDecayRatio;
    };
    double trimmed = 0.0;
    double end_budget = kTrimBudget;  // each end gets its own budget
    for (Eigen::Index i = 0; i < n; ++i) {
        if (density(i) == 0.0) continue;
        const double share = density(i) * cell;
        if (!looks_outside(i) || share > end_budget) break;
        end_budget -= share;
        trimmed += share;
        density(i) = 0.0;
    }
    end_budget = kTrimBudget;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        if (density(i) == 0.0) continue;
        const double share = density(i) * cell;
        if (!looks_outside(i) || share > end_budget) break;
        end_budget -= share;
        trimmed += share;
        density(i) = 0.0;
    }
    rep.trimmed_mass = trimmed;

    double atom_mass = 0.0;
    for (const auto& a : atoms) atom_mass += a.mass;
    double ac_mass = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        ac_mass += 0.5 * (density(i) + density(i + 1)) * (grid(i + 1) - grid(i));
    rep.mass_defect = std::abs(1.0 - atom_mass - ac_mass - trimmed);
    if (rep.mass_defect > kMassDefectCap)
        throw ResolutionError("recover_from_boundary: mass defect above 1e-3; "
                              "refine the grid or epsilon schedule",
                              rep.mass_defect);

    Measure out = Measure::make(Domain::RealLine, atoms, grid, density);
    if (report) *report = std::move(rep);  // max_residual is set by the caller
    return out;
}

Measure stieltjes_invert(const TransformEvaluator& evaluator, const Eigen::ArrayXd& grid,
                         const std::vector<double>& eps_schedule,
                         ConvolutionReport* report) {
    if (evaluator.kind() != TransformKind::G)
        throw ArgumentError("stieltjes_invert: evaluator must be Cauchy-kind");
    auto g = [&](double x, double eps) { return evaluator(Complex(x, eps)); };
    return recover_from_boundary(g, grid, eps_schedule, {}, report);
}

ConvolutionResult free_add(const Measure& m1, const Measure& m2, Eigen::ArrayXd grid,
                           std::vector<double> eps_schedule) {
    if (!line_measure(m1) || !line_measure(m2))
        throw DomainError("free_add: line measures only");

    ConvolutionResult out;

    // Dirac summand: exact translation
    if (m1.is_dirac() || m2.is_dirac()) {
        const bool first = m1.is_dirac();
        const double c = first ? m1.atoms()[0].x : m2.atoms()[0].x;
        const Measure& other = first ? m2 : m1;
        Measure shifted = [&] {
            if (other.domain() == Domain::RealLine) return shift(other, c);
            // positive-halfline inputs are treated on the real line here
            std::vector<Atom> atoms = other.atoms();
            for (auto& a : atoms) a.x += c;
            return Measure::make(Domain::RealLine, std::move(atoms),
                                 other.ac_grid() + c, other.ac_values());
        }();
        out.report.epsilon_schedule = eps_schedule;
        for (const auto& a : shifted.atoms())
            out.report.atom_candidates.push_back({a.x, a.mass, AtomCandidate::Source::Predicted});
        out.measure = std::move(shifted);
        return out;
    }

    if (grid.size() == 0) grid = default_additive_grid(m1, m2);

    const std::vector<Atom> seeds = predict_atoms(m1, m2);
    double max_residual = 0.0;
    std::mutex residual_mutex;

    // one warm-started sweep per execution lane
    auto g = [&](double x, double eps) {
        thread_local std::optional<Complex> warm;
        const Complex z(x, eps);
        SubordinationSolution sol = subordinators(m1, m2, z, warm);
        warm = sol.omega2;
        {
            std::lock_guard<std::mutex> lock(residual_mutex);
            max_residual = std::max(max_residual, sol.residual);
        }
        return 1.0 / sol.f_value;
    };

    out.measure = recover_from_boundary(g, grid, eps_schedule, seeds, &out.report);
    out.report.max_residual = max_residual;
    return out;
}

namespace {

Complex f_power_core(const Measure& m, double t, Complex z,
                     std::optional<Complex> warm, Complex* v_out) {
    if (!(t >= 1.0)) throw ArgumentError("f_transform_power: need t >= 1");
    if (!(z.imag() > 0.0)) throw DomainError("f_transform_power: need Im z > 0");
    if (t == 1.0) {
        if (v_out) *v_out = z;
        return f_transform(m, z);
    }

    // solve t v - (t-1) F(v) = z for v in the upper half-plane; the map
    // v -> (z + (t-1) F(v))/t is a strict half-plane contraction
    Complex v = warm.value_or(z);
    if (!(v.imag() > 0.0)) v = z;
    const double tol = 1e-12 * (1.0 + std::abs(z));
    auto val = [&](Complex w) { return t * w - (t - 1.0) * f_transform(m, w) - z; };
    double res = std::abs(val(v));
    for (int it = 0; it < kFixedPointCap && res > tol; ++it) {
        const Complex vp = (z + (t - 1.0) * f_transform(m, v)) / t;
        v = vp;
        res = std::abs(val(v));
        if (it > 40 && it % 8 == 0) {
            // Newton acceleration once the Picard phase has settled
            const Complex d = t - (t - 1.0) * f_derivative(m, v);
            if (std::abs(d) > 0.0) {
                const Complex vn = v - val(v) / d;
                if (vn.imag() > 0.0 && std::abs(val(vn)) < res) {
                    v = vn;
                    res = std::abs(val(v));
                }
            }
        }
    }
    if (res > 1e-8 * (1.0 + std::abs(z)))
        throw SolverError("f_transform_power: continuation did not converge", res, kFixedPointCap);
    if (v_out) *v_out = v;
    return f_transform(m, v);
}

}  // namespace

Complex f_transform_power(const Measure& m, double t, Complex z,
                          std::optional<Complex> warm) {
    return f_power_core(m, t, z, warm, nullptr);
}

ConvolutionResult free_power(const Measure& m, double t, Eigen::ArrayXd grid,
                             std::vector<double> eps_schedule) {
    if (!line_measure(m)) throw DomainError("free_power: line measures only");
    if (!(t >= 1.0)) throw ArgumentError("free_power: need t >= 1");

    ConvolutionResult out;
    if (t == 1.0) {
        out.measure = m;
        out.report.epsilon_schedule = eps_schedule;
        return out;
    }

    if (grid.size() == 0) {
        const Interval s = support_interval(m);
        double lo = t * s.lo, hi = t * s.hi;
        if (hi - lo < 1e-6) {
            const double c = 0.5 * (lo + hi);
            lo = c - 0.5;
            hi = c + 0.5;
        }
        grid = hull_grid(lo, hi);
    }

    // an atom at a of mass p survives at t*a with mass 1 - t(1-p) when positive
    std::vector<Atom> seeds;
    for (const auto& a : m.atoms()) {
        const double mass = 1.0 - t * (1.0 - a.mass);
        if (mass > 0.0) seeds.push_back({t * a.x, mass});
    }

    auto g = [&](double x, double eps) {
        thread_local std::optional<Complex> warm;
        const Complex z(x, eps);
        Complex v = z;
        const Complex F = f_power_core(m, t, z, warm, &v);
        warm = v;
        return 1.0 / F;
    };

    out.measure = recover_from_boundary(g, grid, eps_schedule, seeds, &out.report);
    return out;
}

}  // namespace freeconv
