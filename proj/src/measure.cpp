#include "freeconv/measure.hpp"

#include "freeconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace freeconv {

namespace {

constexpr double kAtomMergeEps = 1e-12;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double interp_value(const Eigen::ArrayXd& grid, const Eigen::ArrayXd& values, double x) {
    const auto n = grid.size();
    if (n < 2 || x < grid(0) || x > grid(n - 1)) return 0.0;
    // rightmost cell with grid[i] <= x
    const double* begin = grid.data();
    const double* it = std::upper_bound(begin, begin + n, x);
    Eigen::Index i = std::max<Eigen::Index>(0, (it - begin) - 1);
    if (i >= n - 1) i = n - 2;
    const double h = grid(i + 1) - grid(i);
    const double s = (x - grid(i)) / h;
    return values(i) * (1.0 - s) + values(i + 1) * s;
}

}  // namespace

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo <= hi)) throw ArgumentError("Interval: lo must not exceed hi");
}

Measure Measure::make(Domain domain, std::vector<Atom> atoms,
                      Eigen::ArrayXd ac_grid, Eigen::ArrayXd ac_values,
                      ConstructionReport* report) {
    ConstructionReport rep;

    if (ac_grid.size() != ac_values.size())
        throw ArgumentError("Measure: grid/values length mismatch");
    if (ac_grid.size() == 1)
        throw ArgumentError("Measure: density grid needs at least two nodes");
    for (Eigen::Index i = 0; i + 1 < ac_grid.size(); ++i)
        if (!(ac_grid(i) < ac_grid(i + 1)))
            throw ArgumentError("Measure: density grid must be strictly increasing");
    for (Eigen::Index i = 0; i < ac_values.size(); ++i) {
        if (!std::isfinite(ac_values(i)) || ac_values(i) < 0.0)
            throw ArgumentError("Measure: density values must be finite and nonnegative");
    }

    for (auto& a : atoms) {
        if (!std::isfinite(a.x) || !std::isfinite(a.mass) || a.mass <= 0.0)
            throw ArgumentError("Measure: atom masses must be positive and finite");
        if (domain == Domain::UnitCircle) {
            a.x = std::fmod(a.x, kTwoPi);
            if (a.x < 0.0) a.x += kTwoPi;
        }
    }
    if (domain == Domain::PositiveHalfline) {
        for (const auto& a : atoms)
            if (a.x < 0.0) throw ArgumentError("Measure: positive-halfline atom below 0");
        if (ac_grid.size() > 0 && ac_grid(0) < 0.0)
            throw ArgumentError("Measure: positive-halfline density grid below 0");
    }
    if (domain == Domain::UnitCircle && ac_grid.size() > 0) {
        if (ac_grid(0) < 0.0 || ac_grid(ac_grid.size() - 1) > kTwoPi)
            throw ArgumentError("Measure: circle density grid must lie in [0, 2pi]");
    }

    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.x < b.x; });
    std::vector<Atom> merged;
    merged.reserve(atoms.size());
    for (const auto& a : atoms) {
        if (!merged.empty() && a.x - merged.back().x <= kAtomMergeEps) {
            merged.back().mass += a.mass;
            ++rep.merged_atoms;
        } else {
            merged.push_back(a);
        }
    }

    Measure m;
    m.domain_ = domain;
    m.atoms_ = std::move(merged);
    m.grid_ = std::move(ac_grid);
    m.values_ = std::move(ac_values);

    // cumulative trapezoid over the density grid
    m.cum_.resize(m.grid_.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m.grid_.size(); ++i) {
        if (i > 0)
            acc += 0.5 * (m.values_(i - 1) + m.values_(i)) * (m.grid_(i) - m.grid_(i - 1));
        m.cum_(i) = acc;
    }

    double total = acc;
    for (const auto& a : m.atoms_) total += a.mass;
    rep.total_mass_before = total;
    if (!(total > 0.0) || !std::isfinite(total))
        throw ArgumentError("Measure: total mass must be positive and finite");

    rep.renormalization = total;
    if (std::abs(total - 1.0) > 0.0) {
        for (auto& a : m.atoms_) a.mass /= total;
        m.values_ /= total;
        m.cum_ /= total;
    }
    if (report) *report = rep;
    return m;
}

double Measure::atom_mass() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.mass;
    return s;
}

double Measure::ac_mass() const {
    return cum_.size() > 0 ? cum_(cum_.size() - 1) : 0.0;
}

double Measure::atom_mass_at(double x, double tol) const {
    double s = 0.0;
    for (const auto& a : atoms_)
        if (std::abs(a.x - x) <= tol) s += a.mass;
    return s;
}

bool Measure::is_dirac(double tol) const {
    return atoms_.size() == 1 && atoms_[0].mass >= 1.0 - tol;
}

double Measure::density(double x) const { return interp_value(grid_, values_, x); }

double Measure::ac_integral_up_to(double t) const {
    const auto n = grid_.size();
    if (n < 2 || t <= grid_(0)) return 0.0;
    if (t >= grid_(n - 1)) return cum_(n - 1);
    const double* begin = grid_.data();
    const double* it = std::upper_bound(begin, begin + n, t);
    Eigen::Index i = (it - begin) - 1;
    const double h = grid_(i + 1) - grid_(i);
    const double s = t - grid_(i);
    const double slope = (values_(i + 1) - values_(i)) / h;
    return cum_(i) + values_(i) * s + 0.5 * slope * s * s;
}

double cdf(const Measure& m, double t) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("cdf: circle measures have no linear-order CDF");
    double s = m.ac_integral_up_to(t);
    for (const auto& a : m.atoms())
        if (a.x <= t) s += a.mass;
    return s;
}

double cdf_left(const Measure& m, double t) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("cdf: circle measures have no linear-order CDF");
    double s = m.ac_integral_up_to(t);
    for (const auto& a : m.atoms())
        if (a.x < t) s += a.mass;
    return s;
}

namespace {

// Shared sweep for the two quantile variants. Walks atoms and grid nodes
// in order; inside a cell the accumulated mass is quadratic in position,
// solved in the stable 2c/(b+sqrt(..)) form.
double quantile_sweep(const Measure& m, double p, bool strict) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("quantile: circle measures have no linear-order CDF");
    if (!strict && !(p > 0.0 && p < 1.0))
        throw ArgumentError("quantile: level must be in (0,1)");
    if (strict && !(p >= 0.0 && p < 1.0))
        throw ArgumentError("quantile: level must be in [0,1)");

    std::vector<double> pos;
    pos.reserve(m.atoms().size() + m.ac_grid().size());
    for (const auto& a : m.atoms()) pos.push_back(a.x);
    for (Eigen::Index i = 0; i < m.ac_grid().size(); ++i) pos.push_back(m.ac_grid()(i));
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    if (pos.empty()) throw ArgumentError("quantile: empty measure");

    double acc = 0.0;
    for (std::size_t k = 0; k < pos.size(); ++k) {
        if (k > 0) {
            const double a = pos[k - 1], b = pos[k];
            const double seg = m.ac_integral_up_to(b) - m.ac_integral_up_to(a);
            if (seg > 0.0) {
                const double target = p - acc;
                const bool crosses = strict ? (acc + seg > p) : (acc + seg >= p);
                if (crosses) {
                    if (strict && target <= 0.0) return a;
                    const double va = m.density(a);
                    const double L = b - a;
                    const double slope = (m.density(b) - va) / L;
                    // va*s + slope*s^2/2 = target
                    const double A = 0.5 * slope;
                    double s;
                    const double disc = va * va + 4.0 * A * target;
                    const double root = std::sqrt(std::max(0.0, disc));
                    if (std::abs(A) < 1e-300)
                        s = target / va;
                    else
                        s = (va + root > 0.0) ? 2.0 * target / (va + root)
                                              : (-va + root) / (2.0 * A);
                    return a + std::clamp(s, 0.0, L);
                }
                acc += seg;
            }
        }
        const double am = m.atom_mass_at(pos[k]);
        if (am > 0.0) {
            acc += am;
            if (strict ? (acc > p) : (acc >= p)) return pos[k];
        }
    }
    return pos.back();
}

}  // namespace

double quantile(const Measure& m, double p) { return quantile_sweep(m, p, false); }
double quantile_strict(const Measure& m, double p) { return quantile_sweep(m, p, true); }

std::pair<Measure, double> t_center(const Measure& m, double t) {
    if (m.domain() != Domain::RealLine)
        throw DomainError("t_center: real-line measures only");
    if (!(t > 0.0 && t < 1.0)) throw ArgumentError("t_center: level must be in (0,1)");
    const double a = quantile(m, t);
    return {shift(m, -a), -a};
}

Measure shift(const Measure& m, double c) {
    if (m.domain() != Domain::RealLine)
        throw DomainError("shift: real-line measures only");
    std::vector<Atom> atoms = m.atoms();
    for (auto& a : atoms) a.x += c;
    return Measure::make(m.domain(), std::move(atoms), m.ac_grid() + c, m.ac_values());
}

Measure dilate(const Measure& m, double lam) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("dilate: use rotate for circle measures");
    if (!(lam > 0.0) || !std::isfinite(lam))
        throw ArgumentError("dilate: factor must be positive");
    std::vector<Atom> atoms = m.atoms();
    for (auto& a : atoms) a.x *= lam;
    return Measure::make(m.domain(), std::move(atoms), m.ac_grid() * lam,
                         m.ac_values() / lam);
}

namespace {

std::vector<double> breakpoints(const Measure& m) {
    std::vector<double> v;
    v.reserve(m.atoms().size() + m.ac_grid().size());
    for (const auto& a : m.atoms()) v.push_back(a.x);
    for (Eigen::Index i = 0; i < m.ac_grid().size(); ++i) v.push_back(m.ac_grid()(i));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// sup_t [ F_a(t - eps) - F_b(t) ]. Between candidate points both CDFs are
// quadratic, so the supremum sits at a candidate (either one-sided limit)
// or at the interior stationary point where the densities match.
double sup_shifted_gap(const Measure& a, const Measure& b, double eps) {
    std::vector<double> cand = breakpoints(b);
    for (double x : breakpoints(a)) cand.push_back(x + eps);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    double best = 0.0;
    auto consider = [&](double t) {
        best = std::max(best, cdf(a, t - eps) - cdf(b, t));
        best = std::max(best, cdf_left(a, t - eps) - cdf_left(b, t));
    };
    for (std::size_t i = 0; i < cand.size(); ++i) {
        consider(cand[i]);
        if (i + 1 < cand.size()) {
            const double t1 = cand[i], t2 = cand[i + 1];
            // stationary point: f_a(t-eps) = f_b(t), both linear on (t1,t2)
            const double mid = 0.5 * (t1 + t2);
            const double ga1 = a.density(t1 - eps), ga2 = a.density(t2 - eps);
            const double gb1 = b.density(t1), gb2 = b.density(t2);
            const double d1 = ga1 - gb1, d2 = ga2 - gb2;
            if ((d1 > 0.0) != (d2 > 0.0) && std::abs(d1 - d2) > 0.0) {
                const double s = d1 / (d1 - d2);
                const double t = t1 + s * (t2 - t1);
                if (t > t1 && t < t2) consider(t);
            }
            consider(mid);  // cheap extra guard
        }
    }
    return best;
}

}  // namespace

double levy_distance(const Measure& a, const Measure& b) {
    if (a.domain() == Domain::UnitCircle || b.domain() == Domain::UnitCircle)
        throw DomainError("levy_distance: circle measures have no linear-order CDF");
    auto ok = [&](double eps) {
        return sup_shifted_gap(a, b, eps) <= eps && sup_shifted_gap(b, a, eps) <= eps;
    };
    double lo = 0.0, hi = 1.0;  // eps = 1 always satisfies both bounds
    if (ok(0.0)) return 0.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? hi : lo) = mid;
        if (hi - lo <= 1e-9) break;
    }
    return hi;
}

double kolmogorov_distance(const Measure& a, const Measure& b) {
    if (a.domain() == Domain::UnitCircle || b.domain() == Domain::UnitCircle)
        throw DomainError("kolmogorov_distance: circle measures have no linear-order CDF");
    std::vector<double> cand = breakpoints(a);
    for (double x : breakpoints(b)) cand.push_back(x);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    double best = 0.0;
    auto consider = [&](double t) {
        best = std::max(best, std::abs(cdf(a, t) - cdf(b, t)));
        best = std::max(best, std::abs(cdf_left(a, t) - cdf_left(b, t)));
    };
    for (std::size_t i = 0; i < cand.size(); ++i) {
        consider(cand[i]);
        if (i + 1 < cand.size()) {
            const double t1 = cand[i], t2 = cand[i + 1];
            const double d1 = a.density(t1) - b.density(t1);
            const double d2 = a.density(t2) - b.density(t2);
            if ((d1 > 0.0) != (d2 > 0.0) && std::abs(d1 - d2) > 0.0) {
                const double s = d1 / (d1 - d2);
                const double t = t1 + s * (t2 - t1);
                if (t > t1 && t < t2) consider(t);
            }
        }
    }
    return best;
}

double kolmogorov_distance_to(const Measure& a,
                              const std::function<double(double)>& cdf_fn,
                              int probes) {
    std::vector<double> cand = breakpoints(a);
    if (cand.empty()) throw ArgumentError("kolmogorov_distance_to: empty measure");
    const double lo = cand.front(), hi = cand.back();
    const double pad = 0.05 * std::max(1.0, hi - lo);
    for (int i = 0; i <= probes; ++i)
        cand.push_back(lo - pad + (hi - lo + 2 * pad) * i / probes);
    std::sort(cand.begin(), cand.end());
    double best = 0.0;
    for (double t : cand) {
        best = std::max(best, std::abs(cdf(a, t) - cdf_fn(t)));
        // Left limits must be compared to left limits, or a jump shared by
        // both sides would read as a spurious distance of its full height.
        const double t_minus = std::nextafter(t, -std::numeric_limits<double>::infinity());
        best = std::max(best, std::abs(cdf_left(a, t) - cdf_fn(t_minus)));
    }
    return best;
}

Interval omega_interval(const Measure& m, double eps) {
    if (!(eps > 0.0 && eps < 0.5))
        throw ArgumentError("omega_interval: eps must be in (0, 1/2)");
    const double lo = quantile_strict(m, eps);
    const double hi = quantile(m, 1.0 - eps);
    if (lo > hi) {
        // empty middle region; collapse to the crossing point
        return Interval(hi, hi);
    }
    return Interval(lo, hi);
}

Interval support_interval(const Measure& m) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& a : m.atoms()) {
        lo = std::min(lo, a.x);
        hi = std::max(hi, a.x);
    }
    const auto& g = m.ac_grid();
    const auto& v = m.ac_values();
    for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
        if (v(i) > 0.0 || v(i + 1) > 0.0) {
            lo = std::min(lo, g(i));
            hi = std::max(hi, g(i + 1));
        }
    }
    if (!(lo <= hi)) throw ArgumentError("support_interval: empty support");
    return Interval(lo, hi);
}

double support_diameter(const Measure& m) {
    const Interval s = support_interval(m);
    return s.length();
}

double log_diameter(const Measure& m) {
    if (m.domain() != Domain::PositiveHalfline)
        throw DomainError("log_diameter: positive-halfline measures only");
    const Interval s = support_interval(m);
    if (s.lo <= 0.0) return std::numeric_limits<double>::infinity();
    return std::log(s.hi) - std::log(s.lo);
}

std::complex<double> moment(const Measure& m, int k) {
    if (k < 0) throw ArgumentError("moment: order must be nonnegative");
    if (m.domain() == Domain::UnitCircle) {
        std::complex<double> s = 0.0;
        const std::complex<double> I(0.0, 1.0);
        for (const auto& a : m.atoms()) s += a.mass * std::exp(I * (double(k) * a.x));
        const auto& g = m.ac_grid();
        const auto& v = m.ac_values();
        if (k == 0) {
            s += m.ac_mass();
        } else {
            // exact per-cell integral of exp(ik t)(a + b t)
            const double kk = k;
            auto anti = [&](double a0, double b0, double t) {
                return std::exp(I * (kk * t)) *
                       (-I * (a0 + b0 * t) / kk + b0 / (kk * kk));
            };
            for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
                const double h = g(i + 1) - g(i);
                const double b0 = (v(i + 1) - v(i)) / h;
                const double a0 = v(i) - b0 * g(i);
                s += anti(a0, b0, g(i + 1)) - anti(a0, b0, g(i));
            }
        }
        return s;
    }
    double s = 0.0;
    for (const auto& a : m.atoms()) s += a.mass * std::pow(a.x, k);
    const auto& g = m.ac_grid();
    const auto& v = m.ac_values();
    for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
        const double h = g(i + 1) - g(i);
        s += 0.5 * h * (std::pow(g(i), k) * v(i) + std::pow(g(i + 1), k) * v(i + 1));
    }
    return s;
}

double real_moment(const Measure& m, int k) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("real_moment: circle moments are complex");
    return moment(m, k).real();
}

}  // namespace freeconv
