#include "freeconv/transforms.hpp"

#include "freeconv/additive.hpp"
#include "freeconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace freeconv {

namespace {

// log((z - x1)/(z - x2)) for one density cell. Both z - x1 and z - x2 lie
// in the same half-plane (or on the same real ray side), so the principal
// log of the ratio equals the path integral. When the cell is narrow
// relative to its distance from z the ratio is ~1 and the direct log only
// carries absolute (not relative) accuracy, which steep cells then amplify
// through the (a + b z) factor; rewrite as log1p(h/(z - x2)) there.
Complex cell_log_ratio(double x1, double x2, Complex z) {
    const Complex q = (x2 - x1) / (z - x2);
    const double qr = q.real(), qi = q.imag();
    if (qr * qr + qi * qi <= 0.25) {
        const double n2 = 2.0 * qr + qr * qr + qi * qi;  // |1+q|^2 - 1
        return Complex(0.5 * std::log1p(n2), std::atan2(qi, 1.0 + qr));
    }
    return std::log((z - x1) / (z - x2));
}

// Closed-form integral of (a + b t)/(z - t) over one linear density cell:
//   (a + b z) * log((z - x1)/(z - x2)) - b (x2 - x1).
Complex ac_cauchy(const Measure& m, Complex z) {
    const auto& g = m.ac_grid();
    const auto& v = m.ac_values();
    Complex s = 0.0;
    for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
        const double x1 = g(i), x2 = g(i + 1);
        const double h = x2 - x1;
        const double b = (v(i + 1) - v(i)) / h;
        const double a = v(i) - b * x1;
        const Complex L = cell_log_ratio(x1, x2, z);
        s += (a + b * z) * L - b * h;
    }
    return s;
}

Complex ac_cauchy_derivative(const Measure& m, Complex z) {
    const auto& g = m.ac_grid();
    const auto& v = m.ac_values();
    Complex s = 0.0;
    for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
        const double x1 = g(i), x2 = g(i + 1);
        const double h = x2 - x1;
        const double b = (v(i + 1) - v(i)) / h;
        const double a = v(i) - b * x1;
        const Complex L = cell_log_ratio(x1, x2, z);
        // 1/(z - x1) - 1/(z - x2) = -h / ((z - x1)(z - x2)), written as the
        // product form to avoid cancelling two nearly equal reciprocals
        s += b * L - (a + b * z) * h / ((z - x1) * (z - x2));
    }
    return s;
}

void check_real_axis_ok(const Measure& m, double x, const char* who) {
    // real-axis evaluation is fine strictly outside the support hull
    for (const auto& a : m.atoms())
        if (a.x == x) throw DomainError(std::string(who) + ": real argument hits an atom");
    if (m.has_ac()) {
        const auto& g = m.ac_grid();
        if (x >= g(0) && x <= g(g.size() - 1))
            throw DomainError(std::string(who) + ": real argument inside density support");
    }
    Interval s = support_interval(m);
    if (x >= s.lo && x <= s.hi) {
        // between atoms: still fine for the cell formula, but atoms at the
        // point itself were already rejected; nothing more to check
    }
}

Complex cauchy_core(const Measure& m, Complex z) {
    Complex s = 0.0;
    for (const auto& a : m.atoms()) s += a.mass / (z - a.x);
    s += ac_cauchy(m, z);
    return s;
}

Complex cauchy_derivative_core(const Measure& m, Complex z) {
    Complex s = 0.0;
    for (const auto& a : m.atoms()) s -= a.mass / ((z - a.x) * (z - a.x));
    s += ac_cauchy_derivative(m, z);
    return s;
}

constexpr double kPhiRelTol = 1e-10;
constexpr int kNewtonCap = 200;

}  // namespace

Complex cauchy(const Measure& m, Complex z) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("cauchy: line measures only");
    if (z.imag() == 0.0) check_real_axis_ok(m, z.real(), "cauchy");
    return cauchy_core(m, z);
}

Complex cauchy_derivative(const Measure& m, Complex z) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("cauchy: line measures only");
    if (z.imag() == 0.0) check_real_axis_ok(m, z.real(), "cauchy");
    return cauchy_derivative_core(m, z);
}

Complex f_transform(const Measure& m, Complex z) {
    if (!(z.imag() > 0.0)) throw DomainError("f_transform: need Im z > 0");
    return 1.0 / cauchy(m, z);
}

Complex f_derivative(const Measure& m, Complex z) {
    if (!(z.imag() > 0.0)) throw DomainError("f_transform: need Im z > 0");
    const Complex G = cauchy(m, z);
    return -cauchy_derivative(m, z) / (G * G);
}

Complex f_inverse(const Measure& m, Complex z, std::optional<Complex> warm) {
    if (!(z.imag() > 0.0)) throw DomainError("f_inverse: need Im z > 0");
    Complex w = warm.value_or(z);
    if (!(w.imag() > 0.0)) w = z;
    const double tol = kPhiRelTol * std::abs(z);
    Complex fw = f_transform(m, w);
    double res = std::abs(fw - z);
    for (int it = 0; it < kNewtonCap; ++it) {
        if (res <= tol) return w;
        const Complex d = f_derivative(m, w);
        if (!(std::abs(d) > 0.0)) break;
        Complex step = -(fw - z) / d;
        // halve until the residual drops and we stay in the upper half-plane
        bool moved = false;
        for (int h = 0; h < 60; ++h) {
            const Complex wn = w + step;
            if (wn.imag() > 0.0) {
                const Complex fn = f_transform(m, wn);
                const double rn = std::abs(fn - z);
                if (rn < res) {
                    w = wn;
                    fw = fn;
                    res = rn;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    if (res <= tol) return w;
    throw InversionError("f_inverse: Newton stalled", res);
}

Complex phi(const Measure& m, Complex z, std::optional<Complex> warm) {
    return f_inverse(m, z, warm) - z;
}

namespace {

std::vector<Complex> region_probes(const StolzRegion& r) {
    std::vector<Complex> probes;
    const double half = r.alpha / r.beta;
    for (int i = 0; i <= 16; ++i) {
        const double x = -half + 2.0 * half * i / 16.0;
        probes.emplace_back(x, r.alpha);
    }
    // cone edges and the central vertical, log-spaced in height
    for (int i = 0; i <= 16; ++i) {
        const double y = r.alpha * std::pow(1000.0, i / 16.0);
        probes.emplace_back(y / r.beta, y);
        probes.emplace_back(-y / r.beta, y);
        probes.emplace_back(0.0, y);
    }
    return probes;
}

}  // namespace

StolzRegion stolz_fit(std::span<const Measure> family, double slack) {
    if (family.empty()) throw ArgumentError("stolz_fit: empty family");
    if (!(slack > 0.0)) throw ArgumentError("stolz_fit: slack must be positive");
    for (double a = 1.0; a <= 65536.0; a *= 2.0) {
        StolzRegion r{a, a, 1.0};
        bool ok = true;
        for (const Complex z : region_probes(r)) {
            for (const auto& m : family) {
                const Complex F = f_transform(m, z);
                if (std::abs(F - z) > slack * std::abs(z)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
        }
        if (ok) return r;
    }
    throw FitError("stolz_fit: bound not achieved below alpha = 65536");
}

StolzRegion stolz_fit(std::initializer_list<Measure> family, double slack) {
    return stolz_fit(std::span<const Measure>(family.begin(), family.size()), slack);
}

namespace {

void check_psi_domain(const Measure& m, Complex z) {
    if (m.domain() == Domain::RealLine)
        throw DomainError("psi: positive-halfline or circle measures only");
    if (m.domain() == Domain::UnitCircle) return;
    if (z.imag() == 0.0 && z.real() > 0.0) {
        const double x = 1.0 / z.real();
        check_real_axis_ok(m, x, "psi");
    }
}

Complex psi_circle(const Measure& m, Complex z) {
    const Complex I(0.0, 1.0);
    Complex s = 0.0;
    for (const auto& a : m.atoms()) {
        const Complex e = std::exp(I * a.x);
        const Complex d = 1.0 - z * e;
        if (std::abs(d) < 1e-14) throw DomainError("psi: pole on the unit circle");
        s += a.mass * z * e / d;
    }
    const auto& g = m.ac_grid();
    const auto& v = m.ac_values();
    for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
        const Complex e1 = std::exp(I * g(i)), e2 = std::exp(I * g(i + 1));
        const Complex d1 = 1.0 - z * e1, d2 = 1.0 - z * e2;
        if (std::abs(d1) < 1e-14 || std::abs(d2) < 1e-14)
            throw DomainError("psi: pole on the unit circle");
        const Complex f1 = z * e1 / d1 * v(i);
        const Complex f2 = z * e2 / d2 * v(i + 1);
        s += 0.5 * (f1 + f2) * (g(i + 1) - g(i));
    }
    return s;
}

Complex psi_circle_derivative(const Measure& m, Complex z) {
    const Complex I(0.0, 1.0);
    Complex s = 0.0;
    for (const auto& a : m.atoms()) {
        const Complex e = std::exp(I * a.x);
        const Complex d = 1.0 - z * e;
        s += a.mass * e / (d * d);
    }
    const auto& g = m.ac_grid();
    const auto& v = m.ac_values();
    for (Eigen::Index i = 0; i + 1 < g.size(); ++i) {
        const Complex e1 = std::exp(I * g(i)), e2 = std::exp(I * g(i + 1));
        const Complex d1 = 1.0 - z * e1, d2 = 1.0 - z * e2;
        const Complex f1 = e1 / (d1 * d1) * v(i);
        const Complex f2 = e2 / (d2 * d2) * v(i + 1);
        s += 0.5 * (f1 + f2) * (g(i + 1) - g(i));
    }
    return s;
}

}  // namespace

Complex psi(const Measure& m, Complex z) {
    check_psi_domain(m, z);
    if (m.domain() == Domain::UnitCircle) return psi_circle(m, z);
    Complex s = 0.0;
    for (const auto& a : m.atoms()) {
        if (a.x == 0.0) continue;  // zero contributes nothing
        s += a.mass * z * a.x / (1.0 - z * a.x);
    }
    if (m.has_ac()) {
        if (z == 0.0) return s;  // psi(0) = 0 for the density part too
        // z t/(1 - z t) = -1 + 1/(1 - z t); the second term is a Cauchy
        // integral at 1/z
        s += -m.ac_mass() + (1.0 / z) * ac_cauchy(m, 1.0 / z);
    }
    return s;
}

Complex psi_derivative(const Measure& m, Complex z) {
    check_psi_domain(m, z);
    if (m.domain() == Domain::UnitCircle) return psi_circle_derivative(m, z);
    Complex s = 0.0;
    for (const auto& a : m.atoms()) {
        if (a.x == 0.0) continue;
        const Complex d = 1.0 - z * a.x;
        s += a.mass * a.x / (d * d);
    }
    if (m.has_ac()) {
        if (z == 0.0) {
            // psi'(0) = first moment of the density part
            const auto& g = m.ac_grid();
            const auto& v = m.ac_values();
            double m1 = 0.0;
            for (Eigen::Index i = 0; i + 1 < g.size(); ++i)
                m1 += 0.5 * (g(i) * v(i) + g(i + 1) * v(i + 1)) * (g(i + 1) - g(i));
            s += m1;
        } else {
            const Complex iz = 1.0 / z;
            s += -(iz * iz) * ac_cauchy(m, iz) - (iz * iz * iz) * ac_cauchy_derivative(m, iz);
        }
    }
    return s;
}

Complex eta(const Measure& m, Complex z) {
    const Complex p = psi(m, z);
    return p / (1.0 + p);
}

Complex eta_derivative(const Measure& m, Complex z) {
    const Complex p = psi(m, z);
    const Complex dp = psi_derivative(m, z);
    return dp / ((1.0 + p) * (1.0 + p));
}

double chi(const Measure& m, double u) {
    if (m.domain() != Domain::PositiveHalfline)
        throw DomainError("chi: positive-halfline measures only");
    const double lo_bound = m.mass_at_zero() - 1.0;
    if (!(u > lo_bound && u < 0.0))
        throw DomainError("chi: argument outside (mu({0}) - 1, 0)");

    auto psi_real = [&](double x) { return psi(m, Complex(x, 0.0)).real(); };

    // bracket: psi is increasing on (-inf, 0) from mu({0}) - 1 up to 0
    double lo = -1.0;
    for (int i = 0; i < 1200 && psi_real(lo) > u; ++i) lo *= 2.0;
    if (psi_real(lo) > u) throw InversionError("chi: cannot bracket from below", 0.0);
    double hi = -1e-8;
    for (int i = 0; i < 1200 && psi_real(hi) < u; ++i) hi *= 0.5;
    if (psi_real(hi) < u) throw InversionError("chi: cannot bracket from above", 0.0);

    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (psi_real(mid) < u ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 60; ++i) {
        const double r = psi_real(x) - u;
        if (std::abs(r) <= 1e-12) return x;
        const double d = psi_derivative(m, Complex(x, 0.0)).real();
        if (!(d > 0.0)) break;
        double xn = x - r / d;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    const double r = std::abs(psi_real(x) - u);
    if (r <= 1e-10) return x;  // bisection-limited but still tight
    throw InversionError("chi: polish failed", r);
}

double s_transform(const Measure& m, double u) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("s_transform: circle measures only expose S(0); use s_zero");
    const double x = chi(m, u);
    return (1.0 + u) / u * x;
}

// ---- TransformEvaluator ----

TransformEvaluator TransformEvaluator::make_cauchy(Measure m) {
    TransformEvaluator e;
    e.kind_ = TransformKind::G;
    e.m1_ = std::move(m);
    return e;
}

TransformEvaluator TransformEvaluator::make_f(Measure m) {
    TransformEvaluator e;
    e.kind_ = TransformKind::F;
    e.m1_ = std::move(m);
    return e;
}

TransformEvaluator TransformEvaluator::make_phi(Measure m, StolzRegion validity) {
    TransformEvaluator e;
    e.kind_ = TransformKind::Phi;
    e.m1_ = std::move(m);
    e.region_ = validity;
    return e;
}

TransformEvaluator TransformEvaluator::make_psi(Measure m) {
    TransformEvaluator e;
    e.kind_ = TransformKind::Psi;
    e.m1_ = std::move(m);
    return e;
}

TransformEvaluator TransformEvaluator::make_chi(Measure m) {
    TransformEvaluator e;
    e.kind_ = TransformKind::Chi;
    e.interval_ = Interval(m.mass_at_zero() - 1.0, 0.0);
    e.m1_ = std::move(m);
    return e;
}

TransformEvaluator TransformEvaluator::make_s(Measure m) {
    TransformEvaluator e = make_chi(std::move(m));
    e.kind_ = TransformKind::S;
    return e;
}

TransformEvaluator TransformEvaluator::make_omega(Measure m1, Measure m2, bool first) {
    TransformEvaluator e;
    e.kind_ = first ? TransformKind::Omega1 : TransformKind::Omega2;
    e.m1_ = std::move(m1);
    e.m2_ = std::move(m2);
    return e;
}

Complex TransformEvaluator::operator()(Complex z) const {
    switch (kind_) {
        case TransformKind::G:
            if (z.imag() == 0.0) throw DomainError("evaluator: G needs Im z != 0");
            return cauchy(m1_, z);
        case TransformKind::F:
            if (!(z.imag() > 0.0)) throw DomainError("evaluator: F needs Im z > 0");
            return f_transform(m1_, z);
        case TransformKind::Phi: {
            if (region_ && !region_->contains(z))
                throw DomainError("evaluator: z outside the fitted region");
            const Complex w = f_inverse(m1_, z, warm_);
            warm_ = w;
            return w - z;
        }
        case TransformKind::Psi:
            return psi(m1_, z);
        case TransformKind::Omega1:
        case TransformKind::Omega2: {
            if (!(z.imag() > 0.0)) throw DomainError("evaluator: omega needs Im z > 0");
            const SubordinationSolution sol = subordinators(m1_, m2_, z);
            return kind_ == TransformKind::Omega1 ? sol.omega1 : sol.omega2;
        }
        default:
            throw DomainError("evaluator: real-argument kind; use eval_real");
    }
}

double TransformEvaluator::eval_real(double u) const {
    switch (kind_) {
        case TransformKind::Chi:
        case TransformKind::S:
            if (interval_ && !(u > interval_->lo && u < interval_->hi))
                throw DomainError("evaluator: argument outside (mu({0}) - 1, 0)");
            return kind_ == TransformKind::Chi ? chi(m1_, u) : s_transform(m1_, u);
        default:
            throw DomainError("evaluator: complex-argument kind; use operator()");
    }
}

}  // namespace freeconv
