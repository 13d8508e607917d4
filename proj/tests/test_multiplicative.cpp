#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_helpers.hpp"

#include "freeconv/errors.hpp"
#include "freeconv/families.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/multiplicative.hpp"
#include "freeconv/transforms.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace freeconv;
using testutil::projections_product_density;
using testutil::random_atoms;
using testutil::sup_density_error;

namespace {

// 20-point scan of the common S interval for a product of two factors.
std::vector<double> scan_points(const Measure& m1, const Measure& m2) {
    const double lo = std::max(m1.mass_at_zero(), m2.mass_at_zero()) - 1.0 + 0.02;
    const double hi = -0.02;
    std::vector<double> us;
    for (int i = 0; i < 20; ++i) us.push_back(lo + (hi - lo) * i / 19.0);
    return us;
}

}  // namespace

TEST_CASE("mult subordinators") {
    const Measure proj = two_projections(), mp = marchenko_pastur();

    // Dirac partner: omega1 is the dilated argument.
    const MultSubordinationSolution sd =
        mult_subordinators(mp, dirac(2.0, Domain::PositiveHalfline), Complex(-0.4, 0.3));
    CHECK(std::abs(sd.omega1 - Complex(-0.8, 0.6)) <= 1e-9);

    // Symmetry for equal factors.
    const MultSubordinationSolution se = mult_subordinators(proj, proj, Complex(-1.0, 0.0));
    CHECK(std::abs(se.omega1 - se.omega2) <= 1e-10);

    // psi at -1 of the known product-of-projections law: -(2 - sqrt 2)/4.
    CHECK(std::abs(se.psi_value - Complex(-(2.0 - std::sqrt(2.0)) / 4.0, 0.0)) <= 1e-9);

    // Solution invariants on upper-half-plane probes.
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> re(-2.0, -0.1), im(0.05, 1.0);
    for (int i = 0; i < 20; ++i) {
        const Complex lam(re(rng), im(rng));
        const MultSubordinationSolution r = mult_subordinators(mp, proj, lam);
        // Product relation: omega1 * omega2 = lambda * eta, eta = psi/(1 + psi).
        const Complex eta = r.psi_value / (1.0 + r.psi_value);
        CHECK(std::abs(r.omega1 * r.omega2 - lam * eta) <= 1e-8 * (1.0 + std::abs(lam)));
        CHECK(std::arg(r.omega1) >= std::arg(lam) - 1e-10);
        CHECK(std::arg(r.omega2) >= std::arg(lam) - 1e-10);
        CHECK(r.residual <= 1e-9);
    }
}

TEST_CASE("free_mult Diracs and dilation") {
    const auto d = free_mult(dirac(2.0, Domain::PositiveHalfline),
                             dirac(3.0, Domain::PositiveHalfline));
    CHECK(d.measure.is_dirac());
    CHECK(d.measure.atoms()[0].x == doctest::Approx(6.0).epsilon(1e-12));

    const Measure mp = marchenko_pastur();
    const auto md = free_mult(mp, dirac(2.5, Domain::PositiveHalfline));
    CHECK(kolmogorov_distance(md.measure, dilate(mp, 2.5)) <= 1e-6);

    CHECK_THROWS_AS(free_mult(mp, dirac(0.0, Domain::PositiveHalfline)), DomainError);
}

TEST_CASE("free_mult projections") {
    const Measure proj = two_projections();
    const auto pp = free_mult(proj, proj);

    // Atom at zero is pinned by the max rule, not estimated.
    CHECK(std::abs(pp.measure.mass_at_zero() - 0.5) <= 1e-12);
    CHECK(sup_density_error(pp.measure, projections_product_density, 0.05, 0.95) <= 1e-2);
    CHECK(pp.report.mass_defect <= 1e-3);
}

TEST_CASE("S multiplicativity through the subordination system") {
    std::mt19937_64 rng(42);
    const Measure proj = two_projections(), mp = marchenko_pastur();
    const Measure u = uniform(0.5, 1.5);
    const Measure pos_u = Measure::make(Domain::PositiveHalfline, {}, u.ac_grid(), u.ac_values());
    const Measure atoms2 = random_atoms(rng, 2, 0.3, 2.0, Domain::PositiveHalfline);

    const std::pair<Measure, Measure> pairs[] = {
        {proj, proj}, {mp, pos_u}, {atoms2, random_atoms(rng, 2, 0.5, 3.0, Domain::PositiveHalfline)}};
    for (const auto& [m1, m2] : pairs) {
        for (double v : scan_points(m1, m2)) {
            const double lhs = s_transform_of_product(m1, m2, v);
            const double rhs = s_transform(m1, v) * s_transform(m2, v);
            CHECK(std::abs(lhs - rhs) <= 1e-6 * (1.0 + std::abs(rhs)));
        }
    }
}

TEST_CASE("atom at zero rule is exact") {
    const Measure proj = two_projections();
    const Measure quarter =
        Measure::make(Domain::PositiveHalfline, {{0.0, 0.25}, {2.0, 0.75}}, {}, {});
    const auto res = free_mult(proj, quarter);
    CHECK(res.measure.mass_at_zero() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("logdiam bound") {
    const Measure a = Measure::make(Domain::PositiveHalfline, {{1.0, 0.5}, {2.0, 0.5}}, {}, {});
    const Measure b = Measure::make(Domain::PositiveHalfline, {{0.5, 0.5}, {3.0, 0.5}}, {}, {});
    const auto prod = free_mult(a, b);
    CHECK(log_diameter(a) <= log_diameter(prod.measure) + 5e-3);
    CHECK(log_diameter(b) <= log_diameter(prod.measure) + 5e-3);
}

TEST_CASE("free_mult commutativity") {
    const Measure proj = two_projections(), mp = marchenko_pastur();
    const auto ab = free_mult(mp, proj);
    const auto ba = free_mult(proj, mp);
    CHECK(kolmogorov_distance(ab.measure, ba.measure) <= 1e-6);
}

TEST_CASE("dilation covariance") {
    // The identity dilate(m1 mult m2, c) = dilate(m1, c) mult m2 holds at
    // matched resolution: the recovery grid and the epsilon schedule must be
    // scaled along with the measure, since the smoothing scale is part of
    // the computation.
    const Measure a = Measure::make(Domain::PositiveHalfline, {{0.5, 0.6}, {1.5, 0.4}}, {}, {});
    const Measure b = Measure::make(Domain::PositiveHalfline, {{1.0, 0.5}, {2.0, 0.5}}, {}, {});
    const double c = 1.7;

    const Eigen::ArrayXd base = default_multiplicative_grid(a, b, 1201);
    std::vector<double> eps = default_epsilon_schedule();
    const auto plain = free_mult(a, b, base, eps);

    Eigen::ArrayXd scaled = base * c;
    for (double& e : eps) e *= c;
    const auto dilated = free_mult(dilate(a, c), b, scaled, eps);
    CHECK(kolmogorov_distance(dilated.measure, dilate(plain.measure, c)) <= 1e-6);
}

TEST_CASE("s_normalize") {
    // Dirac at 5: the dilation factor is S = 1/5 and the result is delta_1.
    const auto [n5, c5] = s_normalize(dirac(5.0, Domain::PositiveHalfline), 0.5);
    CHECK(c5 == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(n5.is_dirac());
    CHECK(n5.atoms()[0].x == doctest::Approx(1.0).epsilon(1e-10));

    // Already normalized: factor 1.
    const auto [n1, c1] = s_normalize(dirac(1.0, Domain::PositiveHalfline), 0.5);
    CHECK(c1 == doctest::Approx(1.0).epsilon(1e-10));

    // Marchenko-Pastur: S(-1/2) = 2, and the normalized measure hits 1 on the nose.
    const Measure mp = marchenko_pastur();
    const auto [nmp, cmp] = s_normalize(mp, 0.5);
    CHECK(cmp == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(s_transform(nmp, -0.5) == doctest::Approx(1.0).epsilon(1e-10));

    CHECK_THROWS_AS(s_normalize(mp, 1.5), ArgumentError);
    CHECK_THROWS_AS(s_normalize(two_projections(), 0.7), ArgumentError);  // beta >= 1 - p0
}

TEST_CASE("chi_normalize") {
    // Identity case.
    const auto [r1, l1] = chi_normalize(dirac(1.0, Domain::PositiveHalfline), 1.0);
    CHECK(l1 == doctest::Approx(1.0).epsilon(1e-10));

    // Dirac at 4 rescales by 1/4.
    const auto [r4, l4] = chi_normalize(dirac(4.0, Domain::PositiveHalfline), 1.0);
    CHECK(l4 == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(r4.atoms()[0].x == doctest::Approx(1.0).epsilon(1e-10));

    // Normalization targets.
    const Measure mp = marchenko_pastur(), proj = two_projections();
    const auto [rm, lm] = chi_normalize(mp);
    CHECK(std::abs(psi(rm, -1.0).real() + 0.5) <= 1e-10);
    const auto [rp, lp] = chi_normalize(proj);  // alpha defaults to 1 - p0 = 1/2
    CHECK(std::abs(psi(rp, -1.0).real() + 0.25) <= 1e-10);

    // Dilation-group invariance.
    const auto [ra, la] = chi_normalize(dilate(mp, 3.0));
    CHECK(kolmogorov_distance(ra, rm) <= 1e-9);
}

TEST_CASE("input validation") {
    const Measure real_neg = bernoulli();  // has negative support
    CHECK_THROWS_AS(free_mult(real_neg, two_projections()), DomainError);
    CHECK_THROWS_AS(s_normalize(real_neg, 0.5), DomainError);
}
