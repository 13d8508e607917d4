#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_helpers.hpp"

#include "freeconv/additive.hpp"
#include "freeconv/families.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/multiplicative.hpp"
#include "freeconv/oracle.hpp"

#include <cmath>

using namespace freeconv;
using testutil::arcsine_cdf;
using testutil::projections_product_cdf;

TEST_CASE("sample_spectrum") {
    const auto d = sample_spectrum(dirac(3.0), 4);
    REQUIRE(d.size() == 4);
    for (double x : d) CHECK(x == doctest::Approx(3.0));

    const auto b = sample_spectrum(bernoulli(), 4);
    CHECK(b[0] == doctest::Approx(-1.0));
    CHECK(b[1] == doctest::Approx(-1.0));
    CHECK(b[2] == doctest::Approx(1.0));
    CHECK(b[3] == doctest::Approx(1.0));

    const auto u = sample_spectrum(uniform(0, 1), 2);
    CHECK(u[0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(u[1] == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("additive oracle on Diracs") {
    OracleConfig cfg;
    cfg.matrix_size = 128;
    cfg.trials = 2;
    cfg.seed = 7;
    const Measure h = sample_additive(dirac(2.0), dirac(3.0), cfg);
    REQUIRE(h.atoms().size() == 1);
    CHECK(h.atoms()[0].x == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(h.atoms()[0].mass == doctest::Approx(1.0));
    CHECK(h.ac_mass() <= 1e-12);
}

TEST_CASE("additive oracle reproduces the arcsine law") {
    OracleConfig cfg;
    cfg.matrix_size = 500;
    cfg.trials = 4;
    cfg.seed = 1;
    const Measure h = sample_additive(bernoulli(), bernoulli(), cfg);
    CHECK(kolmogorov_distance_to(h, arcsine_cdf) <= 0.08);

    const auto bb = free_add(bernoulli(), bernoulli());
    CHECK(kolmogorov_distance(h, bb.measure) <= 0.08);
}

TEST_CASE("oracle determinism") {
    OracleConfig cfg;
    cfg.matrix_size = 256;
    cfg.trials = 2;
    cfg.seed = 42;
    const Measure a = sample_additive(bernoulli(), semicircle(0, 1), cfg);
    const Measure b = sample_additive(bernoulli(), semicircle(0, 1), cfg);
    CHECK(kolmogorov_distance(a, b) == 0.0);
}

TEST_CASE("oracle argument-order consistency") {
    OracleConfig cfg;
    cfg.matrix_size = 500;
    cfg.trials = 4;
    cfg.seed = 1;
    const Measure h12 = sample_additive(bernoulli(), semicircle(0, 1), cfg);
    const Measure h21 = sample_additive(semicircle(0, 1), bernoulli(), cfg);

    // Spread scale: distance between runs with different seeds.
    OracleConfig cfg2 = cfg, cfg3 = cfg;
    cfg2.seed = 2;
    cfg3.seed = 3;
    const double spread =
        std::max(kolmogorov_distance(h12, sample_additive(bernoulli(), semicircle(0, 1), cfg2)),
                 kolmogorov_distance(h12, sample_additive(bernoulli(), semicircle(0, 1), cfg3)));
    CHECK(kolmogorov_distance(h12, h21) <= 2.0 * spread + 1e-3);
}

TEST_CASE("oracle converges toward the computed convolution") {
    const auto bb = free_add(bernoulli(), bernoulli());
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {250, 500, 1000, 2000}) {
        OracleConfig cfg;
        cfg.matrix_size = n;
        cfg.trials = 3;
        cfg.seed = 11;
        const double d = kolmogorov_distance(sample_additive(bernoulli(), bernoulli(), cfg),
                                             bb.measure);
        CHECK(d <= prev * 1.2);  // monotone within 20% noise
        prev = d;
    }
    CHECK(prev <= 0.06);
}

TEST_CASE("multiplicative oracle on Diracs") {
    OracleConfig cfg;
    cfg.matrix_size = 128;
    cfg.trials = 2;
    cfg.seed = 7;
    const Measure h = sample_multiplicative(dirac(2.0, Domain::PositiveHalfline),
                                            dirac(3.0, Domain::PositiveHalfline), cfg);
    REQUIRE(h.atoms().size() == 1);
    CHECK(h.atoms()[0].x == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("multiplicative oracle Dirac partner scales the spectrum") {
    OracleConfig cfg;
    cfg.matrix_size = 128;
    cfg.trials = 2;
    cfg.seed = 7;
    const Measure mp = marchenko_pastur();
    const auto raw = raw_multiplicative_eigenvalues(mp, dirac(2.0, Domain::PositiveHalfline), cfg);
    const auto base = sample_spectrum(mp, cfg.matrix_size);
    REQUIRE(raw.size() == static_cast<size_t>(cfg.matrix_size * cfg.trials));
    for (int t = 0; t < cfg.trials; ++t)
        for (int i = 0; i < cfg.matrix_size; ++i)
            CHECK(std::abs(raw[t * cfg.matrix_size + i] - 2.0 * base[i]) <= 1e-9);
}

TEST_CASE("multiplicative oracle reproduces the projection product") {
    OracleConfig cfg;
    cfg.matrix_size = 500;
    cfg.trials = 4;
    cfg.seed = 1;
    const Measure proj = two_projections();
    const Measure h = sample_multiplicative(proj, proj, cfg);
    CHECK(kolmogorov_distance_to(h, projections_product_cdf) <= 0.08);
    CHECK(h.mass_at_zero() == doctest::Approx(0.5).epsilon(0.2));
}
