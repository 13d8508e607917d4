#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_helpers.hpp"

#include "freeconv/families.hpp"
#include "freeconv/measure.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

using namespace freeconv;
using nlohmann::json;

namespace {

struct CliFixture {
    std::string dir;

    CliFixture() {
        char tmpl[] = "/tmp/freeconv_cli_XXXXXX";
        dir = mkdtemp(tmpl);
        save_measure_json(bernoulli(), path("bern.json"));
        save_measure_json(semicircle(0, 1), path("sc1.json"));
        save_measure_json(two_projections(), path("proj.json"));
        save_measure_json(projections_product(), path("projprod.json"));
        save_measure_json(dilate(projections_product(), 2.0), path("projprod2.json"));
    }

    std::string path(const std::string& name) const { return dir + "/" + name; }

    int run(const std::string& args) const {
        const std::string cmd = std::string(FREECONV_CLI_PATH) + " " + args;
        const int rc = std::system(cmd.c_str());
        REQUIRE(rc != -1);
        REQUIRE(WIFEXITED(rc));
        return WEXITSTATUS(rc);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p);
        REQUIRE(in.good());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

}  // namespace

TEST_CASE("add command round trip") {
    CliFixture f;
    const int rc = f.run("add " + f.path("bern.json") + " " + f.path("bern.json") +
                         " --grid -2.5:2.5:2001 -o " + f.path("out.json") + " --csv " +
                         f.path("out.csv"));
    CHECK(rc == 0);

    // Output parses and satisfies the measure invariants.
    const Measure out = load_measure_json(f.path("out.json"));
    double total = out.ac_mass();
    for (const Atom& a : out.atoms()) total += a.mass;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(testutil::sup_density_error(out, testutil::arcsine_density, -1.9, 1.9) <= 1e-2);

    // Report lands next to the primary output with the effective settings.
    const json rep = json::parse(CliFixture::slurp(f.path("out.report.json")));
    CHECK(rep.contains("grid"));
    CHECK(rep.contains("eps_schedule"));
    CHECK(rep.contains("mass_defect"));
    CHECK(rep["mass_defect"].get<double>() <= 1e-3);

    // CSV: header plus one row per grid node, inclusive endpoints.
    std::istringstream csv(CliFixture::slurp(f.path("out.csv")));
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "x,density,cdf");
    int rows = 0;
    double first_x = 0.0, last_x = 0.0, last_cdf = 0.0;
    while (std::getline(csv, line)) {
        const size_t c1 = line.find(',');
        const size_t c2 = line.find(',', c1 + 1);
        const double x = std::stod(line.substr(0, c1));
        if (rows == 0) first_x = x;
        last_x = x;
        last_cdf = std::stod(line.substr(c2 + 1));
        ++rows;
    }
    CHECK(rows == 2001);
    CHECK(first_x == -2.5);
    CHECK(last_x == 2.5);
    CHECK(last_cdf == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("lambda command") {
    CliFixture f;
    const int rc = f.run("lambda " + f.path("sc1.json") +
                         " --alpha 2 --beta 1 --band 1 --nx 32 --ny 16 -o " + f.path("lam.json"));
    CHECK(rc == 0);
    const json lam = json::parse(CliFixture::slurp(f.path("lam.json")));
    CHECK(lam["mode"] == "additive");
    CHECK(lam["value"].get<double>() > 1.0);
    CHECK(lam["quadrature_error"].get<double>() >= 0.0);
    CHECK(lam["region"]["alpha"].get<double>() == 2.0);
}

TEST_CASE("verify command exit codes") {
    CliFixture f;
    // A true multiplicative decomposition: accepted, exit 0.
    const int ok = f.run("verify " + f.path("projprod.json") + " " + f.path("proj.json") + " " +
                         f.path("proj.json") + " --mode multiplicative -o " + f.path("v1.json"));
    CHECK(ok == 0);
    const json v1 = json::parse(CliFixture::slurp(f.path("v1.json")));
    CHECK(v1["verdict"] == "accepted");
    REQUIRE(v1.contains("checks"));
    for (const auto& c : v1["checks"]) {
        CHECK(c.contains("check"));
        CHECK(c.contains("measured"));
        CHECK(c.contains("bound"));
        CHECK(c.contains("pass"));
    }

    // A false one: rejected, exit 2.
    const int bad = f.run("verify " + f.path("projprod2.json") + " " + f.path("proj.json") + " " +
                          f.path("proj.json") + " --mode multiplicative -o " + f.path("v2.json"));
    CHECK(bad == 2);
    const json v2 = json::parse(CliFixture::slurp(f.path("v2.json")));
    CHECK(v2["verdict"] == "rejected");
}

TEST_CASE("power command") {
    CliFixture f;
    const int rc = f.run("power " + f.path("bern.json") + " --t 1.5 -o " + f.path("p15.json"));
    CHECK(rc == 0);
    const Measure m = load_measure_json(f.path("p15.json"));
    REQUIRE(m.atoms().size() == 2);
    CHECK(m.atoms()[0].x == doctest::Approx(-1.5));
    CHECK(m.atoms()[1].x == doctest::Approx(1.5));
}

TEST_CASE("oracle command") {
    CliFixture f;
    const int rc = f.run("oracle add " + f.path("bern.json") + " " + f.path("bern.json") +
                         " -n 128 --trials 2 --seed 5 -o " + f.path("h.json") + " --raw-csv " +
                         f.path("raw.csv"));
    CHECK(rc == 0);
    const Measure h = load_measure_json(f.path("h.json"));
    double total = h.ac_mass();
    for (const Atom& a : h.atoms()) total += a.mass;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    std::istringstream raw(CliFixture::slurp(f.path("raw.csv")));
    std::string line;
    int lines = 0;
    while (std::getline(raw, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 257);  // header + 128 x 2
}

TEST_CASE("certify command") {
    CliFixture f;
    const int certified = f.run("certify " + f.path("bern.json") + " -o " + f.path("c1.json"));
    CHECK(certified == 0);
    CHECK(json::parse(CliFixture::slurp(f.path("c1.json")))["verdict"] == "certified");

    const int inconclusive =
        f.run("certify " + f.path("sc1.json") + " -o " + f.path("c2.json"));
    CHECK(inconclusive == 2);
    CHECK(json::parse(CliFixture::slurp(f.path("c2.json")))["verdict"] == "inconclusive");
}

TEST_CASE("error exits") {
    CliFixture f;
    std::ofstream(f.path("broken.json")) << "{not json";
    CHECK(f.run("add " + f.path("broken.json") + " " + f.path("bern.json") + " -o " +
                f.path("x.json")) == 1);
    CHECK(f.run("add " + f.path("missing.json") + " " + f.path("bern.json") + " -o " +
                f.path("x.json")) == 1);
    // Domain mismatch: multiplicative convolution needs positive-halfline inputs.
    CHECK(f.run("mul " + f.path("bern.json") + " " + f.path("bern.json") + " -o " +
                f.path("x.json")) == 1);
}

TEST_CASE("mul command") {
    CliFixture f;
    const int rc = f.run("mul " + f.path("proj.json") + " " + f.path("proj.json") + " -o " +
                         f.path("pp.json"));
    CHECK(rc == 0);
    const Measure m = load_measure_json(f.path("pp.json"));
    CHECK(m.mass_at_zero() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(kolmogorov_distance(m, projections_product()) <= 1e-2);
}
