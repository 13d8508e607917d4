#pragma once

#include <Eigen/Core>

#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace freeconv {

enum class Domain { RealLine, PositiveHalfline, UnitCircle };

struct Atom {
    double x = 0.0;
    double mass = 0.0;
};

struct Interval {
    Interval() = default;
    Interval(double lo_, double hi_);
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

struct ConstructionReport {
    double total_mass_before = 0.0;   // mass seen before renormalization
    double renormalization = 1.0;     // factor the input was divided by
    double truncated_mass = 0.0;      // mass dropped by quantile truncation
    int merged_atoms = 0;             // atom pairs collapsed at 1e-12 spacing
};

// Probability measure with finitely many atoms plus an absolutely
// continuous part stored as a piecewise-linear density on a finite grid
// (zero outside the grid). Total mass is renormalized to 1 at
// construction; atoms closer than 1e-12 are merged.
class Measure {
public:
    Measure() = default;

    static Measure make(Domain domain, std::vector<Atom> atoms,
                        Eigen::ArrayXd ac_grid, Eigen::ArrayXd ac_values,
                        ConstructionReport* report = nullptr);

    Domain domain() const { return domain_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const Eigen::ArrayXd& ac_grid() const { return grid_; }
    const Eigen::ArrayXd& ac_values() const { return values_; }
    bool has_ac() const { return grid_.size() >= 2; }

    double atom_mass() const;
    double ac_mass() const;
    // Mass of the atom at x (0 if none); locations match within tol.
    double atom_mass_at(double x, double tol = 1e-12) const;
    double mass_at_zero() const { return atom_mass_at(0.0); }
    bool is_dirac(double tol = 1e-12) const;

    // Piecewise-linear density evaluation (0 outside the grid).
    double density(double x) const;
    // Exact integral of the density over (-inf, t].
    double ac_integral_up_to(double t) const;

private:
    Domain domain_ = Domain::RealLine;
    std::vector<Atom> atoms_;
    Eigen::ArrayXd grid_;
    Eigen::ArrayXd values_;
    Eigen::ArrayXd cum_;  // cumulative density integral at grid nodes
};

// Distribution function F(t) = mu((-inf, t]), right-continuous.
// Circle measures have no linear-order CDF: DomainError.
double cdf(const Measure& m, double t);
// Left limit F(t-).
double cdf_left(const Measure& m, double t);

// inf { t : F(t) >= p } for p in (0,1). Exact on atoms and grid cells.
double quantile(const Measure& m, double p);
// inf { t : F(t) > p }, the strict-crossing variant.
double quantile_strict(const Measure& m, double p);

// Translate by c so the CDF first reaches level t at the origin:
// returns (shifted measure, applied shift).
std::pair<Measure, double> t_center(const Measure& m, double t);

Measure shift(const Measure& m, double c);     // real line only
Measure dilate(const Measure& m, double lam);  // lam > 0, real or positive

// Levy metric, bisected to absolute tolerance 1e-9.
double levy_distance(const Measure& a, const Measure& b);
// Kolmogorov (sup) distance, exact over the merged breakpoint set.
double kolmogorov_distance(const Measure& a, const Measure& b);
// Sup distance against an external CDF, probed on breakpoints plus a
// uniform refinement (test/diagnostic helper).
double kolmogorov_distance_to(const Measure& a,
                              const std::function<double(double)>& cdf_fn,
                              int probes = 4096);

// Closure of { t : eps < F(t) < 1 - eps }, eps in (0, 1/2).
// Collapses to a point when the set is empty.
Interval omega_interval(const Measure& m, double eps);

Interval support_interval(const Measure& m);
double support_diameter(const Measure& m);
// log(max/min) of the support; +inf when the support touches 0.
// Positive-halfline measures only.
double log_diameter(const Measure& m);

// k-th moment; circle measures integrate exp(i*k*theta) exactly per cell.
std::complex<double> moment(const Measure& m, int k);
double real_moment(const Measure& m, int k);

// JSON serialization. Schema:
//   {"domain":"real"|"positive"|"circle",
//    "atoms":[{"x":..,"mass":..},...],
//    "ac":{"grid":[...],"values":[...]}}
Measure parse_measure_json(const std::string& text, ConstructionReport* report = nullptr);
Measure load_measure_json(const std::string& path, ConstructionReport* report = nullptr);
std::string measure_to_json(const Measure& m);
void save_measure_json(const Measure& m, const std::string& path);

}  // namespace freeconv
