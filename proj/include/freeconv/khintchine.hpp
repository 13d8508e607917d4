#pragma once

#include "freeconv/additive.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/transforms.hpp"

#include <string>
#include <vector>

namespace freeconv {

// Configuration for the additive Lambda functional: the integration band
// Gamma' (the slice alpha < Im z < alpha + band_height of the cone) and
// the midpoint-rule panel counts.
struct LambdaConfig {
    StolzRegion region{2.0, 1.0, 1.0};
    int nx = 128;
    int ny = 64;
    double tolerance = 5e-3;
};

struct LambdaResult {
    double value = 0.0;
    double error_estimate = 0.0;  // step-doubling Richardson estimate
};

// Lambda(m) = -integral over Gamma' of Im phi_m dA; nonnegative, additive
// under free addition, zero exactly on point masses.
LambdaResult lambda_additive_full(const Measure& m, const LambdaConfig& cfg = {});
double lambda_additive(const Measure& m, const LambdaConfig& cfg = {});

// Multiplicative counterpart: log S_m(-beta) - log S_m(-gamma), i.e.
// -log S(-gamma) after rescaling so S(-beta) = 1. Requires
// 0 < gamma < beta < 1 - m({0}).
double lambda_mult(const Measure& m, double beta, double gamma);

struct CheckResult {
    std::string check;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

enum class Mode { Additive, Multiplicative };

struct VerifyConfig {
    LambdaConfig lambda;          // additive mode
    double beta_norm = 0.5;       // multiplicative mode
    double gamma = 0.25;
    double levy_tolerance = 0.02;
    double lambda_tolerance = 5e-3;  // relative: |dLambda| <= tol*(1+Lambda)
    double grid_slack = 5e-3;
};

struct DecompositionVerdict {
    double reconstruction_distance = 0.0;
    double lambda_total = 0.0;
    double lambda_parts_sum = 0.0;
    std::vector<CheckResult> metric_checks;
    std::vector<CheckResult> atom_checks;
    std::vector<CheckResult> support_checks;
    bool trivial = false;  // some part is a point mass
    bool accepted = false;
    std::string cause;     // failure cause when a transform threw
};

// Reconvolve the parts left to right and compare against the target:
// Levy distance, Lambda additivity, atom matching, and the support /
// diameter bounds. Never throws on transform failure - the verdict comes
// back rejected with the cause recorded.
DecompositionVerdict verify_decomposition(const Measure& target,
                                          const std::vector<Measure>& parts,
                                          Mode mode, const VerifyConfig& cfg = {});

enum class Certificate { Certified, Inconclusive };

// Sufficient test: both endpoints of the support hull carry atoms.
Certificate indecomposable_certificate(const Measure& m);

struct SemigroupReport {
    double t = 1.0;
    std::vector<Atom> atoms;              // detected atoms of mu_t
    double expected_atom_location = 1.0;  // +-t
    double expected_atom_mass = 0.5;      // (2-t)/2, clamped at 0
    Interval ac_support{0.0, 0.0};        // detected AC support
    double expected_ac_halfwidth = 0.0;   // 2*sqrt(t-1)
    double max_atom_location_error = 0.0;
    double max_atom_mass_error = 0.0;
    double ac_support_error = 0.0;
};

// mu_t = free_power of the symmetric Bernoulli law, with the structural
// comparison of atoms (at +-t) and AC support (inside +-2 sqrt(t-1)).
std::pair<Measure, SemigroupReport> bernoulli_semigroup(double t,
                                                        Eigen::ArrayXd grid = {});

}  // namespace freeconv
