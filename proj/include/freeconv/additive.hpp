#pragma once

#include "freeconv/measure.hpp"
#include "freeconv/transforms.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace freeconv {

// One subordination solve at a fixed point z in the upper half-plane:
// omega1 + omega2 = z + F(z) and F(z) = F_1(omega1) = F_2(omega2).
struct SubordinationSolution {
    Complex z;
    Complex omega1;
    Complex omega2;
    Complex f_value;   // common value F_1(omega1)
    double residual = 0.0;
    int iterations = 0;
};

// Fixed-point iteration omega2 <- z + h1(z + h2(omega2)) with averaging
// enabled when the raw iterate cycles. Warm seeds omega2.
SubordinationSolution subordinators(const Measure& m1, const Measure& m2, Complex z,
                                    std::optional<Complex> warm = std::nullopt);

struct AtomCandidate {
    enum class Source { Predicted, Detected };
    double location = 0.0;
    double mass = 0.0;
    Source source = Source::Predicted;
};

struct ConvolutionReport {
    Eigen::ArrayXd grid;
    std::vector<double> epsilon_schedule;
    std::vector<AtomCandidate> atom_candidates;
    double max_residual = 0.0;
    double mass_defect = 0.0;        // |1 - recovered mass| before renormalization
    double min_density_seen = 0.0;   // most negative raw density (clip diagnostic)
    double trimmed_mass = 0.0;       // smoothing bleed removed at the support ends
    bool negative_density_warning = false;
};

struct ConvolutionResult {
    Measure measure;
    ConvolutionReport report;
};

// a + b is an atom of the sum exactly when the masses at a and b exceed 1;
// a Dirac factor translates the other measure's atoms wholesale.
std::vector<Atom> predict_atoms(const Measure& m1, const Measure& m2);

// Default epsilon schedule for boundary recovery (halving steps so the
// affine extrapolation cancels the linear term).
const std::vector<double>& default_epsilon_schedule();

// Evenly spaced grid over the Minkowski hull of the supports, padded 5%.
Eigen::ArrayXd default_additive_grid(const Measure& m1, const Measure& m2, int n = 2001);
Eigen::ArrayXd hull_grid(double lo, double hi, int n = 2001);

// Pointwise boundary values G(x + i eps); stateful per lane so sweeps can
// warm-start their solvers.
using BoundaryEvaluator = std::function<Complex(double x, double eps)>;

// Recover a measure from boundary values of its Cauchy transform:
// Richardson-extrapolated density plus atom detection at the seeds and at
// grid points whose eps * Im G fails to decay.
Measure recover_from_boundary(const BoundaryEvaluator& g, const Eigen::ArrayXd& grid,
                              const std::vector<double>& eps_schedule,
                              const std::vector<Atom>& atom_seeds,
                              ConvolutionReport* report);

// Stieltjes inversion of a Cauchy-kind evaluator.
Measure stieltjes_invert(const TransformEvaluator& evaluator, const Eigen::ArrayXd& grid,
                         const std::vector<double>& eps_schedule = default_epsilon_schedule(),
                         ConvolutionReport* report = nullptr);

// Free additive convolution on the given grid (empty grid = default).
ConvolutionResult free_add(const Measure& m1, const Measure& m2,
                           Eigen::ArrayXd grid = {},
                           std::vector<double> eps_schedule = default_epsilon_schedule());

// Free additive convolution power, t >= 1; t = 1 returns the input.
ConvolutionResult free_power(const Measure& m, double t, Eigen::ArrayXd grid = {},
                             std::vector<double> eps_schedule = default_epsilon_schedule());

// F-transform of the t-fold sum evaluated anywhere in the upper
// half-plane, via the fixed point of t*v - (t-1)*F(v) = z.
Complex f_transform_power(const Measure& m, double t, Complex z,
                          std::optional<Complex> warm = std::nullopt);

}  // namespace freeconv
