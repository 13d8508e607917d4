#pragma once

#include "freeconv/additive.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/transforms.hpp"

#include <optional>

namespace freeconv {

// Multiplicative subordination at lambda:
//   psi(lambda) = psi_1(omega1) = psi_2(omega2),
//   omega1 * omega2 = lambda * eta(lambda),  eta = psi/(1 + psi).
struct MultSubordinationSolution {
    Complex lambda;
    Complex omega1;
    Complex omega2;
    Complex psi_value;  // common value psi_1(omega1)
    double residual = 0.0;
    int iterations = 0;
};

// Damped Picard loop on omega1 with the product relation closing the
// cycle; conjugation handles Im lambda < 0.
MultSubordinationSolution mult_subordinators(const Measure& m1, const Measure& m2,
                                             Complex lambda,
                                             std::optional<Complex> warm = std::nullopt);

// Grid over [min1*min2, max1*max2] padded 5%.
Eigen::ArrayXd default_multiplicative_grid(const Measure& m1, const Measure& m2,
                                           int n = 2001);

// Free multiplicative convolution of positive-halfline measures (neither
// concentrated at 0). The mass at zero follows the exact max rule; the
// rest is recovered through G(w) = (psi(1/w) + 1)/w.
ConvolutionResult free_mult(const Measure& m1, const Measure& m2,
                            Eigen::ArrayXd grid = {},
                            std::vector<double> eps_schedule = default_epsilon_schedule());

// S-transform of m1 x m2 evaluated through the subordination layer (no
// density recovery), exact up to solver residuals.
double s_transform_of_product(const Measure& m1, const Measure& m2, double u);

// Scale so the S-transform equals 1 at -beta: returns (m x delta_c, c)
// with c = S_m(-beta).
std::pair<Measure, double> s_normalize(const Measure& m, double beta);

// Dilate so psi(result, -1) = -alpha/2; alpha defaults to 1 - m({0}).
// Returns (dilated measure, lambda).
std::pair<Measure, double> chi_normalize(const Measure& m,
                                         std::optional<double> alpha = std::nullopt);

}  // namespace freeconv
