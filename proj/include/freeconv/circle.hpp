#pragma once

#include "freeconv/measure.hpp"
#include "freeconv/transforms.hpp"

namespace freeconv {

// First moment of a circle measure: integral of e^{i theta}; modulus <= 1.
Complex circle_mean(const Measure& m);

// S(0) = 1/mean. Throws DomainError when |mean| <= 1e-9 (outside M_*).
Complex s_zero(const Measure& m);

// |S(0)| >= 1, with equality exactly at single atoms.
double lambda_circle(const Measure& m);

// Shift all angles by theta (mod 2pi); equals convolving with the point
// mass at e^{i theta}. lambda_circle is invariant, s_zero picks up
// e^{-i theta}.
Measure rotate(const Measure& m, double theta);

}  // namespace freeconv
