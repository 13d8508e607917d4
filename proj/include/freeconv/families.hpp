#pragma once

#include "freeconv/measure.hpp"

#include <functional>

namespace freeconv {

Measure dirac(double c, Domain domain = Domain::RealLine);
// p at a, (1-p) at b.
Measure two_point(double a, double b, double pa = 0.5, Domain domain = Domain::RealLine);
// Symmetric Bernoulli: mass 1/2 at -1 and +1.
Measure bernoulli();

// Semicircle law with the given mean and variance (support radius 2*sqrt(var)).
Measure semicircle(double mean = 0.0, double variance = 1.0, int n = 2001);
Measure uniform(double a, double b, int n = 401);
// Arcsine law on (-2, 2); nodes cosine-graded to resolve the edge blowup.
Measure arcsine(int n = 2001);
// Marchenko-Pastur with ratio 1: density sqrt((4-x)/x)/(2 pi) on (0, 4].
Measure marchenko_pastur(int n = 4001);
// Projection spectral measure: mass 1/2 at 0 and at 1 (positive halfline).
Measure two_projections();
// Closed-form product of two free projections of trace 1/2:
// atom 1/2 at 0 plus density 1/(2 pi sqrt(x(1-x))) on (0, 1).
Measure projections_product(int n = 2001);

// Sample a density on [lo, hi]; supports with negligible tails are
// truncated to the [1e-8, 1-1e-8] quantile range before renormalization
// (truncated mass lands in the report).
Measure from_density(const std::function<double(double)>& f, double lo, double hi,
                     int n = 2001, Domain domain = Domain::RealLine,
                     ConstructionReport* report = nullptr);

}  // namespace freeconv
