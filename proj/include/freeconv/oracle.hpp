#pragma once

#include "freeconv/measure.hpp"

#include <cstdint>
#include <vector>

namespace freeconv {

// Random-matrix Monte Carlo settings. Output is a deterministic function
// of (inputs, config): trials own counter-derived streams, so scheduling
// order cannot change the histogram.
struct OracleConfig {
    int matrix_size = 256;  // >= 64
    int trials = 10;        // >= 1
    std::uint64_t seed = 1;
    int bin_count = 0;      // 0 = ceil(sqrt(matrix_size * trials))
};

// Deterministic spectrum: quantile((k - 1/2)/n) for k = 1..n, sorted.
std::vector<double> sample_spectrum(const Measure& m, int n);

// Eigenvalues of D1 + Q D2 Q^T, Haar-rotated across trials, aggregated
// into a histogram measure (atoms split out of spiking bins).
Measure sample_additive(const Measure& m1, const Measure& m2, const OracleConfig& cfg);

// Same with D2^{1/2} Q D1 Q^T D2^{1/2} for positive-halfline inputs.
Measure sample_multiplicative(const Measure& m1, const Measure& m2, const OracleConfig& cfg);

// Raw eigenvalue samples behind the histograms (diagnostics / CSV dumps).
std::vector<double> raw_additive_eigenvalues(const Measure& m1, const Measure& m2,
                                             const OracleConfig& cfg);
std::vector<double> raw_multiplicative_eigenvalues(const Measure& m1, const Measure& m2,
                                                   const OracleConfig& cfg);

// Histogram step alone: bins raw eigenvalues, splitting atoms out of bins
// that spike over 5x their neighbor average (snapped to predicted
// locations within one bin width).
Measure bin_eigenvalues(const std::vector<double>& eigenvalues, const Measure& m1,
                        const Measure& m2, const OracleConfig& cfg, bool multiplicative);

}  // namespace freeconv
