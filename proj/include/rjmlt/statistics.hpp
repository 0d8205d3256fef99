#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rjmlt {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x),
// series expansion below the a + 1 crossover and a continued fraction above.
double gammaP(double a, double x);
double gammaQ(double a, double x);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double pValue = 1.0;
};

// Pearson goodness-of-fit test. expected holds unnormalized weights that are
// scaled so their total matches nSamples; adjacent bins are merged until
// every expected count reaches minExpected, and dof = bins - 1 afterwards.
ChiSquareResult chiSquareTest(std::span<const int64_t> observed,
                              std::span<const double> expected,
                              int64_t nSamples, double minExpected = 5.0);

} // namespace rjmlt
