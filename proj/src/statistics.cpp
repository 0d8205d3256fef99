#include "rjmlt/statistics.hpp"

#include <cmath>
#include <stdexcept>

namespace rjmlt {

namespace {

constexpr int MaxIterations = 500;
constexpr double Epsilon = 1e-15;

double gammaPSeries(double a, double x)
{
    double ap = a;
    double term = 1.0/a;
    double sum = term;
    for (int i = 0; i < MaxIterations; ++i) {
        ap += 1.0;
        term *= x/ap;
        sum += term;
        if (std::abs(term) < std::abs(sum)*Epsilon)
            break;
    }
    return sum*std::exp(-x + a*std::log(x) - std::lgamma(a));
}

double gammaQContinuedFraction(double a, double x)
{
    // Modified Lentz evaluation of the continued fraction for Q(a, x).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0/tiny;
    double d = 1.0/b;
    double h = d;
    for (int i = 1; i <= MaxIterations; ++i) {
        double an = -double(i)*(double(i) - a);
        b += 2.0;
        d = an*d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an/c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0/d;
        double delta = d*c;
        h *= delta;
        if (std::abs(delta - 1.0) < Epsilon)
            break;
    }
    return h*std::exp(-x + a*std::log(x) - std::lgamma(a));
}

} // namespace

double gammaP(double a, double x)
{
    if (a <= 0.0 || x < 0.0)
        throw std::invalid_argument("gammaP: invalid arguments");
    if (x == 0.0)
        return 0.0;
    if (x < a + 1.0)
        return gammaPSeries(a, x);
    return 1.0 - gammaQContinuedFraction(a, x);
}

double gammaQ(double a, double x)
{
    if (a <= 0.0 || x < 0.0)
        throw std::invalid_argument("gammaQ: invalid arguments");
    if (x == 0.0)
        return 1.0;
    if (x < a + 1.0)
        return 1.0 - gammaPSeries(a, x);
    return gammaQContinuedFraction(a, x);
}

ChiSquareResult chiSquareTest(std::span<const int64_t> observed,
                              std::span<const double> expected,
                              int64_t nSamples, double minExpected)
{
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("chiSquareTest: size mismatch");

    double weightSum = 0.0;
    for (double w : expected) {
        if (w < 0.0)
            throw std::invalid_argument("chiSquareTest: negative expected weight");
        weightSum += w;
    }
    if (!(weightSum > 0.0))
        throw std::invalid_argument("chiSquareTest: all-zero expectation");

    double scale = double(nSamples)/weightSum;

    // Pool adjacent bins until each merged bin carries enough expectation for
    // the Pearson statistic's chi-square approximation to hold.
    std::vector<double> obs, exp;
    double accObs = 0.0, accExp = 0.0;
    for (size_t i = 0; i < observed.size(); ++i) {
        accObs += double(observed[i]);
        accExp += expected[i]*scale;
        if (accExp >= minExpected) {
            obs.push_back(accObs);
            exp.push_back(accExp);
            accObs = accExp = 0.0;
        }
    }
    if (accExp > 0.0 || accObs > 0.0) {
        if (!exp.empty()) {
            obs.back() += accObs;
            exp.back() += accExp;
        } else {
            obs.push_back(accObs);
            exp.push_back(accExp);
        }
    }

    ChiSquareResult result;
    for (size_t i = 0; i < obs.size(); ++i) {
        double d = obs[i] - exp[i];
        result.statistic += d*d/exp[i];
    }
    result.dof = int(obs.size()) - 1;
    result.pValue = result.dof > 0 ? gammaQ(0.5*result.dof, 0.5*result.statistic) : 1.0;
    return result;
}

} // namespace rjmlt
