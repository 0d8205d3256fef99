#pragma once

#include "random.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace rjmlt {

using RandomVector = std::vector<double>;
// Auxiliary unit-uniform draws consumed by a probabilistic inverse. Their
// densities cancel in acceptance ratios, but they are recorded for tracing.
using AuxVector = std::vector<double>;

struct Interval {
    double a = 0.0, b = 1.0;
    double width() const { return b - a; }
};

// Outcome of running one sampling block forward. jacInvDet is the absolute
// determinant of the *inverse* map at the produced sample; for an
// inversion-method block that is exactly the density of the sample.
struct BlockResult {
    double sample = 0.0;
    double jacInvDet = 1.0;
    int consumed = 1;
    std::optional<Interval> interval;
};

// Source of auxiliary draws. The midpoint flavor pins every draw to 0.5,
// which turns probabilistic inverses into deterministic ones (and, used
// naively, biases the resulting chain; the 1D validation demonstrates this).
struct GammaSource {
    Pcg32 *rng = nullptr;
    bool midpoint = false;
    AuxVector *trace = nullptr;

    double next()
    {
        double g = midpoint ? 0.5 : rng->nextDouble();
        if (trace)
            trace->push_back(g);
        return g;
    }
};

// Re-parametrization of an ambiguity interval [a, b): a unit draw gamma
// selects u = a + gamma*(b - a). Returns the selected u and the interval
// width, which is the Jacobian this placement contributes to the inverse.
inline std::pair<double, double> intervalInverse(double a, double b, double gamma)
{
    if (!(a < b))
        throw std::invalid_argument("intervalInverse: empty interval");
    return {a + gamma*(b - a), b - a};
}

// One-dimensional inversion-method block on [lo, hi]. Forward maps a unit
// uniform through the inverse CDF; the inverse recovers u = P(x) along with
// the density, which is the inverse map's Jacobian determinant. When no
// closed-form inverse CDF is supplied the forward map falls back to bisection.
class Distribution1D {
public:
    using Fn = std::function<double(double)>;

    Distribution1D() = default;
    Distribution1D(Fn pdf, Fn cdf, double lo, double hi)
    : _pdf(std::move(pdf)), _cdf(std::move(cdf)), _lo(lo), _hi(hi)
    {
        if (!(_lo < _hi))
            throw std::invalid_argument("Distribution1D: empty domain");
    }
    Distribution1D(Fn pdf, Fn cdf, Fn icdf, double lo, double hi)
    : Distribution1D(std::move(pdf), std::move(cdf), lo, hi)
    {
        _icdf = std::move(icdf);
    }

    double pdf(double x) const { return x < _lo || x > _hi ? 0.0 : _pdf(x); }
    double cdf(double x) const { return _cdf(x); }
    double lo() const { return _lo; }
    double hi() const { return _hi; }

    BlockResult sample(double u) const
    {
        double x = _icdf ? _icdf(u) : bisect(u);
        BlockResult r;
        r.sample = x;
        r.jacInvDet = _pdf(x);
        r.consumed = 1;
        return r;
    }

    // u = P(x) with Jacobian p(x). Fails on zero-density points and outside
    // the domain; a silent zero Jacobian would poison every downstream ratio.
    std::optional<std::pair<double, double>> invert(double x) const
    {
        if (x < _lo || x > _hi)
            return std::nullopt;
        double p = _pdf(x);
        if (!(p > 0.0) || !std::isfinite(p))
            return std::nullopt;
        return std::make_pair(_cdf(x), p);
    }

private:
    double bisect(double u) const
    {
        double lo = _lo, hi = _hi;
        while (hi - lo > 1e-12) {
            double mid = 0.5*(lo + hi);
            if (_cdf(mid) < u)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5*(lo + hi);
    }

    Fn _pdf, _cdf, _icdf;
    double _lo = 0.0, _hi = 1.0;
};

// Discrete-continuous mixture of 1D blocks. The selector dimension is carved
// into intervals of width alpha_t; only one nesting level is supported, i.e.
// components are plain inversion blocks, never mixtures themselves.
struct Mixture {
    std::vector<double> weights;
    std::vector<Distribution1D> components;

    Mixture() = default;
    Mixture(std::vector<double> w, std::vector<Distribution1D> c)
    : weights(std::move(w)), components(std::move(c))
    {
        if (weights.empty() || weights.size() != components.size())
            throw std::invalid_argument("Mixture: component/weight mismatch");
        double sum = 0.0;
        for (double a : weights) {
            if (a < 0.0)
                throw std::invalid_argument("Mixture: negative weight");
            sum += a;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("Mixture: weights must sum to 1");
    }

    double pdf(double x) const
    {
        double p = 0.0;
        for (size_t t = 0; t < weights.size(); ++t)
            p += weights[t]*components[t].pdf(x);
        return p;
    }
};

struct MixtureSample {
    double sample = 0.0;
    int tech = 0;
    BlockResult block;
};

// Forward mixture evaluation: u1 picks the component by walking the weight
// CDF, u2 feeds the chosen component's own inversion block.
inline MixtureSample mixtureForward(const Mixture &mix, double u1, double u2)
{
    size_t n = mix.weights.size();
    double cum = 0.0;
    size_t t = 0;
    while (t + 1 < n && u1 >= cum + mix.weights[t]) {
        cum += mix.weights[t];
        ++t;
    }
    // A boundary u1 can land on a zero-weight component; nudge to a real one.
    while (mix.weights[t] == 0.0 && t + 1 < n) {
        ++t;
    }
    while (mix.weights[t] == 0.0 && t > 0) {
        --t;
    }
    cum = 0.0;
    for (size_t i = 0; i < t; ++i)
        cum += mix.weights[i];

    double alpha = mix.weights[t];
    BlockResult inner = mix.components[t].sample(u2);

    MixtureSample out;
    out.sample = inner.sample;
    out.tech = int(t);
    out.block.sample = inner.sample;
    out.block.jacInvDet = alpha*inner.jacInvDet;
    out.block.consumed = 2;
    out.block.interval = Interval{cum, cum + alpha};
    return out;
}

// Selection distribution for inverting a mixture at x: T(t) proportional to
// alpha_t p_t(x). This choice makes the per-step acceptance factor collapse
// to the reciprocal of the full mixture density. All-zero densities mean x
// is outside every component's support and the mixture is not invertible.
inline std::optional<std::vector<double>> mixtureSelectionDistribution(const Mixture &mix, double x)
{
    std::vector<double> t(mix.weights.size());
    double sum = 0.0;
    for (size_t i = 0; i < t.size(); ++i) {
        t[i] = mix.weights[i]*mix.components[i].pdf(x);
        sum += t[i];
    }
    if (!(sum > 0.0))
        return std::nullopt;
    for (double &v : t)
        v /= sum;
    return t;
}

struct MixtureInversion {
    double u1 = 0.0, u2 = 0.0;
    int tech = 0;
    double jacInvDet = 0.0;
    double techProb = 0.0;
};

// Probabilistic mixture inverse with the component choice forced. gamma1
// places u1 inside the chosen selection interval.
inline std::optional<MixtureInversion> mixtureInverseForced(const Mixture &mix, double x,
        int tech, double gamma1)
{
    if (tech < 0 || size_t(tech) >= mix.weights.size())
        return std::nullopt;
    auto sel = mixtureSelectionDistribution(mix, x);
    if (!sel || (*sel)[tech] <= 0.0)
        return std::nullopt;

    double cum = 0.0;
    for (int i = 0; i < tech; ++i)
        cum += mix.weights[i];
    double alpha = mix.weights[tech];

    auto inner = mix.components[tech].invert(x);
    if (!inner)
        return std::nullopt;

    MixtureInversion inv;
    inv.u1 = intervalInverse(cum, cum + alpha, gamma1).first;
    inv.u2 = inner->first;
    inv.tech = tech;
    inv.jacInvDet = alpha*inner->second;
    inv.techProb = (*sel)[tech];
    return inv;
}

inline std::optional<MixtureInversion> mixtureInverse(const Mixture &mix, double x, GammaSource &gamma)
{
    auto sel = mixtureSelectionDistribution(mix, x);
    if (!sel)
        return std::nullopt;

    double pick = gamma.next();
    double cum = 0.0;
    int tech = int(sel->size()) - 1;
    for (size_t i = 0; i < sel->size(); ++i) {
        if (pick < cum + (*sel)[i]) {
            tech = int(i);
            break;
        }
        cum += (*sel)[i];
    }
    return mixtureInverseForced(mix, x, tech, gamma.next());
}

// Absolute Jacobian determinant of a block chain's inverse: independent
// blocks compose into a block-diagonal map, so determinants multiply. An
// empty chain is the identity.
template <typename Range>
double chainJacobian(const Range &results)
{
    double j = 1.0;
    for (const auto &r : results)
        j *= r.jacInvDet;
    return j;
}

inline double chainJacobian(std::span<const BlockResult> results)
{
    return chainJacobian<std::span<const BlockResult>>(results);
}

} // namespace rjmlt
