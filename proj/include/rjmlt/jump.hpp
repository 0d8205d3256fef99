#pragma once

#include "blocks.hpp"
#include "random.hpp"

#include <cassert>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

namespace rjmlt {

// Draw an index proportional to a vector of nonnegative weights. The weights
// need not be normalized; zero-weight entries are never selected.
inline int sampleIndex(std::span<const double> weights, double xi)
{
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w))
            throw std::invalid_argument("sampleIndex: invalid weight");
        sum += w;
    }
    if (!(sum > 0.0))
        throw std::invalid_argument("sampleIndex: all-zero weights");

    double target = xi*sum;
    double cum = 0.0;
    int last = -1;
    for (size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0)
            continue;
        last = int(i);
        cum += weights[i];
        if (target < cum)
            return int(i);
    }
    return last;
}

inline int sampleIndex(std::span<const double> weights, Pcg32 &rng)
{
    return sampleIndex(weights, rng.nextDouble());
}

// Acceptance ratio for a dimension-changing move between technique spaces.
// Both Jacobians enter as determinants of the respective inverse maps; the
// mixture factor carries the selection probabilities of any probabilistic
// inverse choices, current side over proposed side.
inline double jumpAcceptance(double cFrom, double cTo, double tForward, double tReverse,
        double jacFromInverse, double jacToInverse, double mixtureFactor = 1.0)
{
    if (!(cFrom > 0.0) || !(tForward > 0.0) || !(jacFromInverse > 0.0))
        throw std::invalid_argument("jumpAcceptance: degenerate source state");
    if (cTo < 0.0 || tReverse < 0.0 || jacToInverse < 0.0 || mixtureFactor < 0.0)
        throw std::invalid_argument("jumpAcceptance: negative ratio input");
    double r = (cTo*tReverse*jacToInverse)/(cFrom*tForward*jacFromInverse)*mixtureFactor;
    if (!std::isfinite(r))
        throw std::domain_error("jumpAcceptance: non-finite ratio");
    return r < 1.0 ? r : 1.0;
}

struct JumpOptions {
    bool useJacobians = true;      // disable to reproduce the naive, biased ratio
    bool midpointIntervals = false; // pin ambiguity placements to interval midpoints
    double verifyTol = 1e-6;
};

struct JumpRecord {
    int from = -1, to = -1;
    double forwardJac = 0.0;   // |J S_from| at the current state
    double inverseJac = 0.0;   // |J S_to^-1| at the shared path
    double mixtureFactor = 1.0;
    double acceptance = 0.0;
    bool invertible = false;
    bool verified = false;
    AuxVector aux;
};

// Result of applying one technique's probabilistic inverse to a path:
// the recovered primary sample vector, the absolute determinant of the
// inverse map, and the probability of the discrete choices made on the
// way (1 when there were none).
struct PathInversion {
    RandomVector u;
    double jacInvDet = 0.0;
    double techProb = 1.0;
};

// Space concept used by the jump machinery (duck-typed):
//   using PathT;
//   int techniqueCount() const;
//   int dim() const;
//   std::optional<PathT> samplePath(int t, std::span<const double> u) const;
//   std::optional<PathInversion> invertPath(int t, const PathT &, GammaSource &) const;
//   std::optional<PathInversion> inverseJacobian(int t, const PathT &, std::span<const double> u) const;
//   double pathDistance(const PathT &, const PathT &) const;
//   double targetValue(const PathT &, int t) const;

template <typename Space>
struct JumpProposal {
    std::optional<typename Space::PathT> path; // verified re-trace of the shared path
    RandomVector u;
    int tech = -1;
    double acceptance = 0.0;
    double residual = 0.0; // |r_raw - 1|, before clamping
    bool verifyFailed = false;
    bool nonInvertible = false;
    JumpRecord record;
};

// Re-run a technique forward on a recovered sample vector and require it to
// reproduce the original path. Inversion bugs and numerically fragile
// configurations both surface here instead of corrupting the chain.
template <typename Space>
bool forwardVerify(const Space &space, int tech, std::span<const double> u,
        const typename Space::PathT &expected, double tol,
        typename Space::PathT *resampled = nullptr)
{
    auto re = space.samplePath(tech, u);
    if (!re)
        return false;
    if (!(space.pathDistance(*re, expected) <= tol))
        return false;
    if (resampled)
        *resampled = std::move(*re);
    return true;
}

// One reversible jump: pick a target technique proportional to the path's
// technique densities, invert it, verify the round trip, and assemble the
// acceptance ratio with every factor evaluated on the shared path. With the
// balance heuristic and density-proportional selection everything cancels,
// so verified jumps are accepted with probability one up to rounding.
template <typename Space>
JumpProposal<Space> reversibleJump(const Space &space, int from, std::span<const double> u,
        const typename Space::PathT &path, double contribution,
        std::span<const double> pdfs, Pcg32 &rng, const JumpOptions &opts = {})
{
    JumpProposal<Space> out;
    out.record.from = from;

    double pdfSum = 0.0;
    for (double p : pdfs)
        pdfSum += p;
    if (!(pdfSum > 0.0) || !(pdfs[from] > 0.0) || !(contribution > 0.0)) {
        out.nonInvertible = true;
        return out;
    }

    int to = sampleIndex(pdfs, rng);
    out.record.to = to;

    GammaSource gamma{&rng, opts.midpointIntervals, &out.record.aux};
    auto inv = space.invertPath(to, path, gamma);
    if (!inv) {
        out.nonInvertible = true;
        return out;
    }
    out.record.invertible = true;

    for (double &v : inv->u) {
        if (v >= 1.0)
            v = std::nextafter(1.0, 0.0);
        else if (v < 0.0 || std::isnan(v))
            v = 0.0;
    }

    typename Space::PathT resampled;
    if (!forwardVerify(space, to, inv->u, path, opts.verifyTol, &resampled)) {
        out.verifyFailed = true;
        return out;
    }
    out.record.verified = true;

    auto rev = space.inverseJacobian(from, path, u);
    if (!rev) {
        out.nonInvertible = true;
        return out;
    }

    // Balance-heuristic target and density-proportional technique proposal,
    // all at the pre-jump path so the cancellation is exact.
    double cFrom = contribution/pdfSum;
    double cTo = contribution/pdfSum;
    double tForward = pdfs[to]/pdfSum;
    double tReverse = pdfs[from]/pdfSum;
    double jacTo = opts.useJacobians ? inv->jacInvDet : 1.0;
    double jacFrom = opts.useJacobians ? rev->jacInvDet : 1.0;
    double mixtureFactor = inv->techProb > 0.0 ? rev->techProb/inv->techProb : 0.0;

    double rRaw = (cTo*tReverse*jacTo)/(cFrom*tForward*jacFrom)*mixtureFactor;
    if (!std::isfinite(rRaw) || !(rRaw > 0.0)) {
        out.nonInvertible = true;
        return out;
    }

    out.acceptance = rRaw < 1.0 ? rRaw : 1.0;
    out.residual = std::abs(rRaw - 1.0);
    assert(!opts.useJacobians || out.residual <= 1e-9);

    out.record.forwardJac = 1.0/rev->jacInvDet;
    out.record.inverseJac = inv->jacInvDet;
    out.record.mixtureFactor = mixtureFactor;
    out.record.acceptance = out.acceptance;
    out.path = std::move(resampled);
    out.u = std::move(inv->u);
    out.tech = to;
    return out;
}

template <typename Space>
struct NaiveOutcome {
    std::optional<typename Space::PathT> path;
    int tech = -1;
    double acceptance = 0.0;
};

// The multiplexed-style technique change: keep the primary sample vector and
// re-interpret it under a uniformly drawn technique. Symmetric proposal, so
// the acceptance is a bare target ratio; the resulting path usually moves
// far, which is exactly why this perturbation accepts poorly.
template <typename Space>
NaiveOutcome<Space> naiveTechniquePerturbation(const Space &space, int from,
        std::span<const double> u, double cCurrent, Pcg32 &rng)
{
    if (!(cCurrent > 0.0))
        throw std::invalid_argument("naiveTechniquePerturbation: degenerate current state");
    int n = space.techniqueCount();
    int to = std::min(int(rng.nextDouble()*n), n - 1);
    (void)from;

    NaiveOutcome<Space> out;
    out.tech = to;
    auto path = space.samplePath(to, u);
    if (!path)
        return out;
    double c = space.targetValue(*path, to);
    if (!(c > 0.0))
        return out;
    out.acceptance = std::min(1.0, c/cCurrent);
    out.path = std::move(*path);
    return out;
}

} // namespace rjmlt
