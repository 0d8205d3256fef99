#pragma once

#include "blocks.hpp"
#include "random.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace rjmlt {

struct KelemenParams {
    double s1 = 1.0/64.0;
    double s2 = 1.0/1024.0;
};

inline double wrapUnit(double x)
{
    x -= std::floor(x);
    return x < 1.0 ? x : 0.0;
}

// Exponentially distributed offset magnitude in [s2, s1]: small moves are
// frequent, larger ones still happen, and no scale dominates.
inline double kelemenOffset(const KelemenParams &params, double xi)
{
    return params.s1*std::exp(-std::log(params.s1/params.s2)*xi);
}

inline double smallStepDim(double u, Pcg32 &rng, const KelemenParams &params)
{
    double eps = kelemenOffset(params, rng.nextDouble());
    double moved = rng.nextDouble() < 0.5 ? u + eps : u - eps;
    return wrapUnit(moved);
}

inline RandomVector largeStep(Pcg32 &rng, int dim)
{
    RandomVector u(dim);
    for (double &v : u)
        v = rng.nextDouble();
    return u;
}

inline RandomVector smallStep(Pcg32 &rng, const RandomVector &u, const KelemenParams &params = {})
{
    RandomVector v(u.size());
    for (size_t i = 0; i < u.size(); ++i)
        v[i] = smallStepDim(u[i], rng, params);
    return v;
}

// Metropolis-Hastings acceptance for a move x -> y with proposal densities
// tForward = T(x -> y), tReverse = T(y -> x) and an optional deterministic
// reparametrization Jacobian folded into the proposal.
inline double metropolisAcceptance(double cCurrent, double cProposed,
        double tForward = 1.0, double tReverse = 1.0, double jacobian = 1.0)
{
    if (!(cCurrent > 0.0))
        throw std::invalid_argument("metropolisAcceptance: current target must be positive");
    if (cProposed < 0.0 || tForward <= 0.0 || tReverse < 0.0 || jacobian < 0.0)
        throw std::invalid_argument("metropolisAcceptance: invalid ratio inputs");
    double r = (cProposed*tReverse*jacobian)/(cCurrent*tForward);
    return r < 1.0 ? r : 1.0;
}

struct PerturbationMix {
    double large = 0.1;
    double small = 0.85;
    double jump = 0.05;

    void validate() const
    {
        if (large < 0.0 || small < 0.0 || jump < 0.0
                || std::abs(large + small + jump - 1.0) > 1e-9)
            throw std::invalid_argument("PerturbationMix: probabilities must be nonnegative and sum to 1");
    }
};

enum class PerturbKind { Large, Small, SmallTech, Jump };

struct KindStats {
    int64_t proposed = 0;
    int64_t accepted = 0;
    double sumR = 0.0;

    double meanR() const { return proposed > 0 ? sumR/double(proposed) : 0.0; }
    double acceptanceRate() const { return proposed > 0 ? double(accepted)/double(proposed) : 0.0; }

    void merge(const KindStats &o)
    {
        proposed += o.proposed;
        accepted += o.accepted;
        sumR += o.sumR;
    }
};

struct ChainStats {
    KindStats large, small, smallTech, jump;
    int64_t jumpVerifyFail = 0;
    int64_t jumpNonInvertible = 0;
    double maxJumpResidual = 0.0;
    int64_t steps = 0;

    KindStats &byKind(PerturbKind k)
    {
        switch (k) {
        case PerturbKind::Large:     return large;
        case PerturbKind::Small:     return small;
        case PerturbKind::SmallTech: return smallTech;
        default:                     return jump;
        }
    }

    void merge(const ChainStats &o)
    {
        large.merge(o.large);
        small.merge(o.small);
        smallTech.merge(o.smallTech);
        jump.merge(o.jump);
        jumpVerifyFail += o.jumpVerifyFail;
        jumpNonInvertible += o.jumpNonInvertible;
        maxJumpResidual = std::max(maxJumpResidual, o.maxJumpResidual);
        steps += o.steps;
    }
};

// What a model's propose() hands back to the chain driver. An empty state
// counts as a proposal with zero acceptance; the current state keeps the
// full splat weight for that iteration.
template <typename State>
struct ProposalOutcome {
    std::optional<State> state;
    double acceptance = 0.0;
    PerturbKind kind = PerturbKind::Small;
    bool verifyFailed = false;
    bool nonInvertible = false;
    double jumpResidual = 0.0;
};

// Generic expected-value Metropolis driver. The model supplies proposals and
// receives every visited state with its splat weight, so each iteration
// deposits exactly one unit of measure: r to the proposal, 1 - r to the
// current state.
//
// Model requirements:
//   using State;
//   ProposalOutcome<State> propose(const State &, PerturbKind, Pcg32 &);
//   void record(const State &, double weight);
//   void endStep(const State &);
template <typename Model>
ChainStats runChain(Model &model, typename Model::State current,
        const PerturbationMix &mix, int64_t steps, Pcg32 &rng)
{
    mix.validate();
    ChainStats stats;
    stats.steps = steps;

    for (int64_t step = 0; step < steps; ++step) {
        double pick = rng.nextDouble();
        PerturbKind kind = pick < mix.large ? PerturbKind::Large
                         : pick < mix.large + mix.small ? PerturbKind::Small
                         : PerturbKind::Jump;

        auto outcome = model.propose(current, kind, rng);
        double r = outcome.state ? outcome.acceptance : 0.0;

        KindStats &ks = stats.byKind(outcome.kind);
        ks.proposed++;
        ks.sumR += r;
        if (outcome.verifyFailed)
            stats.jumpVerifyFail++;
        if (outcome.nonInvertible)
            stats.jumpNonInvertible++;
        if (outcome.kind == PerturbKind::Jump && outcome.state && !outcome.verifyFailed)
            stats.maxJumpResidual = std::max(stats.maxJumpResidual, outcome.jumpResidual);

        if (outcome.state) {
            if (r > 0.0)
                model.record(*outcome.state, r);
            if (r < 1.0)
                model.record(current, 1.0 - r);
        } else {
            model.record(current, 1.0);
        }

        if (outcome.state && rng.nextDouble() < r) {
            current = std::move(*outcome.state);
            ks.accepted++;
        }
        model.endStep(current);
    }
    return stats;
}

} // namespace rjmlt
