#pragma once

#include "bdpt.hpp"
#include "chain.hpp"
#include "image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rjmlt {

enum class Algorithm { Mmlt, Rjmlt };

const char *algorithmName(Algorithm a);
Algorithm parseAlgorithm(const std::string &name);

PerturbationMix defaultMix(Algorithm a);

struct MltOptions {
    int64_t mutations = 0;        // total across path lengths
    uint64_t seed = 0;
    PerturbationMix mix;          // use defaultMix(algorithm) unless overridden
    int kMax = 10;
    int bootstrapSize = 100000;   // per path length
    KelemenParams kelemen;
    int threads = 1;
};

struct RenderStats {
    std::string algorithm;
    uint64_t seed = 0;
    int kMax = 0;
    double brightness = 0.0;           // sum of per-length brightness factors
    std::vector<double> perLengthB;    // indexed by k
    std::vector<int64_t> budgets;
    std::vector<ChainStats> perLength;
};

// Unidirectional path tracer with next-event estimation and a balance MIS
// pair per length; the consistency reference and normalization sanity check.
Image pathTraceReference(const Scene &scene, int spp, uint64_t seed,
        int kMax = 10, int threads = 1);

// Metropolis renderer with per-path-length chains. mmlt re-maps the technique
// through an extra selector dimension mutated by small steps; rjmlt keeps the
// technique explicit and moves it with reversible jumps.
Image mltRender(const Scene &scene, Algorithm algorithm, const MltOptions &options,
        RenderStats *stats = nullptr);

} // namespace rjmlt
