#pragma once

#include "blocks.hpp"
#include "chain.hpp"
#include "jump.hpp"
#include "statistics.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace rjmlt::oned {

// Validation harness on the unit line: three sampling techniques target the
// same wavy density, a Markov chain explores the joint technique/sample
// space, and histograms of its states and technique usage expose whether the
// jump machinery preserves the distribution.

enum class Variant { Baseline, NoJacobian, FixedPoint, Full };

Variant parseVariant(std::string_view name);
std::string variantName(Variant v);

double targetDensity(double x);      // 1 + 0.9 sin(3 pi x)
double targetNormalization();        // closed-form integral over [0, 1]

inline constexpr int TechniqueCount = 3;
inline constexpr int Dimensions = 3; // selector, position, sub-technique

double techniquePdf(int tech, double x);
std::array<double, 3> techniquePdfs(double x);
double misWeight(int tech, double x);

struct Decoded {
    int tech = 0;
    int sub = -1; // mixture component, -1 for plain techniques
    double x = 0.0;
    double pdf = 0.0; // position density of the producing technique
};

// Forward map of one technique: u[0] is ignored (the caller owns technique
// selection), u[1] drives the position block, u[2] the mixture component.
Decoded techniqueSample(int tech, std::span<const double> u);

// Decode a full state vector, deriving the technique from equal thirds of
// the selector dimension.
Decoded decodeState(std::span<const double> u);

// Probabilistic inverse of one technique at x, including the selector
// placement in the technique's third. Fails where the technique's density
// vanishes.
std::optional<PathInversion> techniqueInvert(int tech, double x, GammaSource &gamma);

// Technique space plugged into the generic jump machinery.
struct TechniqueSpace {
    using PathT = double;

    int techniqueCount() const { return TechniqueCount; }
    int dim() const { return Dimensions; }
    std::optional<PathT> samplePath(int tech, std::span<const double> u) const;
    std::optional<PathInversion> invertPath(int tech, const PathT &x, GammaSource &gamma) const;
    std::optional<PathInversion> inverseJacobian(int tech, const PathT &x, std::span<const double> u) const;
    double pathDistance(const PathT &a, const PathT &b) const;
    double targetValue(const PathT &x, int tech) const;
};

struct RunResult {
    Variant variant = Variant::Full;
    int bins = 0;
    int64_t steps = 0;
    uint64_t seed = 0;
    double totalWeight = 0.0;
    std::vector<double> stateWeight;                // splat-weighted state histogram
    std::vector<std::array<double, 3>> usageWeight; // splat-weighted technique usage
    std::vector<int64_t> visits;                    // raw per-bin visit counts
    std::vector<int64_t> thinned;                   // decimated counts for chi-square
    int64_t thinnedTotal = 0;
    ChainStats stats;

    void merge(const RunResult &other);
};

RunResult runVariant(Variant variant, int64_t steps, uint64_t seed, int bins);

// Bin-averaged analytic curves (Gauss-Legendre per bin, no edge samples):
// the normalized target density, and the balance-heuristic weight of each
// technique averaged under the target density so it matches what a converged
// chain records per bin.
std::vector<double> expectedStateDensity(int bins);
std::array<std::vector<double>, 3> expectedUsage(int bins);

// Pearson test of the decimated state counts against the analytic density.
ChiSquareResult stateChiSquare(const RunResult &run);

void writeCsv(const RunResult &run, const std::string &path);

} // namespace rjmlt::oned
