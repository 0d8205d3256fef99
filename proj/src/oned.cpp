#include "rjmlt/oned.hpp"
#include "rjmlt/math.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rjmlt::oned {

namespace {

const Distribution1D &triangular()
{
    static const Distribution1D d(
        [](double x) { return 2.0*(1.0 - x); },
        [](double x) { return 2.0*x - x*x; },
        [](double u) { return 1.0 - std::sqrt(1.0 - u); },
        0.0, 1.0);
    return d;
}

const Distribution1D &stepped()
{
    static const Distribution1D d(
        [](double x) { return x < 0.5 ? 1.5 : 0.5; },
        [](double x) { return x < 0.5 ? 1.5*x : 0.75 + 0.5*(x - 0.5); },
        [](double u) { return u < 0.75 ? u/1.5 : 0.5 + 2.0*(u - 0.75); },
        0.0, 1.0);
    return d;
}

const Mixture &mixed()
{
    static const Mixture m({0.6, 0.4},
            {Distribution1D(
                 [](double x) { return 0.5*Pi*std::sin(Pi*x); },
                 [](double x) { return 0.5*(1.0 - std::cos(Pi*x)); },
                 [](double u) { return std::acos(1.0 - 2.0*u)/Pi; },
                 0.0, 1.0),
             Distribution1D(
                 [](double x) { return 2.0*x; },
                 [](double x) { return x*x; },
                 [](double u) { return std::sqrt(u); },
                 0.0, 1.0)});
    return m;
}

constexpr double Third = 1.0/3.0;

} // namespace

Variant parseVariant(std::string_view name)
{
    if (name == "baseline")   return Variant::Baseline;
    if (name == "nojacobian") return Variant::NoJacobian;
    if (name == "fixedpoint") return Variant::FixedPoint;
    if (name == "full")       return Variant::Full;
    throw std::invalid_argument("unknown 1d variant: " + std::string(name));
}

std::string variantName(Variant v)
{
    switch (v) {
    case Variant::Baseline:   return "baseline";
    case Variant::NoJacobian: return "nojacobian";
    case Variant::FixedPoint: return "fixedpoint";
    default:                  return "full";
    }
}

double targetDensity(double x)
{
    return 1.0 + 0.9*std::sin(3.0*Pi*x);
}

double targetNormalization()
{
    return 1.0 + 0.6/Pi;
}

double techniquePdf(int tech, double x)
{
    if (x < 0.0 || x > 1.0)
        return 0.0;
    switch (tech) {
    case 0:  return triangular().pdf(x);
    case 1:  return stepped().pdf(x);
    case 2:  return mixed().pdf(x);
    default: throw std::invalid_argument("techniquePdf: bad technique");
    }
}

std::array<double, 3> techniquePdfs(double x)
{
    return {techniquePdf(0, x), techniquePdf(1, x), techniquePdf(2, x)};
}

double misWeight(int tech, double x)
{
    auto p = techniquePdfs(x);
    double sum = p[0] + p[1] + p[2];
    return sum > 0.0 ? p[tech]/sum : 0.0;
}

Decoded techniqueSample(int tech, std::span<const double> u)
{
    Decoded d;
    d.tech = tech;
    if (tech == 2) {
        auto pick = mixtureForward(mixed(), u[2], u[1]);
        d.sub = pick.tech;
        d.x = pick.sample;
        d.pdf = mixed().pdf(d.x);
    } else {
        auto r = (tech == 0 ? triangular() : stepped()).sample(u[1]);
        d.x = r.sample;
        d.pdf = r.jacInvDet;
    }
    return d;
}

Decoded decodeState(std::span<const double> u)
{
    int tech = std::min(int(u[0]*TechniqueCount), TechniqueCount - 1);
    return techniqueSample(tech, u);
}

std::optional<PathInversion> techniqueInvert(int tech, double x, GammaSource &gamma)
{
    PathInversion inv;
    inv.u.resize(Dimensions);
    double lo = tech*Third, hi = (tech + 1)*Third;
    auto [sel, selJac] = intervalInverse(lo, hi, gamma.next());
    // Keep the selector strictly inside its third: an exact boundary value
    // would decode to the neighboring technique.
    if (sel <= lo)
        sel = std::nextafter(lo, 1.0);
    if (sel >= hi)
        sel = std::nextafter(hi, 0.0);
    inv.u[0] = sel;
    inv.jacInvDet = selJac;

    if (tech == 2) {
        auto minv = mixtureInverse(mixed(), x, gamma);
        if (!minv)
            return std::nullopt;
        inv.u[1] = minv->u2;
        inv.u[2] = minv->u1;
        inv.jacInvDet *= minv->jacInvDet;
        inv.techProb = minv->techProb;
    } else {
        auto pinv = (tech == 0 ? triangular() : stepped()).invert(x);
        if (!pinv)
            return std::nullopt;
        inv.u[1] = pinv->first;
        inv.u[2] = gamma.next();
        inv.jacInvDet *= pinv->second;
    }
    return inv;
}

std::optional<double> TechniqueSpace::samplePath(int tech, std::span<const double> u) const
{
    return techniqueSample(tech, u).x;
}

std::optional<PathInversion> TechniqueSpace::invertPath(int tech, const double &x, GammaSource &gamma) const
{
    return techniqueInvert(tech, x, gamma);
}

std::optional<PathInversion> TechniqueSpace::inverseJacobian(int tech, const double &x,
        std::span<const double> u) const
{
    PathInversion inv;
    inv.jacInvDet = Third;
    if (tech == 2) {
        int sub = u[2] < mixed().weights[0] ? 0 : 1;
        auto minv = mixtureInverseForced(mixed(), x, sub, 0.0);
        if (!minv)
            return std::nullopt;
        inv.jacInvDet *= minv->jacInvDet;
        inv.techProb = minv->techProb;
    } else {
        auto pinv = (tech == 0 ? triangular() : stepped()).invert(x);
        if (!pinv)
            return std::nullopt;
        inv.jacInvDet *= pinv->second;
    }
    return inv;
}

double TechniqueSpace::pathDistance(const double &a, const double &b) const
{
    return std::abs(a - b);
}

double TechniqueSpace::targetValue(const double &x, int tech) const
{
    auto p = techniquePdfs(x);
    double sum = p[0] + p[1] + p[2];
    if (!(p[tech] > 0.0) || !(sum > 0.0))
        return 0.0;
    return targetDensity(x)/sum;
}

namespace {

// Chain model over the 3-dimensional multiplexed state. Burn-in keeps the
// fixed start out of the histograms; the decimation stride is several times
// the empirical autocorrelation time of x, so the thinned counts behave like
// independent draws for the Pearson test.
struct HarnessModel {
    static constexpr int64_t BurnIn = 10000;
    static constexpr int64_t ThinStride = 2000;

    struct State {
        std::array<double, Dimensions> u;
        int tech = 0;
        double x = 0.0;
        double c = 0.0;
    };

    TechniqueSpace space;
    JumpOptions jumpOptions;
    KelemenParams kelemen;
    RunResult *out = nullptr;
    int64_t step = 0;

    std::optional<State> evaluate(const std::array<double, Dimensions> &u) const
    {
        Decoded d = decodeState(u);
        double c = space.targetValue(d.x, d.tech);
        if (!(c > 0.0))
            return std::nullopt;
        return State{u, d.tech, d.x, c};
    }

    ProposalOutcome<State> propose(const State &cur, PerturbKind kind, Pcg32 &rng)
    {
        ProposalOutcome<State> outProp;
        outProp.kind = kind;

        if (kind == PerturbKind::Jump) {
            auto pdfs = techniquePdfs(cur.x);
            auto prop = reversibleJump(space, cur.tech, cur.u, cur.x,
                    targetDensity(cur.x), pdfs, rng, jumpOptions);
            outProp.verifyFailed = prop.verifyFailed;
            outProp.nonInvertible = prop.nonInvertible;
            outProp.jumpResidual = prop.residual;
            if (!prop.path)
                return outProp;
            std::array<double, Dimensions> u;
            std::copy(prop.u.begin(), prop.u.end(), u.begin());
            auto next = evaluate(u);
            if (!next)
                return outProp;
            outProp.state = *next;
            outProp.acceptance = prop.acceptance;
            return outProp;
        }

        std::array<double, Dimensions> u;
        if (kind == PerturbKind::Large) {
            for (double &v : u)
                v = rng.nextDouble();
        } else {
            for (int i = 0; i < Dimensions; ++i)
                u[i] = smallStepDim(cur.u[i], rng, kelemen);
        }
        auto next = evaluate(u);
        if (!next)
            return outProp;
        if (kind == PerturbKind::Small && next->tech != cur.tech)
            outProp.kind = PerturbKind::SmallTech;
        outProp.state = *next;
        outProp.acceptance = metropolisAcceptance(cur.c, next->c);
        return outProp;
    }

    int bin(double x) const
    {
        return std::min(int(x*out->bins), out->bins - 1);
    }

    void record(const State &s, double w)
    {
        if (step < BurnIn)
            return;
        int b = bin(s.x);
        out->stateWeight[b] += w;
        out->usageWeight[b][s.tech] += w;
        out->totalWeight += w;
    }

    void endStep(const State &cur)
    {
        if (step >= BurnIn) {
            int b = bin(cur.x);
            out->visits[b]++;
            if ((step - BurnIn) % ThinStride == 0) {
                out->thinned[b]++;
                out->thinnedTotal++;
            }
        }
        step++;
    }
};

} // namespace

void RunResult::merge(const RunResult &other)
{
    if (bins != other.bins || variant != other.variant)
        throw std::invalid_argument("RunResult::merge: incompatible runs");
    steps += other.steps;
    totalWeight += other.totalWeight;
    for (int b = 0; b < bins; ++b) {
        stateWeight[b] += other.stateWeight[b];
        visits[b] += other.visits[b];
        thinned[b] += other.thinned[b];
        for (int t = 0; t < 3; ++t)
            usageWeight[b][t] += other.usageWeight[b][t];
    }
    thinnedTotal += other.thinnedTotal;
    stats.merge(other.stats);
}

RunResult runVariant(Variant variant, int64_t steps, uint64_t seed, int bins)
{
    if (steps <= 0 || bins <= 0)
        throw std::invalid_argument("runVariant: steps and bins must be positive");

    RunResult out;
    out.variant = variant;
    out.bins = bins;
    out.steps = steps;
    out.seed = seed;
    out.stateWeight.assign(bins, 0.0);
    out.usageWeight.assign(bins, {0.0, 0.0, 0.0});
    out.visits.assign(bins, 0);
    out.thinned.assign(bins, 0);

    HarnessModel model;
    model.out = &out;
    switch (variant) {
    case Variant::NoJacobian: model.jumpOptions.useJacobians = false; break;
    case Variant::FixedPoint: model.jumpOptions.midpointIntervals = true; break;
    default: break;
    }
    model.jumpOptions.verifyTol = 1e-9;

    PerturbationMix mix = variant == Variant::Baseline
            ? PerturbationMix{0.0, 1.0, 0.0}
            : PerturbationMix{0.0, 0.9, 0.1};

    Pcg32 rng = substream(seed, "oned-chain");
    auto start = model.evaluate({1.0/6.0, 0.5, 0.5});
    out.stats = runChain(model, *start, mix, steps, rng);
    return out;
}

namespace {

// Five-point Gauss-Legendre average over a bin. The nodes stay strictly
// inside the interval, so piecewise densities whose breaks sit on bin edges
// are averaged from the correct side.
template <typename F>
double gaussBinAverage(F &&f, double a, double b)
{
    static const double nodes[] = {0.0, 0.5384693101056831, -0.5384693101056831,
            0.9061798459386640, -0.9061798459386640};
    static const double weights[] = {0.5688888888888889, 0.4786286704993665,
            0.4786286704993665, 0.2369268850561891, 0.2369268850561891};
    double mid = 0.5*(a + b), half = 0.5*(b - a);
    double sum = 0.0;
    for (int i = 0; i < 5; ++i)
        sum += weights[i]*f(mid + half*nodes[i]);
    return 0.5*sum;
}

} // namespace

std::vector<double> expectedStateDensity(int bins)
{
    std::vector<double> d(bins);
    double norm = targetNormalization();
    for (int b = 0; b < bins; ++b)
        d[b] = gaussBinAverage([&](double x) { return targetDensity(x)/norm; },
                double(b)/bins, double(b + 1)/bins);
    return d;
}

std::array<std::vector<double>, 3> expectedUsage(int bins)
{
    std::array<std::vector<double>, 3> w;
    for (auto &v : w)
        v.resize(bins);
    // The chain visits positions inside a bin in proportion to the target
    // density, so the comparable analytic share is the density-weighted
    // average of each weight, not the flat one; they differ visibly in bins
    // where the density swings across the bin.
    for (int b = 0; b < bins; ++b) {
        double lo = double(b)/bins, hi = double(b + 1)/bins;
        double denom = gaussBinAverage([](double x) { return targetDensity(x); }, lo, hi);
        for (int t = 0; t < 3; ++t)
            w[t][b] = gaussBinAverage([&](double x) {
                return targetDensity(x)*misWeight(t, x);
            }, lo, hi)/denom;
    }
    return w;
}

ChiSquareResult stateChiSquare(const RunResult &run)
{
    auto density = expectedStateDensity(run.bins);
    return chiSquareTest(run.thinned, density, run.thinnedTotal);
}

void writeCsv(const RunResult &run, const std::string &path)
{
    std::string tmp = path + ".tmp";
    FILE *f = std::fopen(tmp.c_str(), "w");
    if (!f)
        throw std::runtime_error("writeCsv: cannot open " + tmp);

    auto density = expectedStateDensity(run.bins);
    auto usage = expectedUsage(run.bins);

    std::fprintf(f, "bin_center,state_density,expected_density,"
                    "usage_t1,usage_t2,usage_t3,expected_w1,expected_w2,expected_w3\n");
    double width = 1.0/run.bins;
    for (int b = 0; b < run.bins; ++b) {
        double center = (b + 0.5)*width;
        double stateDensity = run.totalWeight > 0.0
                ? run.stateWeight[b]/(run.totalWeight*width) : 0.0;
        double binWeight = run.stateWeight[b];
        double u1 = binWeight > 0.0 ? run.usageWeight[b][0]/binWeight : 0.0;
        double u2 = binWeight > 0.0 ? run.usageWeight[b][1]/binWeight : 0.0;
        double u3 = binWeight > 0.0 ? run.usageWeight[b][2]/binWeight : 0.0;
        std::fprintf(f, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                center, stateDensity, density[b], u1, u2, u3,
                usage[0][b], usage[1][b], usage[2][b]);
    }
    if (std::fclose(f) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("writeCsv: failed writing " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("writeCsv: cannot move output to " + path);
    }
}

} // namespace rjmlt::oned
