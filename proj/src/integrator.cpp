#include "rjmlt/integrator.hpp"

#include "rjmlt/log.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <stdexcept>
#include <thread>

namespace rjmlt {

const char *algorithmName(Algorithm a)
{
    return a == Algorithm::Mmlt ? "mmlt" : "rjmlt";
}

Algorithm parseAlgorithm(const std::string &name)
{
    if (name == "mmlt")
        return Algorithm::Mmlt;
    if (name == "rjmlt")
        return Algorithm::Rjmlt;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

PerturbationMix defaultMix(Algorithm a)
{
    if (a == Algorithm::Mmlt)
        return {0.1, 0.9, 0.0};
    return {0.1, 0.85, 0.05};
}

namespace {

// Work items are dealt to threads dynamically, but every item writes only its
// own slot, so the result does not depend on the schedule.
void parallelFor(int count, int threads, const std::function<void(int)> &body)
{
    threads = std::max(1, std::min(threads, count));
    if (threads <= 1) {
        for (int i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(size_t(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                body(i);
        });
    }
    for (auto &th : pool)
        th.join();
}

Vec3 ptPixel(const Scene &scene, int px, int py, int spp, uint64_t seed, int kMax)
{
    const Camera &cam = scene.camera();
    Pcg32 rng = substream(seed, "pt-pixel", uint64_t(py)*uint64_t(cam.width) + uint64_t(px));
    Vec3 sum(0.0);

    for (int n = 0; n < spp; ++n) {
        Vec2 raster{(px + rng.nextDouble())/cam.width, (py + rng.nextDouble())/cam.height};
        Vec3 dir = cam.rasterToDir(raster);
        auto hit = scene.intersect({cam.position, dir});
        if (!hit)
            continue;

        if (hit->emitter >= 0) {
            // Direct view, the only technique for zero-bounce paths.
            const Rect &rect = scene.emitterRect(hit->emitter);
            if (dot(rect.normal, dir*-1.0) > 0.0)
                sum += rect.radiance;
            continue;
        }

        Vec3 throughput(1.0);
        Vec3 wi = dir*-1.0;
        Hit cur = *hit;
        for (int m = 0; m + 1 <= kMax; ++m) {
            if (cur.material < 0)
                break;
            const Material &mat = scene.material(cur.material);
            Frame frame(cur.n);

            if (scene.emitterCount() > 0) {
                int e = scene.pickEmitter(rng.nextDouble());
                const Rect &rect = scene.emitterRect(e);
                Vec3 y = rect.point(rng.nextDouble(), rng.nextDouble());
                Vec3 d = y - cur.p;
                double dSq = lengthSq(d);
                if (dSq > 0.0) {
                    Vec3 wo = d/std::sqrt(dSq);
                    double cosY = dot(rect.normal, wo*-1.0);
                    Vec3 fs = bsdfEval(mat, frame, wi, wo);
                    if (cosY > 0.0 && fs.maxComponent() > 0.0 && !scene.occluded(cur.p, y)) {
                        double geom = std::abs(dot(cur.n, wo))*cosY/dSq;
                        double pdfNee = scene.emitterProb(e)/rect.area;
                        double pdfBsdf = bsdfPdf(mat, frame, wi, wo)*cosY/dSq;
                        double w = pdfNee/(pdfNee + pdfBsdf);
                        sum += throughput*fs*rect.radiance*(geom/pdfNee*w);
                    }
                }
            }

            auto bs = bsdfSample(mat, frame, wi, rng.nextDouble(), rng.nextDouble(), rng.nextDouble());
            if (!bs)
                break;
            auto nh = scene.intersect({cur.p, bs->wo});
            if (!nh)
                break;
            Vec3 fs = bsdfEval(mat, frame, wi, bs->wo);
            throughput = throughput*fs*(dot(cur.n, bs->wo)/bs->pdf);

            if (nh->emitter >= 0) {
                const Rect &rect = scene.emitterRect(nh->emitter);
                double cosY = dot(rect.normal, bs->wo*-1.0);
                if (cosY > 0.0) {
                    double dSq = lengthSq(nh->p - cur.p);
                    double pdfBsdf = bs->pdf*cosY/dSq;
                    double pdfNee = scene.emitterProb(nh->emitter)/rect.area;
                    double w = pdfBsdf/(pdfNee + pdfBsdf);
                    sum += throughput*rect.radiance*w;
                }
                break; // emitters do not reflect
            }
            wi = bs->wo*-1.0;
            cur = *nh;
        }
    }
    return sum/double(spp);
}

} // namespace

Image pathTraceReference(const Scene &scene, int spp, uint64_t seed, int kMax, int threads)
{
    if (spp < 1)
        throw std::invalid_argument("pathTraceReference: spp must be >= 1");
    const Camera &cam = scene.camera();
    Image image(cam.width, cam.height);
    parallelFor(cam.height, threads, [&](int py) {
        for (int px = 0; px < cam.width; ++px)
            image.at(px, py) = ptPixel(scene, px, py, spp, seed, kMax);
    });
    return image;
}

namespace {

struct MltState {
    int tech = 0;
    RandomVector u; // mmlt prepends the technique selector dimension
    LightPath path;
    Vec3 fRgb;
    double cLum = 0.0; // luminance(f)/sum of technique pdfs
    std::vector<double> pdfs;
    Vec2 raster;
};

class MltModel {
public:
    using State = MltState;

    MltModel(const Scene &scene, Algorithm alg, int k, const KelemenParams &kelemen)
    : _scene(&scene), _alg(alg), _k(k), _kelemen(kelemen), _space(scene, k), _layout(k),
      _image(scene.camera().width, scene.camera().height) {}

    int stateDim() const { return _layout.dim() + (_alg == Algorithm::Mmlt ? 1 : 0); }

    int decodeSelector(double sel) const
    {
        return std::min(int(sel*(_k + 2)), _k + 1);
    }

    std::span<const double> bdptDims(const RandomVector &u) const
    {
        std::span<const double> s(u);
        return _alg == Algorithm::Mmlt ? s.subspan(1) : s;
    }

    // Full state evaluation: trace the technique, test its connection, and
    // assemble the balance-heuristic target. nullopt means zero target.
    std::optional<MltState> evaluate(int tech, RandomVector u) const
    {
        auto sampled = bdptSample(*_scene, _k, tech, bdptDims(u));
        if (!sampled)
            return std::nullopt;
        return finishState(tech, std::move(u), std::move(sampled->path));
    }

    std::optional<MltState> finishState(int tech, RandomVector u, LightPath path) const
    {
        int s = _k + 1 - tech;
        if (tech >= 1 && tech <= _k && _scene->occluded(path.v[s - 1].p, path.v[s].p))
            return std::nullopt;
        auto pdfs = techniquePdfsAll(*_scene, path);
        if (!(pdfs[tech] > 0.0))
            return std::nullopt;
        double pdfSum = 0.0;
        for (double p : pdfs)
            pdfSum += p;
        // Walk segments are first hits by construction and the connection was
        // just shadow-tested, so skip per-segment visibility rays.
        Vec3 f = pathContribution(*_scene, path, false);
        double lum = luminance(f);
        if (!(lum > 0.0))
            return std::nullopt;
        auto raster = rasterPosition(*_scene, path);
        if (!raster)
            return std::nullopt;

        MltState st;
        st.tech = tech;
        st.u = std::move(u);
        st.path = std::move(path);
        st.fRgb = f;
        st.cLum = lum/pdfSum;
        st.pdfs = std::move(pdfs);
        st.raster = *raster;
        return st;
    }

    ProposalOutcome<MltState> propose(const MltState &cur, PerturbKind kind, Pcg32 &rng)
    {
        ProposalOutcome<MltState> out;
        out.kind = kind;

        if (kind == PerturbKind::Large) {
            RandomVector u = largeStep(rng, stateDim());
            int tech = _alg == Algorithm::Mmlt
                     ? decodeSelector(u[0])
                     : std::min(int(rng.nextDouble()*(_k + 2)), _k + 1);
            auto st = evaluate(tech, std::move(u));
            if (st) {
                out.acceptance = metropolisAcceptance(cur.cLum, st->cLum);
                out.state = std::move(st);
            }
            return out;
        }

        if (kind == PerturbKind::Small) {
            RandomVector u = smallStep(rng, cur.u, _kelemen);
            int tech = cur.tech;
            if (_alg == Algorithm::Mmlt) {
                tech = decodeSelector(u[0]);
                if (tech != cur.tech)
                    out.kind = PerturbKind::SmallTech;
            }
            auto st = evaluate(tech, std::move(u));
            if (st) {
                out.acceptance = metropolisAcceptance(cur.cLum, st->cLum);
                out.state = std::move(st);
            }
            return out;
        }

        JumpOptions opts;
        opts.verifyTol = 1e-6;
        auto prop = reversibleJump(_space, cur.tech, cur.u, cur.path,
                luminance(cur.fRgb), cur.pdfs, rng, opts);
        out.verifyFailed = prop.verifyFailed;
        out.nonInvertible = prop.nonInvertible;
        out.jumpResidual = prop.residual;
        if (!prop.path)
            return out;
        auto st = finishState(prop.tech, std::move(prop.u), std::move(*prop.path));
        if (!st)
            return out;
        out.acceptance = prop.acceptance;
        out.state = std::move(st);
        return out;
    }

    void record(const MltState &st, double weight)
    {
        double lum = luminance(st.fRgb);
        if (!(lum > 0.0))
            return;
        int x = std::min(int(st.raster.x*_image.width()), _image.width() - 1);
        int y = std::min(int(st.raster.y*_image.height()), _image.height() - 1);
        _image.at(x, y) += st.fRgb*(weight/lum);
    }

    void endStep(const MltState &) {}

    Image &image() { return _image; }

private:
    const Scene *_scene;
    Algorithm _alg;
    int _k;
    KelemenParams _kelemen;
    BdptSpace _space;
    TechniqueLayout _layout;
    Image _image;
};

// Target value of one bootstrap draw; u includes the selector dimension.
double bootstrapTarget(const Scene &scene, int k, std::span<const double> u)
{
    int tech = std::min(int(u[0]*(k + 2)), k + 1);
    auto sampled = bdptSample(scene, k, tech, u.subspan(1));
    if (!sampled)
        return 0.0;
    const LightPath &path = sampled->path;
    int s = k + 1 - tech;
    if (tech >= 1 && tech <= k && scene.occluded(path.v[s - 1].p, path.v[s].p))
        return 0.0;
    auto pdfs = techniquePdfsAll(scene, path);
    if (!(pdfs[tech] > 0.0))
        return 0.0;
    double pdfSum = 0.0;
    for (double p : pdfs)
        pdfSum += p;
    double lum = luminance(pathContribution(scene, path, false));
    return lum > 0.0 ? lum/pdfSum : 0.0;
}

} // namespace

Image mltRender(const Scene &scene, Algorithm algorithm, const MltOptions &options,
        RenderStats *statsOut)
{
    if (options.mutations < options.bootstrapSize)
        throw std::invalid_argument("mltRender: mutations must be at least the bootstrap size");
    if (options.kMax < 0)
        throw std::invalid_argument("mltRender: negative kMax");
    options.mix.validate();
    if (algorithm == Algorithm::Mmlt && options.mix.jump > 0.0)
        throw std::invalid_argument("mltRender: mmlt has no jump perturbation");

    const Camera &cam = scene.camera();
    int lengths = options.kMax + 1;

    // Per-length brightness from uniform bootstrap draws over the multiplexed
    // space. The k+2 factor undoes the uniform technique selector so B_k
    // estimates the full integral of the balance-heuristic target.
    std::vector<std::vector<double>> targets;
    targets.resize(size_t(lengths));
    std::vector<double> brightness(size_t(lengths), 0.0);
    parallelFor(lengths, options.threads, [&](int k) {
        Pcg32 rng = substream(options.seed, "bootstrap", uint64_t(k));
        int dim = TechniqueLayout(k).dim() + 1;
        auto &c = targets[size_t(k)];
        c.resize(size_t(options.bootstrapSize));
        double sum = 0.0;
        for (int n = 0; n < options.bootstrapSize; ++n) {
            RandomVector u = largeStep(rng, dim);
            c[size_t(n)] = bootstrapTarget(scene, k, u);
            sum += c[size_t(n)];
        }
        brightness[size_t(k)] = double(k + 2)*sum/double(options.bootstrapSize);
    });

    double totalB = 0.0;
    for (double b : brightness)
        totalB += b;
    if (!(totalB > 0.0))
        throw std::runtime_error("mltRender: bootstrap found no light transport");

    std::vector<int64_t> budgets(size_t(lengths), 0);
    for (int k = 0; k < lengths; ++k) {
        if (!(brightness[size_t(k)] > 0.0))
            continue;
        int64_t budget = int64_t(double(options.mutations)*brightness[size_t(k)]/totalB + 0.5);
        budgets[size_t(k)] = std::max<int64_t>(budget, std::min<int64_t>(1000, options.mutations));
    }

    std::vector<ChainStats> perLength;
    perLength.resize(size_t(lengths));
    std::vector<Image> buffers;
    buffers.resize(size_t(lengths));
    parallelFor(lengths, options.threads, [&](int k) {
        if (budgets[size_t(k)] <= 0)
            return;

        // Start state: resample a bootstrap draw proportional to its target
        // value, then regenerate its sample vector by replaying the stream.
        const auto &c = targets[size_t(k)];
        double sum = 0.0;
        for (double v : c)
            sum += v;
        if (!(sum > 0.0))
            return;
        Pcg32 pickRng = substream(options.seed, "start", uint64_t(k));
        double xi = pickRng.nextDouble()*sum;
        int chosen = 0;
        double cum = 0.0;
        for (int n = 0; n < int(c.size()); ++n) {
            if (c[size_t(n)] <= 0.0)
                continue;
            chosen = n;
            cum += c[size_t(n)];
            if (xi < cum)
                break;
        }

        int dim = TechniqueLayout(k).dim() + 1;
        Pcg32 replay = substream(options.seed, "bootstrap", uint64_t(k));
        for (int64_t skip = 0; skip < int64_t(chosen)*dim; ++skip)
            replay.nextDouble();
        RandomVector u = largeStep(replay, dim);

        MltModel model(scene, algorithm, k, options.kelemen);
        int tech = std::min(int(u[0]*(k + 2)), k + 1);
        std::optional<MltState> start;
        if (algorithm == Algorithm::Mmlt) {
            start = model.evaluate(tech, std::move(u));
        } else {
            RandomVector inner(u.begin() + 1, u.end());
            start = model.evaluate(tech, std::move(inner));
        }
        if (!start)
            return; // resampled draw had positive target; only hit by fp drift

        Pcg32 chainRng = substream(options.seed, "chain", uint64_t(k));
        perLength[size_t(k)] = runChain(model, std::move(*start), options.mix,
                budgets[size_t(k)], chainRng);

        // Expected-value splats average to E[unit-luminance color splat], so
        // the buffer scales by pixels * brightness / mutation count.
        model.image().scale(double(cam.width)*double(cam.height)
                *brightness[size_t(k)]/double(budgets[size_t(k)]));
        buffers[size_t(k)] = std::move(model.image());
    });

    Image image(cam.width, cam.height);
    for (int k = 0; k < lengths; ++k) {
        if (buffers[size_t(k)].width() > 0)
            image.add(buffers[size_t(k)]);
        RJMLT_LOG_DEBUG("k=%d B=%.6g budget=%lld small_acc=%.3f jump_acc=%.3f", k,
                brightness[size_t(k)], (long long)budgets[size_t(k)],
                perLength[size_t(k)].small.acceptanceRate(),
                perLength[size_t(k)].jump.acceptanceRate());
    }

    if (statsOut) {
        statsOut->algorithm = algorithmName(algorithm);
        statsOut->seed = options.seed;
        statsOut->kMax = options.kMax;
        statsOut->brightness = totalB;
        statsOut->perLengthB = brightness;
        statsOut->budgets = budgets;
        statsOut->perLength = perLength;
    }
    return image;
}

} // namespace rjmlt
