#pragma once

#include "jump.hpp"
#include "scene.hpp"

#include <optional>
#include <span>
#include <vector>

namespace rjmlt {

struct PathVertex {
    Vec3 p, n;
    int prim = -1;
    int material = -1;
    int emitter = -1;
};

// A complete light path of k segments: v[0] is the surface vertex nearest the
// camera, v[k] the light end. The camera itself is not a vertex.
struct LightPath {
    int k = 0;
    std::vector<PathVertex> v;
};

// Primary sample layout for paths of length k. Technique i builds v[k] down
// to v[k+1-i] from the light and the rest from the eye. Dims 0..2 hold the
// light start (index interval plus two position dims); every vertex owns a
// stride-4 slot: a lobe selector, two direction dims, and a spare. Slot 0
// carries the raster position in its direction dims, slot k the emission
// direction. Dims a technique does not consume are full-interval ambiguities.
struct TechniqueLayout {
    int k = 0;
    static constexpr int Stride = 4;
    static constexpr int LightStart = 3;

    explicit TechniqueLayout(int k_) : k(k_) {}

    int dim() const { return LightStart + Stride*(k + 1); }
    int slot(int m) const { return LightStart + Stride*m; }
    int techniqueCount() const { return k + 2; }
    int eyeVertices(int i) const { return k + 1 - i; }
};

struct BdptSample {
    LightPath path;
    double pdf = 0.0;                // area-measure technique pdf
    std::vector<double> ledger;      // per-block densities; product equals pdf
    std::optional<Vec2> raster;
};

// Forward technique: chained sampling blocks building an i-vertex light
// subpath and a (k+1-i)-vertex eye subpath, deterministically connected.
// Structural failures (a walk escaping the scene, a direction below the
// surface) yield nullopt, which callers score as a zero-contribution path.
std::optional<BdptSample> bdptSample(const Scene &scene, int k, int i, std::span<const double> u);

// Inverse random walk: recovers a primary sample vector that reproduces the
// path under technique i, the determinant of the inverse map, and the
// probability of the lobe choices made on the way.
std::optional<PathInversion> bdptInvert(const Scene &scene, int k, int i,
        const LightPath &path, GammaSource &gamma);

// Reverse-side Jacobian: like bdptInvert, but lobe choices are read off the
// supplied sample vector instead of being drawn.
std::optional<PathInversion> bdptInverseJacobian(const Scene &scene, int k, int i,
        const LightPath &path, std::span<const double> u);

// Area-measure densities of all k+2 techniques. Assumes a path whose walk
// segments are realizable (true for anything with positive contribution);
// no visibility rays are cast.
std::vector<double> techniquePdfsAll(const Scene &scene, const LightPath &path);

// Standalone density query; additionally re-checks the technique's connection
// segment by shadow ray, so occluded connections report zero.
double techniquePdf(const Scene &scene, const LightPath &path, int i);

double misWeight(const Scene &scene, const LightPath &path, int i);

// f(x̄): camera importance, BSDF and geometry factors, emitted radiance.
// Visibility rays can be skipped when every segment is known realizable.
Vec3 pathContribution(const Scene &scene, const LightPath &path, bool checkVisibility = true);

std::optional<Vec2> rasterPosition(const Scene &scene, const LightPath &path);

double pathDistance(const LightPath &a, const LightPath &b);

// Adapter exposing one path length to the reversible-jump engine.
class BdptSpace {
public:
    using PathT = LightPath;

    BdptSpace(const Scene &scene, int k) : _scene(&scene), _k(k) {}

    int techniqueCount() const { return _k + 2; }
    int dim() const { return TechniqueLayout(_k).dim(); }

    std::optional<PathT> samplePath(int t, std::span<const double> u) const
    {
        auto s = bdptSample(*_scene, _k, t, u);
        if (!s)
            return std::nullopt;
        return std::move(s->path);
    }

    std::optional<PathInversion> invertPath(int t, const PathT &path, GammaSource &gamma) const
    {
        return bdptInvert(*_scene, _k, t, path, gamma);
    }

    std::optional<PathInversion> inverseJacobian(int t, const PathT &path,
            std::span<const double> u) const
    {
        return bdptInverseJacobian(*_scene, _k, t, path, u);
    }

    double pathDistance(const PathT &a, const PathT &b) const
    {
        return rjmlt::pathDistance(a, b);
    }

    double targetValue(const PathT &path, int t) const;

private:
    const Scene *_scene;
    int _k;
};

} // namespace rjmlt
