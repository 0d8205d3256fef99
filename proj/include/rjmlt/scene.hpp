#pragma once

#include "math.hpp"
#include "sampling.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rjmlt {

struct Ray {
    Vec3 origin;
    Vec3 dir; // unit length
    double tMin = 1e-4;
    double tMax = 1e308;
};

struct Hit {
    double t = 0.0;
    Vec3 p;
    Vec3 n;
    int prim = -1;
    int material = -1; // -1 on emitters, which do not reflect
    int emitter = -1;
};

// Parallelogram patch spanned by two edges; the normal follows edgeU x edgeV.
// Scenes use axis-aligned instances, the math does not rely on it.
struct Rect {
    Vec3 origin, edgeU, edgeV;
    int material = -1;
    int emitter = -1;
    Vec3 radiance;

    Vec3 normal;
    double area = 0.0;
    double gramUU = 0.0, gramUV = 0.0, gramVV = 0.0, gramDet = 0.0;

    Vec3 point(double u, double v) const { return origin + edgeU*u + edgeV*v; }
    // Recovers the edge coordinates of a point assumed to lie on the plane.
    Vec2 uv(const Vec3 &p) const;
    void finalize();
};

struct Sphere {
    Vec3 center;
    double radius = 1.0;
    int material = -1;
};

struct Camera {
    Vec3 position;
    Vec3 forward, right, up;
    double tanX = 0.0, tanY = 0.0;
    double imageArea = 0.0; // film area at unit distance, 4 tanX tanY
    int width = 0, height = 0;

    // Raster coordinates live in [0,1)^2 with (0,0) the top-left corner.
    Vec3 rasterToDir(const Vec2 &raster) const;
    std::optional<Vec2> dirToRaster(const Vec3 &dir) const;
};

class Scene {
public:
    static Scene load(const std::string &path);
    static Scene fromJson(const std::string &text);

    std::optional<Hit> intersect(const Ray &ray) const;
    bool occluded(const Vec3 &a, const Vec3 &b) const;

    int emitterCount() const { return int(_emitters.size()); }
    const Rect &emitterRect(int e) const { return _rects[_emitters[e]]; }
    int emitterPrim(int e) const { return _emitters[e]; }
    // Probability of drawing emitter e from the power-proportional CDF,
    // and the CDF interval it occupies on the light-index dimension.
    double emitterProb(int e) const { return _emitterCdf[e + 1] - _emitterCdf[e]; }
    Interval emitterInterval(int e) const { return {_emitterCdf[e], _emitterCdf[e + 1]}; }
    int pickEmitter(double u) const;

    const Material &material(int id) const { return _materials[id]; }
    const Camera &camera() const { return _camera; }
    Camera &camera() { return _camera; }

    const std::vector<Rect> &rects() const { return _rects; }
    const std::vector<Sphere> &spheres() const { return _spheres; }

    // Area-measure density of the pinhole camera's raster block at a surface
    // point; doubles as the camera importance W so that a direct view of an
    // emitter estimates exactly its radiance.
    double cameraPdfArea(const Vec3 &p, const Vec3 &n) const;

private:
    std::vector<Rect> _rects; // emitters included, flagged by index
    std::vector<Sphere> _spheres;
    std::vector<Material> _materials;
    std::vector<int> _emitters;       // rect indices
    std::vector<double> _emitterCdf;  // size emitters+1, power proportional
    Camera _camera;
};

} // namespace rjmlt
