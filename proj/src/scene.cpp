#include "rjmlt/scene.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rjmlt {

void Rect::finalize()
{
    Vec3 c = cross(edgeU, edgeV);
    area = length(c);
    if (!(area > 0.0))
        throw std::invalid_argument("degenerate rectangle");
    normal = c/area;
    gramUU = dot(edgeU, edgeU);
    gramUV = dot(edgeU, edgeV);
    gramVV = dot(edgeV, edgeV);
    gramDet = gramUU*gramVV - gramUV*gramUV;
}

Vec2 Rect::uv(const Vec3 &p) const
{
    Vec3 d = p - origin;
    double du = dot(d, edgeU), dv = dot(d, edgeV);
    return {(gramVV*du - gramUV*dv)/gramDet, (gramUU*dv - gramUV*du)/gramDet};
}

Vec3 Camera::rasterToDir(const Vec2 &raster) const
{
    double nx = (2.0*raster.x - 1.0)*tanX;
    double ny = (1.0 - 2.0*raster.y)*tanY;
    return normalize(forward + right*nx + up*ny);
}

std::optional<Vec2> Camera::dirToRaster(const Vec3 &dir) const
{
    double f = dot(dir, forward);
    if (!(f > 0.0))
        return std::nullopt;
    double rx = 0.5*(dot(dir, right)/(f*tanX) + 1.0);
    double ry = 0.5*(1.0 - dot(dir, up)/(f*tanY));
    if (!(rx >= 0.0 && rx < 1.0 && ry >= 0.0 && ry < 1.0))
        return std::nullopt;
    return Vec2{rx, ry};
}

namespace {

std::optional<double> sphereHit(const Sphere &s, const Ray &ray)
{
    Vec3 oc = ray.origin - s.center;
    double b = dot(oc, ray.dir);
    double disc = b*b - (lengthSq(oc) - s.radius*s.radius);
    if (disc < 0.0)
        return std::nullopt;
    double root = std::sqrt(disc);
    double t = -b - root;
    if (t < ray.tMin)
        t = -b + root;
    if (t < ray.tMin || t > ray.tMax)
        return std::nullopt;
    return t;
}

std::optional<std::pair<double, Vec2>> rectHit(const Rect &r, const Ray &ray)
{
    double denom = dot(ray.dir, r.normal);
    if (std::abs(denom) < 1e-12)
        return std::nullopt;
    double t = dot(r.origin - ray.origin, r.normal)/denom;
    if (t < ray.tMin || t > ray.tMax)
        return std::nullopt;
    Vec2 uv = r.uv(ray.origin + ray.dir*t);
    if (!(uv.x >= 0.0 && uv.x <= 1.0 && uv.y >= 0.0 && uv.y <= 1.0))
        return std::nullopt;
    return std::make_pair(t, uv);
}

} // namespace

std::optional<Hit> Scene::intersect(const Ray &ray) const
{
    std::optional<Hit> best;
    double nearest = ray.tMax;
    for (size_t i = 0; i < _rects.size(); ++i) {
        auto h = rectHit(_rects[i], Ray{ray.origin, ray.dir, ray.tMin, nearest});
        if (!h)
            continue;
        nearest = h->first;
        Hit hit;
        hit.t = h->first;
        hit.p = ray.origin + ray.dir*hit.t;
        hit.n = _rects[i].normal;
        hit.prim = int(i);
        hit.material = _rects[i].material;
        hit.emitter = _rects[i].emitter;
        best = hit;
    }
    for (size_t i = 0; i < _spheres.size(); ++i) {
        auto t = sphereHit(_spheres[i], Ray{ray.origin, ray.dir, ray.tMin, nearest});
        if (!t)
            continue;
        nearest = *t;
        Hit hit;
        hit.t = *t;
        hit.p = ray.origin + ray.dir*hit.t;
        hit.n = (hit.p - _spheres[i].center)/_spheres[i].radius;
        hit.prim = int(_rects.size() + i);
        hit.material = _spheres[i].material;
        hit.emitter = -1;
        best = hit;
    }
    return best;
}

bool Scene::occluded(const Vec3 &a, const Vec3 &b) const
{
    Vec3 d = b - a;
    double dist = length(d);
    if (!(dist > 2e-4))
        return true;
    Ray ray{a, d/dist, 1e-4, dist - 1e-4};
    return intersect(ray).has_value();
}

int Scene::pickEmitter(double u) const
{
    int n = emitterCount();
    for (int e = 0; e < n; ++e) {
        if (u < _emitterCdf[e + 1])
            return e;
    }
    return n - 1;
}

double Scene::cameraPdfArea(const Vec3 &p, const Vec3 &n) const
{
    Vec3 d = p - _camera.position;
    double distSq = lengthSq(d);
    if (!(distSq > 0.0))
        return 0.0;
    Vec3 dir = d/std::sqrt(distSq);
    if (!_camera.dirToRaster(dir))
        return 0.0;
    double cosCam = dot(dir, _camera.forward);
    double pdfDir = 1.0/(_camera.imageArea*cosCam*cosCam*cosCam);
    return pdfDir*std::abs(dot(n, dir))/distSq;
}

namespace {

using nlohmann::json;

Vec3 parseVec3(const json &j, const char *what)
{
    if (!j.is_array() || j.size() != 3)
        throw std::runtime_error(std::string("scene: ") + what + " must be an array of 3 numbers");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

void requireKeys(const json &j, std::initializer_list<const char *> keys, const char *what)
{
    for (const char *k : keys) {
        if (!j.contains(k))
            throw std::runtime_error(std::string("scene: ") + what + " missing key '" + k + "'");
    }
}

} // namespace

Scene Scene::fromJson(const std::string &text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception &e) {
        throw std::runtime_error(std::string("scene: malformed JSON: ") + e.what());
    }

    requireKeys(root, {"camera", "primitives", "materials", "emitters"}, "file");

    Scene scene;

    const json &cam = root["camera"];
    requireKeys(cam, {"position", "look_at", "up", "fov_degrees", "resolution"}, "camera");
    Camera &c = scene._camera;
    c.position = parseVec3(cam["position"], "camera.position");
    Vec3 lookAt = parseVec3(cam["look_at"], "camera.look_at");
    Vec3 upHint = parseVec3(cam["up"], "camera.up");
    Vec3 fwd = lookAt - c.position;
    if (!(length(fwd) > 0.0))
        throw std::runtime_error("scene: camera.look_at coincides with position");
    c.forward = normalize(fwd);
    Vec3 r = cross(c.forward, upHint);
    if (!(length(r) > 1e-9))
        throw std::runtime_error("scene: camera.up is parallel to the view direction");
    c.right = normalize(r);
    c.up = cross(c.right, c.forward);
    double fov = cam["fov_degrees"].get<double>();
    if (!(fov > 0.0 && fov < 180.0))
        throw std::runtime_error("scene: camera.fov_degrees out of range");
    const json &res = cam["resolution"];
    if (!res.is_array() || res.size() != 2)
        throw std::runtime_error("scene: camera.resolution must be [width, height]");
    c.width = res[0].get<int>();
    c.height = res[1].get<int>();
    if (c.width <= 0 || c.height <= 0)
        throw std::runtime_error("scene: camera.resolution must be positive");
    // fov_degrees spans the horizontal axis; the vertical extent follows the
    // aspect ratio.
    c.tanX = std::tan(0.5*fov*Pi/180.0);
    c.tanY = c.tanX*double(c.height)/double(c.width);
    c.imageArea = 4.0*c.tanX*c.tanY;

    std::map<std::string, int> materialIds;
    for (const json &m : root["materials"]) {
        requireKeys(m, {"id", "kind", "albedo"}, "material");
        std::string id = m["id"].get<std::string>();
        if (materialIds.count(id))
            throw std::runtime_error("scene: duplicate material id '" + id + "'");
        Material mat;
        std::string kind = m["kind"].get<std::string>();
        mat.albedo = parseVec3(m["albedo"], "material.albedo");
        if (kind == "lambert") {
            mat.kind = MaterialKind::Lambert;
        } else if (kind == "lambert_phong_mixture") {
            mat.kind = MaterialKind::LambertPhongMixture;
            requireKeys(m, {"spec_albedo", "exponent", "alpha_diffuse"}, "material");
            mat.specAlbedo = parseVec3(m["spec_albedo"], "material.spec_albedo");
            mat.exponent = m["exponent"].get<double>();
            mat.alphaDiffuse = m["alpha_diffuse"].get<double>();
            if (!(mat.exponent >= 1.0))
                throw std::runtime_error("scene: material.exponent must be >= 1");
            if (!(mat.alphaDiffuse > 0.0 && mat.alphaDiffuse < 1.0))
                throw std::runtime_error("scene: material.alpha_diffuse must be in (0,1)");
        } else {
            throw std::runtime_error("scene: unknown material kind '" + kind + "'");
        }
        for (int ch = 0; ch < 3; ++ch) {
            double a = mat.albedo[ch], s = mat.specAlbedo[ch];
            if (a < 0.0 || s < 0.0 || a + s > 1.0)
                throw std::runtime_error("scene: material '" + id + "' violates energy conservation");
        }
        materialIds[id] = int(scene._materials.size());
        scene._materials.push_back(mat);
    }

    auto materialRef = [&](const json &j) {
        std::string id = j.get<std::string>();
        auto it = materialIds.find(id);
        if (it == materialIds.end())
            throw std::runtime_error("scene: unknown material id '" + id + "'");
        return it->second;
    };

    for (const json &p : root["primitives"]) {
        requireKeys(p, {"type", "material"}, "primitive");
        std::string type = p["type"].get<std::string>();
        if (type == "sphere") {
            requireKeys(p, {"center", "radius"}, "sphere");
            Sphere s;
            s.center = parseVec3(p["center"], "sphere.center");
            s.radius = p["radius"].get<double>();
            if (!(s.radius > 0.0))
                throw std::runtime_error("scene: sphere.radius must be positive");
            s.material = materialRef(p["material"]);
            scene._spheres.push_back(s);
        } else if (type == "rect") {
            requireKeys(p, {"origin", "edge_u", "edge_v"}, "rect");
            Rect rect;
            rect.origin = parseVec3(p["origin"], "rect.origin");
            rect.edgeU = parseVec3(p["edge_u"], "rect.edge_u");
            rect.edgeV = parseVec3(p["edge_v"], "rect.edge_v");
            rect.material = materialRef(p["material"]);
            rect.finalize();
            scene._rects.push_back(rect);
        } else {
            throw std::runtime_error("scene: unknown primitive type '" + type + "'");
        }
    }

    for (const json &e : root["emitters"]) {
        requireKeys(e, {"origin", "edge_u", "edge_v", "radiance"}, "emitter");
        Rect rect;
        rect.origin = parseVec3(e["origin"], "emitter.origin");
        rect.edgeU = parseVec3(e["edge_u"], "emitter.edge_u");
        rect.edgeV = parseVec3(e["edge_v"], "emitter.edge_v");
        rect.radiance = parseVec3(e["radiance"], "emitter.radiance");
        if (rect.radiance.x < 0.0 || rect.radiance.y < 0.0 || rect.radiance.z < 0.0)
            throw std::runtime_error("scene: emitter.radiance must be nonnegative");
        rect.emitter = int(scene._emitters.size());
        rect.finalize();
        scene._emitters.push_back(int(scene._rects.size()));
        scene._rects.push_back(rect);
    }

    for (const Sphere &s : scene._spheres) {
        if (length(scene._camera.position - s.center) <= s.radius)
            throw std::runtime_error("scene: camera is inside a solid");
    }

    // Power-proportional light selection. A scene whose emitters are all black
    // still loads (the reference renderer produces a black image); the uniform
    // fallback keeps the CDF usable.
    scene._emitterCdf.assign(scene._emitters.size() + 1, 0.0);
    double totalPower = 0.0;
    for (size_t i = 0; i < scene._emitters.size(); ++i) {
        const Rect &rect = scene._rects[scene._emitters[i]];
        totalPower += luminance(rect.radiance)*rect.area;
    }
    double cum = 0.0;
    for (size_t i = 0; i < scene._emitters.size(); ++i) {
        const Rect &rect = scene._rects[scene._emitters[i]];
        cum += totalPower > 0.0 ? luminance(rect.radiance)*rect.area/totalPower
                                : 1.0/double(scene._emitters.size());
        scene._emitterCdf[i + 1] = cum;
    }
    if (!scene._emitters.empty())
        scene._emitterCdf.back() = 1.0;

    return scene;
}

Scene Scene::load(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("scene: failed to open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return fromJson(ss.str());
}

} // namespace rjmlt
