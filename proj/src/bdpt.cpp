#include "rjmlt/bdpt.hpp"

#include <stdexcept>

namespace rjmlt {

namespace {

PathVertex vertexFrom(const Hit &hit)
{
    return {hit.p, hit.n, hit.prim, hit.material, hit.emitter};
}

void checkTechnique(int k, int i)
{
    if (k < 0)
        throw std::invalid_argument("bdpt: negative path length");
    if (i < 0 || i > k + 1)
        throw std::invalid_argument("bdpt: technique index out of range");
}

// Where the walk that produced vertex b stood before bouncing at a: the
// camera for the first eye bounce, the neighbouring vertex otherwise.
Vec3 eyePredecessor(const Scene &scene, const LightPath &path, int m)
{
    return m == 1 ? scene.camera().position : path.v[m - 2].p;
}

} // namespace

std::optional<BdptSample> bdptSample(const Scene &scene, int k, int i, std::span<const double> u)
{
    checkTechnique(k, i);
    TechniqueLayout layout(k);
    if (int(u.size()) != layout.dim())
        throw std::invalid_argument("bdpt: sample vector has wrong dimension");

    int s = layout.eyeVertices(i);
    BdptSample out;
    out.path.k = k;
    out.path.v.resize(size_t(k) + 1);
    auto &v = out.path.v;

    for (int m = 0; m < s; ++m) {
        int base = layout.slot(m);
        if (m == 0) {
            Vec2 raster{u[base + 1], u[base + 2]};
            Vec3 dir = scene.camera().rasterToDir(raster);
            auto hit = scene.intersect({scene.camera().position, dir});
            if (!hit)
                return std::nullopt;
            v[0] = vertexFrom(*hit);
            double pdf = scene.cameraPdfArea(v[0].p, v[0].n);
            if (!(pdf > 0.0))
                return std::nullopt;
            out.ledger.push_back(pdf);
            out.raster = raster;
        } else {
            const PathVertex &a = v[m - 1];
            if (a.material < 0)
                return std::nullopt;
            Vec3 wi = normalize(eyePredecessor(scene, out.path, m) - a.p);
            auto bs = bsdfSample(scene.material(a.material), Frame(a.n), wi,
                    u[base], u[base + 1], u[base + 2]);
            if (!bs)
                return std::nullopt;
            auto hit = scene.intersect({a.p, bs->wo});
            if (!hit)
                return std::nullopt;
            v[m] = vertexFrom(*hit);
            double conv = solidAngleToArea(a.p, v[m].p, v[m].n);
            if (!(conv > 0.0))
                return std::nullopt;
            out.ledger.push_back(bs->pdf*conv);
        }
    }

    if (i >= 1) {
        if (scene.emitterCount() == 0)
            return std::nullopt;
        int e = scene.pickEmitter(u[0]);
        const Rect &rect = scene.emitterRect(e);
        v[k] = {rect.point(u[1], u[2]), rect.normal, scene.emitterPrim(e), -1, e};
        out.ledger.push_back(scene.emitterProb(e));
        out.ledger.push_back(1.0/rect.area);

        if (i >= 2) {
            int base = layout.slot(k);
            Vec3 local = cosineHemisphere(u[base + 1], u[base + 2]);
            double pdfDir = cosineHemispherePdf(local);
            if (!(pdfDir > 0.0))
                return std::nullopt;
            Vec3 wo = Frame(rect.normal).toWorld(local);
            auto hit = scene.intersect({v[k].p, wo});
            if (!hit)
                return std::nullopt;
            v[k - 1] = vertexFrom(*hit);
            double conv = solidAngleToArea(v[k].p, v[k - 1].p, v[k - 1].n);
            if (!(conv > 0.0))
                return std::nullopt;
            out.ledger.push_back(pdfDir*conv);

            for (int m = k - 1; m >= s + 1; --m) {
                const PathVertex &a = v[m];
                if (a.material < 0)
                    return std::nullopt;
                int mb = layout.slot(m);
                Vec3 wi = normalize(v[m + 1].p - a.p);
                auto bs = bsdfSample(scene.material(a.material), Frame(a.n), wi,
                        u[mb], u[mb + 1], u[mb + 2]);
                if (!bs)
                    return std::nullopt;
                auto hit2 = scene.intersect({a.p, bs->wo});
                if (!hit2)
                    return std::nullopt;
                v[m - 1] = vertexFrom(*hit2);
                double conv2 = solidAngleToArea(a.p, v[m - 1].p, v[m - 1].n);
                if (!(conv2 > 0.0))
                    return std::nullopt;
                out.ledger.push_back(bs->pdf*conv2);
            }
        }
    }

    out.pdf = 1.0;
    for (double p : out.ledger)
        out.pdf *= p;
    if (!out.raster)
        out.raster = rasterPosition(scene, out.path);
    return out;
}

std::optional<PathInversion> bdptInvert(const Scene &scene, int k, int i,
        const LightPath &path, GammaSource &gamma)
{
    checkTechnique(k, i);
    if (path.k != k || int(path.v.size()) != k + 1)
        throw std::invalid_argument("bdpt: path length mismatch");
    TechniqueLayout layout(k);
    int s = layout.eyeVertices(i);
    const auto &v = path.v;

    PathInversion inv;
    inv.u.assign(size_t(layout.dim()), 0.0);
    inv.jacInvDet = 1.0;
    inv.techProb = 1.0;

    if (i >= 1) {
        int e = v[k].emitter;
        if (e < 0)
            return std::nullopt;
        const Rect &rect = scene.emitterRect(e);
        Interval iv = scene.emitterInterval(e);
        auto [sel, width] = intervalInverse(iv.a, iv.b, gamma.next());
        // A placement rounding onto a CDF edge would decode as the neighbour.
        if (sel <= iv.a && iv.a > 0.0)
            sel = std::nextafter(iv.a, 1.0);
        if (sel >= iv.b)
            sel = std::nextafter(iv.b, 0.0);
        inv.u[0] = sel;
        inv.jacInvDet *= width;

        Vec2 uv = rect.uv(v[k].p);
        inv.u[1] = std::min(std::max(uv.x, 0.0), std::nextafter(1.0, 0.0));
        inv.u[2] = std::min(std::max(uv.y, 0.0), std::nextafter(1.0, 0.0));
        inv.jacInvDet *= 1.0/rect.area;
    } else {
        inv.u[0] = gamma.next();
        inv.u[1] = gamma.next();
        inv.u[2] = gamma.next();
    }

    for (int m = 0; m <= k; ++m) {
        int base = layout.slot(m);
        if (m == 0 && s >= 1) {
            inv.u[base] = gamma.next();
            auto raster = rasterPosition(scene, path);
            if (!raster)
                return std::nullopt;
            inv.u[base + 1] = raster->x;
            inv.u[base + 2] = raster->y;
            double pdf = scene.cameraPdfArea(v[0].p, v[0].n);
            if (!(pdf > 0.0))
                return std::nullopt;
            inv.jacInvDet *= pdf;
            inv.u[base + 3] = gamma.next();
        } else if (m >= 1 && m <= s - 1) {
            const PathVertex &a = v[m - 1];
            if (a.material < 0)
                return std::nullopt;
            Vec3 wi = normalize(eyePredecessor(scene, path, m) - a.p);
            Vec3 wo = normalize(v[m].p - a.p);
            auto b = bsdfInvert(scene.material(a.material), Frame(a.n), wi, wo, gamma);
            if (!b)
                return std::nullopt;
            double conv = solidAngleToArea(a.p, v[m].p, v[m].n);
            if (!(conv > 0.0))
                return std::nullopt;
            inv.u[base] = b->uLobe;
            inv.u[base + 1] = b->u1;
            inv.u[base + 2] = b->u2;
            inv.u[base + 3] = gamma.next();
            inv.jacInvDet *= b->jacInvDet*conv;
            inv.techProb *= b->techProb;
        } else if (m >= s + 1 && m <= k - 1) {
            const PathVertex &a = v[m];
            if (a.material < 0)
                return std::nullopt;
            Vec3 wi = normalize(v[m + 1].p - a.p);
            Vec3 wo = normalize(v[m - 1].p - a.p);
            auto b = bsdfInvert(scene.material(a.material), Frame(a.n), wi, wo, gamma);
            if (!b)
                return std::nullopt;
            double conv = solidAngleToArea(a.p, v[m - 1].p, v[m - 1].n);
            if (!(conv > 0.0))
                return std::nullopt;
            inv.u[base] = b->uLobe;
            inv.u[base + 1] = b->u1;
            inv.u[base + 2] = b->u2;
            inv.u[base + 3] = gamma.next();
            inv.jacInvDet *= b->jacInvDet*conv;
            inv.techProb *= b->techProb;
        } else if (m == k && i >= 2) {
            const Rect &rect = scene.emitterRect(v[k].emitter);
            Vec3 local = Frame(rect.normal).toLocal(normalize(v[k - 1].p - v[k].p));
            auto uu = cosineHemisphereInvert(local);
            if (!uu)
                return std::nullopt;
            double conv = solidAngleToArea(v[k].p, v[k - 1].p, v[k - 1].n);
            if (!(conv > 0.0))
                return std::nullopt;
            inv.u[base] = gamma.next();
            inv.u[base + 1] = uu->x;
            inv.u[base + 2] = uu->y;
            inv.u[base + 3] = gamma.next();
            inv.jacInvDet *= cosineHemispherePdf(local)*conv;
        } else {
            inv.u[base] = gamma.next();
            inv.u[base + 1] = gamma.next();
            inv.u[base + 2] = gamma.next();
            inv.u[base + 3] = gamma.next();
        }
    }
    return inv;
}

std::optional<PathInversion> bdptInverseJacobian(const Scene &scene, int k, int i,
        const LightPath &path, std::span<const double> u)
{
    checkTechnique(k, i);
    if (path.k != k || int(path.v.size()) != k + 1)
        throw std::invalid_argument("bdpt: path length mismatch");
    TechniqueLayout layout(k);
    if (int(u.size()) != layout.dim())
        throw std::invalid_argument("bdpt: sample vector has wrong dimension");
    int s = layout.eyeVertices(i);
    const auto &v = path.v;

    PathInversion inv;
    inv.jacInvDet = 1.0;
    inv.techProb = 1.0;

    if (i >= 1) {
        int e = v[k].emitter;
        if (e < 0)
            return std::nullopt;
        inv.jacInvDet *= scene.emitterProb(e)/scene.emitterRect(e).area;
    }

    for (int m = 0; m <= k; ++m) {
        if (m == 0 && s >= 1) {
            double pdf = scene.cameraPdfArea(v[0].p, v[0].n);
            if (!(pdf > 0.0))
                return std::nullopt;
            inv.jacInvDet *= pdf;
        } else if (m >= 1 && m <= s - 1) {
            const PathVertex &a = v[m - 1];
            if (a.material < 0)
                return std::nullopt;
            Vec3 wi = normalize(eyePredecessor(scene, path, m) - a.p);
            Vec3 wo = normalize(v[m].p - a.p);
            auto b = bsdfInverseJacobian(scene.material(a.material), Frame(a.n), wi, wo,
                    u[layout.slot(m)]);
            if (!b)
                return std::nullopt;
            double conv = solidAngleToArea(a.p, v[m].p, v[m].n);
            if (!(conv > 0.0))
                return std::nullopt;
            inv.jacInvDet *= b->jacInvDet*conv;
            inv.techProb *= b->techProb;
        } else if (m >= s + 1 && m <= k - 1) {
            const PathVertex &a = v[m];
            if (a.material < 0)
                return std::nullopt;
            Vec3 wi = normalize(v[m + 1].p - a.p);
            Vec3 wo = normalize(v[m - 1].p - a.p);
            auto b = bsdfInverseJacobian(scene.material(a.material), Frame(a.n), wi, wo,
                    u[layout.slot(m)]);
            if (!b)
                return std::nullopt;
            double conv = solidAngleToArea(a.p, v[m - 1].p, v[m - 1].n);
            if (!(conv > 0.0))
                return std::nullopt;
            inv.jacInvDet *= b->jacInvDet*conv;
            inv.techProb *= b->techProb;
        } else if (m == k && i >= 2) {
            const Rect &rect = scene.emitterRect(v[k].emitter);
            Vec3 local = Frame(rect.normal).toLocal(normalize(v[k - 1].p - v[k].p));
            double pdf = cosineHemispherePdf(local);
            if (!(pdf > 0.0))
                return std::nullopt;
            double conv = solidAngleToArea(v[k].p, v[k - 1].p, v[k - 1].n);
            if (!(conv > 0.0))
                return std::nullopt;
            inv.jacInvDet *= pdf*conv;
        }
    }
    return inv;
}

std::vector<double> techniquePdfsAll(const Scene &scene, const LightPath &path)
{
    int k = path.k;
    const auto &v = path.v;
    std::vector<double> dEye(size_t(k) + 1, 0.0), dLight(size_t(k) + 1, 0.0);

    dEye[0] = scene.cameraPdfArea(v[0].p, v[0].n);
    for (int m = 1; m <= k; ++m) {
        const PathVertex &a = v[m - 1];
        if (a.material < 0)
            continue;
        Vec3 wi = normalize(eyePredecessor(scene, path, m) - a.p);
        Vec3 wo = normalize(v[m].p - a.p);
        double pdf = bsdfPdf(scene.material(a.material), Frame(a.n), wi, wo);
        dEye[m] = pdf*solidAngleToArea(a.p, v[m].p, v[m].n);
    }

    if (v[k].emitter >= 0) {
        const Rect &rect = scene.emitterRect(v[k].emitter);
        dLight[k] = scene.emitterProb(v[k].emitter)/rect.area;
        if (k >= 1) {
            Vec3 dir = normalize(v[k - 1].p - v[k].p);
            double c = dot(rect.normal, dir);
            if (c > 0.0)
                dLight[k - 1] = c*InvPi*solidAngleToArea(v[k].p, v[k - 1].p, v[k - 1].n);
        }
        for (int m = k - 2; m >= 0; --m) {
            const PathVertex &a = v[m + 1];
            if (a.material < 0 || !(dLight[m + 1] > 0.0))
                continue;
            Vec3 wi = normalize(v[m + 2].p - a.p);
            Vec3 wo = normalize(v[m].p - a.p);
            double pdf = bsdfPdf(scene.material(a.material), Frame(a.n), wi, wo);
            dLight[m] = pdf*solidAngleToArea(a.p, v[m].p, v[m].n);
        }
    }

    std::vector<double> prefix(size_t(k) + 2, 1.0), suffix(size_t(k) + 2, 1.0);
    for (int m = 0; m <= k; ++m)
        prefix[m + 1] = prefix[m]*dEye[m];
    for (int m = k; m >= 0; --m)
        suffix[m] = suffix[m + 1]*dLight[m];

    std::vector<double> pdfs(size_t(k) + 2, 0.0);
    for (int i = 0; i <= k; ++i) {
        int s = k + 1 - i;
        pdfs[i] = prefix[s]*suffix[s];
    }
    // Technique k+1 connects to the pinhole camera, a zero-measure target.
    pdfs[k + 1] = 0.0;
    return pdfs;
}

double techniquePdf(const Scene &scene, const LightPath &path, int i)
{
    checkTechnique(path.k, i);
    auto pdfs = techniquePdfsAll(scene, path);
    if (i >= 1 && i <= path.k) {
        int s = path.k + 1 - i;
        if (scene.occluded(path.v[s - 1].p, path.v[s].p))
            return 0.0;
    }
    return pdfs[i];
}

double misWeight(const Scene &scene, const LightPath &path, int i)
{
    checkTechnique(path.k, i);
    auto pdfs = techniquePdfsAll(scene, path);
    for (int j = 1; j <= path.k; ++j) {
        int s = path.k + 1 - j;
        if (pdfs[j] > 0.0 && scene.occluded(path.v[s - 1].p, path.v[s].p))
            pdfs[j] = 0.0;
    }
    double sum = 0.0;
    for (double p : pdfs)
        sum += p;
    return sum > 0.0 ? pdfs[i]/sum : 0.0;
}

Vec3 pathContribution(const Scene &scene, const LightPath &path, bool checkVisibility)
{
    int k = path.k;
    const auto &v = path.v;
    if (int(v.size()) != k + 1)
        throw std::invalid_argument("bdpt: path length mismatch");

    double w = scene.cameraPdfArea(v[0].p, v[0].n);
    if (!(w > 0.0))
        return Vec3(0.0);
    Vec3 f(w);

    for (int m = 0; m < k; ++m) {
        const PathVertex &a = v[m], &b = v[m + 1];
        if (a.material < 0)
            return Vec3(0.0);
        Vec3 d = b.p - a.p;
        double dSq = lengthSq(d);
        if (!(dSq > 0.0))
            return Vec3(0.0);
        Vec3 wo = d/std::sqrt(dSq);
        Vec3 wi = normalize((m == 0 ? scene.camera().position : v[m - 1].p) - a.p);
        f = f*bsdfEval(scene.material(a.material), Frame(a.n), wi, wo);
        f *= std::abs(dot(a.n, wo))*std::abs(dot(b.n, wo))/dSq;
        if (f.maxComponent() <= 0.0)
            return Vec3(0.0);
        if (checkVisibility && scene.occluded(a.p, b.p))
            return Vec3(0.0);
    }

    if (v[k].emitter < 0)
        return Vec3(0.0);
    const Rect &rect = scene.emitterRect(v[k].emitter);
    Vec3 outDir = k == 0 ? normalize(scene.camera().position - v[0].p)
                         : normalize(v[k - 1].p - v[k].p);
    if (!(dot(rect.normal, outDir) > 0.0))
        return Vec3(0.0);
    return f*rect.radiance;
}

std::optional<Vec2> rasterPosition(const Scene &scene, const LightPath &path)
{
    Vec3 d = path.v[0].p - scene.camera().position;
    double len = length(d);
    if (!(len > 0.0))
        return std::nullopt;
    return scene.camera().dirToRaster(d/len);
}

double pathDistance(const LightPath &a, const LightPath &b)
{
    if (a.k != b.k || a.v.size() != b.v.size())
        return 1e308;
    double dist = 0.0;
    for (size_t m = 0; m < a.v.size(); ++m) {
        Vec3 d = a.v[m].p - b.v[m].p;
        dist = std::max({dist, std::abs(d.x), std::abs(d.y), std::abs(d.z)});
    }
    return dist;
}

double BdptSpace::targetValue(const PathT &path, int t) const
{
    auto pdfs = techniquePdfsAll(*_scene, path);
    if (t < 0 || t >= int(pdfs.size()) || !(pdfs[t] > 0.0))
        return 0.0;
    double sum = 0.0;
    for (double p : pdfs)
        sum += p;
    Vec3 f = pathContribution(*_scene, path);
    return sum > 0.0 ? luminance(f)/sum : 0.0;
}

} // namespace rjmlt
