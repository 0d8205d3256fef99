#pragma once

#include "blocks.hpp"
#include "math.hpp"

#include <optional>

namespace rjmlt {

// Direction lobes used by the renderer's sampling chains. Each lobe is an
// inversion-method block on two unit dimensions: forward maps (u1, u2) to a
// direction in the local frame, invert recovers them along with the solid
// angle density, which is the Jacobian determinant of the inverse map.

inline Vec3 cosineHemisphere(double u1, double u2)
{
    double phi = TwoPi*u1;
    double r = std::sqrt(u2);
    return {r*std::cos(phi), r*std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u2))};
}

inline double cosineHemispherePdf(const Vec3 &local)
{
    return local.z > 0.0 ? local.z*InvPi : 0.0;
}

inline std::optional<Vec2> cosineHemisphereInvert(const Vec3 &local)
{
    if (!(local.z > 0.0))
        return std::nullopt;
    double phi = std::atan2(local.y, local.x);
    if (phi < 0.0)
        phi += TwoPi;
    double u1 = phi*(1.0/TwoPi);
    double u2 = std::min(local.x*local.x + local.y*local.y, 1.0);
    return Vec2{u1 < 1.0 ? u1 : 0.0, u2};
}

inline Vec3 phongLobe(double u1, double u2, double exponent)
{
    double cosTheta = std::pow(1.0 - u2, 1.0/(exponent + 1.0));
    double sinTheta = std::sqrt(std::max(0.0, 1.0 - cosTheta*cosTheta));
    double phi = TwoPi*u1;
    return {sinTheta*std::cos(phi), sinTheta*std::sin(phi), cosTheta};
}

inline double phongLobePdf(const Vec3 &local, double exponent)
{
    return local.z > 0.0 ? (exponent + 1.0)*(0.5*InvPi)*std::pow(local.z, exponent) : 0.0;
}

inline std::optional<Vec2> phongLobeInvert(const Vec3 &local, double exponent)
{
    if (!(local.z > 0.0))
        return std::nullopt;
    double phi = std::atan2(local.y, local.x);
    if (phi < 0.0)
        phi += TwoPi;
    double u1 = phi*(1.0/TwoPi);
    double u2 = 1.0 - std::pow(local.z, exponent + 1.0);
    return Vec2{u1 < 1.0 ? u1 : 0.0, u2 < 0.0 ? 0.0 : u2};
}

// Density conversion from solid angle at `from` to area at `to`.
inline double solidAngleToArea(const Vec3 &from, const Vec3 &to, const Vec3 &normalAtTo)
{
    Vec3 d = to - from;
    double distSq = lengthSq(d);
    if (!(distSq > 0.0))
        return 0.0;
    return std::abs(dot(normalAtTo, d))/(distSq*std::sqrt(distSq));
}

enum class MaterialKind {
    Lambert,
    LambertPhongMixture,
};

struct Material {
    MaterialKind kind = MaterialKind::Lambert;
    Vec3 albedo;
    Vec3 specAlbedo;
    double exponent = 1.0;
    double alphaDiffuse = 1.0;
};

// BRDF value for directions on the shading hemisphere; wi points toward the
// predecessor, wo toward the successor, both in world space and unit length.
inline Vec3 bsdfEval(const Material &m, const Frame &frame, const Vec3 &wi, const Vec3 &wo)
{
    double ci = dot(wi, frame.n), co = dot(wo, frame.n);
    if (!(ci > 0.0) || !(co > 0.0))
        return Vec3(0.0);
    Vec3 f = m.albedo*InvPi;
    if (m.kind == MaterialKind::LambertPhongMixture) {
        double cosR = dot(reflect(wi, frame.n), wo);
        if (cosR > 0.0)
            f += m.specAlbedo*((m.exponent + 2.0)*(0.5*InvPi)*std::pow(cosR, m.exponent));
    }
    return f;
}

// Marginal solid-angle density of the material's direction block, i.e. the
// lobe-weighted mixture pdf. This is what enters technique pdfs and MIS.
inline double bsdfPdf(const Material &m, const Frame &frame, const Vec3 &wi, const Vec3 &wo)
{
    double ci = dot(wi, frame.n), co = dot(wo, frame.n);
    if (!(ci > 0.0) || !(co > 0.0))
        return 0.0;
    double pd = co*InvPi;
    if (m.kind == MaterialKind::Lambert)
        return pd;
    Vec3 r = reflect(wi, frame.n);
    double ps = phongLobePdf(Frame(r).toLocal(wo), m.exponent);
    return m.alphaDiffuse*pd + (1.0 - m.alphaDiffuse)*ps;
}

struct BsdfSample {
    Vec3 wo;
    double pdf = 0.0; // mixture marginal, solid angle
    int lobe = 0;
    std::optional<Interval> lobeInterval; // selector interval, mixtures only
};

// Forward direction block: uLobe picks the lobe (mixtures carve the selector
// dimension at alphaDiffuse), (u1, u2) feed the chosen lobe. Directions below
// the surface are wasted samples and yield nullopt; the caller scores the
// resulting path as zero contribution.
inline std::optional<BsdfSample> bsdfSample(const Material &m, const Frame &frame,
        const Vec3 &wi, double uLobe, double u1, double u2)
{
    if (!(dot(wi, frame.n) > 0.0))
        return std::nullopt;

    BsdfSample out;
    if (m.kind == MaterialKind::Lambert) {
        out.wo = frame.toWorld(cosineHemisphere(u1, u2));
        out.lobe = 0;
    } else if (uLobe < m.alphaDiffuse) {
        out.wo = frame.toWorld(cosineHemisphere(u1, u2));
        out.lobe = 0;
        out.lobeInterval = Interval{0.0, m.alphaDiffuse};
    } else {
        Vec3 r = reflect(wi, frame.n);
        out.wo = Frame(r).toWorld(phongLobe(u1, u2, m.exponent));
        out.lobe = 1;
        out.lobeInterval = Interval{m.alphaDiffuse, 1.0};
    }
    out.pdf = bsdfPdf(m, frame, wi, out.wo);
    if (!(out.pdf > 0.0))
        return std::nullopt;
    return out;
}

struct BsdfInversion {
    double uLobe = 0.0, u1 = 0.0, u2 = 0.0;
    int lobe = 0;
    double jacInvDet = 0.0; // alpha_t times the chosen lobe's solid-angle pdf
    double techProb = 1.0;  // probability of that lobe choice, T(t) ∝ alpha_t p_t
};

namespace detail {

inline std::optional<BsdfInversion> bsdfInvertLobe(const Material &m, const Frame &frame,
        const Vec3 &wi, const Vec3 &wo, int lobe, double gammaPlace)
{
    BsdfInversion inv;
    inv.lobe = lobe;
    if (m.kind == MaterialKind::Lambert) {
        auto u = cosineHemisphereInvert(frame.toLocal(wo));
        if (!u)
            return std::nullopt;
        inv.u1 = u->x;
        inv.u2 = u->y;
        inv.uLobe = gammaPlace;
        inv.jacInvDet = cosineHemispherePdf(frame.toLocal(wo));
        inv.techProb = 1.0;
        return inv;
    }

    double pd = cosineHemispherePdf(frame.toLocal(wo));
    Vec3 r = reflect(wi, frame.n);
    double ps = phongLobePdf(Frame(r).toLocal(wo), m.exponent);
    double wd = m.alphaDiffuse*pd, ws = (1.0 - m.alphaDiffuse)*ps;
    if (!(wd + ws > 0.0))
        return std::nullopt;

    if (lobe == 0) {
        if (!(wd > 0.0))
            return std::nullopt;
        auto u = cosineHemisphereInvert(frame.toLocal(wo));
        if (!u)
            return std::nullopt;
        inv.u1 = u->x;
        inv.u2 = u->y;
        inv.uLobe = intervalInverse(0.0, m.alphaDiffuse, gammaPlace).first;
        // A placement rounding up onto the selector boundary would decode as
        // the other lobe and break the round trip.
        if (inv.uLobe >= m.alphaDiffuse)
            inv.uLobe = std::nextafter(m.alphaDiffuse, 0.0);
        inv.jacInvDet = wd;
    } else {
        if (!(ws > 0.0))
            return std::nullopt;
        auto u = phongLobeInvert(Frame(r).toLocal(wo), m.exponent);
        if (!u)
            return std::nullopt;
        inv.u1 = u->x;
        inv.u2 = u->y;
        inv.uLobe = intervalInverse(m.alphaDiffuse, 1.0, gammaPlace).first;
        inv.jacInvDet = ws;
    }
    inv.techProb = (lobe == 0 ? wd : ws)/(wd + ws);
    return inv;
}

} // namespace detail

// Probabilistic inverse of the direction block: picks the generating lobe
// with probability proportional to its share of the mixture density, then
// inverts it. jacInvDet/techProb recovers the mixture marginal, which is what
// makes jump acceptances cancel exactly.
inline std::optional<BsdfInversion> bsdfInvert(const Material &m, const Frame &frame,
        const Vec3 &wi, const Vec3 &wo, GammaSource &gamma)
{
    if (m.kind == MaterialKind::Lambert)
        return detail::bsdfInvertLobe(m, frame, wi, wo, 0, gamma.next());

    double pd = cosineHemispherePdf(frame.toLocal(wo));
    double ps = phongLobePdf(Frame(reflect(wi, frame.n)).toLocal(wo), m.exponent);
    double wd = m.alphaDiffuse*pd, ws = (1.0 - m.alphaDiffuse)*ps;
    if (!(wd + ws > 0.0))
        return std::nullopt;
    int lobe = gamma.next() < wd/(wd + ws) ? 0 : 1;
    return detail::bsdfInvertLobe(m, frame, wi, wo, lobe, gamma.next());
}

// Reverse-side Jacobian for a direction already encoded in u: the lobe choice
// is read off the selector dimension instead of being drawn.
inline std::optional<BsdfInversion> bsdfInverseJacobian(const Material &m, const Frame &frame,
        const Vec3 &wi, const Vec3 &wo, double uLobe)
{
    int lobe = m.kind == MaterialKind::Lambert ? 0 : (uLobe < m.alphaDiffuse ? 0 : 1);
    return detail::bsdfInvertLobe(m, frame, wi, wo, lobe, 0.0);
}

} // namespace rjmlt
