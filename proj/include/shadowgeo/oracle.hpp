#pragma once

// Analytic synthetic scenes: spheres in front of a flat receiver plane, lit
// by one directional light and viewed orthographically along +z. Rendering
// gives exact normals, depth, attached shadows (facing away OR blocked by
// another sphere), cast shadows on the plane, and a Lambertian image.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "shadowgeo/geometry.hpp"
#include "shadowgeo/raster.hpp"

namespace shadowgeo {

struct Sphere {
    Vec3 center;  // pixel units; z is depth
    double radius = 1.0;
};

struct SceneSpec {
    std::vector<Sphere> spheres;
    double plane_depth = 256.0;
    LightDirection light;
    int width = 256;
    int height = 256;
    double ambient = 0.15;
    double albedo = 0.8;
    std::uint64_t seed = 0;

    void validate() const {
        if (width < 1 || height < 1) throw DegenerateInput("scene has zero image area");
        for (const auto& s : spheres) {
            if (!(s.radius > 0.0)) throw DataError("sphere radius must be positive");
            if (s.center.z + s.radius > plane_depth) throw DataError("sphere intersects the ground plane");
        }
    }
};

struct LabelBundle {
    Grid image;  // RGB in [0, 1]
    NormalMap normals;
    DepthMap depth;
    TriClassMask gt;
    BinaryMask object_mask;
    LightDirection light;
};

inline constexpr double kRayEpsilon = 1e-6;

// True iff point + t * (-light), t > 1e-6, meets any sphere. Tangent rays
// count as blocked.
inline bool raycast_blocked(const Vec3& point, const LightDirection& light, const std::vector<Sphere>& spheres) {
    const Vec3 d = -light.vec();
    for (const auto& s : spheres) {
        const Vec3 oc = point - s.center;
        const double b = dot(oc, d);
        const double c = dot(oc, oc) - s.radius * s.radius;
        const double disc = b * b - c;
        if (disc < 0.0) continue;
        const double far = -b + std::sqrt(disc);
        if (far > kRayEpsilon) return true;
    }
    return false;
}

namespace detail {

struct SurfaceHit {
    int sphere = -1;  // -1: plane
    Vec3 point;
    Vec3 normal;
};

inline SurfaceHit trace_pixel(const SceneSpec& spec, int x, int y) {
    const double px = x + 0.5;
    const double py = y + 0.5;
    SurfaceHit hit{-1, {px, py, spec.plane_depth}, {0.0, 0.0, -1.0}};
    double nearest = spec.plane_depth;
    for (std::size_t i = 0; i < spec.spheres.size(); ++i) {
        const auto& s = spec.spheres[i];
        const double dx = px - s.center.x;
        const double dy = py - s.center.y;
        const double rho2 = dx * dx + dy * dy;
        const double r2 = s.radius * s.radius;
        if (rho2 > r2) continue;
        const double h = std::sqrt(r2 - rho2);
        const double z = s.center.z - h;
        if (z < nearest) {
            nearest = z;
            hit.sphere = static_cast<int>(i);
            hit.point = {px, py, z};
            hit.normal = {dx / s.radius, dy / s.radius, -h / s.radius};
        }
    }
    return hit;
}

inline std::vector<Sphere> all_but(const std::vector<Sphere>& spheres, int skip) {
    std::vector<Sphere> out;
    for (std::size_t i = 0; i < spheres.size(); ++i) {
        if (static_cast<int>(i) != skip) out.push_back(spheres[i]);
    }
    return out;
}

}  // namespace detail

inline LabelBundle render_scene(const SceneSpec& spec) {
    spec.validate();
    const int w = spec.width;
    const int h = spec.height;
    const Vec3 l = spec.light.vec();

    std::vector<std::vector<Sphere>> others;
    for (std::size_t i = 0; i < spec.spheres.size(); ++i) {
        others.push_back(detail::all_but(spec.spheres, static_cast<int>(i)));
    }

    Grid image(w, h, 3);
    Grid normals(w, h, 3);
    Grid depth(w, h, 1);
    LabelGrid labels(w, h, 1, std::uint8_t{0});
    BinaryMask objects(w, h);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto hit = detail::trace_pixel(spec, x, y);
            const double facing = dot(hit.normal, l);
            bool shadowed = false;
            if (hit.sphere >= 0) {
                objects.set(x, y, true);
                shadowed = facing > 0.0 || raycast_blocked(hit.point, spec.light, others[hit.sphere]);
                if (shadowed) labels.at(x, y) = static_cast<std::uint8_t>(ShadowClass::attached);
            } else if (raycast_blocked(hit.point, spec.light, spec.spheres)) {
                shadowed = true;
                labels.at(x, y) = static_cast<std::uint8_t>(ShadowClass::cast);
            }
            const double direct = shadowed ? 0.0 : spec.albedo * std::max(0.0, -facing);
            const double value = std::min(1.0, direct + spec.ambient);
            for (int c = 0; c < 3; ++c) image.at(x, y, c) = value;
            normals.at(x, y, 0) = hit.normal.x;
            normals.at(x, y, 1) = hit.normal.y;
            normals.at(x, y, 2) = hit.normal.z;
            depth.at(x, y) = hit.point.z;
        }
    }

    return {std::move(image),
            NormalMap(std::move(normals)),
            DepthMap(std::move(depth)),
            TriClassMask(std::move(labels), BinaryMask(w, h)),
            std::move(objects),
            spec.light};
}

// The same scene with occlusion removed and two-sided Lambertian shading:
// albedo * |n . l| + ambient. Pairs with render_scene's image for full-mask
// derivation.
inline Grid render_shadow_free(const SceneSpec& spec) {
    spec.validate();
    Grid image(spec.width, spec.height, 3);
    const Vec3 l = spec.light.vec();
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const auto hit = detail::trace_pixel(spec, x, y);
            const double value = std::min(1.0, spec.albedo * std::abs(dot(hit.normal, l)) + spec.ambient);
            for (int c = 0; c < 3; ++c) image.at(x, y, c) = value;
        }
    }
    return image;
}

// Depth of the sphere-plus-plane scene without computing shading.
inline DepthMap render_depth(const SceneSpec& spec) {
    spec.validate();
    Grid depth(spec.width, spec.height, 1);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) depth.at(x, y) = detail::trace_pixel(spec, x, y).point.z;
    }
    return DepthMap(std::move(depth));
}

// ---- scene suites -----------------------------------------------------------------

struct SuiteOptions {
    int width = 256;
    int height = 256;
    int min_spheres = 1;
    int max_spheres = 3;
    double min_radius_fraction = 0.10;
    double max_radius_fraction = 0.25;
    // Fraction of lights drawn with z < 0 (light from behind the plane). Those
    // scenes have no visible cast shadow.
    double back_light_fraction = 0.0;
    // Lights with z below this are not drawn in the front hemisphere.
    double min_front_z = 0.1;
};

namespace detail {

// Platform-independent uniform doubles on top of mt19937_64.
class SceneRng {
public:
    explicit SceneRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1) * (1.0 - 1e-12)); }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Uniform direction with z in [z_lo, z_hi] (uniform z gives uniform area).
inline LightDirection light_in_band(SceneRng& rng, double z_lo, double z_hi) {
    const double z = rng.uniform(z_lo, z_hi);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return LightDirection(r * std::cos(phi), r * std::sin(phi), z);
}

inline bool has_visible_cast(const SceneSpec& spec) {
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const auto hit = trace_pixel(spec, x, y);
            if (hit.sphere < 0 && raycast_blocked(hit.point, spec.light, spec.spheres)) return true;
        }
    }
    return false;
}

inline SceneSpec draw_scene(SceneRng& rng, const SuiteOptions& opt) {
    SceneSpec spec;
    spec.width = opt.width;
    spec.height = opt.height;
    spec.plane_depth = static_cast<double>(std::max(opt.width, opt.height));
    spec.seed = rng.next();
    const bool back = rng.uniform() < opt.back_light_fraction;
    spec.light = back ? light_in_band(rng, -1.0, -opt.min_front_z) : light_in_band(rng, opt.min_front_z, 1.0);

    const int count = rng.integer(opt.min_spheres, opt.max_spheres);
    for (int attempt = 0; static_cast<int>(spec.spheres.size()) < count && attempt < 200; ++attempt) {
        Sphere s;
        s.radius = rng.uniform(opt.min_radius_fraction, opt.max_radius_fraction) * opt.width;
        const double margin = s.radius + 0.05 * opt.width;
        if (2.0 * margin >= opt.width || 2.0 * margin >= opt.height) continue;
        s.center.x = rng.uniform(margin, opt.width - margin);
        s.center.y = rng.uniform(margin, opt.height - margin);
        // Resting on the plane or floating up to half a radius above it.
        s.center.z = spec.plane_depth - s.radius - rng.uniform(0.0, 0.5) * s.radius;
        bool clear = true;
        for (const auto& o : spec.spheres) {
            if (norm(o.center - s.center) < o.radius + s.radius + 1.0) clear = false;
        }
        if (clear) spec.spheres.push_back(s);
    }
    return spec;
}

}  // namespace detail

// Deterministic pseudo-random scenes. Each scene has at least one sphere
// and, for front-lit scenes, a non-empty visible cast shadow (scenes failing
// that are redrawn from the same stream).
inline std::vector<SceneSpec> scene_suite(int count, std::uint64_t seed, const SuiteOptions& opt = {}) {
    if (count < 1) throw std::invalid_argument("scene_suite: count must be >= 1");
    if (opt.min_spheres < 1 || opt.max_spheres < opt.min_spheres) {
        throw std::invalid_argument("scene_suite: bad sphere count range");
    }
    detail::SceneRng rng(seed);
    std::vector<SceneSpec> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        SceneSpec spec = detail::draw_scene(rng, opt);
        if (static_cast<int>(spec.spheres.size()) < opt.min_spheres) continue;
        if (spec.light.z() > 0.0 && !detail::has_visible_cast(spec)) continue;
        out.push_back(std::move(spec));
    }
    return out;
}

// Two-sphere scenes where a smaller sphere sits between the light and a
// larger one, so part of the larger sphere's light-facing side is in the
// smaller sphere's shadow.
inline std::vector<SceneSpec> occlusion_suite(int count, std::uint64_t seed, int width = 256, int height = 256) {
    if (count < 1) throw std::invalid_argument("occlusion_suite: count must be >= 1");
    detail::SceneRng rng(seed);
    std::vector<SceneSpec> out;
    while (static_cast<int>(out.size()) < count) {
        SceneSpec spec;
        spec.width = width;
        spec.height = height;
        spec.plane_depth = static_cast<double>(std::max(width, height));
        spec.seed = rng.next();
        spec.light = detail::light_in_band(rng, 0.25, 0.6);

        Sphere big;
        big.radius = rng.uniform(0.15, 0.22) * width;
        big.center = {rng.uniform(0.3, 0.7) * width, rng.uniform(0.3, 0.7) * height,
                      spec.plane_depth - big.radius};
        Sphere small;
        small.radius = rng.uniform(0.4, 0.6) * big.radius;
        const double gap = rng.uniform(0.1, 0.4) * big.radius;
        // Toward the light, nudged sideways so the shadow lands off-centre.
        Vec3 u;
        Vec3 v;
        const Vec3 toward = -spec.light.vec();
        {
            const Vec3 a = std::abs(toward.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
            const Vec3 t = a - toward * dot(a, toward);
            u = t * (1.0 / norm(t));
            v = cross(toward, u);
        }
        const double side = rng.uniform(-0.5, 0.5) * big.radius;
        const double side2 = rng.uniform(-0.5, 0.5) * big.radius;
        small.center = big.center + toward * (big.radius + small.radius + gap) + u * side + v * side2;

        const bool inside = small.center.x - small.radius >= 0 && small.center.x + small.radius <= width &&
                            small.center.y - small.radius >= 0 && small.center.y + small.radius <= height &&
                            small.center.z - small.radius >= 0.0;
        if (!inside) continue;
        if (norm(small.center - big.center) < big.radius + small.radius + 1.0) continue;
        spec.spheres = {big, small};
        out.push_back(std::move(spec));
    }
    return out;
}

}  // namespace shadowgeo
