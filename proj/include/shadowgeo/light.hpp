#pragma once

// Light-direction recovery from shadow evidence.
//
// Two routes:
//  * heuristic_light_3d: image-plane direction from the object centroid to
//    its cast-shadow centroid, plus a z component whose sign says whether the
//    shadow lies deeper (light points into the scene) or shallower than the
//    object.
//  * fit_light_from_attached: inverts the orientation-only attached map by
//    minimizing weighted BCE between sigmoid(k n.l) and an observed attached
//    mask over the unit sphere (Fibonacci lattice + golden-section polish).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "shadowgeo/geometry.hpp"
#include "shadowgeo/objectives.hpp"
#include "shadowgeo/raster.hpp"

namespace shadowgeo {

// Fit needs at least one attached pixel.
struct NoAttachedEvidence : DegenerateInput {
    using DegenerateInput::DegenerateInput;
};

struct ImageDirection {
    double x = 0.0;
    double y = 0.0;
};

inline double angular_error(const LightDirection& a, const LightDirection& b) {
    const double c = std::clamp(dot(a.vec(), b.vec()), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

namespace detail {

struct Centroid {
    double x = 0.0;
    double y = 0.0;
    std::size_t count = 0;
};

inline Centroid centroid(const BinaryMask& m) {
    Centroid c;
    double sx = 0.0;
    double sy = 0.0;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m(x, y)) continue;
            sx += x;
            sy += y;
            ++c.count;
        }
    }
    if (c.count > 0) {
        c.x = sx / static_cast<double>(c.count);
        c.y = sy / static_cast<double>(c.count);
    }
    return c;
}

inline double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

struct Displacement {
    ImageDirection unit;
    double length = 0.0;
};

inline Displacement object_to_shadow(const BinaryMask& object_mask, const BinaryMask& cast_mask) {
    require_same_size(object_mask, cast_mask, "centroid_direction_2d");
    const Centroid obj = centroid(object_mask);
    const Centroid sh = centroid(cast_mask);
    if (obj.count == 0) throw DegenerateInput("object mask is empty");
    if (sh.count == 0) throw DegenerateInput("cast shadow mask is empty");
    const double dx = sh.x - obj.x;
    const double dy = sh.y - obj.y;
    const double len = std::hypot(dx, dy);
    if (len < 0.5) throw DegenerateInput("object and shadow centroids coincide");
    return {{dx / len, dy / len}, len};
}

}  // namespace detail

// Unit image-plane vector (+x right, +y down) from the object centroid to the
// cast-shadow centroid. Centroids are unweighted pixel means.
inline ImageDirection centroid_direction_2d(const BinaryMask& object_mask, const BinaryMask& cast_mask) {
    return detail::object_to_shadow(object_mask, cast_mask).unit;
}

struct HeuristicLightConfig {
    // Depth units per pixel of image-plane displacement.
    double depth_scale = 1.0;
    // Median depths closer than this fraction of the depth range count as equal.
    double equality_band = 1e-3;
};

// |z| = |median_depth(cast) - median_depth(object)| / (|displacement| * depth_scale),
// signed positive when the shadow is deeper. The in-plane part is the unit
// centroid direction; the result is normalized.
inline LightDirection heuristic_light_3d(const BinaryMask& object_mask, const BinaryMask& cast_mask,
                                         const DepthMap& depth, const HeuristicLightConfig& cfg = {}) {
    const auto disp = detail::object_to_shadow(object_mask, cast_mask);
    require_same_size(object_mask, depth, "heuristic_light_3d");
    if (!(cfg.depth_scale > 0.0)) throw std::invalid_argument("depth_scale must be positive");

    std::vector<double> obj_depth;
    std::vector<double> cast_depth;
    double lo = depth[0];
    double hi = depth[0];
    for (std::size_t i = 0; i < object_mask.pixel_count(); ++i) {
        lo = std::min(lo, depth[i]);
        hi = std::max(hi, depth[i]);
        if (object_mask[i]) obj_depth.push_back(depth[i]);
        if (cast_mask[i]) cast_depth.push_back(depth[i]);
    }
    const double delta = detail::median(std::move(cast_depth)) - detail::median(std::move(obj_depth));
    double z = 0.0;
    if (std::abs(delta) > cfg.equality_band * (hi - lo)) {
        z = delta / (disp.length * cfg.depth_scale);
    }
    return LightDirection(disp.unit.x, disp.unit.y, z);
}

// ---- numerical fit -------------------------------------------------------------

struct LightFitConfig {
    int coarse_samples = 1000;
    int refine_steps = 20;
    double steepness = kDefaultSteepness;
    double positive_weight_cap = kDefaultPositiveWeightCap;
    // Golden-section iterations per 1-D line search.
    int line_search_iterations = 12;

    void validate() const {
        if (coarse_samples < 16) throw std::invalid_argument("coarse_samples must be >= 16");
        if (refine_steps < 0) throw std::invalid_argument("refine_steps must be >= 0");
        if (!(steepness > 0.0)) throw std::invalid_argument("steepness must be positive");
        if (!(positive_weight_cap >= 1.0)) throw std::invalid_argument("positive_weight_cap must be >= 1");
        if (line_search_iterations < 1) throw std::invalid_argument("line_search_iterations must be >= 1");
    }
};

struct LightFitResult {
    LightDirection direction;
    double residual = 0.0;
    std::size_t candidates_evaluated = 0;
};

// Point i of an n-point Fibonacci lattice on the unit sphere.
inline Vec3 fibonacci_direction(int i, int n) {
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

inline std::vector<Vec3> fibonacci_lattice(int n) {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(fibonacci_direction(i, n));
    return out;
}

// Mean weighted BCE of sigmoid(k n.l) against the attached labels, restricted
// to the region. Per pixel the clamped BCE is evaluated as
// clamp(softplus(-/+ k n.l), -log(1 - eps), -log(eps)), which equals
// -log(clamp(p, eps, 1 - eps)) without forming p.
class AttachedFitObjective {
public:
    AttachedFitObjective(const NormalMap& normals, const BinaryMask& attached, const BinaryMask& region,
                         double steepness, double positive_weight_cap)
        : steepness_(steepness) {
        require_same_size(normals, attached, "fit_light_from_attached");
        require_same_size(normals, region, "fit_light_from_attached");
        for (std::size_t i = 0; i < region.pixel_count(); ++i) {
            if (attached[i] && !region[i]) throw DataError("attached mask must lie inside the fit region");
        }
        // Positives first, stored negated, so one loop form serves both classes.
        for (int pass = 0; pass < 2; ++pass) {
            const bool want = pass == 0;
            const double sign = want ? -1.0 : 1.0;
            for (std::size_t i = 0; i < region.pixel_count(); ++i) {
                if (!region[i] || attached[i] != want) continue;
                const Vec3 n = normals[i];
                sx_.push_back(sign * n.x);
                sy_.push_back(sign * n.y);
                sz_.push_back(sign * n.z);
            }
            if (want) positives_ = sx_.size();
        }
        if (sx_.empty()) throw DegenerateInput("fit region is empty");
        if (positives_ == 0) throw NoAttachedEvidence("attached mask is empty: no evidence for the light");
        positive_weight_ = positive_class_weight(positives_, sx_.size() - positives_, positive_weight_cap);
    }

    double operator()(const Vec3& l) const {
        const double lo = -std::log1p(-kProbabilityClamp);
        const double hi = -std::log(kProbabilityClamp);
        const double kx = steepness_ * l.x;
        const double ky = steepness_ * l.y;
        const double kz = steepness_ * l.z;
        // Outside (t_lo, t_hi) the clamp saturates; skip the transcendental calls.
        const double t_lo = std::log(std::expm1(lo)) - 1e-6;
        const double t_hi = std::log(std::expm1(hi)) + 1e-6;
        auto range_sum = [&](std::size_t begin, std::size_t end) {
            double sum = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const double t = sx_[i] * kx + sy_[i] * ky + sz_[i] * kz;
                if (t <= t_lo) {
                    sum += lo;
                } else if (t >= t_hi) {
                    sum += hi;
                } else {
                    const double sp = std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
                    sum += std::clamp(sp, lo, hi);
                }
            }
            return sum;
        };
        const double pos = range_sum(0, positives_);
        const double neg = range_sum(positives_, sx_.size());
        return (positive_weight_ * pos + neg) / static_cast<double>(sx_.size());
    }

    std::size_t size() const { return sx_.size(); }
    std::size_t positives() const { return positives_; }
    double positive_weight() const { return positive_weight_; }

private:
    double steepness_;
    double positive_weight_ = 1.0;
    std::size_t positives_ = 0;
    std::vector<double> sx_, sy_, sz_;
};

namespace detail {

inline Vec3 normalized(const Vec3& v) { return v * (1.0 / norm(v)); }

inline void tangent_basis(const Vec3& c, Vec3& u, Vec3& v) {
    const Vec3 a = std::abs(c.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    u = normalized(a - c * dot(a, c));
    v = cross(c, u);
}

}  // namespace detail

inline LightFitResult fit_light_from_attached(const NormalMap& normals, const BinaryMask& attached_mask,
                                              const BinaryMask& region, const LightFitConfig& config = {}) {
    config.validate();
    const AttachedFitObjective objective(normals, attached_mask, region, config.steepness,
                                         config.positive_weight_cap);

    // Coarse pass; strict < keeps the lowest lattice index on ties.
    std::size_t evaluated = 0;
    Vec3 best{};
    double best_value = 0.0;
    for (int i = 0; i < config.coarse_samples; ++i) {
        const Vec3 d = fibonacci_direction(i, config.coarse_samples);
        const double f = objective(d);
        ++evaluated;
        if (i == 0 || f < best_value) {
            best = d;
            best_value = f;
        }
    }

    // Alternating golden-section searches along the two tangent axes at the
    // current best, angular half-width starting at the lattice spacing.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double half_width = std::sqrt(4.0 * std::numbers::pi / config.coarse_samples);
    for (int step = 0; step < config.refine_steps; ++step) {
        for (int axis = 0; axis < 2; ++axis) {
            Vec3 u;
            Vec3 v;
            detail::tangent_basis(best, u, v);
            const Vec3 dir = axis == 0 ? u : v;
            auto along = [&](double angle) { return detail::normalized(best + dir * std::tan(angle)); };

            double a = -half_width;
            double b = half_width;
            double x1 = b - inv_phi * (b - a);
            double x2 = a + inv_phi * (b - a);
            double f1 = objective(along(x1));
            double f2 = objective(along(x2));
            evaluated += 2;
            for (int it = 0; it < config.line_search_iterations; ++it) {
                if (f1 <= f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - inv_phi * (b - a);
                    f1 = objective(along(x1));
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + inv_phi * (b - a);
                    f2 = objective(along(x2));
                }
                ++evaluated;
            }
            const double angle = f1 <= f2 ? x1 : x2;
            const double f = std::min(f1, f2);
            if (f < best_value) {
                best = along(angle);
                best_value = f;
            }
        }
        half_width *= 0.5;
    }

    return {LightDirection(best), best_value, evaluated};
}

}  // namespace shadowgeo
