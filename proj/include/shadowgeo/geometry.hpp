#pragma once

// Surface normals from relative depth, and the orientation-only attached
// shadow map: a pixel is a self-shadow candidate iff its normal faces away
// from the light (n . l > 0). The map ignores visibility, so surfaces blocked
// by other geometry are not included.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "shadowgeo/raster.hpp"

namespace shadowgeo {

inline constexpr double kDefaultSteepness = 25.0;

// Relative depth, larger = deeper along +z. Orthographic: no unprojection.
class DepthMap {
public:
    DepthMap() = default;
    explicit DepthMap(Grid grid) : grid_(std::move(grid)) {
        if (grid_.channels() != 1) throw DimensionError("depth map must have one channel");
        for (double v : grid_.values()) {
            if (!std::isfinite(v) || v < 0.0) throw DataError("depth values must be finite and non-negative");
        }
    }

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    double at(int x, int y) const { return grid_.at(x, y); }
    double operator[](std::size_t i) const { return grid_.values()[i]; }
    const Grid& grid() const { return grid_; }

private:
    Grid grid_;
};

// Central differences at `step` pixels; n = normalize(dz/dx, dz/dy, -1), so a
// fronto-parallel plane gives (0, 0, -1). Pixels closer than `step` to the
// border copy the normal of the nearest pixel with a full stencil.
inline NormalMap normals_from_depth(const DepthMap& depth, int step = 1) {
    if (step < 1) throw std::invalid_argument("normals_from_depth: step must be >= 1");
    const int w = depth.width();
    const int h = depth.height();
    if (w < 2 * step + 1 || h < 2 * step + 1) {
        throw DimensionError("normals_from_depth: depth map smaller than the " +
                             std::to_string(2 * step + 1) + "-pixel stencil");
    }
    Grid out(w, h, 3);
    const double inv = 1.0 / (2.0 * step);
    for (int y = 0; y < h; ++y) {
        const int cy = std::clamp(y, step, h - 1 - step);
        for (int x = 0; x < w; ++x) {
            const int cx = std::clamp(x, step, w - 1 - step);
            const double dzdx = (depth.at(cx + step, cy) - depth.at(cx - step, cy)) * inv;
            const double dzdy = (depth.at(cx, cy + step) - depth.at(cx, cy - step)) * inv;
            const double len = std::sqrt(dzdx * dzdx + dzdy * dzdy + 1.0);
            out.at(x, y, 0) = dzdx / len;
            out.at(x, y, 1) = dzdy / len;
            out.at(x, y, 2) = -1.0 / len;
        }
    }
    return NormalMap(std::move(out));
}

// Pixels whose stencil straddles a depth jump larger than `max_jump`; their
// normals from normals_from_depth are unreliable (typically silhouettes).
inline BinaryMask depth_discontinuities(const DepthMap& depth, int step, double max_jump) {
    const int w = depth.width();
    const int h = depth.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = depth.at(x, y);
            bool jump = false;
            for (int k = -step; k <= step && !jump; ++k) {
                const int xx = std::clamp(x + k, 0, w - 1);
                const int yy = std::clamp(y + k, 0, h - 1);
                jump = std::abs(depth.at(xx, y) - c) > max_jump || std::abs(depth.at(x, yy) - c) > max_jump;
            }
            out.set(x, y, jump);
        }
    }
    return out;
}

inline BinaryMask partial_attached_map(const NormalMap& normals, const LightDirection& light) {
    BinaryMask out(normals.width(), normals.height());
    const Vec3 l = light.vec();
    for (std::size_t i = 0; i < normals.pixel_count(); ++i) out.set(i, dot(normals[i], l) > 0.0);
    return out;
}

inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// sigmoid(k * (n . l)); exactly 0.5 only where n . l == 0.
inline Grid soft_partial_attached_map(const NormalMap& normals, const LightDirection& light,
                                      double steepness = kDefaultSteepness) {
    if (!(steepness > 0.0)) throw std::invalid_argument("steepness must be positive");
    Grid out(normals.width(), normals.height(), 1);
    const Vec3 l = light.vec();
    auto values = out.values();
    for (std::size_t i = 0; i < normals.pixel_count(); ++i) {
        const double d = dot(normals[i], l);
        double p = sigmoid(steepness * d);
        if (d > 0.0 && p <= 0.5) p = std::nextafter(0.5, 1.0);
        if (d < 0.0 && p >= 0.5) p = std::nextafter(0.5, 0.0);
        values[i] = p;
    }
    return out;
}

struct PartialAttachedMap {
    BinaryMask hard;
    Grid soft;
};

inline PartialAttachedMap partial_attached(const NormalMap& normals, const LightDirection& light,
                                           double steepness = kDefaultSteepness) {
    return {partial_attached_map(normals, light), soft_partial_attached_map(normals, light, steepness)};
}

}  // namespace shadowgeo
