#pragma once

// Core raster types shared by every shadowgeo module: dense H x W x C grids,
// binary masks, normal maps, tri-class label maps, logit fields, and the
// scene light direction. All types are plain values; copy freely.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace shadowgeo {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raster sizes or channel counts disagree.
struct DimensionError : Error {
    using Error::Error;
};

// Unreadable, malformed, or out-of-contract data.
struct DataError : Error {
    using Error::Error;
};

// Input is well-formed but carries no usable evidence (empty masks,
// coincident centroids, zero vectors).
struct DegenerateInput : Error {
    using Error::Error;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Dense row-major grid, channels interleaved per pixel.
template <typename T>
class RasterGrid {
public:
    RasterGrid() = default;

    RasterGrid(int width, int height, int channels, T fill = T{})
        : width_(width), height_(height), channels_(channels) {
        check_shape(width, height, channels);
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    RasterGrid(int width, int height, int channels, std::vector<T> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        check_shape(width, height, channels);
        if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
            throw DimensionError("raster data length " + std::to_string(data_.size()) +
                                 " does not match " + std::to_string(width) + "x" +
                                 std::to_string(height) + "x" + std::to_string(channels));
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    std::span<T> pixel(int x, int y) {
        return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
    }
    std::span<const T> pixel(int x, int y) const {
        return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
    }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_size(int w, int h) const { return w == width_ && h == height_; }
    template <typename U>
    bool same_size(const RasterGrid<U>& o) const {
        return same_size(o.width(), o.height());
    }

    bool operator==(const RasterGrid&) const = default;

private:
    static void check_shape(int width, int height, int channels) {
        if (width < 1 || height < 1 || channels < 1) {
            throw DimensionError("raster dimensions must be positive");
        }
    }

    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

using Grid = RasterGrid<double>;
using LabelGrid = RasterGrid<std::uint8_t>;

template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionError(std::string(what) + ": size mismatch " + std::to_string(a.width()) +
                             "x" + std::to_string(a.height()) + " vs " +
                             std::to_string(b.width()) + "x" + std::to_string(b.height()));
    }
}

class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : grid_(width, height, 1, static_cast<std::uint8_t>(fill ? 1 : 0)) {}

    explicit BinaryMask(LabelGrid grid) : grid_(std::move(grid)) {
        if (grid_.channels() != 1) throw DimensionError("binary mask must have one channel");
        for (auto v : grid_.values()) {
            if (v > 1) throw DataError("binary mask values must be 0 or 1");
        }
    }

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    std::size_t pixel_count() const { return grid_.pixel_count(); }

    bool operator()(int x, int y) const { return grid_.at(x, y) != 0; }
    void set(int x, int y, bool v) { grid_.at(x, y) = v ? 1 : 0; }
    bool operator[](std::size_t i) const { return grid_.values()[i] != 0; }
    void set(std::size_t i, bool v) { grid_.values()[i] = v ? 1 : 0; }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(grid_.values().begin(), grid_.values().end(), 1));
    }
    bool any() const { return count() > 0; }

    const LabelGrid& grid() const { return grid_; }

    BinaryMask complement() const {
        BinaryMask out = *this;
        for (auto& v : out.grid_.values()) v = static_cast<std::uint8_t>(1 - v);
        return out;
    }

    bool operator==(const BinaryMask&) const = default;

private:
    LabelGrid grid_;
};

inline BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    require_same_size(a, b, "mask_and");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.pixel_count(); ++i) out.set(i, a[i] && b[i]);
    return out;
}

inline BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
    require_same_size(a, b, "mask_or");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.pixel_count(); ++i) out.set(i, a[i] || b[i]);
    return out;
}

inline BinaryMask mask_and_not(const BinaryMask& a, const BinaryMask& b) {
    require_same_size(a, b, "mask_and_not");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.pixel_count(); ++i) out.set(i, a[i] && !b[i]);
    return out;
}

// Square (Chebyshev) dilation, separable.
inline BinaryMask dilate(const BinaryMask& m, int radius) {
    if (radius <= 0) return m;
    const int w = m.width();
    const int h = m.height();
    BinaryMask horiz(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool hit = false;
            for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius) && !hit; ++k) {
                hit = m(k, y);
            }
            horiz.set(x, y, hit);
        }
    }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool hit = false;
            for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius) && !hit; ++k) {
                hit = horiz(x, k);
            }
            out.set(x, y, hit);
        }
    }
    return out;
}

// 4-connected labelling; returns per-pixel component id (-1 outside the mask)
// and the size of each component.
struct Components {
    std::vector<int> label;
    std::vector<std::size_t> sizes;
};

inline Components connected_components(const BinaryMask& m) {
    const int w = m.width();
    const int h = m.height();
    Components out;
    out.label.assign(m.pixel_count(), -1);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < m.pixel_count(); ++start) {
        if (!m[start] || out.label[start] >= 0) continue;
        const int id = static_cast<int>(out.sizes.size());
        out.sizes.push_back(0);
        stack.push_back(start);
        out.label[start] = id;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++out.sizes[static_cast<std::size_t>(id)];
            const int x = static_cast<int>(i % static_cast<std::size_t>(w));
            const int y = static_cast<int>(i / static_cast<std::size_t>(w));
            const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
            for (const auto& p : nbr) {
                if (p[0] < 0 || p[0] >= w || p[1] < 0 || p[1] >= h) continue;
                const std::size_t j = static_cast<std::size_t>(p[1]) * static_cast<std::size_t>(w) + p[0];
                if (m[j] && out.label[j] < 0) {
                    out.label[j] = id;
                    stack.push_back(j);
                }
            }
        }
    }
    return out;
}

// Largest 4-connected component (lowest id wins ties); empty in, empty out.
inline BinaryMask largest_component(const BinaryMask& m) {
    const Components cc = connected_components(m);
    BinaryMask out(m.width(), m.height());
    if (cc.sizes.empty()) return out;
    const auto best = static_cast<int>(std::max_element(cc.sizes.begin(), cc.sizes.end()) - cc.sizes.begin());
    for (std::size_t i = 0; i < m.pixel_count(); ++i) out.set(i, cc.label[i] == best);
    return out;
}

// Unit-length scene light, pointing from the light toward the scene.
// Camera frame: +x right, +y down, +z into the scene.
class LightDirection {
public:
    LightDirection() = default;

    // Normalizes; throws DegenerateInput on a zero or non-finite vector.
    LightDirection(double x, double y, double z) : LightDirection(Vec3{x, y, z}) {}

    explicit LightDirection(const Vec3& v) {
        const double n = norm(v);
        if (!std::isfinite(n) || n < 1e-12) {
            throw DegenerateInput("light direction must be a finite non-zero vector");
        }
        v_ = v * (1.0 / n);
    }

    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    const Vec3& vec() const { return v_; }

    LightDirection operator-() const { return LightDirection(-v_); }
    bool operator==(const LightDirection&) const = default;

private:
    Vec3 v_{0.0, 0.0, 1.0};
};

// Per-pixel unit surface normals in the camera frame.
class NormalMap {
public:
    static constexpr double kNormTolerance = 1e-3;

    NormalMap() = default;

    explicit NormalMap(Grid grid) : grid_(std::move(grid)) {
        if (grid_.channels() != 3) throw DimensionError("normal map must have three channels");
        for (int y = 0; y < grid_.height(); ++y) {
            for (int x = 0; x < grid_.width(); ++x) {
                const double n = norm(at(x, y));
                if (!(std::abs(n - 1.0) <= kNormTolerance)) {
                    throw DataError("normal at (" + std::to_string(x) + "," + std::to_string(y) +
                                    ") is not unit length");
                }
            }
        }
    }

    // Uniform map, mostly for tests.
    static NormalMap filled(int width, int height, const Vec3& n) {
        Grid g(width, height, 3);
        const double len = norm(n);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                g.at(x, y, 0) = n.x / len;
                g.at(x, y, 1) = n.y / len;
                g.at(x, y, 2) = n.z / len;
            }
        }
        return NormalMap(std::move(g));
    }

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    std::size_t pixel_count() const { return grid_.pixel_count(); }

    Vec3 at(int x, int y) const {
        auto p = grid_.pixel(x, y);
        return {p[0], p[1], p[2]};
    }
    Vec3 operator[](std::size_t i) const {
        auto v = grid_.values();
        return {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
    }

    const Grid& grid() const { return grid_; }

private:
    Grid grid_;
};

enum class ShadowClass : std::uint8_t { background = 0, cast = 1, attached = 2 };

// Labels in {bg, cast, attached}; undefined shadow pixels are tracked in a
// separate mask and always carry the background label.
class TriClassMask {
public:
    TriClassMask() = default;
    TriClassMask(int width, int height)
        : labels_(width, height, 1, std::uint8_t{0}), undefined_(width, height) {}

    TriClassMask(LabelGrid labels, BinaryMask undefined)
        : labels_(std::move(labels)), undefined_(std::move(undefined)) {
        if (labels_.channels() != 1) throw DimensionError("label grid must have one channel");
        require_same_size(labels_, undefined_, "TriClassMask");
        for (std::size_t i = 0; i < labels_.pixel_count(); ++i) {
            const auto v = labels_.values()[i];
            if (v > 2) throw DataError("tri-class label out of range");
            if (undefined_[i] && v != 0) {
                throw DataError("undefined shadow pixel must carry the background label");
            }
        }
    }

    // Assembles from per-class masks. Undefined wins over cast/attached;
    // cast and attached must not overlap.
    static TriClassMask from_masks(const BinaryMask& cast, const BinaryMask& attached,
                                   const BinaryMask& undefined) {
        require_same_size(cast, attached, "TriClassMask::from_masks");
        require_same_size(cast, undefined, "TriClassMask::from_masks");
        LabelGrid labels(cast.width(), cast.height(), 1, std::uint8_t{0});
        for (std::size_t i = 0; i < cast.pixel_count(); ++i) {
            if (cast[i] && attached[i]) throw DataError("cast and attached masks overlap");
            if (undefined[i]) continue;
            if (cast[i]) labels.values()[i] = 1;
            if (attached[i]) labels.values()[i] = 2;
        }
        return TriClassMask(std::move(labels), undefined);
    }

    int width() const { return labels_.width(); }
    int height() const { return labels_.height(); }
    std::size_t pixel_count() const { return labels_.pixel_count(); }

    ShadowClass label(std::size_t i) const { return static_cast<ShadowClass>(labels_.values()[i]); }
    ShadowClass label(int x, int y) const { return static_cast<ShadowClass>(labels_.at(x, y)); }
    void set_label(std::size_t i, ShadowClass c) {
        if (undefined_[i] && c != ShadowClass::background) {
            throw DataError("undefined shadow pixel must carry the background label");
        }
        labels_.values()[i] = static_cast<std::uint8_t>(c);
    }

    const LabelGrid& labels() const { return labels_; }
    const BinaryMask& undefined() const { return undefined_; }

    BinaryMask class_mask(ShadowClass c) const {
        BinaryMask out(width(), height());
        for (std::size_t i = 0; i < pixel_count(); ++i) out.set(i, label(i) == c);
        return out;
    }
    BinaryMask cast() const { return class_mask(ShadowClass::cast); }
    BinaryMask attached() const { return class_mask(ShadowClass::attached); }

    // cast | attached | undefined
    BinaryMask union_mask() const {
        BinaryMask out(width(), height());
        for (std::size_t i = 0; i < pixel_count(); ++i) {
            out.set(i, label(i) != ShadowClass::background || undefined_[i]);
        }
        return out;
    }

    bool operator==(const TriClassMask&) const = default;

private:
    LabelGrid labels_;
    BinaryMask undefined_;
};

// Per-pixel detector logits ordered (z_bg, z_cast, z_att).
class LogitField {
public:
    LogitField() = default;
    LogitField(int width, int height) : grid_(width, height, 3, 0.0) {}

    explicit LogitField(Grid grid) : grid_(std::move(grid)) {
        if (grid_.channels() != 3) throw DimensionError("logit field must have three channels");
        for (double v : grid_.values()) {
            if (!std::isfinite(v)) throw DataError("logits must be finite");
        }
    }

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    std::size_t pixel_count() const { return grid_.pixel_count(); }

    std::array<double, 3> operator[](std::size_t i) const {
        auto v = grid_.values();
        return {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
    }
    void set(std::size_t i, double bg, double cast, double att) {
        auto v = grid_.values();
        v[3 * i] = bg;
        v[3 * i + 1] = cast;
        v[3 * i + 2] = att;
    }

    const Grid& grid() const { return grid_; }
    Grid& mutable_grid() { return grid_; }

    bool operator==(const LogitField&) const = default;

private:
    Grid grid_;
};

}  // namespace shadowgeo
