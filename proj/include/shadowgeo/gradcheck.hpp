#pragma once

// Finite-difference verification of the analytic loss gradients on seeded
// random instances. Instances are drawn away from the non-differentiable
// points (hinge corners, L1 corners, probability clamps).
//
// Per instance the error is |g_analytic - g_numeric|_2 / max(|g_analytic|_2, |g_numeric|_2, 1e-12).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "shadowgeo/objectives.hpp"
#include "shadowgeo/raster.hpp"

namespace shadowgeo {

struct GradientCheck {
    std::string name;
    int instances = 0;
    double max_relative_error = 0.0;
    bool passed = false;
};

struct GradientCheckConfig {
    int instances = 100;
    double step = 1e-5;
    double tolerance = 1e-4;
    int width = 6;
    int height = 5;
};

inline double relative_gradient_error(std::span<const double> analytic, std::span<const double> numeric) {
    if (analytic.size() != numeric.size()) throw DimensionError("gradient size mismatch");
    double diff = 0.0;
    double na = 0.0;
    double nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

namespace detail {

class CheckRng {
public:
    explicit CheckRng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    int integer(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

private:
    std::mt19937_64 engine_;
};

inline LogitField logits_from(std::span<const double> v, int w, int h) {
    return LogitField(Grid(w, h, 3, std::vector<double>(v.begin(), v.end())));
}

// Random tri-class labels with roughly 10% undefined; every class present.
inline TriClassMask random_labels(CheckRng& rng, int w, int h) {
    for (;;) {
        LabelGrid labels(w, h, 1, std::uint8_t{0});
        BinaryMask undefined(w, h);
        bool seen[4] = {};
        for (std::size_t i = 0; i < undefined.pixel_count(); ++i) {
            if (rng.uniform(0.0, 1.0) < 0.1) {
                undefined.set(i, true);
                seen[3] = true;
            } else {
                const int c = rng.integer(3);
                labels.values()[i] = static_cast<std::uint8_t>(c);
                seen[c] = true;
            }
        }
        if (seen[0] && seen[1] && seen[2]) return TriClassMask(std::move(labels), std::move(undefined));
    }
}

inline GradientCheck finish(std::string name, const std::vector<double>& errors, double tol) {
    GradientCheck g;
    g.name = std::move(name);
    g.instances = static_cast<int>(errors.size());
    g.max_relative_error = errors.empty() ? 0.0 : *std::max_element(errors.begin(), errors.end());
    g.passed = g.max_relative_error <= tol;
    return g;
}

}  // namespace detail

inline std::vector<GradientCheck> run_gradient_checks(std::uint64_t seed, const GradientCheckConfig& cfg = {}) {
    detail::CheckRng rng(seed);
    const LossWeights weights;
    const int w = cfg.width;
    const int h = cfg.height;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<double> seg_err, type_err, att_err, dir_err, unit_err;

    for (int t = 0; t < cfg.instances; ++t) {
        const TriClassMask labels = detail::random_labels(rng, w, h);

        // Logits with every |d -/+ m| at least 1e3 steps from a hinge corner.
        std::vector<double> z(3 * n);
        for (std::size_t i = 0; i < n; ++i) {
            for (;;) {
                for (int c = 0; c < 3; ++c) z[3 * i + c] = rng.uniform(-3.0, 3.0);
                const double d = z[3 * i + 1] - z[3 * i + 2];
                const double gap = std::min(std::abs(d - weights.margin), std::abs(d + weights.margin));
                if (gap > 1e3 * cfg.step) break;
            }
        }
        const LogitField field = detail::logits_from(z, w, h);

        const BinaryMask y_union = labels.union_mask();
        const SegLoss seg = seg_loss(field, y_union, weights);
        const auto seg_num = numeric_gradient(
            [&](std::span<const double> v) { return seg_loss(detail::logits_from(v, w, h), y_union, weights).value; },
            z, cfg.step);
        seg_err.push_back(relative_gradient_error(seg.grad.values(), seg_num));

        const TypeLoss type = type_loss(field, labels, weights);
        const auto type_num = numeric_gradient(
            [&](std::span<const double> v) { return type_loss(detail::logits_from(v, w, h), labels, weights).value; },
            z, cfg.step);
        type_err.push_back(relative_gradient_error(type.grad.values(), type_num));

        // Soft map inside the unclamped range.
        std::vector<double> probs(n);
        for (auto& p : probs) p = rng.uniform(0.02, 0.98);
        const BinaryMask y_att = labels.attached();
        const WeightedBce bce = weighted_bce(probs, y_att);
        const auto att_num = numeric_gradient(
            [&](std::span<const double> v) { return weighted_bce(v, y_att).value; }, probs, cfg.step);
        att_err.push_back(relative_gradient_error(bce.grad, att_num));

        // Light direction terms; components kept away from the L1 corners.
        const LightDirection l_star(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.1, 1.0));
        std::vector<double> l_hat(3);
        for (;;) {
            const double scale = rng.uniform(0.5, 1.5);
            for (int c = 0; c < 3; ++c) l_hat[static_cast<std::size_t>(c)] = rng.uniform(-1.0, 1.0) * scale;
            const Vec3 v{l_hat[0], l_hat[1], l_hat[2]};
            const Vec3 diff = v - l_star.vec();
            if (std::min({std::abs(diff.x), std::abs(diff.y), std::abs(diff.z)}) > 1e3 * cfg.step && norm(v) > 0.1) {
                break;
            }
        }
        const Grid soft(w, h, 1, probs);
        auto light_at = [&](std::span<const double> v) {
            return light_loss(soft, y_att, Vec3{v[0], v[1], v[2]}, l_star, weights);
        };
        const LightLoss light = light_at(l_hat);
        const auto dir_num = numeric_gradient([&](std::span<const double> v) { return light_at(v).dir; }, l_hat,
                                              cfg.step);
        const auto unit_num = numeric_gradient([&](std::span<const double> v) { return light_at(v).unit; }, l_hat,
                                               cfg.step);
        const double gd[3] = {light.grad_dir.x, light.grad_dir.y, light.grad_dir.z};
        const double gu[3] = {light.grad_unit.x, light.grad_unit.y, light.grad_unit.z};
        dir_err.push_back(relative_gradient_error(gd, dir_num));
        unit_err.push_back(relative_gradient_error(gu, unit_num));
    }

    return {detail::finish("L_seg", seg_err, cfg.tolerance), detail::finish("L_type", type_err, cfg.tolerance),
            detail::finish("L_att", att_err, cfg.tolerance), detail::finish("L_dir", dir_err, cfg.tolerance),
            detail::finish("L_unit", unit_err, cfg.tolerance)};
}

}  // namespace shadowgeo
