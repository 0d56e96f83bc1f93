#pragma once

// Training objectives for joint shadow detection and light estimation, with
// analytic gradients.
//
//   s       = LSE(z_cast, z_att) - z_bg                      (union logit)
//   L_seg   = BCE(sigmoid(s), y_union) + l_dice * Dice
//   L_dist  = mean_{cast} max(0, m - d) + mean_{att} max(0, m + d),  d = z_cast - z_att
//   L_type  = CE(z, y_type) + l_dist * L_dist
//   L_att   = weighted BCE(M_soft, y_att)
//   L_dir   = |l_hat - l_star|_1
//   L_unit  = (|l_hat|_2 - 1)^2
//   L_total = L_seg + L_type + l_att L_att + l_dir L_dir + l_unit L_unit
//
// Undefined shadow pixels count toward y_union but are excluded from CE and
// the margin term.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "shadowgeo/raster.hpp"

namespace shadowgeo {

struct LossWeights {
    double dice = 0.1;
    double dist = 0.2;
    double att = 0.4;
    double dir = 0.5;
    double unit = 0.1;
    double margin = 0.2;

    void validate() const {
        for (double v : {dice, dist, att, dir, unit, margin}) {
            if (!(v >= 0.0)) throw std::invalid_argument("loss weights must be non-negative");
        }
    }
};

inline constexpr double kDiceSmoothing = 1.0;
inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr double kDefaultPositiveWeightCap = 20.0;

// ---- scalar building blocks --------------------------------------------------

// log(exp(a) + exp(b)), max-shifted.
inline double log_sum_exp(double a, double b) {
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double union_logit(double z_bg, double z_cast, double z_att) {
    return log_sum_exp(z_cast, z_att) - z_bg;
}

// log(1 + exp(t)) without overflow.
inline double softplus(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double cast_hinge(double d, double margin) { return std::max(0.0, margin - d); }
inline double attached_hinge(double d, double margin) { return std::max(0.0, margin + d); }

// Positive-class weight #neg / #pos, clamped to [1/cap, cap]. With no
// positives the cap is returned.
inline double positive_class_weight(std::size_t positives, std::size_t negatives, double cap) {
    if (!(cap >= 1.0)) throw std::invalid_argument("positive weight cap must be >= 1");
    if (positives == 0) return cap;
    const double w = static_cast<double>(negatives) / static_cast<double>(positives);
    return std::clamp(w, 1.0 / cap, cap);
}

// -log of the clamped probability assigned to the target.
inline double clamped_bce(double p, bool target) {
    const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
    return target ? -std::log(q) : -std::log(1.0 - q);
}

inline double clamped_bce_grad(double p, bool target) {
    if (p <= kProbabilityClamp || p >= 1.0 - kProbabilityClamp) return 0.0;
    return target ? -1.0 / p : 1.0 / (1.0 - p);
}

// ---- union logit -------------------------------------------------------------

inline Grid union_logit(const LogitField& logits) {
    Grid s(logits.width(), logits.height(), 1);
    auto out = s.values();
    for (std::size_t i = 0; i < logits.pixel_count(); ++i) {
        const auto z = logits[i];
        out[i] = union_logit(z[0], z[1], z[2]);
    }
    return s;
}

// ---- L_seg -------------------------------------------------------------------

struct SegLoss {
    double bce = 0.0;
    double dice = 0.0;
    double value = 0.0;  // bce + l_dice * dice
    Grid grad;           // d value / d logits, three channels
};

inline SegLoss seg_loss(const LogitField& logits, const BinaryMask& y_union, const LossWeights& weights) {
    require_same_size(logits, y_union, "seg_loss");
    const std::size_t n = logits.pixel_count();
    std::vector<double> s(n), p(n);
    double bce_sum = 0.0;
    double sum_py = 0.0;
    double sum_p = 0.0;
    double sum_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto z = logits[i];
        s[i] = union_logit(z[0], z[1], z[2]);
        const double y = y_union[i] ? 1.0 : 0.0;
        // BCE with logits: softplus(s) - y s
        bce_sum += softplus(s[i]) - y * s[i];
        p[i] = 1.0 / (1.0 + std::exp(-s[i]));
        sum_py += p[i] * y;
        sum_p += p[i];
        sum_y += y;
    }
    SegLoss out;
    const double num = 2.0 * sum_py + kDiceSmoothing;
    const double den = sum_p + sum_y + kDiceSmoothing;
    out.bce = bce_sum / static_cast<double>(n);
    out.dice = 1.0 - num / den;
    out.value = out.bce + weights.dice * out.dice;

    out.grad = Grid(logits.width(), logits.height(), 3);
    auto g = out.grad.values();
    for (std::size_t i = 0; i < n; ++i) {
        const double y = y_union[i] ? 1.0 : 0.0;
        const double dbce_ds = (p[i] - y) / static_cast<double>(n);
        const double ddice_dp = -(2.0 * y * den - num) / (den * den);
        const double dvalue_ds = dbce_ds + weights.dice * ddice_dp * p[i] * (1.0 - p[i]);
        const auto z = logits[i];
        const double m = std::max(z[1], z[2]);
        const double ec = std::exp(z[1] - m);
        const double ea = std::exp(z[2] - m);
        g[3 * i] = -dvalue_ds;
        g[3 * i + 1] = dvalue_ds * ec / (ec + ea);
        g[3 * i + 2] = dvalue_ds * ea / (ec + ea);
    }
    return out;
}

// ---- L_type ------------------------------------------------------------------

struct TypeLoss {
    double ce = 0.0;
    double dist = 0.0;
    double value = 0.0;  // ce + l_dist * dist
    Grid grad;           // d value / d logits
};

inline TypeLoss type_loss(const LogitField& logits, const TriClassMask& y_type, const LossWeights& weights) {
    require_same_size(logits, y_type, "type_loss");
    const std::size_t n = logits.pixel_count();
    const BinaryMask& undefined = y_type.undefined();

    std::size_t supervised = 0;
    std::size_t n_cast = 0;
    std::size_t n_att = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (undefined[i]) continue;
        ++supervised;
        if (y_type.label(i) == ShadowClass::cast) ++n_cast;
        if (y_type.label(i) == ShadowClass::attached) ++n_att;
    }

    TypeLoss out;
    out.grad = Grid(logits.width(), logits.height(), 3);
    auto g = out.grad.values();
    double ce_sum = 0.0;
    double cast_sum = 0.0;
    double att_sum = 0.0;
    const double m = weights.margin;
    for (std::size_t i = 0; i < n; ++i) {
        if (undefined[i]) continue;
        const auto z = logits[i];
        const int label = static_cast<int>(y_type.label(i));
        const double zmax = std::max({z[0], z[1], z[2]});
        const double e0 = std::exp(z[0] - zmax);
        const double e1 = std::exp(z[1] - zmax);
        const double e2 = std::exp(z[2] - zmax);
        const double sum = e0 + e1 + e2;
        ce_sum += -(z[label] - zmax - std::log(sum));
        const double inv = 1.0 / static_cast<double>(supervised);
        const double probs[3] = {e0 / sum, e1 / sum, e2 / sum};
        for (int c = 0; c < 3; ++c) g[3 * i + c] = (probs[c] - (c == label ? 1.0 : 0.0)) * inv;

        const double d = z[1] - z[2];
        if (label == 1) {
            cast_sum += cast_hinge(d, m);
            if (m - d > 0.0) {
                const double k = weights.dist / static_cast<double>(n_cast);
                g[3 * i + 1] -= k;
                g[3 * i + 2] += k;
            }
        } else if (label == 2) {
            att_sum += attached_hinge(d, m);
            if (m + d > 0.0) {
                const double k = weights.dist / static_cast<double>(n_att);
                g[3 * i + 1] += k;
                g[3 * i + 2] -= k;
            }
        }
    }
    out.ce = supervised > 0 ? ce_sum / static_cast<double>(supervised) : 0.0;
    out.dist = (n_cast > 0 ? cast_sum / static_cast<double>(n_cast) : 0.0) +
               (n_att > 0 ? att_sum / static_cast<double>(n_att) : 0.0);
    out.value = out.ce + weights.dist * out.dist;
    return out;
}

// ---- L_att, L_dir, L_unit ----------------------------------------------------

struct WeightedBce {
    double value = 0.0;
    double positive_weight = 1.0;
    bool degenerate = false;  // no positive pixels
    std::vector<double> grad;
};

// Mean over pixels of w_i * BCE(p_i, y_i); w = positive_class_weight on
// positives, 1 on negatives.
inline WeightedBce weighted_bce(std::span<const double> probs, const BinaryMask& targets,
                                double positive_weight_cap = kDefaultPositiveWeightCap) {
    if (probs.size() != targets.pixel_count()) throw DimensionError("weighted_bce: size mismatch");
    const std::size_t pos = targets.count();
    const std::size_t n = probs.size();
    WeightedBce out;
    out.degenerate = pos == 0;
    out.positive_weight = positive_class_weight(pos, n - pos, positive_weight_cap);
    out.grad.resize(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool y = targets[i];
        const double w = y ? out.positive_weight : 1.0;
        sum += w * clamped_bce(probs[i], y);
        out.grad[i] = w * clamped_bce_grad(probs[i], y) / static_cast<double>(n);
    }
    out.value = sum / static_cast<double>(n);
    return out;
}

struct LightLoss {
    double att = 0.0;
    double dir = 0.0;
    double unit = 0.0;
    bool degenerate = false;
    double value = 0.0;      // l_att att + l_dir dir + l_unit unit
    Grid grad_soft_map;      // d att / d soft map
    Vec3 grad_dir;           // d dir / d l_hat
    Vec3 grad_unit;          // d unit / d l_hat
};

inline LightLoss light_loss(const Grid& soft_map, const BinaryMask& y_att, const Vec3& l_hat,
                            const LightDirection& l_star, const LossWeights& weights,
                            double positive_weight_cap = kDefaultPositiveWeightCap) {
    require_same_size(soft_map, y_att, "light_loss");
    if (soft_map.channels() != 1) throw DimensionError("soft map must have one channel");
    LightLoss out;
    const WeightedBce bce = weighted_bce(soft_map.values(), y_att, positive_weight_cap);
    out.att = bce.value;
    out.degenerate = bce.degenerate;
    out.grad_soft_map = Grid(soft_map.width(), soft_map.height(), 1, bce.grad);

    const Vec3 diff = l_hat - l_star.vec();
    out.dir = std::abs(diff.x) + std::abs(diff.y) + std::abs(diff.z);
    auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    out.grad_dir = {sgn(diff.x), sgn(diff.y), sgn(diff.z)};

    const double len = norm(l_hat);
    out.unit = (len - 1.0) * (len - 1.0);
    out.grad_unit = len > 0.0 ? l_hat * (2.0 * (len - 1.0) / len) : Vec3{};

    out.value = weights.att * out.att + weights.dir * out.dir + weights.unit * out.unit;
    return out;
}

// ---- totals --------------------------------------------------------------------

struct LossBreakdown {
    double seg = 0.0;
    double ce = 0.0;
    double type = 0.0;  // ce + l_dist * dist
    double dist = 0.0;
    double att = 0.0;
    double dir = 0.0;
    double unit = 0.0;
    double shadow = 0.0;
    double light = 0.0;
    double total = 0.0;
};

inline LossBreakdown compose_losses(double seg, double ce, double dist, double att, double dir, double unit,
                                    const LossWeights& w) {
    LossBreakdown b;
    b.seg = seg;
    b.ce = ce;
    b.dist = dist;
    b.att = att;
    b.dir = dir;
    b.unit = unit;
    b.type = ce + w.dist * dist;
    b.shadow = b.seg + b.type;
    b.light = w.att * att + w.dir * dir + w.unit * unit;
    b.total = b.shadow + b.light;
    return b;
}

struct LossInputs {
    const LogitField& logits;
    const TriClassMask& gt;
    const Grid& soft_map;
    Vec3 l_hat;
    LightDirection l_star;
};

inline LossBreakdown total_loss(const LossInputs& in, const LossWeights& weights = {},
                                double positive_weight_cap = kDefaultPositiveWeightCap) {
    weights.validate();
    const SegLoss seg = seg_loss(in.logits, in.gt.union_mask(), weights);
    const TypeLoss type = type_loss(in.logits, in.gt, weights);
    const LightLoss light = light_loss(in.soft_map, in.gt.attached(), in.l_hat, in.l_star, weights,
                                       positive_weight_cap);
    return compose_losses(seg.value, type.ce, type.dist, light.att, light.dir, light.unit, weights);
}

// ---- finite differences ---------------------------------------------------------

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
template <typename F>
std::vector<double> numeric_gradient(F&& f, std::span<const double> point, double step = 1e-5) {
    if (!(step > 0.0)) throw std::invalid_argument("numeric_gradient: step must be positive");
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double fp = f(std::span<const double>(x));
        x[i] = orig - step;
        const double fm = f(std::span<const double>(x));
        x[i] = orig;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

}  // namespace shadowgeo
