#pragma once

// Closed-loop shadow detection: detect -> fit light to the predicted attached
// shadows -> orientation-only attached map -> feed back as the next prior.
// The first pass uses an all-ones prior.
//
// The detector here is a deterministic, non-learned stand-in. Per pixel:
//
//   L      = mean RGB
//   S      = darkness_gain * (intensity_threshold - L)          shadow evidence
//   c      = min over x/y of |n(p + s) - n(p - s)| / 2s         normal variation
//   flat   = exp(-(c / flat_scale)^2)                           1 on planes
//   z_bg   = 0
//   z_cast = S + type_gain * (2 flat - 1)
//   z_att  = S + type_gain * (1 - 2 flat) + prior_gain * logit(clamp(prior, eps, 1 - eps))
//
// Connected non-background regions smaller than min_region pixels are pushed
// to background.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadowgeo/geometry.hpp"
#include "shadowgeo/light.hpp"
#include "shadowgeo/raster.hpp"

namespace shadowgeo {

struct DetectorConfig {
    double intensity_threshold = 0.17;
    double darkness_gain = 100.0;
    double type_gain = 2.5;
    double prior_gain = 1.0;
    double prior_clamp = 0.05;
    double flat_scale = 0.006;
    int curvature_step = 2;
    int min_region = 16;

    void validate() const {
        if (!(intensity_threshold > 0.0 && intensity_threshold < 1.0)) {
            throw std::invalid_argument("intensity_threshold must be in (0, 1)");
        }
        if (!(prior_clamp > 0.0 && prior_clamp < 0.5)) throw std::invalid_argument("prior_clamp must be in (0, 0.5)");
        if (!(flat_scale > 0.0)) throw std::invalid_argument("flat_scale must be positive");
        if (curvature_step < 1) throw std::invalid_argument("curvature_step must be >= 1");
        if (min_region < 0) throw std::invalid_argument("min_region must be >= 0");
    }
};

// Per-pixel flatness in [0, 1] from local normal variation.
inline Grid normal_flatness(const NormalMap& normals, int step, double scale) {
    const int w = normals.width();
    const int h = normals.height();
    Grid out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - step), x1 = std::min(w - 1, x + step);
            const int y0 = std::max(0, y - step), y1 = std::min(h - 1, y + step);
            const double cx = x1 > x0 ? norm(normals.at(x1, y) - normals.at(x0, y)) / (x1 - x0) : 0.0;
            const double cy = y1 > y0 ? norm(normals.at(x, y1) - normals.at(x, y0)) / (y1 - y0) : 0.0;
            const double c = std::min(cx, cy) / scale;
            out.at(x, y) = std::exp(-c * c);
        }
    }
    return out;
}

inline double luminance(const Grid& image, int x, int y) {
    double sum = 0.0;
    for (int c = 0; c < image.channels(); ++c) sum += image.at(x, y, c);
    return sum / image.channels();
}

// Argmax readout; ties resolve bg < cast < attached (first maximum wins).
inline TriClassMask logits_to_mask(const LogitField& logits) {
    TriClassMask out(logits.width(), logits.height());
    for (std::size_t i = 0; i < logits.pixel_count(); ++i) {
        const auto z = logits[i];
        ShadowClass c = ShadowClass::background;
        double best = z[0];
        if (z[1] > best) {
            c = ShadowClass::cast;
            best = z[1];
        }
        if (z[2] > best) c = ShadowClass::attached;
        out.set_label(i, c);
    }
    return out;
}

inline LogitField baseline_detect(const Grid& image, const NormalMap& normals, const Grid& prior,
                                  const DetectorConfig& config = {}) {
    config.validate();
    require_same_size(image, normals, "baseline_detect");
    require_same_size(image, prior, "baseline_detect");
    if (prior.channels() != 1) throw DimensionError("prior must have one channel");
    const int w = image.width();
    const int h = image.height();
    const Grid flat = normal_flatness(normals, config.curvature_step, config.flat_scale);

    LogitField logits(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double p = prior.at(x, y);
            if (!(p >= 0.0 && p <= 1.0)) throw DataError("prior values must lie in [0, 1]");
            const double q = std::clamp(p, config.prior_clamp, 1.0 - config.prior_clamp);
            const double evidence = config.darkness_gain * (config.intensity_threshold - luminance(image, x, y));
            const double f = flat.at(x, y);
            const double z_cast = evidence + config.type_gain * (2.0 * f - 1.0);
            const double z_att = evidence + config.type_gain * (1.0 - 2.0 * f) + config.prior_gain * std::log(q / (1.0 - q));
            logits.set(static_cast<std::size_t>(y) * w + x, 0.0, z_cast, z_att);
        }
    }

    if (config.min_region > 0) {
        const BinaryMask shadow = logits_to_mask(logits).union_mask();
        const Components cc = connected_components(shadow);
        for (std::size_t i = 0; i < shadow.pixel_count(); ++i) {
            if (cc.label[i] < 0) continue;
            if (cc.sizes[static_cast<std::size_t>(cc.label[i])] >= static_cast<std::size_t>(config.min_region)) continue;
            const auto z = logits[i];
            logits.set(i, std::max(z[1], z[2]) + 1.0, z[1], z[2]);
        }
    }
    return logits;
}

// ---- refinement loop ----------------------------------------------------------

struct RefineConfig {
    int iterations = 3;
    DetectorConfig detector;
    LightFitConfig light_fit;
    // Dilation of the predicted shadow when forming the light-fit region.
    int region_dilation = 2;
    // Pixels with flatness at or above this are excluded from the fit region.
    double flat_cutoff = 0.5;

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
        detector.validate();
        light_fit.validate();
    }
};

struct IterationRecord {
    Grid prior;  // detector input for this pass
    LogitField logits;
    TriClassMask mask;
    std::optional<LightDirection> light;      // fitted after this pass
    std::optional<BinaryMask> partial_map;    // hard map from `light`
    bool fit_failed = false;
    std::string note;
};

struct RefinementTrace {
    std::vector<IterationRecord> records;
    int iterations() const { return static_cast<int>(records.size()); }
    const IterationRecord& final() const { return records.back(); }
};

// Light-fit region: predicted non-background, dilated, minus flat pixels.
inline BinaryMask light_fit_region(const TriClassMask& mask, const Grid& flatness, int dilation, double flat_cutoff) {
    const BinaryMask grown = dilate(mask.union_mask(), dilation);
    BinaryMask region(mask.width(), mask.height());
    const auto f = flatness.values();
    for (std::size_t i = 0; i < region.pixel_count(); ++i) region.set(i, grown[i] && f[i] < flat_cutoff);
    return region;
}

inline RefinementTrace refine_loop(const Grid& image, const NormalMap& normals, const RefineConfig& config = {}) {
    config.validate();
    require_same_size(image, normals, "refine_loop");
    const Grid flatness = normal_flatness(normals, config.detector.curvature_step, config.detector.flat_scale);

    RefinementTrace trace;
    Grid prior(image.width(), image.height(), 1, 1.0);
    std::optional<LightDirection> light;
    std::optional<BinaryMask> partial;
    for (int it = 0; it < config.iterations; ++it) {
        IterationRecord rec;
        rec.prior = prior;
        rec.logits = baseline_detect(image, normals, prior, config.detector);
        rec.mask = logits_to_mask(rec.logits);

        const BinaryMask region = light_fit_region(rec.mask, flatness, config.region_dilation, config.flat_cutoff);
        const BinaryMask attached = mask_and(rec.mask.attached(), region);
        try {
            const LightFitResult fit = fit_light_from_attached(normals, attached, region, config.light_fit);
            light = fit.direction;
            partial = partial_attached_map(normals, *light);
            prior = soft_partial_attached_map(normals, *light, config.light_fit.steepness);
        } catch (const DegenerateInput& e) {
            // Keep the previous prior for the next pass.
            rec.fit_failed = true;
            rec.note = e.what();
        }
        rec.light = light;
        rec.partial_map = partial;
        trace.records.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace shadowgeo
