#pragma once

#include "shadowgeo/raster.hpp"

namespace shadowgeo {

inline constexpr double kDefaultFullMaskThreshold = 0.05;

// Full-shadow mask from a shadow / shadow-free image pair with values in
// [0, 1]: a pixel is shadow iff the channel mean of (shadow_free - shadow)
// exceeds `threshold`.
inline BinaryMask derive_full_mask(const Grid& shadow_img, const Grid& shadow_free_img,
                                   double threshold = kDefaultFullMaskThreshold) {
    require_same_size(shadow_img, shadow_free_img, "derive_full_mask");
    if (shadow_img.channels() != shadow_free_img.channels()) {
        throw DimensionError("derive_full_mask: channel count mismatch");
    }
    const int channels = shadow_img.channels();
    BinaryMask out(shadow_img.width(), shadow_img.height());
    for (int y = 0; y < shadow_img.height(); ++y) {
        for (int x = 0; x < shadow_img.width(); ++x) {
            double diff = 0.0;
            for (int c = 0; c < channels; ++c) diff += shadow_free_img.at(x, y, c) - shadow_img.at(x, y, c);
            out.set(x, y, diff / channels > threshold);
        }
    }
    return out;
}

}  // namespace shadowgeo
