#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "shadowgeo/raster.hpp"

namespace testing_support {

using namespace shadowgeo;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    int integer(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }
    bool coin(double p = 0.5) { return uniform() < p; }
    Vec3 unit_vector() {
        for (;;) {
            const Vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            const double n = norm(v);
            if (n > 0.1 && n <= 1.0) return v * (1.0 / n);
        }
    }

private:
    std::mt19937_64 engine_;
};

inline BinaryMask random_mask(Rng& rng, int w, int h, double p = 0.5) {
    BinaryMask m(w, h);
    for (std::size_t i = 0; i < m.pixel_count(); ++i) m.set(i, rng.coin(p));
    return m;
}

inline TriClassMask random_triclass(Rng& rng, int w, int h, double p_undefined = 0.1) {
    TriClassMask t(w, h);
    LabelGrid labels(w, h, 1, std::uint8_t{0});
    BinaryMask undefined(w, h);
    for (std::size_t i = 0; i < t.pixel_count(); ++i) {
        if (rng.coin(p_undefined)) {
            undefined.set(i, true);
        } else {
            labels.values()[i] = static_cast<std::uint8_t>(rng.integer(3));
        }
    }
    return TriClassMask(std::move(labels), std::move(undefined));
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("shadowgeo_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
