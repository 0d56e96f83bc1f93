#pragma once

// On-disk formats: 8-bit grayscale masks (0/255), 8-bit RGB images, 8-bit
// normal maps with channel order (x, y, z) in the file's (R, G, B), float
// depth maps, and light-direction records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "shadowgeo/raster.hpp"

namespace shadowgeo {

namespace fs = std::filesystem;

namespace detail {

inline cv::Mat read_image(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing file: " + path.string());
    cv::Mat m;
    try {
        m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        throw DataError("cannot decode image " + path.string() + ": " + e.what());
    }
    if (m.empty()) throw DataError("not a readable image: " + path.string());
    return m;
}

inline void write_image(const fs::path& path, const cv::Mat& m) {
    const auto parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(parent)) {
        throw DataError("output directory does not exist: " + parent.string());
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), m);
    } catch (const cv::Exception& e) {
        throw DataError("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) throw DataError("cannot write " + path.string());
}

inline std::uint8_t to_byte(double unit) {
    const long v = std::lround(std::clamp(unit, 0.0, 1.0) * 255.0);
    return static_cast<std::uint8_t>(v);
}

}  // namespace detail

// ---- masks ----------------------------------------------------------------

inline BinaryMask load_mask(const fs::path& path) {
    const cv::Mat m = detail::read_image(path);
    if (m.channels() != 1 || m.depth() != CV_8U) {
        throw DataError("mask must be an 8-bit single-channel image: " + path.string());
    }
    BinaryMask out(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) out.set(x, y, row[x] > 127);
    }
    return out;
}

inline void save_mask(const BinaryMask& mask, const fs::path& path) {
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < mask.width(); ++x) row[x] = mask(x, y) ? 255 : 0;
    }
    detail::write_image(path, m);
}

// Probability map as 8-bit grayscale, p -> round(255 p).
inline void save_probability(const Grid& prob, const fs::path& path) {
    if (prob.channels() != 1) throw DimensionError("probability map must have one channel");
    cv::Mat m(prob.height(), prob.width(), CV_8UC1);
    for (int y = 0; y < prob.height(); ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < prob.width(); ++x) row[x] = detail::to_byte(prob.at(x, y));
    }
    detail::write_image(path, m);
}

// ---- RGB images, values in [0, 1] ------------------------------------------

inline Grid load_image(const fs::path& path) {
    const cv::Mat m = detail::read_image(path);
    if (m.depth() != CV_8U) throw DataError("image must be 8-bit: " + path.string());
    Grid out(m.cols, m.rows, 3);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            const auto* px = row + static_cast<std::ptrdiff_t>(x) * m.channels();
            if (m.channels() == 1) {
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = px[0] / 255.0;
            } else if (m.channels() >= 3) {
                // OpenCV holds BGR(A)
                out.at(x, y, 0) = px[2] / 255.0;
                out.at(x, y, 1) = px[1] / 255.0;
                out.at(x, y, 2) = px[0] / 255.0;
            } else {
                throw DataError("unsupported channel count in " + path.string());
            }
        }
    }
    return out;
}

inline void save_image(const Grid& rgb, const fs::path& path) {
    if (rgb.channels() != 3) throw DimensionError("image must have three channels");
    cv::Mat m(rgb.height(), rgb.width(), CV_8UC3);
    for (int y = 0; y < rgb.height(); ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < rgb.width(); ++x) {
            row[3 * x + 0] = detail::to_byte(rgb.at(x, y, 2));
            row[3 * x + 1] = detail::to_byte(rgb.at(x, y, 1));
            row[3 * x + 2] = detail::to_byte(rgb.at(x, y, 0));
        }
    }
    detail::write_image(path, m);
}

// ---- normals ----------------------------------------------------------------

// Channel c stores round((n_c + 1) / 2 * 255).
inline LabelGrid encode_normals(const NormalMap& normals) {
    LabelGrid out(normals.width(), normals.height(), 3);
    for (int y = 0; y < normals.height(); ++y) {
        for (int x = 0; x < normals.width(); ++x) {
            const Vec3 n = normals.at(x, y);
            out.at(x, y, 0) = detail::to_byte((n.x + 1.0) / 2.0);
            out.at(x, y, 1) = detail::to_byte((n.y + 1.0) / 2.0);
            out.at(x, y, 2) = detail::to_byte((n.z + 1.0) / 2.0);
        }
    }
    return out;
}

inline Vec3 dequantize_normal(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return {r / 255.0 * 2.0 - 1.0, g / 255.0 * 2.0 - 1.0, b / 255.0 * 2.0 - 1.0};
}

// Inverse of encode_normals; each pixel is renormalized to unit length.
inline NormalMap decode_normals(const LabelGrid& encoded) {
    if (encoded.channels() != 3) {
        throw DimensionError("encoded normals need three channels, got " +
                             std::to_string(encoded.channels()));
    }
    Grid g(encoded.width(), encoded.height(), 3);
    for (int y = 0; y < encoded.height(); ++y) {
        for (int x = 0; x < encoded.width(); ++x) {
            const Vec3 v = dequantize_normal(encoded.at(x, y, 0), encoded.at(x, y, 1), encoded.at(x, y, 2));
            const double len = norm(v);
            g.at(x, y, 0) = v.x / len;
            g.at(x, y, 1) = v.y / len;
            g.at(x, y, 2) = v.z / len;
        }
    }
    return NormalMap(std::move(g));
}

inline NormalMap load_normals(const fs::path& path) {
    const cv::Mat m = detail::read_image(path);
    if (m.depth() != CV_8U || m.channels() != 3) {
        throw DataError("normal map must be an 8-bit 3-channel image: " + path.string());
    }
    LabelGrid enc(m.cols, m.rows, 3);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            enc.at(x, y, 0) = row[3 * x + 2];
            enc.at(x, y, 1) = row[3 * x + 1];
            enc.at(x, y, 2) = row[3 * x + 0];
        }
    }
    return decode_normals(enc);
}

inline void save_normals(const NormalMap& normals, const fs::path& path) {
    const LabelGrid enc = encode_normals(normals);
    cv::Mat m(enc.height(), enc.width(), CV_8UC3);
    for (int y = 0; y < enc.height(); ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < enc.width(); ++x) {
            row[3 * x + 0] = enc.at(x, y, 2);
            row[3 * x + 1] = enc.at(x, y, 1);
            row[3 * x + 2] = enc.at(x, y, 0);
        }
    }
    detail::write_image(path, m);
}

// ---- depth (single-channel, relative units) ---------------------------------

inline Grid load_depth(const fs::path& path) {
    const cv::Mat m = detail::read_image(path);
    if (m.channels() != 1) throw DataError("depth map must be single-channel: " + path.string());
    cv::Mat f;
    m.convertTo(f, CV_64F);
    Grid out(f.cols, f.rows, 1);
    for (int y = 0; y < f.rows; ++y) {
        const auto* row = f.ptr<double>(y);
        for (int x = 0; x < f.cols; ++x) out.at(x, y) = row[x];
    }
    return out;
}

// Written as 32-bit float; use a .pfm or .tiff extension.
inline void save_depth(const Grid& depth, const fs::path& path) {
    if (depth.channels() != 1) throw DimensionError("depth map must have one channel");
    cv::Mat m(depth.height(), depth.width(), CV_32FC1);
    for (int y = 0; y < depth.height(); ++y) {
        auto* row = m.ptr<float>(y);
        for (int x = 0; x < depth.width(); ++x) row[x] = static_cast<float>(depth.at(x, y));
    }
    detail::write_image(path, m);
}

// ---- light direction ----------------------------------------------------------

// Accepts `x y z` on one line or a JSON object with numeric x, y, z.
inline LightDirection parse_light(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) throw DataError("empty light record");
    Vec3 v;
    if (text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
            v = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed light record: ") + e.what());
        }
    } else {
        std::istringstream in{std::string(text)};
        std::string rest;
        if (!(in >> v.x >> v.y >> v.z)) throw DataError("malformed light record: expected `x y z`");
        if (in >> rest) throw DataError("malformed light record: trailing content");
    }
    return LightDirection(v);
}

inline std::string format_light(const LightDirection& l) {
    nlohmann::ordered_json j;
    j["x"] = l.x();
    j["y"] = l.y();
    j["z"] = l.z();
    return j.dump() + "\n";
}

inline LightDirection load_light(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_light(ss.str());
}

inline void save_light(const LightDirection& l, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << format_light(l);
}

// ---- dataset layout -------------------------------------------------------------

// <root>/{images,normals,cast,attached,undefined,objects,light,depth}/<name>.<ext>
struct DatasetLayout {
    fs::path root;

    fs::path image(const std::string& name) const { return root / "images" / (name + ".png"); }
    fs::path normals(const std::string& name) const { return root / "normals" / (name + ".png"); }
    fs::path cast(const std::string& name) const { return root / "cast" / (name + ".png"); }
    fs::path attached(const std::string& name) const { return root / "attached" / (name + ".png"); }
    fs::path undefined(const std::string& name) const { return root / "undefined" / (name + ".png"); }
    fs::path objects(const std::string& name) const { return root / "objects" / (name + ".png"); }
    fs::path light(const std::string& name) const { return root / "light" / (name + ".json"); }
    fs::path depth(const std::string& name) const { return root / "depth" / (name + ".pfm"); }

    void create_directories() const {
        for (const char* d : {"images", "normals", "cast", "attached", "undefined", "objects", "light", "depth"}) {
            fs::create_directories(root / d);
        }
    }
};

// Reads cast/, attached/ and (if present) undefined/ for one basename.
inline TriClassMask load_triclass(const DatasetLayout& layout, const std::string& name) {
    const BinaryMask cast = load_mask(layout.cast(name));
    const BinaryMask attached = load_mask(layout.attached(name));
    const auto undef_path = layout.undefined(name);
    const BinaryMask undefined =
        fs::exists(undef_path) ? load_mask(undef_path) : BinaryMask(cast.width(), cast.height());
    return TriClassMask::from_masks(cast, attached, undefined);
}

inline void save_triclass(const TriClassMask& m, const DatasetLayout& layout, const std::string& name) {
    save_mask(m.cast(), layout.cast(name));
    save_mask(m.attached(), layout.attached(name));
    save_mask(m.undefined(), layout.undefined(name));
}

}  // namespace shadowgeo
