#pragma once

// Confusion counts and shadow-detection metrics.
//
//   precision = TP / (TP + FP)       recall = TP / (TP + FN)
//   F1        = 2 P R / (P + R)
//   BER       = 100 * (1 - (TP/(TP+FN) + TN/(TN+FP)) / 2)
//
// Degenerate denominators: an empty positive (negative) class scores its
// rate as 1; precision with TP + FP = 0 is 0, and F1 is then 0.
//
// Protocol per image: full shadow = union of cast, attached and undefined
// over all pixels; cast excludes the undefined region; attached is restricted
// to the object mask.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shadowgeo/raster.hpp"

namespace shadowgeo {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        tn += o.tn;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

inline ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& eval_mask) {
    require_same_size(pred, gt, "confusion");
    require_same_size(pred, eval_mask, "confusion");
    ConfusionCounts c;
    const auto p = pred.grid().values();
    const auto g = gt.grid().values();
    const auto e = eval_mask.grid().values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!e[i]) continue;
        // 2*gt + pred: 0 tn, 1 fp, 2 fn, 3 tp
        switch (2 * g[i] + p[i]) {
            case 0: ++c.tn; break;
            case 1: ++c.fp; break;
            case 2: ++c.fn; break;
            default: ++c.tp; break;
        }
    }
    if (c.total() == 0) throw DegenerateInput("evaluation mask selects no pixels");
    return c;
}

inline double precision(const ConfusionCounts& c) {
    const auto d = c.tp + c.fp;
    return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

inline double recall(const ConfusionCounts& c) {
    const auto d = c.tp + c.fn;
    return d == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

inline double true_negative_rate(const ConfusionCounts& c) {
    const auto d = c.tn + c.fp;
    return d == 0 ? 1.0 : static_cast<double>(c.tn) / static_cast<double>(d);
}

inline double f1_score(const ConfusionCounts& c) {
    const double p = precision(c);
    const double r = recall(c);
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

inline double ber(const ConfusionCounts& c) {
    return 100.0 * (1.0 - 0.5 * (recall(c) + true_negative_rate(c)));
}

struct CategoryMetrics {
    ConfusionCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double ber = 0.0;
};

inline CategoryMetrics metrics_from(const ConfusionCounts& c) {
    return {c, precision(c), recall(c), f1_score(c), ber(c)};
}

struct MetricsReport {
    CategoryMetrics full;
    std::optional<CategoryMetrics> cast;      // absent when everything is undefined
    std::optional<CategoryMetrics> attached;  // absent when the object mask is empty
};

inline MetricsReport evaluate_bundle(const TriClassMask& pred, const TriClassMask& gt, const BinaryMask& object_mask) {
    require_same_size(pred, gt, "evaluate_bundle");
    require_same_size(pred, object_mask, "evaluate_bundle");
    MetricsReport r;
    const BinaryMask everything(gt.width(), gt.height(), true);
    r.full = metrics_from(confusion(pred.union_mask(), gt.union_mask(), everything));
    const BinaryMask defined = gt.undefined().complement();
    if (defined.any()) r.cast = metrics_from(confusion(pred.cast(), gt.cast(), defined));
    if (object_mask.any()) r.attached = metrics_from(confusion(pred.attached(), gt.attached(), object_mask));
    return r;
}

// ---- suite aggregation ------------------------------------------------------------

enum class Aggregation { image, pixel };

struct AggregateMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double ber = 0.0;
    std::size_t images = 0;
    ConfusionCounts pooled;
};

struct SuiteReport {
    Aggregation mode = Aggregation::image;
    std::optional<AggregateMetrics> full;
    std::optional<AggregateMetrics> cast;
    std::optional<AggregateMetrics> attached;
};

namespace detail {

inline std::optional<AggregateMetrics> aggregate_category(std::span<const std::optional<CategoryMetrics>> items,
                                                          Aggregation mode) {
    AggregateMetrics a;
    for (const auto& m : items) {
        if (!m) continue;
        ++a.images;
        a.pooled += m->counts;
        a.precision += m->precision;
        a.recall += m->recall;
        a.f1 += m->f1;
        a.ber += m->ber;
    }
    if (a.images == 0) return std::nullopt;
    if (mode == Aggregation::image) {
        const double n = static_cast<double>(a.images);
        a.precision /= n;
        a.recall /= n;
        a.f1 /= n;
        a.ber /= n;
    } else {
        const auto pooled = metrics_from(a.pooled);
        a.precision = pooled.precision;
        a.recall = pooled.recall;
        a.f1 = pooled.f1;
        a.ber = pooled.ber;
    }
    return a;
}

}  // namespace detail

// Image mode: equal-weight mean of per-image metrics. Pixel mode: metrics of
// the pooled confusion counts.
inline SuiteReport aggregate(std::span<const MetricsReport> reports, Aggregation mode = Aggregation::image) {
    std::vector<std::optional<CategoryMetrics>> full, cast, attached;
    for (const auto& r : reports) {
        full.emplace_back(r.full);
        cast.push_back(r.cast);
        attached.push_back(r.attached);
    }
    return {mode, detail::aggregate_category(full, mode), detail::aggregate_category(cast, mode),
            detail::aggregate_category(attached, mode)};
}

inline nlohmann::ordered_json to_json(const SuiteReport& report) {
    nlohmann::ordered_json j;
    j["aggregate"] = report.mode == Aggregation::image ? "image" : "pixel";
    j["conventions"] = {
        {"ber", "100 * (1 - (TP/(TP+FN) + TN/(TN+FP)) / 2)"},
        {"empty_positive_class", "recall term = 1"},
        {"empty_negative_class", "true-negative term = 1"},
        {"no_predicted_positives", "precision = 0, f1 = 0"},
        {"cast_mask", "undefined shadow pixels excluded"},
        {"attached_mask", "object pixels only"},
    };
    auto category = [](const std::optional<AggregateMetrics>& m) {
        nlohmann::ordered_json c;
        if (!m) return nlohmann::ordered_json(nullptr);
        c["ber"] = m->ber;
        c["f1"] = m->f1;
        c["precision"] = m->precision;
        c["recall"] = m->recall;
        c["images"] = m->images;
        c["counts"] = {{"tp", m->pooled.tp}, {"tn", m->pooled.tn}, {"fp", m->pooled.fp}, {"fn", m->pooled.fn}};
        return c;
    };
    j["full"] = category(report.full);
    j["cast"] = category(report.cast);
    j["attached"] = category(report.attached);
    return j;
}

// BER (lower is better) and F1 in percent for Full / Cast / Attached.
inline std::string format_table(const SuiteReport& report, const std::string& label = "baseline") {
    std::ostringstream out;
    auto cell = [&](const std::optional<AggregateMetrics>& m) {
        if (!m) {
            out << " | " << std::setw(7) << "-" << " " << std::setw(7) << "-";
            return;
        }
        out << " | " << std::setw(7) << std::fixed << std::setprecision(2) << m->ber << " " << std::setw(7)
            << m->f1 * 100.0;
    };
    const int name_width = std::max<int>(10, static_cast<int>(label.size()));
    out << std::left << std::setw(name_width) << "Method" << std::right << " | " << std::setw(15) << "Full"
        << " | " << std::setw(15) << "Cast" << " | " << std::setw(15) << "Attached" << "\n";
    out << std::left << std::setw(name_width) << "" << std::right;
    for (int i = 0; i < 3; ++i) out << " | " << std::setw(7) << "BER" << " " << std::setw(7) << "F1";
    out << "\n" << std::string(static_cast<std::size_t>(name_width) + 3 * 18, '-') << "\n";
    out << std::left << std::setw(name_width) << label << std::right;
    cell(report.full);
    cell(report.cast);
    cell(report.attached);
    out << "\n";
    return out.str();
}

}  // namespace shadowgeo
