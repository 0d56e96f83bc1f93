// shadowgeo command-line tool.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shadowgeo/shadowgeo.hpp"

namespace fs = std::filesystem;
using namespace shadowgeo;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kVerification = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<int, int> parse_size(const std::string& text) {
    static const std::regex re(R"((\d+)[xX](\d+))");
    std::smatch m;
    if (!std::regex_match(text, m, re)) throw UsageError("--size must look like WxH, got '" + text + "'");
    const int w = std::stoi(m[1]);
    const int h = std::stoi(m[2]);
    if (w < 8 || h < 8) throw UsageError("--size must be at least 8x8");
    return {w, h};
}

std::string scene_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%04d", i);
    return buf;
}

void print_vec(const LightDirection& l) { std::printf("%.6f %.6f %.6f\n", l.x(), l.y(), l.z()); }

// ---- synth ------------------------------------------------------------------------

struct SynthArgs {
    int count = 20;
    std::uint64_t seed = 0;
    std::string size = "256x256";
    fs::path out;
};

int run_synth(const SynthArgs& a) {
    if (a.count < 1) throw UsageError("--count must be >= 1");
    const auto [w, h] = parse_size(a.size);
    SuiteOptions opt;
    opt.width = w;
    opt.height = h;
    const DatasetLayout layout{a.out};
    layout.create_directories();
    const auto suite = scene_suite(a.count, a.seed, opt);
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const std::string name = scene_name(static_cast<int>(i));
        const LabelBundle b = render_scene(suite[i]);
        save_image(b.image, layout.image(name));
        save_normals(b.normals, layout.normals(name));
        save_triclass(b.gt, layout, name);
        save_mask(b.object_mask, layout.objects(name));
        save_light(b.light, layout.light(name));
        save_depth(b.depth.grid(), layout.depth(name));
    }
    std::printf("wrote %d scenes (%dx%d) to %s\n", a.count, w, h, a.out.string().c_str());
    return 0;
}

// ---- partial-map ------------------------------------------------------------------

struct PartialArgs {
    fs::path normals, light, out;
    bool soft = false;
    double k = kDefaultSteepness;
};

int run_partial(const PartialArgs& a) {
    if (!(a.k > 0.0)) throw UsageError("--k must be positive");
    const NormalMap normals = load_normals(a.normals);
    const LightDirection light = load_light(a.light);
    if (a.soft) {
        save_probability(soft_partial_attached_map(normals, light, a.k), a.out);
    } else {
        save_mask(partial_attached_map(normals, light), a.out);
    }
    return 0;
}

// ---- light ------------------------------------------------------------------------

struct CentroidArgs {
    fs::path object, cast, depth;
    double depth_scale = 1.0;
};

int run_centroid(const CentroidArgs& a) {
    HeuristicLightConfig cfg;
    cfg.depth_scale = a.depth_scale;
    // Several objects: use the largest object and the largest cast region.
    const LightDirection l = heuristic_light_3d(largest_component(load_mask(a.object)),
                                                largest_component(load_mask(a.cast)),
                                                DepthMap(load_depth(a.depth)), cfg);
    print_vec(l);
    return 0;
}

struct FitArgs {
    fs::path normals, attached, region, truth;
    LightFitConfig cfg;
};

int run_fit(const FitArgs& a) {
    const NormalMap normals = load_normals(a.normals);
    const BinaryMask attached = load_mask(a.attached);
    const BinaryMask region = load_mask(a.region);
    const LightFitResult r = fit_light_from_attached(normals, attached, region, a.cfg);
    std::printf("direction %.6f %.6f %.6f\n", r.direction.x(), r.direction.y(), r.direction.z());
    std::printf("residual %.9g\n", r.residual);
    if (!a.truth.empty()) std::printf("angular_error_deg %.4f\n", angular_error(r.direction, load_light(a.truth)));
    return 0;
}

// ---- refine -----------------------------------------------------------------------

struct RefineArgs {
    fs::path image, normals, out;
    int iterations = 3;
    bool trace = false;
};

int run_refine(const RefineArgs& a) {
    if (a.iterations < 1) throw UsageError("--iters must be >= 1");
    const Grid image = load_image(a.image);
    const NormalMap normals = load_normals(a.normals);
    RefineConfig cfg;
    cfg.iterations = a.iterations;
    const RefinementTrace trace = refine_loop(image, normals, cfg);

    const std::string stem = a.image.stem().string();
    const DatasetLayout layout{a.out};
    for (const char* d : {"cast", "attached", "undefined", "light"}) fs::create_directories(a.out / d);
    const IterationRecord& last = trace.final();
    save_triclass(last.mask, layout, stem);
    if (last.light) save_light(*last.light, layout.light(stem));

    if (a.trace) {
        nlohmann::ordered_json summary;
        summary["image"] = stem;
        summary["iterations"] = trace.iterations();
        summary["records"] = nlohmann::ordered_json::array();
        for (int i = 0; i < trace.iterations(); ++i) {
            const IterationRecord& rec = trace.records[static_cast<std::size_t>(i)];
            const fs::path dir = a.out / "trace" / stem / ("iter_" + std::to_string(i + 1));
            fs::create_directories(dir);
            save_probability(rec.prior, dir / "prior.png");
            save_mask(rec.mask.cast(), dir / "cast.png");
            save_mask(rec.mask.attached(), dir / "attached.png");
            if (rec.partial_map) save_mask(*rec.partial_map, dir / "partial.png");
            nlohmann::ordered_json r;
            r["iteration"] = i + 1;
            r["fit_failed"] = rec.fit_failed;
            if (!rec.note.empty()) r["note"] = rec.note;
            if (rec.light) r["light"] = {rec.light->x(), rec.light->y(), rec.light->z()};
            r["cast_pixels"] = rec.mask.cast().count();
            r["attached_pixels"] = rec.mask.attached().count();
            summary["records"].push_back(r);
        }
        std::ofstream(a.out / "trace" / stem / "trace.json") << summary.dump(2) << "\n";
    }

    for (const auto& rec : trace.records) {
        if (rec.fit_failed) std::fprintf(stderr, "note: light fit skipped: %s\n", rec.note.c_str());
    }
    return 0;
}

// ---- eval -------------------------------------------------------------------------

struct EvalArgs {
    fs::path pred, gt, json;
    std::string aggregate = "image";
};

int run_eval(const EvalArgs& a) {
    const DatasetLayout pred{a.pred};
    const DatasetLayout gt{a.gt};
    const fs::path cast_dir = a.gt / "cast";
    if (!fs::is_directory(cast_dir)) throw DataError("ground-truth directory has no cast/: " + a.gt.string());
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(cast_dir)) {
        if (e.path().extension() == ".png") names.push_back(e.path().stem().string());
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw DataError("no ground-truth masks in " + cast_dir.string());

    std::vector<MetricsReport> reports;
    for (const auto& name : names) {
        const TriClassMask g = load_triclass(gt, name);
        const TriClassMask p = load_triclass(pred, name);
        const BinaryMask objects = load_mask(gt.objects(name));
        reports.push_back(evaluate_bundle(p, g, objects));
    }
    const SuiteReport report =
        aggregate(reports, a.aggregate == "pixel" ? Aggregation::pixel : Aggregation::image);
    std::cout << format_table(report, "baseline");
    std::cout << "images: " << names.size() << ", aggregate: " << a.aggregate << "\n";
    if (!a.json.empty()) {
        std::ofstream out(a.json);
        if (!out) throw DataError("cannot write " + a.json.string());
        out << to_json(report).dump(2) << "\n";
    }
    return 0;
}

// ---- derive-mask ------------------------------------------------------------------

struct DeriveArgs {
    fs::path shadow, shadow_free, out;
    double threshold = kDefaultFullMaskThreshold;
};

int run_derive(const DeriveArgs& a) {
    if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw UsageError("--threshold must be in [0, 1]");
    save_mask(derive_full_mask(load_image(a.shadow), load_image(a.shadow_free), a.threshold), a.out);
    return 0;
}

// ---- loss-check -------------------------------------------------------------------

int run_loss_check(std::uint64_t seed, int instances) {
    GradientCheckConfig cfg;
    cfg.instances = instances;
    bool ok = true;
    for (const auto& c : run_gradient_checks(seed, cfg)) {
        std::printf("%-7s %s  instances=%d  max_rel_error=%.3e  tol=%.0e\n", c.name.c_str(),
                    c.passed ? "PASS" : "FAIL", c.instances, c.max_relative_error, cfg.tolerance);
        ok = ok && c.passed;
    }
    return ok ? 0 : kVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shadowgeo: shadow detection with light-direction feedback"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "render a synthetic labelled dataset");
    s->add_option("--count", synth.count, "number of scenes")->required();
    s->add_option("--seed", synth.seed, "random seed")->required();
    s->add_option("--size", synth.size, "image size WxH")->required();
    s->add_option("--out", synth.out, "output dataset directory")->required();

    PartialArgs partial;
    auto* p = app.add_subcommand("partial-map", "orientation-only attached-shadow map");
    p->add_option("--normals", partial.normals)->required();
    p->add_option("--light", partial.light)->required();
    p->add_option("--out", partial.out)->required();
    p->add_flag("--soft", partial.soft, "write sigmoid(k n.l) as 8-bit probability");
    p->add_option("--k", partial.k, "steepness for --soft");

    auto* light = app.add_subcommand("light", "light-direction estimation");
    light->require_subcommand(1);
    CentroidArgs centroid;
    auto* lc = light->add_subcommand("centroid", "object-to-shadow centroid heuristic; prints x y z");
    lc->add_option("--object", centroid.object)->required();
    lc->add_option("--cast", centroid.cast)->required();
    lc->add_option("--depth", centroid.depth)->required();
    lc->add_option("--depth-scale", centroid.depth_scale, "depth units per pixel");
    FitArgs fit;
    auto* lf = light->add_subcommand("fit", "fit the light to an attached-shadow mask");
    lf->add_option("--normals", fit.normals)->required();
    lf->add_option("--attached", fit.attached)->required();
    lf->add_option("--region", fit.region)->required();
    lf->add_option("--samples", fit.cfg.coarse_samples, "coarse lattice size");
    lf->add_option("--refine", fit.cfg.refine_steps, "refinement steps");
    lf->add_option("--k", fit.cfg.steepness, "soft-map steepness");
    lf->add_option("--truth", fit.truth, "true light, for angular error");

    RefineArgs refine;
    auto* r = app.add_subcommand("refine", "iterative detection with light feedback");
    r->add_option("--image", refine.image)->required();
    r->add_option("--normals", refine.normals)->required();
    r->add_option("--iters", refine.iterations)->required();
    r->add_option("--out", refine.out)->required();
    r->add_flag("--trace", refine.trace, "write every iteration");

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "BER / F1 report for a prediction directory");
    e->add_option("--pred", eval.pred)->required();
    e->add_option("--gt", eval.gt)->required();
    e->add_option("--aggregate", eval.aggregate)->check(CLI::IsMember({"image", "pixel"}));
    e->add_option("--json", eval.json, "also write the report as JSON");

    DeriveArgs derive;
    auto* d = app.add_subcommand("derive-mask", "full-shadow mask from a shadow / shadow-free pair");
    d->add_option("--shadow", derive.shadow)->required();
    d->add_option("--shadow-free", derive.shadow_free)->required();
    d->add_option("--threshold", derive.threshold)->required();
    d->add_option("--out", derive.out)->required();

    std::uint64_t check_seed = 0;
    int check_instances = 100;
    auto* lcheck = app.add_subcommand("loss-check", "finite-difference check of the loss gradients");
    lcheck->add_option("--seed", check_seed)->required();
    lcheck->add_option("--instances", check_instances);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (*s) return run_synth(synth);
        if (*p) return run_partial(partial);
        if (*lc) return run_centroid(centroid);
        if (*lf) return run_fit(fit);
        if (*r) return run_refine(refine);
        if (*e) return run_eval(eval);
        if (*d) return run_derive(derive);
        if (*lcheck) return run_loss_check(check_seed, check_instances);
    } catch (const UsageError& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return kUsage;
    } catch (const std::invalid_argument& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return kUsage;
    } catch (const Error& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kData;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kData;
    }
    return kUsage;
}
