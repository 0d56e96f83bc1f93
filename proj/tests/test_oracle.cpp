#include <gtest/gtest.h>

#include "shadowgeo/geometry.hpp"
#include "shadowgeo/oracle.hpp"
#include "support.hpp"

using namespace shadowgeo;

namespace {

SceneSpec single(const LightDirection& l) {
    SceneSpec spec;
    spec.width = spec.height = 96;
    spec.plane_depth = 96;
    spec.spheres = {Sphere{{48, 48, 66}, 30}};
    spec.light = l;
    return spec;
}

bool same_spec(const SceneSpec& a, const SceneSpec& b) {
    if (a.spheres.size() != b.spheres.size() || !(a.light == b.light) || a.seed != b.seed) return false;
    for (std::size_t i = 0; i < a.spheres.size(); ++i) {
        if (a.spheres[i].radius != b.spheres[i].radius || a.spheres[i].center.x != b.spheres[i].center.x ||
            a.spheres[i].center.y != b.spheres[i].center.y || a.spheres[i].center.z != b.spheres[i].center.z) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST(Raycast, Examples) {
    const std::vector<Sphere> s{Sphere{{0, 0, 0}, 1}};
    const LightDirection l(0, 0, 1);
    EXPECT_TRUE(raycast_blocked({0, 0, 5}, l, s));
    EXPECT_FALSE(raycast_blocked({0, 0, 5}, l, {}));
    EXPECT_FALSE(raycast_blocked({0, 0, -5}, l, s));
    // Tangent: the ray x = 1 grazes the sphere.
    EXPECT_TRUE(raycast_blocked({1, 0, 5}, l, s));
    EXPECT_FALSE(raycast_blocked({1.0001, 0, 5}, l, s));
}

TEST(RenderScene, HeadOnLight) {
    const auto b = render_scene(single(LightDirection(0, 0, 1)));
    EXPECT_FALSE(b.gt.attached().any());
    // The footprint is hidden behind the sphere itself, so no cast is visible.
    EXPECT_FALSE(b.gt.cast().any());
    EXPECT_TRUE(raycast_blocked({48, 48, 96}, b.light, single(b.light).spheres));
}

TEST(RenderScene, SideLightQuarter) {
    const auto b = render_scene(single(LightDirection(1, 0, 0)));
    for (std::size_t i = 0; i < b.gt.pixel_count(); ++i) {
        if (!b.object_mask[i]) continue;
        EXPECT_EQ(b.gt.attached()[i], b.normals[i].x >= 0.0) << i;
    }
}

TEST(RenderScene, MutualBlockingMakesPartialMapAStrictSubset) {
    SceneSpec spec;
    spec.width = spec.height = 128;
    spec.plane_depth = 128;
    spec.light = LightDirection(0.4, 0.0, 0.6);
    const Sphere big{{64, 64, 98}, 30};
    const Vec3 toward = -spec.light.vec();
    spec.spheres = {big, Sphere{big.center + toward * 48.0, 12}};
    const auto b = render_scene(spec);
    const auto geo = partial_attached_map(b.normals, b.light);
    std::size_t extra = 0;
    for (std::size_t i = 0; i < b.gt.pixel_count(); ++i) {
        if (!b.object_mask[i]) continue;
        if (geo[i]) {
            EXPECT_TRUE(b.gt.attached()[i]);
        }
        // Blocked pixels that face the light: attached in GT, missed by the map.
        if (b.gt.attached()[i] && !geo[i]) {
            ++extra;
            const int x = static_cast<int>(i % 128);
            const int y = static_cast<int>(i / 128);
            const auto hit = detail::trace_pixel(spec, x, y);
            EXPECT_TRUE(raycast_blocked(hit.point, spec.light, detail::all_but(spec.spheres, hit.sphere)));
        }
    }
    EXPECT_GT(extra, 20u);
}

TEST(RenderScene, Invariants) {
    for (const auto& spec : scene_suite(8, 3)) {
        const auto b = render_scene(spec);
        const auto att = b.gt.attached();
        const auto cast = b.gt.cast();
        const auto geo = partial_attached_map(b.normals, b.light);
        double lit_plane = -1.0;
        for (std::size_t i = 0; i < b.gt.pixel_count(); ++i) {
            EXPECT_FALSE(att[i] && !b.object_mask[i]);
            EXPECT_FALSE(cast[i] && b.object_mask[i]);
            if (b.object_mask[i] && geo[i]) {
                EXPECT_TRUE(att[i]);
            }
            if (!b.object_mask[i] && !cast[i]) {
                const double v = b.image.values()[3 * i];
                if (lit_plane < 0) lit_plane = v;
                EXPECT_EQ(v, lit_plane);
            }
        }
        EXPECT_FALSE(b.gt.undefined().any());
        if (spec.spheres.size() == 1) {
            EXPECT_EQ(mask_and(geo, b.object_mask), att);
        }
    }
}

TEST(RenderScene, ShadedPixelsGetAmbientOnly) {
    const auto spec = single(LightDirection(0.5, 0.2, 0.7));
    const auto b = render_scene(spec);
    const auto u = b.gt.union_mask();
    for (std::size_t i = 0; i < u.pixel_count(); ++i) {
        if (u[i]) {
            EXPECT_DOUBLE_EQ(b.image.values()[3 * i], spec.ambient);
        } else {
            EXPECT_GE(b.image.values()[3 * i], spec.ambient);
        }
    }
}

TEST(SceneSpec, Validation) {
    SceneSpec spec = single(LightDirection(0, 0, 1));
    spec.width = 0;
    EXPECT_THROW(render_scene(spec), DegenerateInput);
    spec = single(LightDirection(0, 0, 1));
    spec.spheres[0].center.z = 90;
    EXPECT_THROW(render_scene(spec), DataError);
    spec.spheres[0] = Sphere{{48, 48, 50}, 0};
    EXPECT_THROW(render_scene(spec), DataError);
}

TEST(SceneSuite, DeterministicAndValid) {
    const auto a = scene_suite(20, 7);
    const auto b = scene_suite(20, 7);
    ASSERT_EQ(a.size(), 20u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(same_spec(a[i], b[i]));
        EXPECT_GE(a[i].spheres.size(), 1u);
        EXPECT_LE(a[i].spheres.size(), 3u);
        EXPECT_GT(a[i].light.z(), 0.1);
        for (const auto& s : a[i].spheres) {
            EXPECT_GE(s.radius, 0.10 * 256);
            EXPECT_LE(s.radius, 0.25 * 256);
            EXPECT_LE(s.center.z + s.radius, a[i].plane_depth);
        }
        const auto bundle = render_scene(a[i]);
        EXPECT_TRUE(bundle.object_mask.any());
        EXPECT_TRUE(bundle.gt.cast().any());
    }
    EXPECT_FALSE(same_spec(a[0], scene_suite(1, 8)[0]));
}

TEST(SceneSuite, BackLightOption) {
    SuiteOptions opt;
    opt.width = opt.height = 64;
    opt.back_light_fraction = 1.0;
    for (const auto& spec : scene_suite(5, 1, opt)) {
        EXPECT_LT(spec.light.z(), 0.0);
        EXPECT_FALSE(render_scene(spec).gt.cast().any());
    }
}

TEST(OcclusionSuite, AttachedExceedsPartialMap) {
    for (const auto& spec : occlusion_suite(3, 5)) {
        const auto b = render_scene(spec);
        const auto geo = mask_and(partial_attached_map(b.normals, b.light), b.object_mask);
        EXPECT_GT(b.gt.attached().count(), geo.count());
    }
}

TEST(RenderDepth, MatchesSceneDepth) {
    const auto spec = single(LightDirection(0.2, 0.3, 0.9));
    EXPECT_EQ(render_depth(spec).grid(), render_scene(spec).depth.grid());
}
