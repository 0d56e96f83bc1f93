#include <gtest/gtest.h>

#include <numbers>

#include "shadowgeo/geometry.hpp"
#include "shadowgeo/oracle.hpp"
#include "support.hpp"

using namespace shadowgeo;
using testing_support::Rng;

namespace {

double degrees_between(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(dot(a, b) / (norm(a) * norm(b)), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

NormalMap random_normals(Rng& rng, int w, int h) {
    Grid g(w, h, 3);
    for (std::size_t i = 0; i < g.pixel_count(); ++i) {
        const Vec3 n = rng.unit_vector();
        g.values()[3 * i] = n.x;
        g.values()[3 * i + 1] = n.y;
        g.values()[3 * i + 2] = n.z;
    }
    return NormalMap(std::move(g));
}

}  // namespace

TEST(NormalsFromDepth, ConstantPlaneFacesCamera) {
    const auto n = normals_from_depth(DepthMap(Grid(7, 5, 1, 42.0)));
    for (std::size_t i = 0; i < n.pixel_count(); ++i) {
        EXPECT_EQ(n[i].x, 0.0);
        EXPECT_EQ(n[i].y, 0.0);
        EXPECT_EQ(n[i].z, -1.0);
    }
}

TEST(NormalsFromDepth, RampTiltsTowardIncreasingDepth) {
    // depth = x: the surface recedes to the right, so its outward normal
    // leans +x, matching the analytic sphere normal (p - c) / r.
    Grid d(6, 5, 1);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 6; ++x) d.at(x, y) = x;
    }
    const auto n = normals_from_depth(DepthMap(d));
    const double s = 1.0 / std::sqrt(2.0);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 6; ++x) {
            EXPECT_NEAR(n.at(x, y).x, s, 1e-12);
            EXPECT_NEAR(n.at(x, y).y, 0.0, 1e-12);
            EXPECT_NEAR(n.at(x, y).z, -s, 1e-12);
        }
    }
}

TEST(NormalsFromDepth, TooSmallForStencil) {
    EXPECT_THROW(normals_from_depth(DepthMap(Grid(2, 5, 1, 1.0))), DimensionError);
    EXPECT_THROW(normals_from_depth(DepthMap(Grid(4, 4, 1, 1.0)), 2), DimensionError);
    EXPECT_NO_THROW(normals_from_depth(DepthMap(Grid(5, 5, 1, 1.0)), 2));
}

TEST(NormalsFromDepth, OracleSphereWithinThreeDegrees) {
    SceneSpec spec;
    spec.width = spec.height = 128;
    spec.plane_depth = 128;
    spec.spheres = {Sphere{{64, 64, 80}, 40}};
    const auto bundle = render_scene(spec);
    const auto n = normals_from_depth(bundle.depth);
    int checked = 0;
    for (int y = 0; y < 128; ++y) {
        for (int x = 0; x < 128; ++x) {
            const double rho = std::hypot(x + 0.5 - 64, y + 0.5 - 64);
            if (rho > 40 - 2) continue;  // at least 2 px inside the silhouette
            EXPECT_LE(degrees_between(n.at(x, y), bundle.normals.at(x, y)), 3.0) << x << "," << y;
            ++checked;
        }
    }
    EXPECT_GT(checked, 4000);
}

TEST(DepthDiscontinuities, FlagsSilhouette) {
    Grid d(9, 9, 1, 100.0);
    for (int y = 3; y < 6; ++y) {
        for (int x = 3; x < 6; ++x) d.at(x, y) = 50.0;
    }
    const auto m = depth_discontinuities(DepthMap(d), 1, 5.0);
    EXPECT_TRUE(m(2, 4));
    EXPECT_TRUE(m(3, 4));
    EXPECT_FALSE(m(4, 4));
    EXPECT_FALSE(m(0, 0));
}

TEST(PartialMap, Examples) {
    const LightDirection l(0, 0, 1);
    EXPECT_FALSE(partial_attached_map(NormalMap::filled(1, 1, {0, 0, -1}), l)(0, 0));
    EXPECT_TRUE(partial_attached_map(NormalMap::filled(1, 1, {0, 0, 1}), l)(0, 0));
    // dot == 0 is not attached
    EXPECT_FALSE(partial_attached_map(NormalMap::filled(1, 1, {1, 0, 0}), l)(0, 0));
}

TEST(SoftMap, Examples) {
    const auto grazing = NormalMap::filled(1, 1, {1, 0, 0});
    for (double k : {0.1, 1.0, 25.0, 1000.0}) {
        EXPECT_EQ(soft_partial_attached_map(grazing, LightDirection(0, 0, 1), k).at(0, 0), 0.5);
    }
    const auto facing_away = NormalMap::filled(1, 1, {0, 0, 1});
    EXPECT_NEAR(soft_partial_attached_map(facing_away, LightDirection(0, 0, 1), 10.0).at(0, 0),
                1.0 / (1.0 + std::exp(-10.0)), 1e-15);
    EXPECT_THROW(soft_partial_attached_map(facing_away, LightDirection(0, 0, 1), 0.0), std::invalid_argument);
}

TEST(SoftMap, ThresholdReproducesHardMap) {
    Rng rng(8);
    const auto n = random_normals(rng, 32, 32);
    for (int t = 0; t < 20; ++t) {
        const LightDirection l(rng.unit_vector());
        for (double k : {0.5, 25.0, 1e4}) {
            const auto pm = partial_attached(n, l, k);
            for (std::size_t i = 0; i < n.pixel_count(); ++i) {
                if (dot(n[i], l.vec()) == 0.0) continue;
                ASSERT_EQ(pm.hard[i], pm.soft.values()[i] > 0.5);
            }
        }
    }
}

TEST(PartialMap, AntipodalFlipIsComplement) {
    Rng rng(12);
    const auto n = random_normals(rng, 40, 40);
    for (int t = 0; t < 20; ++t) {
        const LightDirection l(rng.unit_vector());
        const auto a = partial_attached_map(n, l);
        const auto b = partial_attached_map(n, -l);
        for (std::size_t i = 0; i < n.pixel_count(); ++i) {
            if (dot(n[i], l.vec()) == 0.0) continue;
            ASSERT_NE(a[i], b[i]);
        }
    }
}

TEST(PartialMap, RotationConsistency) {
    Rng rng(13);
    const auto n = random_normals(rng, 30, 30);
    for (int t = 0; t < 10; ++t) {
        // Random rotation from an axis-angle pair (Rodrigues).
        const Vec3 axis = rng.unit_vector();
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        auto rotate = [&](const Vec3& v) {
            return v * std::cos(angle) + cross(axis, v) * std::sin(angle) +
                   axis * (dot(axis, v) * (1.0 - std::cos(angle)));
        };
        Grid g(30, 30, 3);
        for (std::size_t i = 0; i < n.pixel_count(); ++i) {
            const Vec3 r = rotate(n[i]);
            g.values()[3 * i] = r.x;
            g.values()[3 * i + 1] = r.y;
            g.values()[3 * i + 2] = r.z;
        }
        const LightDirection l(rng.unit_vector());
        const auto a = partial_attached_map(n, l);
        const auto b = partial_attached_map(NormalMap(g), LightDirection(rotate(l.vec())));
        for (std::size_t i = 0; i < n.pixel_count(); ++i) {
            if (std::abs(dot(n[i], l.vec())) < 1e-9) continue;
            ASSERT_EQ(a[i], b[i]);
        }
    }
}

TEST(PartialMap, EqualsOracleOnSingleSphereAwayFromTerminator) {
    Rng rng(21);
    for (int t = 0; t < 10; ++t) {
        SceneSpec spec;
        spec.width = spec.height = 96;
        spec.plane_depth = 96;
        spec.spheres = {Sphere{{48, 48, 60}, 30}};
        spec.light = LightDirection(rng.unit_vector());
        const auto b = render_scene(spec);
        const auto m = partial_attached_map(b.normals, b.light);
        for (std::size_t i = 0; i < m.pixel_count(); ++i) {
            if (!b.object_mask[i] || std::abs(dot(b.normals[i], b.light.vec())) <= 0.02) continue;
            ASSERT_EQ(m[i], b.gt.attached()[i]);
        }
    }
}
