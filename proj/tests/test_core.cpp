#include <catch2/catch_amalgamated.hpp>

#include "meshreg/core.hpp"
#include "meshreg/normals.hpp"
#include "meshreg/rng.hpp"

#include "oracles.hpp"

using namespace meshreg;
using Catch::Approx;

namespace {

PointCloud unit_cube_corners() {
    PointCloud cloud;
    for (int i = 0; i < 8; ++i)
        cloud.points.emplace_back((i & 1) ? 1.0 : 0.0, (i & 2) ? 1.0 : 0.0, (i & 4) ? 1.0 : 0.0);
    return cloud;
}

}  // namespace

TEST_CASE("bbox_diagonal basics") {
    CHECK(bbox_diagonal(unit_cube_corners()) == Approx(std::sqrt(3.0)).epsilon(1e-15));

    PointCloud single;
    single.points.emplace_back(2, 3, 4);
    CHECK(bbox_diagonal(single) == 0.0);

    PointCloud two;
    two.points.emplace_back(0, 0, 0);
    two.points.emplace_back(3, 4, 0);
    CHECK(bbox_diagonal(two) == Approx(5.0).epsilon(1e-15));

    CHECK_THROWS_AS(bbox_diagonal(PointCloud{}), std::invalid_argument);
}

TEST_CASE("apply_transform identity and scaling") {
    PointCloud cube = unit_cube_corners();

    const PointCloud same = apply_transform(cube, RigidScaleTransform::identity());
    for (std::size_t i = 0; i < cube.size(); ++i)
        CHECK((same.points[i] - cube.points[i]).norm() <= 1e-15);

    RigidScaleTransform doubled;
    doubled.scale = 2.0;
    CHECK(bbox_diagonal(apply_transform(cube, doubled)) ==
          Approx(2.0 * bbox_diagonal(cube)).epsilon(1e-14));
}

TEST_CASE("apply_transform round trip through the inverse") {
    Rng rng(42);
    RigidScaleTransform t;
    t.scale = 1.7;
    t.rotation = rng.rotation();
    t.translation = Vec3(0.3, -0.2, 0.9);

    const PointCloud cloud = testing_oracles::random_cloud(rng, 50);
    const PointCloud back = apply_transform(apply_transform(cloud, t), inverse(t));
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK((back.points[i] - cloud.points[i]).norm() < 1e-9);
}

TEST_CASE("apply_transform preserves pairwise distances up to scale") {
    Rng rng(11);
    RigidScaleTransform t;
    t.scale = 0.37;
    t.rotation = rng.rotation();
    t.translation = Vec3(1, 2, 3);

    const PointCloud cloud = testing_oracles::random_cloud(rng, 40);
    const PointCloud moved = apply_transform(cloud, t);
    for (std::size_t i = 1; i < cloud.size(); ++i) {
        const double before = (cloud.points[i] - cloud.points[0]).norm();
        const double after = (moved.points[i] - moved.points[0]).norm();
        CHECK(after == Approx(t.scale * before).epsilon(1e-9));
    }
}

TEST_CASE("compose: identity, translations, pointwise equivalence") {
    Rng rng(3);
    RigidScaleTransform t;
    t.scale = 1.2;
    t.rotation = rng.rotation();
    t.translation = Vec3(0.5, 0, -1);

    const RigidScaleTransform via_identity = compose(RigidScaleTransform::identity(), t);
    CHECK((via_identity.rotation - t.rotation).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((via_identity.translation - t.translation).norm() <= 1e-15);
    CHECK(via_identity.scale == Approx(t.scale).epsilon(1e-15));

    RigidScaleTransform shift_a, shift_b;
    shift_a.translation = Vec3(1, 2, 3);
    shift_b.translation = Vec3(-4, 0, 2);
    const RigidScaleTransform sum = compose(shift_a, shift_b);
    CHECK((sum.translation - Vec3(-3, 2, 5)).norm() <= 1e-15);

    for (int trial = 0; trial < 10; ++trial) {
        RigidScaleTransform t1, t2;
        t1.scale = rng.uniform(0.5, 2.0);
        t1.rotation = rng.rotation();
        t1.translation = rng.normal_vec3(1.0);
        t2.scale = rng.uniform(0.5, 2.0);
        t2.rotation = rng.rotation();
        t2.translation = rng.normal_vec3(1.0);
        const RigidScaleTransform both = compose(t1, t2);
        for (int i = 0; i < 10; ++i) {
            const Vec3 p = rng.normal_vec3(1.0);
            CHECK((both.apply(p) - t1.apply(t2.apply(p))).norm() < 1e-12);
        }
    }
}

TEST_CASE("rigid transform validity invariants") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        RigidScaleTransform t;
        t.scale = rng.uniform(0.1, 5.0);
        t.rotation = rng.rotation();
        t.translation = rng.normal_vec3(2.0);
        CHECK(t.valid());
    }
    RigidScaleTransform bad;
    bad.rotation(0, 0) = -1.0;  // reflection
    CHECK_FALSE(bad.valid());
}

TEST_CASE("voxel_downsample merges points to centroids deterministically") {
    PointCloud cloud;
    cloud.points.emplace_back(0.001, 0.001, 0.001);
    cloud.points.emplace_back(0.002, 0.002, 0.002);
    cloud.points.emplace_back(0.102, 0.001, 0.001);

    const PointCloud down = voxel_downsample(cloud, 0.01);
    REQUIRE(down.size() == 2);
    CHECK((down.points[0] - Vec3(0.0015, 0.0015, 0.0015)).norm() < 1e-12);

    Rng rng(9);
    const PointCloud big = testing_oracles::random_cloud(rng, 2000, 0.2);
    const PointCloud a = voxel_downsample(big, 0.05);
    const PointCloud b = voxel_downsample(big, 0.05);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.points[i] == b.points[i]);
}

TEST_CASE("estimate_normals recovers a plane") {
    PointCloud plane;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) plane.points.emplace_back(0.1 * i, 0.1 * j, 0.0);

    const NormalEstimate est = estimate_normals(plane, 8, Vec3(0, 0, 1));
    for (std::size_t i = 0; i < est.cloud.size(); ++i) {
        CHECK(est.low_confidence[i] == 0);
        CHECK((est.cloud.normals[i] - Vec3(0, 0, 1)).norm() < 1e-6);
    }
}

TEST_CASE("estimate_normals on a sphere points radially on the visible side") {
    PointCloud sphere;
    Rng rng(17);
    for (int i = 0; i < 4000; ++i) sphere.points.push_back(rng.unit_vector());

    const Vec3 viewpoint(0, 0, 10);
    const NormalEstimate est = estimate_normals(sphere, 30, viewpoint);
    double worst = 0.0;
    for (std::size_t i = 0; i < est.cloud.size(); ++i) {
        if (sphere.points[i].z() < 0.5) continue;  // clearly visible cap only
        const double angle =
            std::acos(std::clamp(est.cloud.normals[i].dot(sphere.points[i]), -1.0, 1.0));
        worst = std::max(worst, angle);
    }
    CHECK(worst < 5.0 * std::numbers::pi / 180.0);
}

TEST_CASE("estimate_normals flags rank-deficient neighborhoods") {
    PointCloud line;
    for (int i = 0; i < 10; ++i) line.points.emplace_back(0.1 * i, 0, 0);

    const NormalEstimate est = estimate_normals(line, line.size(), Vec3(0, 0, 1));
    for (std::size_t i = 0; i < est.cloud.size(); ++i) {
        CHECK(est.low_confidence[i] == 1);
        CHECK(est.cloud.normals[i].norm() == Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("estimate_normals output is unit length and viewpoint oriented") {
    Rng rng(23);
    const PointCloud cloud = testing_oracles::random_cloud(rng, 500, 0.5);
    const Vec3 viewpoint(0, 0, 5);
    const NormalEstimate est = estimate_normals(cloud, 12, viewpoint);
    for (std::size_t i = 0; i < est.cloud.size(); ++i) {
        CHECK(est.cloud.normals[i].norm() == Approx(1.0).epsilon(1e-6));
        if (!est.low_confidence[i])
            CHECK(est.cloud.normals[i].dot(viewpoint - cloud.points[i]) >= 0.0);
    }
    CHECK_THROWS_AS(estimate_normals(cloud, 2, viewpoint), std::invalid_argument);
}
