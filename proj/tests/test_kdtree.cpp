#include <catch2/catch_amalgamated.hpp>

#include "meshreg/kdtree.hpp"
#include "meshreg/rng.hpp"

#include "oracles.hpp"

using namespace meshreg;
using Catch::Approx;

TEST_CASE("single point cloud: the point is its own neighbor") {
    PointCloud cloud;
    cloud.points.emplace_back(1, 2, 3);
    const NeighborIndex index(cloud);
    const auto hits = index.knn(Vec3(1, 2, 3), 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].index == 0);
    CHECK(hits[0].distance == 0.0);
}

TEST_CASE("cube corners: nearest corner from the center") {
    PointCloud cloud;
    for (int i = 0; i < 8; ++i)
        cloud.points.emplace_back((i & 1) ? 1.0 : 0.0, (i & 2) ? 1.0 : 0.0, (i & 4) ? 1.0 : 0.0);
    const NeighborIndex index(cloud);
    const auto hits = index.knn(Vec3(0.5, 0.5, 0.5), 1);
    // All corners are equidistant; index tie-break selects corner 0.
    CHECK(hits[0].index == 0);
    CHECK(hits[0].distance == Approx(std::sqrt(3.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("collinear points, query between them") {
    PointCloud cloud;
    cloud.points.emplace_back(0, 0, 0);
    cloud.points.emplace_back(1, 0, 0);
    cloud.points.emplace_back(2, 0, 0);
    const NeighborIndex index(cloud);
    const auto hits = index.knn(Vec3(0.9, 0, 0), 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].index == 1);
    CHECK(hits[0].distance == Approx(0.1).margin(1e-15));
    CHECK(hits[1].index == 0);
    CHECK(hits[1].distance == Approx(0.9).margin(1e-15));
}

TEST_CASE("coincident query returns the point first at distance zero") {
    Rng rng(5);
    const PointCloud cloud = testing_oracles::random_cloud(rng, 200);
    const NeighborIndex index(cloud);
    const auto hits = index.knn(cloud.points[57], 3);
    CHECK(hits[0].index == 57);
    CHECK(hits[0].distance == 0.0);
}

TEST_CASE("knn matches brute force on random clouds") {
    Rng rng(101);
    for (int trial = 0; trial < 4; ++trial) {
        const std::size_t n = 200 + 300 * trial;
        const PointCloud cloud = testing_oracles::random_cloud(rng, n);
        const NeighborIndex index(cloud);
        for (int q = 0; q < 50; ++q) {
            const Vec3 query = rng.normal_vec3(0.8);
            const std::size_t k = 1 + rng.index(20);
            const auto fast = index.knn(query, k);
            const auto slow = testing_oracles::brute_knn(cloud.points, query, k);
            REQUIRE(fast.size() == slow.size());
            for (std::size_t i = 0; i < fast.size(); ++i) {
                CHECK(fast[i].index == slow[i].index);
                CHECK(fast[i].distance == Approx(slow[i].distance).margin(1e-12));
            }
        }
    }
}

TEST_CASE("radius_search: tiny radius isolates the query point") {
    PointCloud cloud;
    for (int i = 0; i < 5; ++i) cloud.points.emplace_back(static_cast<double>(i), 0, 0);
    const NeighborIndex index(cloud);
    const auto hits = index.radius_search(Vec3(2, 0, 0), 0.5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].index == 2);
}

TEST_CASE("radius_search: unit grid interior node has six axis neighbors") {
    PointCloud cloud;
    for (int x = 0; x < 5; ++x)
        for (int y = 0; y < 5; ++y)
            for (int z = 0; z < 5; ++z) cloud.points.emplace_back(x, y, z);
    const NeighborIndex index(cloud);
    const auto hits = index.radius_search(Vec3(2, 2, 2), 1.05);
    CHECK(hits.size() == 7);  // itself + 6 face neighbors
    CHECK(hits[0].distance == 0.0);
    for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i].distance == Approx(1.0));
}

TEST_CASE("radius_search matches brute force on random clouds") {
    Rng rng(77);
    const PointCloud cloud = testing_oracles::random_cloud(rng, 800);
    const NeighborIndex index(cloud);
    for (int q = 0; q < 60; ++q) {
        const Vec3 query = rng.normal_vec3(0.7);
        const double radius = rng.uniform(0.05, 1.2);
        const auto fast = index.radius_search(query, radius);
        const auto slow = testing_oracles::brute_radius(cloud.points, query, radius);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast[i].index == slow[i].index);
            CHECK(fast[i].distance == Approx(slow[i].distance).margin(1e-12));
        }
    }
}

TEST_CASE("duplicate points tie-break by index") {
    PointCloud cloud;
    for (int i = 0; i < 6; ++i) cloud.points.emplace_back(1, 1, 1);
    cloud.points.emplace_back(2, 1, 1);
    const NeighborIndex index(cloud);
    const auto hits = index.knn(Vec3(1, 1, 1), 6);
    for (std::uint32_t i = 0; i < 6; ++i) {
        CHECK(hits[i].index == i);
        CHECK(hits[i].distance == 0.0);
    }
}

TEST_CASE("query argument validation") {
    PointCloud cloud;
    cloud.points.emplace_back(0, 0, 0);
    const NeighborIndex index(cloud);
    CHECK_THROWS_AS(index.knn(Vec3(0, 0, 0), 2), std::invalid_argument);
    CHECK_THROWS_AS(index.knn(Vec3(0, 0, 0), 0), std::invalid_argument);
    CHECK_THROWS_AS(index.radius_search(Vec3(0, 0, 0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(NeighborIndex(PointCloud{}), std::invalid_argument);
}
