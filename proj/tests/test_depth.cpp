#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "meshreg/depth.hpp"
#include "meshreg/rng.hpp"

using namespace meshreg;
using Catch::Approx;

namespace {

DepthImage constant_image(int w, int h, double value) {
    DepthImage img(w, h);
    std::fill(img.values.begin(), img.values.end(), value);
    return img;
}

double masked_median(const DepthImage& img, const BinaryMask& mask, const DepthImage& other) {
    std::vector<double> vals;
    for (int v = 0; v < img.height; ++v)
        for (int u = 0; u < img.width; ++u)
            if (mask.at(u, v) && img.at(u, v) > 0 && other.at(u, v) > 0)
                vals.push_back(img.at(u, v));
    std::sort(vals.begin(), vals.end());
    return vals[(vals.size() - 1) / 2];
}

}  // namespace

TEST_CASE("median scale: textbook ratio") {
    DepthImage sensor = constant_image(4, 4, 0.8);
    DepthImage pred = constant_image(4, 4, 1.6);
    pred.at(1, 1) = 2.0;
    sensor.at(1, 1) = 0.8;
    const BinaryMask mask(4, 4, true);

    const ScaleAlignResult out = median_scale_align(sensor, pred, mask);
    CHECK(out.scale == Approx(0.5).epsilon(1e-15));
    CHECK(out.metric.at(1, 1) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("median scale: identical rasters give unit scale") {
    Rng rng(3);
    DepthImage sensor(8, 6);
    for (auto& v : sensor.values) v = rng.uniform(0.2, 3.0);
    const BinaryMask mask(8, 6, true);

    const ScaleAlignResult out = median_scale_align(sensor, sensor, mask);
    CHECK(out.scale == 1.0);
    for (std::size_t i = 0; i < sensor.values.size(); ++i)
        CHECK(out.metric.values[i] == sensor.values[i]);
}

TEST_CASE("median scale shrugs off a depth spike") {
    DepthImage sensor(3, 1), pred(3, 1);
    sensor.values = {0.4, 0.5, 10.0};  // one outlier
    pred.values = {1.0, 1.0, 1.0};
    const BinaryMask mask(3, 1, true);

    const ScaleAlignResult spiked = median_scale_align(sensor, pred, mask);
    CHECK(spiked.scale == Approx(0.5).epsilon(1e-15));

    // Replacing the spike by the in-mask median must not change s.
    DepthImage repaired = sensor;
    repaired.values[2] = 0.5;
    const ScaleAlignResult clean = median_scale_align(repaired, pred, mask);
    CHECK(clean.scale == spiked.scale);
}

TEST_CASE("median scale error paths") {
    DepthImage sensor = constant_image(2, 2, 1.0);
    DepthImage pred = constant_image(2, 2, 0.0);  // prediction entirely invalid
    const BinaryMask mask(2, 2, true);
    CHECK_THROWS_WITH(median_scale_align(sensor, pred, mask),
                      Catch::Matchers::ContainsSubstring("no overlap"));

    const BinaryMask empty_mask(2, 2, false);
    CHECK_THROWS_AS(median_scale_align(sensor, sensor, empty_mask), std::runtime_error);

    DepthImage mismatched = constant_image(3, 2, 1.0);
    CHECK_THROWS_AS(median_scale_align(sensor, mismatched, mask), std::invalid_argument);
}

TEST_CASE("median scale invariants on random rasters") {
    Rng rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        const int w = 4 + static_cast<int>(rng.index(12));
        const int h = 4 + static_cast<int>(rng.index(12));
        DepthImage sensor(w, h), pred(w, h);
        BinaryMask mask(w, h);
        for (int v = 0; v < h; ++v)
            for (int u = 0; u < w; ++u) {
                sensor.at(u, v) = rng.uniform() < 0.85 ? rng.uniform(0.3, 4.0) : 0.0;
                pred.at(u, v) = rng.uniform() < 0.85 ? rng.uniform(0.1, 2.5) : 0.0;
                mask.set(u, v, rng.uniform() < 0.6);
            }
        bool overlap = false;
        for (int v = 0; v < h && !overlap; ++v)
            for (int u = 0; u < w && !overlap; ++u)
                overlap = mask.at(u, v) && sensor.at(u, v) > 0 && pred.at(u, v) > 0;
        if (!overlap) continue;

        const ScaleAlignResult base = median_scale_align(sensor, pred, mask);

        // Scale equivariance: c * pred gives s / c and the same metric raster.
        const double c = rng.uniform(0.2, 5.0);
        DepthImage scaled = pred;
        for (auto& v : scaled.values) v *= c;
        const ScaleAlignResult scaled_out = median_scale_align(sensor, scaled, mask);
        CHECK(scaled_out.scale == Approx(base.scale / c).epsilon(1e-12));
        for (std::size_t i = 0; i < base.metric.values.size(); ++i)
            CHECK(scaled_out.metric.values[i] == Approx(base.metric.values[i]).margin(1e-12));

        // Median preservation over the jointly valid in-mask set.
        CHECK(masked_median(base.metric, mask, sensor) ==
              Approx(masked_median(sensor, mask, pred)).epsilon(1e-12));
    }
}

TEST_CASE("backproject pinhole rays") {
    CameraIntrinsics intr{100.0, 100.0, 64.0, 48.0, 128, 96};
    DepthImage depth(128, 96);
    BinaryMask mask(128, 96, true);
    depth.at(64, 48) = 2.0;  // principal point
    depth.at(100, 10) = 1.0;

    const PointCloud cloud = backproject(depth, intr, mask);
    REQUIRE(cloud.size() == 2);
    // Row-major order: (100, 10) comes first.
    CHECK((cloud.points[0] - Vec3(0.36, -0.38, 1.0)).norm() < 1e-12);
    CHECK((cloud.points[1] - Vec3(0, 0, 2.0)).norm() < 1e-12);
}

TEST_CASE("backproject hand case from the pinhole formula") {
    CameraIntrinsics intr{100.0, 100.0, 0.0, 0.0, 200, 200};
    DepthImage depth(200, 200);
    BinaryMask mask(200, 200, true);
    depth.at(100, 0) = 1.0;
    const PointCloud cloud = backproject(depth, intr, mask);
    REQUIRE(cloud.size() == 1);
    CHECK((cloud.points[0] - Vec3(1, 0, 1)).norm() < 1e-15);
}

TEST_CASE("backproject constant-depth plane") {
    CameraIntrinsics intr{80.0, 80.0, 16.0, 12.0, 32, 24};
    DepthImage depth(32, 24);
    BinaryMask mask(32, 24);
    int expected = 0;
    for (int v = 0; v < 24; ++v)
        for (int u = 0; u < 32; ++u) {
            const bool in = (u + v) % 3 == 0;
            mask.set(u, v, in);
            depth.at(u, v) = 1.5;
            if (in) ++expected;
        }
    const PointCloud cloud = backproject(depth, intr, mask);
    CHECK(static_cast<int>(cloud.size()) == expected);
    for (const auto& p : cloud.points) CHECK(p.z() == 1.5);
}

TEST_CASE("backproject then reproject recovers pixels") {
    CameraIntrinsics intr{525.0, 525.0, 319.5, 239.5, 640, 480};
    DepthImage depth(640, 480);
    BinaryMask mask(640, 480, true);
    Rng rng(8);
    std::vector<std::pair<int, int>> pixels;
    for (int i = 0; i < 500; ++i) {
        const int u = static_cast<int>(rng.index(640));
        const int v = static_cast<int>(rng.index(480));
        if (depth.at(u, v) == 0.0) pixels.emplace_back(u, v);
        depth.at(u, v) = rng.uniform(0.3, 5.0);
    }
    std::sort(pixels.begin(), pixels.end(), [](auto a, auto b) {
        return a.second < b.second || (a.second == b.second && a.first < b.first);
    });
    const PointCloud cloud = backproject(depth, intr, mask);
    REQUIRE(cloud.size() == pixels.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        CHECK(intr.fx * p.x() / p.z() + intr.cx == Approx(pixels[i].first).margin(1e-9));
        CHECK(intr.fy * p.y() / p.z() + intr.cy == Approx(pixels[i].second).margin(1e-9));
    }
}

TEST_CASE("masked_crop") {
    DepthImage depth = constant_image(6, 4, 2.0);

    const DepthImage full = masked_crop(depth, BinaryMask(6, 4, true));
    CHECK(full.values == depth.values);

    const DepthImage none = masked_crop(depth, BinaryMask(6, 4, false));
    for (double v : none.values) CHECK(v == 0.0);

    BinaryMask checker(6, 4);
    int popcount = 0;
    for (int v = 0; v < 4; ++v)
        for (int u = 0; u < 6; ++u) {
            checker.set(u, v, (u + v) % 2 == 0);
            popcount += (u + v) % 2 == 0;
        }
    const DepthImage cropped = masked_crop(depth, checker);
    int valid = 0;
    for (double v : cropped.values) valid += v > 0.0;
    CHECK(valid == popcount);
}
