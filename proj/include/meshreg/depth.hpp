#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "meshreg/core.hpp"

namespace meshreg {

/// Pinhole model; (u, v) are column/row pixel coordinates.
struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    void validate() const {
        if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
        if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: non-positive image size");
        if (cx < 0 || cx >= width || cy < 0 || cy >= height)
            throw std::invalid_argument("intrinsics: principal point outside image");
    }
};

/// Row-major metric depth raster; zero encodes an invalid pixel.
struct DepthImage {
    int width = 0, height = 0;
    std::vector<double> values;

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("DepthImage: non-positive size");
    }

    double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
    double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }

    void validate() const {
        if (values.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("DepthImage: raster size does not match dimensions");
        for (double d : values)
            if (!(d >= 0.0) || !std::isfinite(d))
                throw std::invalid_argument("DepthImage: values must be finite and >= 0");
    }
};

struct BinaryMask {
    int width = 0, height = 0;
    std::vector<std::uint8_t> values;  // nonzero = in mask

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("BinaryMask: non-positive size");
    }

    bool at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u] != 0; }
    void set(int u, int v, bool on) { values[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0; }
};

namespace detail {

inline void require_same_dims(int w1, int h1, int w2, int h2, const char* what) {
    if (w1 != w2 || h1 != h2) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

/// Median with the even-count convention fixed to the lower-middle order
/// statistic, so the result is always a value present in the sample.
inline double lower_median(std::vector<double>& sample) {
    const std::size_t mid = (sample.size() - 1) / 2;
    std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(mid), sample.end());
    return sample[mid];
}

}  // namespace detail

struct ScaleAlignResult {
    double scale = 0.0;
    DepthImage metric;
};

/// Scales relative predicted depth to metric units by the ratio of in-mask
/// medians. Both medians are taken over the pixels that are valid (nonzero)
/// in BOTH rasters; every valid predicted pixel is then scaled, including
/// those the sensor missed.
inline ScaleAlignResult median_scale_align(const DepthImage& d_sensor, const DepthImage& d_pred,
                                           const BinaryMask& mask) {
    detail::require_same_dims(d_sensor.width, d_sensor.height, d_pred.width, d_pred.height,
                              "median_scale_align");
    detail::require_same_dims(d_sensor.width, d_sensor.height, mask.width, mask.height,
                              "median_scale_align");

    std::vector<double> sensor_vals, pred_vals;
    for (int v = 0; v < d_sensor.height; ++v) {
        for (int u = 0; u < d_sensor.width; ++u) {
            if (!mask.at(u, v)) continue;
            const double ds = d_sensor.at(u, v), dp = d_pred.at(u, v);
            if (ds > 0.0 && dp > 0.0) {
                sensor_vals.push_back(ds);
                pred_vals.push_back(dp);
            }
        }
    }
    if (sensor_vals.empty()) throw std::runtime_error("median_scale_align: no overlap for scale alignment");

    const double median_sensor = detail::lower_median(sensor_vals);
    const double median_pred = detail::lower_median(pred_vals);
    if (!(median_pred > 0.0)) throw std::runtime_error("median_scale_align: degenerate prediction");

    ScaleAlignResult out;
    out.scale = median_sensor / median_pred;
    out.metric = DepthImage(d_pred.width, d_pred.height);
    for (std::size_t i = 0; i < d_pred.values.size(); ++i) {
        const double dp = d_pred.values[i];
        out.metric.values[i] = dp > 0.0 ? out.scale * dp : 0.0;
    }
    return out;
}

/// Back-projects valid in-mask pixels through the pinhole model, preserving
/// row-major pixel order.
inline PointCloud backproject(const DepthImage& depth, const CameraIntrinsics& intr,
                              const BinaryMask& mask) {
    intr.validate();
    detail::require_same_dims(depth.width, depth.height, intr.width, intr.height, "backproject");
    detail::require_same_dims(depth.width, depth.height, mask.width, mask.height, "backproject");

    PointCloud cloud;
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            if (!mask.at(u, v)) continue;
            const double d = depth.at(u, v);
            if (!(d > 0.0)) continue;
            cloud.points.emplace_back(d * (u - intr.cx) / intr.fx, d * (v - intr.cy) / intr.fy, d);
        }
    }
    if (cloud.empty()) throw std::runtime_error("backproject: no valid in-mask pixel");
    return cloud;
}

/// Zeroes out-of-mask pixels.
inline DepthImage masked_crop(const DepthImage& depth, const BinaryMask& mask) {
    detail::require_same_dims(depth.width, depth.height, mask.width, mask.height, "masked_crop");
    DepthImage out(depth.width, depth.height);
    for (int v = 0; v < depth.height; ++v)
        for (int u = 0; u < depth.width; ++u)
            if (mask.at(u, v)) out.at(u, v) = depth.at(u, v);
    return out;
}

}  // namespace meshreg
