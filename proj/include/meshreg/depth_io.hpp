#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "meshreg/depth.hpp"
#include "meshreg/ply_io.hpp"  // io_error

namespace meshreg {

namespace detail {

inline std::filesystem::path sidecar_path(const std::filesystem::path& raster_path) {
    std::filesystem::path p = raster_path;
    p.replace_extension(".json");
    return p;
}

}  // namespace detail

/// Raster: raw little-endian float32, row-major. A sidecar JSON header with
/// the same basename carries width/height and the pinhole intrinsics.
inline void write_depth(const std::string& path, const DepthImage& depth,
                        const CameraIntrinsics& intr) {
    depth.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("depth: cannot write '" + path + "'");
    std::vector<float> raster(depth.values.size());
    for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = static_cast<float>(depth.values[i]);
    out.write(reinterpret_cast<const char*>(raster.data()),
              static_cast<std::streamsize>(raster.size() * sizeof(float)));
    if (!out) throw io_error("depth: write failed for '" + path + "'");

    nlohmann::json header{{"width", depth.width},   {"height", depth.height}, {"fx", intr.fx},
                          {"fy", intr.fy},          {"cx", intr.cx},          {"cy", intr.cy}};
    std::ofstream hdr(detail::sidecar_path(path));
    if (!hdr) throw io_error("depth: cannot write sidecar for '" + path + "'");
    hdr << header.dump(2) << "\n";
}

inline std::pair<DepthImage, CameraIntrinsics> read_depth(const std::string& path) {
    std::ifstream hdr(detail::sidecar_path(path));
    if (!hdr) throw io_error("depth: missing sidecar header for '" + path + "'");
    nlohmann::json header;
    try {
        hdr >> header;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("depth: bad sidecar for '" + path + "': " + e.what());
    }

    CameraIntrinsics intr;
    DepthImage depth;
    try {
        depth = DepthImage(header.at("width").get<int>(), header.at("height").get<int>());
        intr.width = depth.width;
        intr.height = depth.height;
        intr.fx = header.at("fx").get<double>();
        intr.fy = header.at("fy").get<double>();
        intr.cx = header.at("cx").get<double>();
        intr.cy = header.at("cy").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error("depth: incomplete sidecar for '" + path + "': " + e.what());
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("depth: cannot open '" + path + "'");
    std::vector<float> raster(depth.values.size());
    in.read(reinterpret_cast<char*>(raster.data()),
            static_cast<std::streamsize>(raster.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(raster.size() * sizeof(float)))
        throw io_error("depth: raster '" + path + "' shorter than header size " +
                       std::to_string(depth.width) + "x" + std::to_string(depth.height));
    in.peek();
    if (!in.eof())
        throw io_error("depth: raster '" + path + "' longer than header size " +
                       std::to_string(depth.width) + "x" + std::to_string(depth.height));
    for (std::size_t i = 0; i < raster.size(); ++i) depth.values[i] = raster[i];
    depth.validate();
    return {std::move(depth), intr};
}

/// Mask: raw 8-bit raster, 0 = out, 255 = in; dimensions from the paired depth.
inline void write_mask(const std::string& path, const BinaryMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("mask: cannot write '" + path + "'");
    std::vector<std::uint8_t> raw(mask.values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = mask.values[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw io_error("mask: write failed for '" + path + "'");
}

inline BinaryMask read_mask(const std::string& path, int width, int height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("mask: cannot open '" + path + "'");
    BinaryMask mask(width, height);
    std::vector<std::uint8_t> raw(mask.values.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw io_error("mask: '" + path + "' shorter than expected " + std::to_string(width) + "x" +
                       std::to_string(height));
    in.peek();
    if (!in.eof()) throw io_error("mask: '" + path + "' longer than expected size");
    for (std::size_t i = 0; i < raw.size(); ++i) mask.values[i] = raw[i] ? 1 : 0;
    return mask;
}

}  // namespace meshreg
