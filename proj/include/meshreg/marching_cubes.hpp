#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "meshreg/core.hpp"
#include "meshreg/marching_cubes_tables.hpp"
#include "meshreg/sdf.hpp"

namespace meshreg {

namespace detail {

struct PositionKey {
    std::array<std::uint64_t, 3> bits;
    bool operator==(const PositionKey& o) const { return bits == o.bits; }
};

struct PositionKeyHash {
    std::size_t operator()(const PositionKey& k) const {
        std::uint64_t h = 0x9E3779B97F4A7C15ULL;
        for (std::uint64_t b : k.bits) h = splitmix64(h ^ b);
        return static_cast<std::size_t>(h);
    }
};

inline PositionKey position_key(const Vec3& p) {
    PositionKey key;
    std::memcpy(key.bits.data(), p.data(), sizeof(double) * 3);
    return key;
}

}  // namespace detail

/// Standard 256-case marching cubes with linear edge interpolation. A corner
/// is inside when its value is strictly below iso, so exact-iso samples land
/// on the outside and interpolated vertices snap to lattice corners instead of
/// producing cracks. Vertices shared across cells are welded (per lattice
/// edge, then by exact position) and triangles wind so face normals point
/// toward increasing values. Sparse grids extract over their refined band;
/// everything outside the band is constant-sign by construction.
inline TriangleMesh marching_cubes(const VoxelGrid& grid, double iso = 0.0) {
    if (grid.resolution < 1) throw std::invalid_argument("marching_cubes: empty grid");
    if (grid.dense() && grid.dense_values.empty())
        throw std::invalid_argument("marching_cubes: grid has no values");

    const int res = grid.resolution;
    const std::uint64_t n = static_cast<std::uint64_t>(res) + 1;

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;   // lattice edge -> vertex
    std::unordered_map<detail::PositionKey, std::uint32_t, detail::PositionKeyHash> pos_vertex;

    std::array<double, 8> value;
    std::array<std::array<int, 3>, 8> corner;

    auto emit_cell = [&](int ci, int cj, int ck) {
        int config = 0;
        for (int c = 0; c < 8; ++c) {
            corner[c] = {ci + detail::kCornerOffsets[c][0], cj + detail::kCornerOffsets[c][1],
                         ck + detail::kCornerOffsets[c][2]};
            value[c] = grid.value_at(corner[c][0], corner[c][1], corner[c][2]);
            if (value[c] < iso) config |= 1 << c;
        }
        const std::uint16_t edges = detail::kEdgeTable[config];
        if (edges == 0) return;

        std::array<std::uint32_t, 12> edge_to_vertex{};
        for (int e = 0; e < 12; ++e) {
            if (!(edges & (1 << e))) continue;
            int a = detail::kEdgeCorners[e][0];
            int b = detail::kEdgeCorners[e][1];
            std::uint64_t la = (static_cast<std::uint64_t>(corner[a][2]) * n + corner[a][1]) * n +
                               corner[a][0];
            std::uint64_t lb = (static_cast<std::uint64_t>(corner[b][2]) * n + corner[b][1]) * n +
                               corner[b][0];
            if (la > lb) {
                std::swap(la, lb);
                std::swap(a, b);
            }
            const std::uint64_t edge_key = la * 3 + (lb - la == 1 ? 0 : (lb - la == n ? 1 : 2));

            auto it = edge_vertex.find(edge_key);
            if (it == edge_vertex.end()) {
                const double va = value[a], vb = value[b];
                double t = (iso - va) / (vb - va);
                if (t < 0.0) t = 0.0;
                if (t > 1.0) t = 1.0;
                Vec3 pos;
                const Vec3 pa = grid.lattice_point(corner[a][0], corner[a][1], corner[a][2]);
                if (t == 0.0) {
                    pos = pa;
                } else if (t == 1.0) {
                    pos = grid.lattice_point(corner[b][0], corner[b][1], corner[b][2]);
                } else {
                    const Vec3 pb = grid.lattice_point(corner[b][0], corner[b][1], corner[b][2]);
                    pos = pa + t * (pb - pa);
                }
                // Exact-position weld catches vertices snapped onto a corner
                // from different edges.
                const detail::PositionKey pkey = detail::position_key(pos);
                auto pit = pos_vertex.find(pkey);
                std::uint32_t index;
                if (pit == pos_vertex.end()) {
                    index = static_cast<std::uint32_t>(mesh.vertices.size());
                    mesh.vertices.push_back(pos);
                    pos_vertex.emplace(pkey, index);
                } else {
                    index = pit->second;
                }
                it = edge_vertex.emplace(edge_key, index).first;
            }
            edge_to_vertex[e] = it->second;
        }

        // The table's winding faces the inside; swap two vertices so CCW faces
        // the positive side.
        const auto& tris = detail::kTriangleTable[config];
        for (int t = 0; t < 16 && tris[t] >= 0; t += 3) {
            const std::uint32_t v0 = edge_to_vertex[tris[t]];
            const std::uint32_t v1 = edge_to_vertex[tris[t + 1]];
            const std::uint32_t v2 = edge_to_vertex[tris[t + 2]];
            if (v0 == v1 || v1 == v2 || v0 == v2) continue;  // collapsed at a corner hit
            mesh.faces.push_back({v0, v2, v1});
        }
    };

    if (grid.dense()) {
        for (int k = 0; k < res; ++k)
            for (int j = 0; j < res; ++j)
                for (int i = 0; i < res; ++i) emit_cell(i, j, k);
    } else {
        const std::uint64_t cells = static_cast<std::uint64_t>(res);
        for (std::uint64_t id : grid.surface_cells) {
            const int i = static_cast<int>(id % cells);
            const int j = static_cast<int>((id / cells) % cells);
            const int k = static_cast<int>(id / (cells * cells));
            emit_cell(i, j, k);
        }
    }

    // Drop vertices that only backed collapsed triangles.
    std::vector<std::uint32_t> remap(mesh.vertices.size(), UINT32_MAX);
    std::vector<Vec3> compact;
    for (auto& face : mesh.faces) {
        for (auto& v : face) {
            if (remap[v] == UINT32_MAX) {
                remap[v] = static_cast<std::uint32_t>(compact.size());
                compact.push_back(mesh.vertices[v]);
            }
            v = remap[v];
        }
    }
    mesh.vertices = std::move(compact);
    return mesh;
}

}  // namespace meshreg
