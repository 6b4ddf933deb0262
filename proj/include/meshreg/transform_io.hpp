#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "meshreg/core.hpp"
#include "meshreg/ply_io.hpp"  // io_error

namespace meshreg {

inline nlohmann::json transform_to_json(const RigidScaleTransform& t) {
    nlohmann::json j;
    j["scale"] = t.scale;
    auto& rot = j["rotation"] = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(t.rotation(r, c));
    j["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
    return j;
}

inline RigidScaleTransform transform_from_json(const nlohmann::json& j) {
    RigidScaleTransform t;
    try {
        t.scale = j.at("scale").get<double>();
        const auto& rot = j.at("rotation");
        if (rot.size() != 9) throw std::invalid_argument("transform: rotation must have 9 entries");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot.at(3 * r + c).get<double>();
        const auto& trans = j.at("translation");
        if (trans.size() != 3) throw std::invalid_argument("transform: translation must have 3 entries");
        for (int c = 0; c < 3; ++c) t.translation[c] = trans.at(c).get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("transform: malformed JSON: ") + e.what());
    }
    if (!t.valid())
        throw std::invalid_argument("transform: rotation is not in SO(3) or scale is not positive");
    return t;
}

inline void write_transform(const std::string& path, const RigidScaleTransform& t) {
    std::ofstream out(path);
    if (!out) throw io_error("transform: cannot write '" + path + "'");
    out << transform_to_json(t).dump(2) << "\n";
}

inline RigidScaleTransform read_transform(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("transform: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("transform: bad JSON in '" + path + "': " + e.what());
    }
    return transform_from_json(j);
}

}  // namespace meshreg
