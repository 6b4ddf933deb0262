#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshreg/core.hpp"

namespace meshreg {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PlyFormat { Ascii, BinaryLittleEndian };

namespace detail {

static_assert(std::endian::native == std::endian::little, "PLY writer assumes a little-endian host");

inline std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

struct PlyProperty {
    std::string name;
    std::string type;        // scalar type, or element type for lists
    bool is_list = false;
    std::string count_type;  // list count type
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

inline std::size_t scalar_size(const std::string& type) {
    if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
    if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
    if (type == "int" || type == "int32" || type == "uint" || type == "uint32" || type == "float" ||
        type == "float32")
        return 4;
    if (type == "double" || type == "float64") return 8;
    throw io_error("ply: unknown property type '" + type + "'");
}

inline bool type_signed(const std::string& type) {
    return type == "char" || type == "int8" || type == "short" || type == "int16" || type == "int" ||
           type == "int32";
}

class PlyParser {
public:
    explicit PlyParser(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw io_error("ply: cannot open '" + path + "'");
        parse_header();
    }

    const std::vector<PlyElement>& elements() const { return elements_; }
    bool binary() const { return binary_; }

    // Reads one element's raw rows; scalars come back as doubles, list values
    // as rows of doubles per entry.
    void read_element(const PlyElement& element,
                      const std::function<void(std::size_t, const std::vector<double>&,
                                               const std::vector<std::vector<double>>&)>& sink) {
        std::vector<double> scalars;
        std::vector<std::vector<double>> lists;
        for (std::size_t row = 0; row < element.count; ++row) {
            scalars.clear();
            lists.clear();
            if (binary_) {
                for (const auto& prop : element.properties) {
                    if (prop.is_list) {
                        const double n = read_binary_scalar(prop.count_type);
                        std::vector<double> entry;
                        entry.reserve(static_cast<std::size_t>(n));
                        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
                            entry.push_back(read_binary_scalar(prop.type));
                        lists.push_back(std::move(entry));
                    } else {
                        scalars.push_back(read_binary_scalar(prop.type));
                    }
                }
            } else {
                const std::vector<std::string> tokens = next_data_line(element.name, row);
                std::size_t pos = 0;
                auto take = [&]() -> double {
                    if (pos >= tokens.size())
                        throw io_error(parse_context(element.name, row) + ": too few values");
                    return parse_number(tokens[pos++], element.name, row);
                };
                for (const auto& prop : element.properties) {
                    if (prop.is_list) {
                        const auto n = static_cast<std::size_t>(take());
                        std::vector<double> entry;
                        entry.reserve(n);
                        for (std::size_t i = 0; i < n; ++i) entry.push_back(take());
                        lists.push_back(std::move(entry));
                    } else {
                        scalars.push_back(take());
                    }
                }
                if (pos != tokens.size())
                    throw io_error(parse_context(element.name, row) + ": trailing values");
            }
            sink(row, scalars, lists);
        }
    }

private:
    void parse_header() {
        std::string line;
        expect_line(line);
        if (line != "ply") throw io_error(path_ + ":1: not a PLY file (missing 'ply' magic)");
        bool have_format = false;
        for (;;) {
            expect_line(line);
            std::istringstream ss(line);
            std::string word;
            ss >> word;
            if (word == "comment" || word == "obj_info" || word.empty()) continue;
            if (word == "format") {
                std::string fmt, version;
                ss >> fmt >> version;
                if (fmt == "ascii")
                    binary_ = false;
                else if (fmt == "binary_little_endian")
                    binary_ = true;
                else
                    throw io_error(path_ + ":" + std::to_string(header_lines_) +
                                   ": unsupported format '" + fmt + "'");
                have_format = true;
            } else if (word == "element") {
                PlyElement element;
                if (!(ss >> element.name >> element.count))
                    throw io_error(path_ + ":" + std::to_string(header_lines_) + ": malformed element");
                elements_.push_back(element);
            } else if (word == "property") {
                if (elements_.empty())
                    throw io_error(path_ + ":" + std::to_string(header_lines_) +
                                   ": property before any element");
                PlyProperty prop;
                std::string first;
                ss >> first;
                if (first == "list") {
                    prop.is_list = true;
                    if (!(ss >> prop.count_type >> prop.type >> prop.name))
                        throw io_error(path_ + ":" + std::to_string(header_lines_) +
                                       ": malformed list property");
                } else {
                    prop.type = first;
                    if (!(ss >> prop.name))
                        throw io_error(path_ + ":" + std::to_string(header_lines_) +
                                       ": malformed property");
                }
                scalar_size(prop.type);  // validates the type name
                elements_.back().properties.push_back(prop);
            } else if (word == "end_header") {
                break;
            } else {
                throw io_error(path_ + ":" + std::to_string(header_lines_) +
                               ": unexpected header token '" + word + "'");
            }
        }
        if (!have_format) throw io_error(path_ + ": header has no format line");
    }

    void expect_line(std::string& line) {
        if (!std::getline(in_, line))
            throw io_error(path_ + ":" + std::to_string(header_lines_ + 1) + ": unexpected end of header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++header_lines_;
    }

    std::string parse_context(const std::string& element, std::size_t row) const {
        if (binary_) return path_ + ": element " + element + " row " + std::to_string(row);
        return path_ + ":" + std::to_string(header_lines_ + data_lines_) + ": element " + element +
               " row " + std::to_string(row);
    }

    std::vector<std::string> next_data_line(const std::string& element, std::size_t row) {
        std::string line;
        do {
            if (!std::getline(in_, line))
                throw io_error(parse_context(element, row) + ": unexpected end of file");
            ++data_lines_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
        } while (line.empty());
        std::vector<std::string> tokens;
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) tokens.push_back(tok);
        return tokens;
    }

    double parse_number(const std::string& token, const std::string& element, std::size_t row) {
        try {
            std::size_t used = 0;
            const double v = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument("trailing garbage");
            return v;
        } catch (const std::exception&) {
            throw io_error(parse_context(element, row) + ": bad number '" + token + "'");
        }
    }

    double read_binary_scalar(const std::string& type) {
        unsigned char buf[8];
        const std::size_t size = scalar_size(type);
        if (!in_.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(size)))
            throw io_error(path_ + ": unexpected end of binary payload");
        if (type == "float" || type == "float32") {
            float f;
            std::memcpy(&f, buf, 4);
            return f;
        }
        if (type == "double" || type == "float64") {
            double d;
            std::memcpy(&d, buf, 8);
            return d;
        }
        std::uint64_t raw = 0;
        std::memcpy(&raw, buf, size);
        if (type_signed(type)) {
            const int shift = static_cast<int>(64 - 8 * size);
            return static_cast<double>(static_cast<std::int64_t>(raw << shift) >> shift);
        }
        return static_cast<double>(raw);
    }

    std::string path_;
    std::ifstream in_;
    bool binary_ = false;
    std::size_t header_lines_ = 0;
    std::size_t data_lines_ = 0;
    std::vector<PlyElement> elements_;
};

inline void write_header(std::ostream& out, PlyFormat format, std::size_t vertex_count,
                         bool with_normals, std::size_t face_count, bool with_faces) {
    out << "ply\n";
    out << (format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n");
    out << "element vertex " << vertex_count << "\n";
    for (const char* axis : {"x", "y", "z"}) out << "property double " << axis << "\n";
    if (with_normals)
        for (const char* axis : {"nx", "ny", "nz"}) out << "property double n" << axis[1] << "\n";
    if (with_faces) {
        out << "element face " << face_count << "\n";
        out << "property list uchar int vertex_indices\n";
    }
    out << "end_header\n";
}

inline void write_vertex_row(std::ostream& out, PlyFormat format, const Vec3& p, const Vec3* n) {
    if (format == PlyFormat::Ascii) {
        out << format_g9(p.x()) << ' ' << format_g9(p.y()) << ' ' << format_g9(p.z());
        if (n) out << ' ' << format_g9(n->x()) << ' ' << format_g9(n->y()) << ' ' << format_g9(n->z());
        out << '\n';
    } else {
        double row[6] = {p.x(), p.y(), p.z(), 0, 0, 0};
        std::size_t count = 3;
        if (n) {
            row[3] = n->x();
            row[4] = n->y();
            row[5] = n->z();
            count = 6;
        }
        out.write(reinterpret_cast<const char*>(row), static_cast<std::streamsize>(sizeof(double) * count));
    }
}

}  // namespace detail

inline void write_ply(const std::string& path, const PointCloud& cloud,
                      PlyFormat format = PlyFormat::BinaryLittleEndian) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("ply: cannot write '" + path + "'");
    const bool with_normals = cloud.has_normals();
    detail::write_header(out, format, cloud.size(), with_normals, 0, false);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        detail::write_vertex_row(out, format, cloud.points[i],
                                 with_normals ? &cloud.normals[i] : nullptr);
    if (!out) throw io_error("ply: write failed for '" + path + "'");
}

inline void write_ply(const std::string& path, const TriangleMesh& mesh,
                      PlyFormat format = PlyFormat::BinaryLittleEndian) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("ply: cannot write '" + path + "'");
    detail::write_header(out, format, mesh.vertices.size(), false, mesh.faces.size(), true);
    for (const auto& v : mesh.vertices) detail::write_vertex_row(out, format, v, nullptr);
    for (const auto& f : mesh.faces) {
        if (format == PlyFormat::Ascii) {
            out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
        } else {
            const unsigned char n = 3;
            const std::int32_t idx[3] = {static_cast<std::int32_t>(f[0]),
                                         static_cast<std::int32_t>(f[1]),
                                         static_cast<std::int32_t>(f[2])};
            out.write(reinterpret_cast<const char*>(&n), 1);
            out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
        }
    }
    if (!out) throw io_error("ply: write failed for '" + path + "'");
}

namespace detail {

struct VertexLayout {
    int x = -1, y = -1, z = -1, nx = -1, ny = -1, nz = -1;
};

inline VertexLayout vertex_layout(const PlyElement& element, const std::string& path) {
    VertexLayout layout;
    int scalar_slot = 0;
    for (const auto& prop : element.properties) {
        if (prop.is_list) continue;
        if (prop.name == "x") layout.x = scalar_slot;
        if (prop.name == "y") layout.y = scalar_slot;
        if (prop.name == "z") layout.z = scalar_slot;
        if (prop.name == "nx") layout.nx = scalar_slot;
        if (prop.name == "ny") layout.ny = scalar_slot;
        if (prop.name == "nz") layout.nz = scalar_slot;
        ++scalar_slot;
    }
    if (layout.x < 0 || layout.y < 0 || layout.z < 0)
        throw io_error(path + ": vertex element lacks x/y/z properties");
    return layout;
}

}  // namespace detail

inline PointCloud read_ply_cloud(const std::string& path) {
    detail::PlyParser parser(path);
    PointCloud cloud;
    for (const auto& element : parser.elements()) {
        if (element.name == "vertex") {
            const auto layout = detail::vertex_layout(element, path);
            const bool with_normals = layout.nx >= 0 && layout.ny >= 0 && layout.nz >= 0;
            cloud.points.reserve(element.count);
            parser.read_element(element, [&](std::size_t, const std::vector<double>& s,
                                             const std::vector<std::vector<double>>&) {
                cloud.points.emplace_back(s[layout.x], s[layout.y], s[layout.z]);
                if (with_normals) cloud.normals.emplace_back(s[layout.nx], s[layout.ny], s[layout.nz]);
            });
        } else {
            parser.read_element(element, [](std::size_t, const std::vector<double>&,
                                            const std::vector<std::vector<double>>&) {});
        }
    }
    if (cloud.points.empty()) throw io_error(path + ": no vertex element (or zero vertices)");
    return cloud;
}

inline TriangleMesh read_ply_mesh(const std::string& path) {
    detail::PlyParser parser(path);
    TriangleMesh mesh;
    bool saw_vertices = false;
    for (const auto& element : parser.elements()) {
        if (element.name == "vertex") {
            saw_vertices = true;
            const auto layout = detail::vertex_layout(element, path);
            mesh.vertices.reserve(element.count);
            parser.read_element(element, [&](std::size_t, const std::vector<double>& s,
                                             const std::vector<std::vector<double>>&) {
                mesh.vertices.emplace_back(s[layout.x], s[layout.y], s[layout.z]);
            });
        } else if (element.name == "face") {
            int list_slot = -1, slot = 0;
            for (const auto& prop : element.properties) {
                if (prop.is_list &&
                    (prop.name == "vertex_indices" || prop.name == "vertex_index"))
                    list_slot = slot;
                if (prop.is_list) ++slot;
            }
            if (list_slot < 0) throw io_error(path + ": face element lacks a vertex index list");
            mesh.faces.reserve(element.count);
            parser.read_element(element, [&](std::size_t row, const std::vector<double>&,
                                             const std::vector<std::vector<double>>& lists) {
                const auto& idx = lists[list_slot];
                if (idx.size() != 3)
                    throw io_error(path + ": face " + std::to_string(row) + " has " +
                                   std::to_string(idx.size()) + " vertices (triangles required)");
                std::array<std::uint32_t, 3> face{};
                for (int c = 0; c < 3; ++c) {
                    const double v = idx[c];
                    if (v < 0 || v >= static_cast<double>(mesh.vertices.size()))
                        throw io_error(path + ": face " + std::to_string(row) +
                                       " vertex index out of range");
                    face[c] = static_cast<std::uint32_t>(v);
                }
                mesh.faces.push_back(face);
            });
        } else {
            parser.read_element(element, [](std::size_t, const std::vector<double>&,
                                            const std::vector<std::vector<double>>&) {});
        }
    }
    if (!saw_vertices) throw io_error(path + ": no vertex element");
    return mesh;
}

}  // namespace meshreg
