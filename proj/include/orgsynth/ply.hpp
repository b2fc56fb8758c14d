#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "orgsynth/cloud.hpp"
#include "orgsynth/error.hpp"

namespace orgsynth {

// Scene sample: geometry plus per-point category label and instance id.
struct ScenePointCloud {
    PointCloud cloud;
    std::vector<std::int32_t> labels;
    std::vector<std::int32_t> instances;
};

namespace ply {

enum class Scalar { I8, U8, I16, U16, I32, U32, F32, F64 };

inline std::size_t scalar_size(Scalar s) {
    switch (s) {
        case Scalar::I8: case Scalar::U8: return 1;
        case Scalar::I16: case Scalar::U16: return 2;
        case Scalar::I32: case Scalar::U32: case Scalar::F32: return 4;
        case Scalar::F64: return 8;
    }
    return 0;
}

inline bool parse_scalar(const std::string& s, Scalar& out) {
    if (s == "char" || s == "int8") out = Scalar::I8;
    else if (s == "uchar" || s == "uint8") out = Scalar::U8;
    else if (s == "short" || s == "int16") out = Scalar::I16;
    else if (s == "ushort" || s == "uint16") out = Scalar::U16;
    else if (s == "int" || s == "int32") out = Scalar::I32;
    else if (s == "uint" || s == "uint32") out = Scalar::U32;
    else if (s == "float" || s == "float32") out = Scalar::F32;
    else if (s == "double" || s == "float64") out = Scalar::F64;
    else return false;
    return true;
}

struct Property {
    std::string name;
    Scalar type = Scalar::F32;
    bool is_list = false;
    Scalar count_type = Scalar::U8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

struct Header {
    bool binary = false;
    std::vector<Element> elements;
};

inline Header read_header(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ply") throw Error(ErrorCode::FormatError, path + ": missing ply magic");
    Header h;
    bool have_format = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") h.binary = false;
            else if (fmt == "binary_little_endian") h.binary = true;
            else throw Error(ErrorCode::FormatError, path + ": unsupported format " + fmt);
            have_format = true;
        } else if (tok == "element") {
            Element e;
            ls >> e.name >> e.count;
            h.elements.push_back(e);
        } else if (tok == "property") {
            if (h.elements.empty())
                throw Error(ErrorCode::FormatError, path + ": property before element");
            Property p;
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, vt;
                ls >> ct >> vt >> p.name;
                p.is_list = true;
                if (!parse_scalar(ct, p.count_type) || !parse_scalar(vt, p.type))
                    throw Error(ErrorCode::FormatError, path + ": bad list types");
            } else {
                ls >> p.name;
                if (!parse_scalar(t, p.type))
                    throw Error(ErrorCode::FormatError, path + ": bad property type " + t);
            }
            h.elements.back().properties.push_back(p);
        } else if (tok == "end_header") {
            if (!have_format) throw Error(ErrorCode::FormatError, path + ": missing format line");
            return h;
        } else {
            throw Error(ErrorCode::FormatError, path + ": unexpected header token " + tok);
        }
    }
    throw Error(ErrorCode::FormatError, path + ": unterminated header");
}

inline double read_binary_scalar(std::istream& in, Scalar type, const std::string& path) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(scalar_size(type))))
        throw Error(ErrorCode::FormatError, path + ": truncated payload");
    switch (type) {
        case Scalar::I8: return static_cast<double>(static_cast<std::int8_t>(buf[0]));
        case Scalar::U8: return static_cast<double>(buf[0]);
        case Scalar::I16: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
        case Scalar::U16: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
        case Scalar::I32: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
        case Scalar::U32: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
        case Scalar::F32: { float v; std::memcpy(&v, buf, 4); return v; }
        case Scalar::F64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0.0;
}

inline double read_ascii_scalar(std::istream& in, const std::string& path) {
    double v = 0.0;
    if (!(in >> v)) throw Error(ErrorCode::FormatError, path + ": truncated payload");
    return v;
}

// Columnar payload of one element; properties without standard names are
// parsed and then ignored by the adapters below.
struct Table {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    const std::vector<double>* find(const std::string& n) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return &columns[i];
        return nullptr;
    }
};

inline Table read_element(std::istream& in, const Header& h, const Element& e, const std::string& path) {
    Table t;
    for (const Property& p : e.properties) t.names.push_back(p.name);
    t.columns.assign(e.properties.size(), {});
    for (auto& c : t.columns) c.reserve(e.count);
    for (std::size_t row = 0; row < e.count; ++row) {
        for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
            const Property& p = e.properties[pi];
            if (p.is_list) {
                const double n = h.binary ? read_binary_scalar(in, p.count_type, path)
                                          : read_ascii_scalar(in, path);
                for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
                    if (h.binary)
                        read_binary_scalar(in, p.type, path);
                    else
                        read_ascii_scalar(in, path);
                }
                t.columns[pi].push_back(n);
            } else {
                t.columns[pi].push_back(h.binary ? read_binary_scalar(in, p.type, path)
                                                 : read_ascii_scalar(in, path));
            }
        }
    }
    return t;
}

inline void write_binary_scalar(std::ostream& out, Scalar type, double v) {
    switch (type) {
        case Scalar::I8: { auto x = static_cast<std::int8_t>(v); out.write(reinterpret_cast<char*>(&x), 1); break; }
        case Scalar::U8: { auto x = static_cast<std::uint8_t>(v); out.write(reinterpret_cast<char*>(&x), 1); break; }
        case Scalar::I16: { auto x = static_cast<std::int16_t>(v); out.write(reinterpret_cast<char*>(&x), 2); break; }
        case Scalar::U16: { auto x = static_cast<std::uint16_t>(v); out.write(reinterpret_cast<char*>(&x), 2); break; }
        case Scalar::I32: { auto x = static_cast<std::int32_t>(v); out.write(reinterpret_cast<char*>(&x), 4); break; }
        case Scalar::U32: { auto x = static_cast<std::uint32_t>(v); out.write(reinterpret_cast<char*>(&x), 4); break; }
        case Scalar::F32: { auto x = static_cast<float>(v); out.write(reinterpret_cast<char*>(&x), 4); break; }
        case Scalar::F64: { out.write(reinterpret_cast<const char*>(&v), 8); break; }
    }
}

}  // namespace ply

// Reads any PLY with a vertex element carrying at least x/y/z.  Colors and
// normals are picked up when present; label/instance likewise.
inline ScenePointCloud read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    const ply::Header h = ply::read_header(in, path);
    ScenePointCloud out;
    for (const ply::Element& e : h.elements) {
        ply::Table t = ply::read_element(in, h, e, path);
        if (e.name != "vertex") continue;
        const auto *x = t.find("x"), *y = t.find("y"), *z = t.find("z");
        if (!x || !y || !z) throw Error(ErrorCode::FormatError, path + ": vertex element lacks x/y/z");
        out.cloud.points.resize(e.count);
        for (std::size_t i = 0; i < e.count; ++i) out.cloud.points[i] = {(*x)[i], (*y)[i], (*z)[i]};
        const auto *r = t.find("red"), *g = t.find("green"), *b = t.find("blue");
        if (r && g && b) {
            out.cloud.colors.resize(e.count);
            for (std::size_t i = 0; i < e.count; ++i)
                out.cloud.colors[i] = {static_cast<std::uint8_t>((*r)[i]),
                                       static_cast<std::uint8_t>((*g)[i]),
                                       static_cast<std::uint8_t>((*b)[i])};
        }
        const auto *nx = t.find("nx"), *ny = t.find("ny"), *nz = t.find("nz");
        if (nx && ny && nz) {
            out.cloud.normals.resize(e.count);
            for (std::size_t i = 0; i < e.count; ++i)
                out.cloud.normals[i] = {(*nx)[i], (*ny)[i], (*nz)[i]};
        }
        if (const auto* l = t.find("label")) {
            out.labels.resize(e.count);
            for (std::size_t i = 0; i < e.count; ++i)
                out.labels[i] = static_cast<std::int32_t>((*l)[i]);
        }
        if (const auto* s = t.find("instance")) {
            out.instances.resize(e.count);
            for (std::size_t i = 0; i < e.count; ++i)
                out.instances[i] = static_cast<std::int32_t>((*s)[i]);
        }
    }
    if (out.cloud.empty()) throw Error(ErrorCode::FormatError, path + ": no vertex element");
    return out;
}

// Scene PLY requires per-point label and instance channels.
inline ScenePointCloud read_scene_ply(const std::string& path) {
    ScenePointCloud s = read_ply(path);
    if (s.labels.size() != s.cloud.size() || s.instances.size() != s.cloud.size())
        throw Error(ErrorCode::FormatError, path + ": missing label/instance channel");
    return s;
}

inline void write_ply(const std::string& path, const ScenePointCloud& scene, bool binary = true,
                      bool with_labels = true) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    const PointCloud& c = scene.cloud;
    const bool colors = c.has_colors();
    const bool normals = c.has_normals();
    const bool labels = with_labels && scene.labels.size() == c.size() &&
                        scene.instances.size() == c.size();
    out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    out << "element vertex " << c.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
    if (labels) out << "property int label\nproperty int instance\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (binary) {
            using ply::Scalar;
            ply::write_binary_scalar(out, Scalar::F32, c.points[i].x);
            ply::write_binary_scalar(out, Scalar::F32, c.points[i].y);
            ply::write_binary_scalar(out, Scalar::F32, c.points[i].z);
            if (colors)
                for (int k = 0; k < 3; ++k) ply::write_binary_scalar(out, Scalar::U8, c.colors[i][k]);
            if (normals) {
                ply::write_binary_scalar(out, Scalar::F32, c.normals[i].x);
                ply::write_binary_scalar(out, Scalar::F32, c.normals[i].y);
                ply::write_binary_scalar(out, Scalar::F32, c.normals[i].z);
            }
            if (labels) {
                ply::write_binary_scalar(out, Scalar::I32, scene.labels[i]);
                ply::write_binary_scalar(out, Scalar::I32, scene.instances[i]);
            }
        } else {
            out << static_cast<float>(c.points[i].x) << ' ' << static_cast<float>(c.points[i].y)
                << ' ' << static_cast<float>(c.points[i].z);
            if (colors)
                out << ' ' << int(c.colors[i][0]) << ' ' << int(c.colors[i][1]) << ' '
                    << int(c.colors[i][2]);
            if (normals)
                out << ' ' << static_cast<float>(c.normals[i].x) << ' '
                    << static_cast<float>(c.normals[i].y) << ' '
                    << static_cast<float>(c.normals[i].z);
            if (labels) out << ' ' << scene.labels[i] << ' ' << scene.instances[i];
            out << '\n';
        }
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

inline void write_cloud_ply(const std::string& path, const PointCloud& cloud, bool binary = true) {
    ScenePointCloud s;
    s.cloud = cloud;
    write_ply(path, s, binary, false);
}

}  // namespace orgsynth
