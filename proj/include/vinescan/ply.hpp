// SPDX-License-Identifier: Apache-2.0
//
// PLY point cloud reader/writer. Supports ascii and binary_little_endian
// vertex elements with float x,y,z and optional uchar red,green,blue.
// Extra scalar properties can be emitted (used for canopy labels).

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vinescan/geometry.hpp"

namespace vinescan {

struct PlyLoadResult {
    ColoredPointCloud cloud;
    bool has_color = false;  // false -> colors defaulted to (0,0,0)
};

namespace ply_detail {

enum class ScalarType { Float32, Float64, Uint8, Int8, Uint16, Int16, Uint32, Int32 };

inline ScalarType parse_type(const std::string& t, long line) {
    if (t == "float" || t == "float32") return ScalarType::Float32;
    if (t == "double" || t == "float64") return ScalarType::Float64;
    if (t == "uchar" || t == "uint8") return ScalarType::Uint8;
    if (t == "char" || t == "int8") return ScalarType::Int8;
    if (t == "ushort" || t == "uint16") return ScalarType::Uint16;
    if (t == "short" || t == "int16") return ScalarType::Int16;
    if (t == "uint" || t == "uint32") return ScalarType::Uint32;
    if (t == "int" || t == "int32") return ScalarType::Int32;
    throw ParseError("ply: unsupported property type '" + t + "'", line);
}

inline std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::Float64: return 8;
        case ScalarType::Float32: case ScalarType::Uint32: case ScalarType::Int32: return 4;
        case ScalarType::Uint16: case ScalarType::Int16: return 2;
        default: return 1;
    }
}

inline double read_binary_scalar(const char* p, ScalarType t) {
    auto load = [&]<typename T>() {
        T v;
        std::memcpy(&v, p, sizeof(T));
        return static_cast<double>(v);
    };
    switch (t) {
        case ScalarType::Float32: return load.operator()<float>();
        case ScalarType::Float64: return load.operator()<double>();
        case ScalarType::Uint8: return load.operator()<std::uint8_t>();
        case ScalarType::Int8: return load.operator()<std::int8_t>();
        case ScalarType::Uint16: return load.operator()<std::uint16_t>();
        case ScalarType::Int16: return load.operator()<std::int16_t>();
        case ScalarType::Uint32: return load.operator()<std::uint32_t>();
        default: return load.operator()<std::int32_t>();
    }
}

}  // namespace ply_detail

inline PlyLoadResult load_ply(const std::string& path) {
    using namespace ply_detail;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("ply: cannot open " + path);

    std::string line;
    long line_no = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) throw ParseError("ply: truncated header", line_no);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
    };

    next_line();
    if (line != "ply") throw ParseError("ply: missing magic", line_no);

    bool binary = false;
    std::size_t vertex_count = 0;
    bool in_vertex_element = false;
    struct Prop {
        std::string name;
        ScalarType type;
    };
    std::vector<Prop> props;
    std::size_t trailing_skip_bytes = 0;  // non-vertex elements after vertices unsupported

    for (;;) {
        next_line();
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "comment" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "ascii") binary = false;
            else if (fmt == "binary_little_endian") binary = true;
            else throw ParseError("ply: unsupported format '" + fmt + "'", line_no);
        } else if (tok == "element") {
            std::string name;
            std::size_t count;
            ss >> name >> count;
            in_vertex_element = (name == "vertex");
            if (in_vertex_element) vertex_count = count;
            else if (count > 0)
                throw ParseError("ply: unsupported non-empty element '" + name + "'", line_no);
        } else if (tok == "property") {
            if (!in_vertex_element) continue;
            std::string type, name;
            ss >> type;
            if (type == "list") throw ParseError("ply: list property on vertex", line_no);
            ss >> name;
            props.push_back({name, parse_type(type, line_no)});
        } else if (tok == "end_header") {
            break;
        } else {
            throw ParseError("ply: unknown header keyword '" + tok + "'", line_no);
        }
    }
    (void)trailing_skip_bytes;

    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (int i = 0; i < static_cast<int>(props.size()); ++i) {
        const std::string& n = props[i].name;
        if (n == "x") ix = i;
        else if (n == "y") iy = i;
        else if (n == "z") iz = i;
        else if (n == "red") ir = i;
        else if (n == "green") ig = i;
        else if (n == "blue") ib = i;
    }
    if (ix < 0 || iy < 0 || iz < 0)
        throw ParseError("ply: vertex element lacks x/y/z", line_no);

    PlyLoadResult result;
    result.has_color = ir >= 0 && ig >= 0 && ib >= 0;
    result.cloud.points.reserve(vertex_count);

    if (binary) {
        std::size_t stride = 0;
        std::vector<std::size_t> offsets;
        for (const auto& p : props) {
            offsets.push_back(stride);
            stride += type_size(p.type);
        }
        std::vector<char> buf(stride);
        for (std::size_t v = 0; v < vertex_count; ++v) {
            in.read(buf.data(), static_cast<std::streamsize>(stride));
            if (static_cast<std::size_t>(in.gcount()) != stride)
                throw ParseError("ply: truncated body, vertex " + std::to_string(v),
                                 static_cast<long>(v));
            auto get = [&](int idx) {
                return read_binary_scalar(buf.data() + offsets[static_cast<std::size_t>(idx)],
                                          props[static_cast<std::size_t>(idx)].type);
            };
            ColoredPoint cp;
            cp.position = {get(ix), get(iy), get(iz)};
            if (result.has_color) cp.color = {get(ir), get(ig), get(ib)};
            if (!cp.position.finite())
                throw ParseError("ply: non-finite coordinate, vertex " + std::to_string(v),
                                 static_cast<long>(v));
            result.cloud.points.push_back(cp);
        }
    } else {
        for (std::size_t v = 0; v < vertex_count; ++v) {
            if (!std::getline(in, line))
                throw ParseError("ply: truncated body, vertex " + std::to_string(v), line_no);
            ++line_no;
            std::istringstream ss(line);
            std::vector<double> vals(props.size());
            for (double& d : vals)
                if (!(ss >> d)) throw ParseError("ply: malformed vertex line", line_no);
            ColoredPoint cp;
            cp.position = {vals[static_cast<std::size_t>(ix)],
                           vals[static_cast<std::size_t>(iy)],
                           vals[static_cast<std::size_t>(iz)]};
            if (result.has_color)
                cp.color = {vals[static_cast<std::size_t>(ir)],
                            vals[static_cast<std::size_t>(ig)],
                            vals[static_cast<std::size_t>(ib)]};
            if (!cp.position.finite())
                throw ParseError("ply: non-finite coordinate", line_no);
            result.cloud.points.push_back(cp);
        }
    }
    return result;
}

struct PlySaveOptions {
    bool binary = true;
    bool with_color = true;
    // optional extra uchar property written per vertex (e.g. "canopy")
    std::string scalar_name;
    const std::vector<std::uint8_t>* scalar_values = nullptr;
};

inline void save_ply(const ColoredPointCloud& cloud, const std::string& path,
                     const PlySaveOptions& opt = {}) {
    if (opt.scalar_values && opt.scalar_values->size() != cloud.size())
        throw ParameterError("save_ply: scalar property size mismatch");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("ply: cannot write " + path);

    out << "ply\n"
        << (opt.binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
        << "element vertex " << cloud.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n";
    if (opt.with_color)
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (opt.scalar_values) out << "property uchar " << opt.scalar_name << "\n";
    out << "end_header\n";

    auto clamp_byte = [](double v) {
        return static_cast<std::uint8_t>(std::max(0.0, std::min(255.0, v + 0.5)));
    };

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const ColoredPoint& cp = cloud.points[i];
        const float xyz[3] = {static_cast<float>(cp.position.x),
                              static_cast<float>(cp.position.y),
                              static_cast<float>(cp.position.z)};
        const std::uint8_t rgb[3] = {clamp_byte(cp.color.r), clamp_byte(cp.color.g),
                                     clamp_byte(cp.color.b)};
        if (opt.binary) {
            out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
            if (opt.with_color) out.write(reinterpret_cast<const char*>(rgb), 3);
            if (opt.scalar_values) {
                const std::uint8_t s = (*opt.scalar_values)[i];
                out.write(reinterpret_cast<const char*>(&s), 1);
            }
        } else {
            out << xyz[0] << " " << xyz[1] << " " << xyz[2];
            if (opt.with_color)
                out << " " << int(rgb[0]) << " " << int(rgb[1]) << " " << int(rgb[2]);
            if (opt.scalar_values) out << " " << int((*opt.scalar_values)[i]);
            out << "\n";
        }
    }
    if (!out) throw IoError("ply: write failure on " + path);
}

}  // namespace vinescan
