#include "densify/mesh.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace densify {

namespace {

std::string ply_context(const std::string& path, const std::string& what) {
    return "PLY " + path + ": " + what;
}

void append_float_shortest(std::string& out, float v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

struct AtomicFileWriter {
    explicit AtomicFileWriter(const std::string& path)
        : final_path(path), tmp_path(path + ".tmp") {
        stream.open(tmp_path, std::ios::binary | std::ios::trunc);
        if (!stream) throw IoError("cannot open for writing: " + tmp_path);
    }
    void commit() {
        stream.flush();
        if (!stream) throw IoError("write failed: " + tmp_path);
        stream.close();
        std::error_code ec;
        std::filesystem::rename(tmp_path, final_path, ec);
        if (ec) throw IoError("rename failed: " + tmp_path + " -> " + final_path);
        committed = true;
    }
    ~AtomicFileWriter() {
        if (!committed) {
            std::error_code ec;
            stream.close();
            std::filesystem::remove(tmp_path, ec);
        }
    }
    std::string final_path, tmp_path;
    std::ofstream stream;
    bool committed = false;
};

}  // namespace

void TriangleMesh::validate() const {
    for (const auto& v : vertices) {
        if (!v.allFinite()) throw ValidationError("mesh: non-finite vertex");
    }
    const uint32_t n = static_cast<uint32_t>(vertices.size());
    for (const auto& t : triangles) {
        if (t[0] >= n || t[1] >= n || t[2] >= n) {
            throw ValidationError("mesh: triangle index out of range");
        }
    }
    if (!colors.empty() && colors.size() != vertices.size()) {
        throw ValidationError("mesh: color count does not match vertex count");
    }
}

void save_mesh(const TriangleMesh& mesh, const std::string& path,
               PlyFormat format) {
    mesh.validate();
    AtomicFileWriter out(path);
    auto& os = out.stream;

    const bool binary = format == PlyFormat::kBinaryLittleEndian;
    os << "ply\n";
    os << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
    os << "element vertex " << mesh.vertices.size() << "\n";
    os << "property float x\nproperty float y\nproperty float z\n";
    if (mesh.has_colors()) {
        os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    os << "element face " << mesh.triangles.size() << "\n";
    os << "property list uchar int vertex_indices\n";
    os << "end_header\n";

    if (binary) {
        for (size_t i = 0; i < mesh.vertices.size(); ++i) {
            float xyz[3] = {mesh.vertices[i].x(), mesh.vertices[i].y(),
                            mesh.vertices[i].z()};
            os.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
            if (mesh.has_colors()) {
                os.write(reinterpret_cast<const char*>(mesh.colors[i].data()), 3);
            }
        }
        for (const auto& t : mesh.triangles) {
            const uint8_t n = 3;
            int32_t idx[3] = {static_cast<int32_t>(t[0]),
                              static_cast<int32_t>(t[1]),
                              static_cast<int32_t>(t[2])};
            os.write(reinterpret_cast<const char*>(&n), 1);
            os.write(reinterpret_cast<const char*>(idx), sizeof(idx));
        }
    } else {
        std::string line;
        for (size_t i = 0; i < mesh.vertices.size(); ++i) {
            line.clear();
            append_float_shortest(line, mesh.vertices[i].x());
            line.push_back(' ');
            append_float_shortest(line, mesh.vertices[i].y());
            line.push_back(' ');
            append_float_shortest(line, mesh.vertices[i].z());
            if (mesh.has_colors()) {
                for (int c = 0; c < 3; ++c) {
                    line.push_back(' ');
                    line += std::to_string(mesh.colors[i][c]);
                }
            }
            line.push_back('\n');
            os << line;
        }
        for (const auto& t : mesh.triangles) {
            os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
        }
    }
    out.commit();
}

namespace {

struct PlyProperty {
    std::string type;   // float, uchar, int, ...
    std::string name;
    bool is_list = false;
    std::string count_type;
};

struct PlyElement {
    std::string name;
    size_t count = 0;
    std::vector<PlyProperty> properties;
};

size_t scalar_size(const std::string& type, const std::string& path) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
        return 1;
    if (type == "short" || type == "ushort" || type == "int16" ||
        type == "uint16")
        return 2;
    if (type == "int" || type == "uint" || type == "int32" ||
        type == "uint32" || type == "float" || type == "float32")
        return 4;
    if (type == "double" || type == "float64") return 8;
    throw IoError(ply_context(path, "unsupported property type '" + type + "'"));
}

double read_binary_scalar(std::istream& is, const std::string& type,
                          const std::string& path) {
    unsigned char buf[8];
    const size_t n = scalar_size(type, path);
    is.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
    if (!is) throw IoError(ply_context(path, "unexpected end of binary data"));
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
    // Integers, little-endian.
    uint64_t u = 0;
    for (size_t i = 0; i < n; ++i) u |= static_cast<uint64_t>(buf[i]) << (8 * i);
    const bool is_signed = type == "char" || type == "short" || type == "int" ||
                           type == "int8" || type == "int16" || type == "int32";
    if (is_signed) {
        const int shift = static_cast<int>(64 - 8 * n);
        return static_cast<double>(static_cast<int64_t>(u << shift) >> shift);
    }
    return static_cast<double>(u);
}

float exact_float(double v) { return static_cast<float>(v); }

}  // namespace

TriangleMesh load_mesh(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(ply_context(path, "cannot open file"));

    std::string line;
    if (!std::getline(is, line)) throw IoError(ply_context(path, "empty file"));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ply") throw IoError(ply_context(path, "missing 'ply' magic"));

    bool binary = false;
    bool format_seen = false;
    std::vector<PlyElement> elements;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                throw IoError(ply_context(path, "unsupported format '" + fmt + "'"));
            }
            format_seen = true;
        } else if (tok == "element") {
            PlyElement el;
            ls >> el.name >> el.count;
            if (!ls) throw IoError(ply_context(path, "malformed element line"));
            elements.push_back(el);
        } else if (tok == "property") {
            if (elements.empty()) {
                throw IoError(ply_context(path, "property before element"));
            }
            PlyProperty p;
            std::string t;
            ls >> t;
            if (t == "list") {
                p.is_list = true;
                ls >> p.count_type >> p.type >> p.name;
            } else {
                p.type = t;
                ls >> p.name;
            }
            if (!ls) throw IoError(ply_context(path, "malformed property line"));
            elements.back().properties.push_back(p);
        } else if (tok == "end_header") {
            break;
        } else {
            throw IoError(ply_context(path, "unexpected header token '" + tok + "'"));
        }
    }
    if (!format_seen) throw IoError(ply_context(path, "missing format line"));

    TriangleMesh mesh;
    for (const auto& el : elements) {
        if (el.name == "vertex") {
            int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
            for (size_t i = 0; i < el.properties.size(); ++i) {
                const auto& p = el.properties[i];
                if (p.is_list) {
                    throw IoError(ply_context(path, "list property on vertex"));
                }
                if (p.name == "x") ix = static_cast<int>(i);
                if (p.name == "y") iy = static_cast<int>(i);
                if (p.name == "z") iz = static_cast<int>(i);
                if (p.name == "red") ir = static_cast<int>(i);
                if (p.name == "green") ig = static_cast<int>(i);
                if (p.name == "blue") ib = static_cast<int>(i);
            }
            if (ix < 0 || iy < 0 || iz < 0) {
                throw IoError(ply_context(path, "vertex element lacks x/y/z"));
            }
            const bool has_rgb = ir >= 0 && ig >= 0 && ib >= 0;
            mesh.vertices.reserve(el.count);
            if (has_rgb) mesh.colors.reserve(el.count);
            std::vector<double> row(el.properties.size());
            for (size_t v = 0; v < el.count; ++v) {
                if (binary) {
                    for (size_t i = 0; i < el.properties.size(); ++i) {
                        row[i] = read_binary_scalar(is, el.properties[i].type, path);
                    }
                } else {
                    for (size_t i = 0; i < el.properties.size(); ++i) {
                        if (!(is >> row[i])) {
                            throw IoError(ply_context(path, "truncated vertex data"));
                        }
                    }
                }
                mesh.vertices.emplace_back(exact_float(row[ix]),
                                           exact_float(row[iy]),
                                           exact_float(row[iz]));
                if (has_rgb) {
                    mesh.colors.push_back({static_cast<uint8_t>(row[ir]),
                                           static_cast<uint8_t>(row[ig]),
                                           static_cast<uint8_t>(row[ib])});
                }
            }
        } else if (el.name == "face") {
            const PlyProperty* list = nullptr;
            for (const auto& p : el.properties) {
                if (p.is_list &&
                    (p.name == "vertex_indices" || p.name == "vertex_index")) {
                    list = &p;
                }
            }
            if (el.count > 0 && list == nullptr) {
                throw IoError(ply_context(path, "face element lacks an index list"));
            }
            mesh.triangles.reserve(el.count);
            for (size_t f = 0; f < el.count; ++f) {
                size_t n;
                if (binary) {
                    n = static_cast<size_t>(
                        read_binary_scalar(is, list->count_type, path));
                } else {
                    if (!(is >> n)) {
                        throw IoError(ply_context(path, "truncated face data"));
                    }
                }
                if (n != 3) {
                    throw IoError(ply_context(path, "non-triangle face (count " +
                                                        std::to_string(n) + ")"));
                }
                std::array<uint32_t, 3> tri{};
                for (int i = 0; i < 3; ++i) {
                    double v;
                    if (binary) {
                        v = read_binary_scalar(is, list->type, path);
                    } else if (!(is >> v)) {
                        throw IoError(ply_context(path, "truncated face data"));
                    }
                    if (v < 0) {
                        throw IoError(ply_context(path, "negative vertex index"));
                    }
                    tri[static_cast<size_t>(i)] = static_cast<uint32_t>(v);
                }
                mesh.triangles.push_back(tri);
            }
        } else {
            // Skip unknown elements conservatively (only possible for ascii
            // trailing elements; binary skipping would need full layout info).
            if (binary && el.count > 0) {
                throw IoError(ply_context(path, "unsupported element '" + el.name +
                                                    "' in binary file"));
            }
        }
    }
    mesh.validate();
    return mesh;
}

void save_point_cloud(const std::vector<Vec3>& points, const std::string& path,
                      PlyFormat format) {
    TriangleMesh m;
    m.vertices.reserve(points.size());
    for (const auto& p : points) m.vertices.emplace_back(p.cast<float>());
    save_mesh(m, path, format);
}

}  // namespace densify
