#include "splatalign/ply_io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "splatalign/errors.hpp"

namespace splatalign {

namespace {

constexpr double kShC0 = 0.28209479177387814;  // Y_0^0

const char* kProperties[14] = {"x",     "y",     "z",     "opacity", "scale_0",
                               "scale_1", "scale_2", "rot_0",   "rot_1",   "rot_2",
                               "rot_3",   "f_dc_0",  "f_dc_1",  "f_dc_2"};

void write_f32_le(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    unsigned char b[4] = {(unsigned char)(bits & 0xff), (unsigned char)((bits >> 8) & 0xff),
                          (unsigned char)((bits >> 16) & 0xff),
                          (unsigned char)((bits >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

float read_f32_le(const unsigned char* p) {
    uint32_t bits = uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
                    (uint32_t(p[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void export_ply(const GaussianCloud& cloud, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("export_ply: cannot open " + path);

    os << "ply\nformat binary_little_endian 1.0\n";
    os << "element vertex " << cloud.size() << "\n";
    for (const char* p : kProperties) os << "property float " << p << "\n";
    os << "end_header\n";

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        write_f32_le(os, float(cloud.positions[i].x));
        write_f32_le(os, float(cloud.positions[i].y));
        write_f32_le(os, float(cloud.positions[i].z));
        write_f32_le(os, float(cloud.opacity_logits[i]));
        write_f32_le(os, float(cloud.log_scales[i].x));
        write_f32_le(os, float(cloud.log_scales[i].y));
        write_f32_le(os, float(cloud.log_scales[i].z));
        write_f32_le(os, float(cloud.rotations[i].w));
        write_f32_le(os, float(cloud.rotations[i].x));
        write_f32_le(os, float(cloud.rotations[i].y));
        write_f32_le(os, float(cloud.rotations[i].z));
        write_f32_le(os, float((cloud.colors[i].x - 0.5) / kShC0));
        write_f32_le(os, float((cloud.colors[i].y - 0.5) / kShC0));
        write_f32_le(os, float((cloud.colors[i].z - 0.5) / kShC0));
    }
    if (!os) throw io_error("export_ply: write failed for " + path);
}

GaussianCloud import_ply(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("import_ply: cannot open " + path);

    std::string line;
    if (!std::getline(is, line) || line != "ply") throw io_error("import_ply: not a PLY file");

    std::size_t count = 0;
    std::vector<std::string> property_names;
    bool in_vertex = false, binary_le = false;
    while (std::getline(is, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            binary_le = fmt == "binary_little_endian";
        } else if (tag == "element") {
            std::string name;
            ss >> name >> count;
            in_vertex = name == "vertex";
            if (!in_vertex) throw io_error("import_ply: unexpected element " + name);
        } else if (tag == "property" && in_vertex) {
            std::string type, name;
            ss >> type >> name;
            if (type != "float") throw io_error("import_ply: non-float property " + name);
            property_names.push_back(name);
        } else if (tag == "end_header") {
            break;
        }
    }
    if (!binary_le) throw io_error("import_ply: only binary_little_endian is supported");

    std::map<std::string, int> offsets;
    for (std::size_t i = 0; i < property_names.size(); ++i)
        offsets[property_names[i]] = int(i);
    for (const char* p : kProperties)
        if (!offsets.count(p)) throw io_error(std::string("import_ply: missing property ") + p);

    const std::size_t stride = property_names.size() * 4;
    std::vector<unsigned char> record(stride);
    GaussianCloud cloud;
    cloud.resize(count);
    auto field = [&](const char* name) {
        return read_f32_le(record.data() + std::size_t(offsets[name]) * 4);
    };
    for (std::size_t i = 0; i < count; ++i) {
        is.read(reinterpret_cast<char*>(record.data()), std::streamsize(stride));
        if (!is) throw io_error("import_ply: truncated vertex data");
        cloud.positions[i] = {field("x"), field("y"), field("z")};
        cloud.opacity_logits[i] = field("opacity");
        cloud.log_scales[i] = {field("scale_0"), field("scale_1"), field("scale_2")};
        cloud.rotations[i] = Quat{field("rot_0"), field("rot_1"), field("rot_2"), field("rot_3")}
                                 .normalized();
        cloud.colors[i] = {field("f_dc_0") * kShC0 + 0.5, field("f_dc_1") * kShC0 + 0.5,
                           field("f_dc_2") * kShC0 + 0.5};
    }
    return cloud;
}

}  // namespace splatalign
