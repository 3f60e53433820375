#include "splatalign/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "splatalign/errors.hpp"

namespace splatalign {

TriMesh read_obj(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("read_obj: cannot open " + path);

    TriMesh mesh;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag.empty() || tag[0] == '#') continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ss >> x >> y >> z))
                throw io_error("read_obj: malformed vertex at line " + std::to_string(line_no));
            double r = 0.7, g = 0.7, b = 0.7;
            if (ss >> r) {
                if (!(ss >> g >> b))
                    throw io_error("read_obj: incomplete vertex color at line " +
                                   std::to_string(line_no));
            }
            mesh.vertices.push_back({x, y, z});
            mesh.vertex_colors.push_back({clamp01(r), clamp01(g), clamp01(b)});
        } else if (tag == "f") {
            std::vector<int> indices;
            std::string token;
            while (ss >> token) {
                // Take the vertex index before any '/'.
                std::size_t slash = token.find('/');
                int idx = std::stoi(slash == std::string::npos ? token : token.substr(0, slash));
                if (idx < 0) idx = int(mesh.vertices.size()) + idx + 1;  // relative indices
                if (idx < 1 || idx > int(mesh.vertices.size()))
                    throw io_error("read_obj: face index out of range at line " +
                                   std::to_string(line_no));
                indices.push_back(idx - 1);
            }
            if (indices.size() < 3)
                throw io_error("read_obj: face with fewer than 3 vertices at line " +
                               std::to_string(line_no));
            for (std::size_t k = 1; k + 1 < indices.size(); ++k)
                mesh.triangles.push_back({indices[0], indices[k], indices[k + 1]});
        }
        // vn / vt / usemtl etc. are ignored.
    }
    return mesh;
}

void write_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream os(path);
    if (!os) throw io_error("write_obj: cannot open " + path);
    char buf[160];
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        const Vec3& c = i < mesh.vertex_colors.size() ? mesh.vertex_colors[i] : Vec3{0.7, 0.7, 0.7};
        std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g %.9g %.9g %.9g\n", v.x, v.y, v.z, c.x,
                      c.y, c.z);
        os << buf;
    }
    for (const auto& t : mesh.triangles)
        os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    if (!os) throw io_error("write_obj: write failed for " + path);
}

}  // namespace splatalign
