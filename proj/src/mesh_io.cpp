#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "glocal/mesh.hpp"

namespace glocal {

namespace {

// %.17g round-trips every double exactly.
std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_mesh(std::ostream& out, const Mesh& mesh)
{
    out << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        Point p = mesh.vertex(v);
        out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << (mesh.is_boundary(v) ? 1 : 0) << '\n';
    }
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        out << el[0] << ' ' << el[1] << ' ' << el[2] << ' ' << static_cast<int>(mesh.region(e)) << '\n';
    }
}

Mesh read_mesh(std::istream& in)
{
    std::size_t nv = 0, ne = 0;
    if (!(in >> nv >> ne))
        throw IoError("mesh file: malformed header");
    std::vector<Point> vertices(nv);
    std::vector<char> bflags(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        int flag = 0;
        if (!(in >> vertices[v].x >> vertices[v].y >> flag))
            throw IoError("mesh file: malformed vertex line " + std::to_string(v));
        bflags[v] = static_cast<char>(flag != 0);
    }
    std::vector<Mesh::Element> elements(ne);
    std::vector<Region> regions(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        int region = 0;
        if (!(in >> elements[e][0] >> elements[e][1] >> elements[e][2] >> region))
            throw IoError("mesh file: malformed element line " + std::to_string(e));
        if (region < 0 || region > 2)
            throw IoError("mesh file: unknown region code " + std::to_string(region));
        regions[e] = static_cast<Region>(region);
    }
    Mesh mesh(std::move(vertices), std::move(elements), std::move(regions));
    for (std::size_t v = 0; v < nv; ++v) {
        if (mesh.is_boundary(v) != (bflags[v] != 0))
            throw IoError("mesh file: boundary flag of vertex " + std::to_string(v) + " disagrees with topology");
    }
    return mesh;
}

void write_mesh_file(const std::string& path, const Mesh& mesh)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    write_mesh(out, mesh);
    if (!out)
        throw IoError("write failed: " + path);
}

Mesh read_mesh_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    return read_mesh(in);
}

} // namespace glocal
