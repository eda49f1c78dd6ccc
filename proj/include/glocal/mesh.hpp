#ifndef GLOCAL_MESH_HPP
#define GLOCAL_MESH_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glocal/geometry.hpp"
#include "glocal/types.hpp"

namespace glocal {

enum class Region : std::uint8_t { Defect = 0, Layer = 1, Exterior = 2 };

const char* to_string(Region r);

/// Conforming triangulation with per-element region tags.
///
/// Element vertex order is (newest vertex, refinement edge start, refinement
/// edge end) and counterclockwise; the edge opposite the first vertex is the
/// one bisected by newest-vertex refinement. Immutable after construction.
class Mesh {
public:
    using Element = std::array<std::uint32_t, 3>;

    Mesh() = default;
    /// Throws MeshError on out-of-range indices or non-positive areas.
    Mesh(std::vector<Point> vertices, std::vector<Element> elements, std::vector<Region> regions = {});

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_elements() const { return elements_.size(); }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Element>& elements() const { return elements_; }
    const std::vector<Region>& regions() const { return regions_; }
    const std::vector<std::uint32_t>& boundary_vertices() const { return boundary_vertices_; }
    const std::vector<double>& h_local() const { return diameter_; }

    Point vertex(std::size_t v) const { return vertices_[v]; }
    const Element& element(std::size_t e) const { return elements_[e]; }
    Region region(std::size_t e) const { return regions_[e]; }
    bool is_boundary(std::size_t v) const { return boundary_flag_[v] != 0; }

    double area(std::size_t e) const { return area_[e]; }
    double diameter(std::size_t e) const { return diameter_[e]; }
    /// Equivalent grid spacing diameter/sqrt(2): the leg length of a right
    /// isosceles element, so a structured n x n mesh has spacing 1/n.
    double spacing(std::size_t e) const;
    Point barycenter(std::size_t e) const;
    std::array<Point, 3> corners(std::size_t e) const;

    double max_spacing() const;
    /// Max spacing over elements whose tag is Defect or Layer; nullopt if none.
    std::optional<double> max_spacing_in_k() const;
    double total_area() const;

    Mesh with_regions(std::vector<Region> regions) const;

private:
    std::vector<Point> vertices_;
    std::vector<Element> elements_;
    std::vector<Region> regions_;
    std::vector<char> boundary_flag_;
    std::vector<std::uint32_t> boundary_vertices_;
    std::vector<double> area_;
    std::vector<double> diameter_;
};

inline constexpr std::size_t kDefaultVertexCap = 8'000'000;
inline constexpr std::size_t kDefaultElementCap = 8'000'000;

struct MeshSpec {
    double H_target = 0.25;
    double h_target = 0.25;
    double grading_ratio = 2.0;
    DefectGeometry defect;
    /// Subdivisions of the starting structured grid; 0 picks ceil(1/H_target).
    /// Meshes built from a common base_n are nested under uniform refinement.
    std::size_t base_n = 0;
    std::size_t max_elements = kDefaultElementCap;

    void validate() const;
};

/// n x n squares, each split along the (0,0)-(1,1) diagonal. All elements
/// tagged Exterior.
Mesh build_structured_mesh(std::size_t n, std::size_t max_vertices = kDefaultVertexCap);

/// Structured n x n mesh of an axis-aligned box.
Mesh build_box_mesh(std::size_t n, const Rect& box, std::size_t max_vertices = kDefaultVertexCap);

/// Newest-vertex bisection of the marked elements plus the closure needed to
/// keep the mesh conforming. Regions of children are inherited.
Mesh refine_marked(const Mesh& mesh, std::span<const char> marked);

/// Uniform coarse grid, refined by newest-vertex bisection until every
/// element has spacing <= H_target, elements near K0/K have spacing <=
/// h_target, and edge neighbors differ in spacing by at most grading_ratio.
/// Elements are tagged with tag_regions before returning.
Mesh build_locally_refined_mesh(const MeshSpec& spec);

struct DilationResult {
    std::vector<char> in_k;
    bool touches_boundary = false;
};

/// K = K0 elements plus every element sharing a vertex with one, plus
/// elements whose barycenter lies in the defect's explicit k_shapes.
/// Requires Defect tags; throws GeometryError ("defect unresolved") when the
/// mesh has no Defect element.
DilationResult dilate_defect(const Mesh& mesh, const DefectGeometry& defect);

/// Defect iff the barycenter lies in closed K0; Layer iff in K \ K0;
/// otherwise Exterior.
Mesh tag_regions(const Mesh& mesh, const DefectGeometry& defect);
Mesh tag_regions(const Mesh& mesh, const DefectGeometry& defect, std::vector<std::string>& warnings);

/// Edge neighbors: entry i of element e is the element across the edge
/// opposite local vertex i, or -1 on the boundary.
std::vector<std::array<std::int64_t, 3>> element_neighbors(const Mesh& mesh);

struct MeshQuality {
    bool conforming = false;          // interior edges shared by 2, boundary by 1
    bool positively_oriented = false; // all signed areas > 0
    bool boundary_flags_exact = false;
    double area_sum = 0.0;
    double max_shape_ratio = 0.0;     // diameter / inradius
};

/// Direct scans of the structural invariants. The boundary check assumes
/// the mesh covers an axis-aligned box.
MeshQuality inspect_mesh(const Mesh& mesh);

/// Point location through a uniform bucket grid. Ties (points on shared
/// edges or vertices) resolve to the lowest element id.
class PointLocator {
public:
    explicit PointLocator(const Mesh& mesh);

    /// Element containing p within tolerance `tol` in barycentric
    /// coordinates; nullopt outside.
    std::optional<std::size_t> locate(Point p, double tol = 1e-12) const;

    /// Barycentric coordinates of p in element e.
    std::array<double, 3> barycentric(std::size_t e, Point p) const;

private:
    const Mesh* mesh_;
    double x0_ = 0.0, y0_ = 0.0, dx_ = 1.0, dy_ = 1.0;
    std::size_t nx_ = 1, ny_ = 1;
    std::vector<std::uint32_t> bucket_offsets_;
    std::vector<std::uint32_t> bucket_elements_;
};

// Plain-text mesh format: "nv ne", nv lines "x y bflag", ne lines "i j k region".
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void write_mesh_file(const std::string& path, const Mesh& mesh);
Mesh read_mesh_file(const std::string& path);

} // namespace glocal

#endif
