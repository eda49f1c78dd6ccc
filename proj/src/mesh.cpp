#include "glocal/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

namespace glocal {

namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b)
{
    if (a > b)
        std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

double signed_area(Point a, Point b, Point c) { return 0.5 * cross(b - a, c - a); }

} // namespace

const char* to_string(Region r)
{
    switch (r) {
    case Region::Defect: return "defect";
    case Region::Layer: return "layer";
    case Region::Exterior: return "exterior";
    }
    return "exterior";
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Element> elements, std::vector<Region> regions)
    : vertices_(std::move(vertices)), elements_(std::move(elements)), regions_(std::move(regions))
{
    if (regions_.empty())
        regions_.assign(elements_.size(), Region::Exterior);
    if (regions_.size() != elements_.size())
        throw MeshError("region tag count does not match element count");

    const std::size_t nv = vertices_.size();
    area_.resize(elements_.size());
    diameter_.resize(elements_.size());
    std::unordered_map<std::uint64_t, std::uint32_t> edge_count;
    edge_count.reserve(elements_.size() * 2);
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        const auto& el = elements_[e];
        for (auto v : el) {
            if (v >= nv)
                throw MeshError("element " + std::to_string(e) + " references vertex " + std::to_string(v) +
                                " out of range");
        }
        Point a = vertices_[el[0]], b = vertices_[el[1]], c = vertices_[el[2]];
        area_[e] = signed_area(a, b, c);
        if (!(area_[e] > 0.0))
            throw MeshError("element " + std::to_string(e) + " has non-positive area");
        diameter_[e] = std::max({norm(b - a), norm(c - b), norm(a - c)});
        for (int i = 0; i < 3; ++i)
            ++edge_count[edge_key(el[i], el[(i + 1) % 3])];
    }

    boundary_flag_.assign(nv, 0);
    for (const auto& [key, count] : edge_count) {
        if (count == 1) {
            boundary_flag_[key >> 32] = 1;
            boundary_flag_[key & 0xffffffffu] = 1;
        }
    }
    for (std::uint32_t v = 0; v < nv; ++v) {
        if (boundary_flag_[v])
            boundary_vertices_.push_back(v);
    }
}

double Mesh::spacing(std::size_t e) const { return diameter_[e] / std::numbers::sqrt2; }

Point Mesh::barycenter(std::size_t e) const
{
    const auto& el = elements_[e];
    Point a = vertices_[el[0]], b = vertices_[el[1]], c = vertices_[el[2]];
    return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

std::array<Point, 3> Mesh::corners(std::size_t e) const
{
    const auto& el = elements_[e];
    return {vertices_[el[0]], vertices_[el[1]], vertices_[el[2]]};
}

double Mesh::max_spacing() const
{
    double m = 0.0;
    for (std::size_t e = 0; e < num_elements(); ++e)
        m = std::max(m, spacing(e));
    return m;
}

std::optional<double> Mesh::max_spacing_in_k() const
{
    std::optional<double> m;
    for (std::size_t e = 0; e < num_elements(); ++e) {
        if (regions_[e] != Region::Exterior)
            m = std::max(m.value_or(0.0), spacing(e));
    }
    return m;
}

double Mesh::total_area() const
{
    double s = 0.0;
    for (double a : area_)
        s += a;
    return s;
}

Mesh Mesh::with_regions(std::vector<Region> regions) const
{
    Mesh copy = *this;
    if (regions.size() != elements_.size())
        throw MeshError("region tag count does not match element count");
    copy.regions_ = std::move(regions);
    return copy;
}

void MeshSpec::validate() const
{
    if (!(h_target > 0.0 && h_target <= H_target && H_target <= 0.25))
        throw ConfigError("mesh spec requires 0 < h_target <= H_target <= 1/4");
    if (!(grading_ratio >= 2.0))
        throw ConfigError("mesh spec requires grading_ratio >= 2");
}

Mesh build_box_mesh(std::size_t n, const Rect& box, std::size_t max_vertices)
{
    if (n == 0)
        throw CapacityError("structured mesh needs at least one subdivision");
    if (n > 1'000'000 || (n + 1) * (n + 1) > max_vertices)
        throw CapacityError("structured mesh with n = " + std::to_string(n) + " exceeds the vertex cap");

    const double w = box.xmax - box.xmin;
    const double hgt = box.ymax - box.ymin;
    std::vector<Point> vertices;
    vertices.reserve((n + 1) * (n + 1));
    for (std::size_t j = 0; j <= n; ++j) {
        for (std::size_t i = 0; i <= n; ++i) {
            // endpoints are set exactly so boundary coordinates are not perturbed
            double x = i == n ? box.xmax : box.xmin + w * static_cast<double>(i) / static_cast<double>(n);
            double y = j == n ? box.ymax : box.ymin + hgt * static_cast<double>(j) / static_cast<double>(n);
            vertices.push_back({x, y});
        }
    }
    std::vector<Mesh::Element> elements;
    elements.reserve(2 * n * n);
    auto id = [n](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            // right-angle vertex first, hypotenuse (the diagonal) as refinement edge
            elements.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j)});
            elements.push_back({id(i, j + 1), id(i, j), id(i + 1, j + 1)});
        }
    }
    return Mesh(std::move(vertices), std::move(elements));
}

Mesh build_structured_mesh(std::size_t n, std::size_t max_vertices)
{
    return build_box_mesh(n, Rect{0.0, 0.0, 1.0, 1.0}, max_vertices);
}

Mesh refine_marked(const Mesh& mesh, std::span<const char> marked)
{
    const auto& els = mesh.elements();
    std::unordered_set<std::uint64_t> cut;
    for (std::size_t e = 0; e < els.size(); ++e) {
        if (marked[e])
            cut.insert(edge_key(els[e][1], els[e][2]));
    }

    // Closure: an element with any cut edge must also cut its refinement edge.
    bool changed = !cut.empty();
    while (changed) {
        changed = false;
        for (const auto& el : els) {
            std::uint64_t ref = edge_key(el[1], el[2]);
            if (cut.contains(ref))
                continue;
            if (cut.contains(edge_key(el[0], el[1])) || cut.contains(edge_key(el[2], el[0]))) {
                cut.insert(ref);
                changed = true;
            }
        }
    }

    std::vector<Point> vertices = mesh.vertices();
    std::unordered_map<std::uint64_t, std::uint32_t> midpoint;
    midpoint.reserve(cut.size());
    std::vector<Mesh::Element> out;
    std::vector<Region> regions;
    out.reserve(els.size() + 2 * cut.size());
    regions.reserve(out.capacity());

    auto mid = [&](std::uint32_t a, std::uint32_t b) {
        auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), 0);
        if (inserted) {
            Point pa = vertices[a], pb = vertices[b];
            vertices.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
            it->second = static_cast<std::uint32_t>(vertices.size() - 1);
        }
        return it->second;
    };

    auto emit = [&](auto&& self, const Mesh::Element& el, Region r) -> void {
        if (!cut.contains(edge_key(el[1], el[2]))) {
            out.push_back(el);
            regions.push_back(r);
            return;
        }
        std::uint32_t m = mid(el[1], el[2]);
        self(self, Mesh::Element{m, el[0], el[1]}, r);
        self(self, Mesh::Element{m, el[2], el[0]}, r);
    };
    for (std::size_t e = 0; e < els.size(); ++e)
        emit(emit, els[e], mesh.region(e));

    return Mesh(std::move(vertices), std::move(out), std::move(regions));
}

std::vector<std::array<std::int64_t, 3>> element_neighbors(const Mesh& mesh)
{
    const auto& els = mesh.elements();
    std::vector<std::array<std::int64_t, 3>> nb(els.size(), {-1, -1, -1});
    std::unordered_map<std::uint64_t, std::pair<std::uint32_t, int>> first;
    first.reserve(els.size() * 2);
    for (std::uint32_t e = 0; e < els.size(); ++e) {
        for (int i = 0; i < 3; ++i) {
            std::uint64_t k = edge_key(els[e][(i + 1) % 3], els[e][(i + 2) % 3]);
            auto [it, inserted] = first.try_emplace(k, e, i);
            if (!inserted) {
                nb[e][i] = it->second.first;
                nb[it->second.first][it->second.second] = e;
            }
        }
    }
    return nb;
}

Mesh build_locally_refined_mesh(const MeshSpec& spec)
{
    spec.validate();
    spec.defect.validate();

    const std::size_t base_n =
        spec.base_n != 0 ? spec.base_n : static_cast<std::size_t>(std::ceil(1.0 / spec.H_target - 1e-9));
    Mesh mesh = build_structured_mesh(base_n);

    std::vector<Shape> zone = spec.defect.k0_shapes;
    zone.insert(zone.end(), spec.defect.k_shapes.begin(), spec.defect.k_shapes.end());
    const double margin = 2.0 * spec.h_target;
    const double slack = 1.0 + 1e-10;

    for (;;) {
        const std::size_t ne = mesh.num_elements();
        std::vector<char> marked(ne, 0);
        bool any = false;
        for (std::size_t e = 0; e < ne; ++e) {
            double s = mesh.spacing(e);
            bool refine = s > spec.H_target * slack;
            if (!refine && s > spec.h_target * slack)
                refine = distance_any(zone, mesh.barycenter(e)) <= margin + mesh.diameter(e);
            marked[e] = refine;
            any = any || refine;
        }
        if (!any) {
            // grading between edge neighbors
            auto nb = element_neighbors(mesh);
            for (std::size_t e = 0; e < ne; ++e) {
                for (auto n : nb[e]) {
                    if (n >= 0 && mesh.spacing(e) > spec.grading_ratio * mesh.spacing(static_cast<std::size_t>(n)) * slack) {
                        marked[e] = 1;
                        any = true;
                    }
                }
            }
        }
        if (!any)
            break;
        std::size_t n_marked = static_cast<std::size_t>(std::count(marked.begin(), marked.end(), 1));
        if (ne + 4 * n_marked > spec.max_elements)
            throw CapacityError("local refinement would exceed the element cap of " +
                                std::to_string(spec.max_elements));
        mesh = refine_marked(mesh, marked);
    }
    return tag_regions(mesh, spec.defect);
}

DilationResult dilate_defect(const Mesh& mesh, const DefectGeometry& defect)
{
    const std::size_t ne = mesh.num_elements();
    std::vector<char> defect_vertex(mesh.num_vertices(), 0);
    bool any_defect = false;
    for (std::size_t e = 0; e < ne; ++e) {
        if (mesh.region(e) == Region::Defect) {
            any_defect = true;
            for (auto v : mesh.element(e))
                defect_vertex[v] = 1;
        }
    }
    if (!any_defect)
        throw GeometryError("defect unresolved: no element barycenter lies in K0");

    // The vertex-sharing layer of a union equals the union of the layers of
    // its connected components, so disjoint defects need no separate pass.
    DilationResult result;
    result.in_k.assign(ne, 0);
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& el = mesh.element(e);
        bool in = defect_vertex[el[0]] || defect_vertex[el[1]] || defect_vertex[el[2]];
        if (!in && !defect.k_shapes.empty())
            in = contains_any(defect.k_shapes, mesh.barycenter(e));
        if (in) {
            result.in_k[e] = 1;
            for (auto v : el)
                result.touches_boundary = result.touches_boundary || mesh.is_boundary(v);
        }
    }
    return result;
}

Mesh tag_regions(const Mesh& mesh, const DefectGeometry& defect, std::vector<std::string>& warnings)
{
    const std::size_t ne = mesh.num_elements();
    std::vector<Region> regions(ne, Region::Exterior);
    for (std::size_t e = 0; e < ne; ++e) {
        if (contains_any(defect.k0_shapes, mesh.barycenter(e)))
            regions[e] = Region::Defect;
    }
    Mesh tagged = mesh.with_regions(regions);
    DilationResult k = dilate_defect(tagged, defect);
    if (k.touches_boundary)
        warnings.emplace_back("region K touches the domain boundary");
    for (std::size_t e = 0; e < ne; ++e) {
        if (k.in_k[e] && regions[e] != Region::Defect)
            regions[e] = Region::Layer;
    }
    return mesh.with_regions(std::move(regions));
}

Mesh tag_regions(const Mesh& mesh, const DefectGeometry& defect)
{
    std::vector<std::string> ignored;
    return tag_regions(mesh, defect, ignored);
}

MeshQuality inspect_mesh(const Mesh& mesh)
{
    MeshQuality q;
    const auto& els = mesh.elements();
    std::unordered_map<std::uint64_t, int> count;
    q.positively_oriented = true;
    for (std::size_t e = 0; e < els.size(); ++e) {
        auto [a, b, c] = mesh.corners(e);
        double area = signed_area(a, b, c);
        q.positively_oriented = q.positively_oriented && area > 0.0;
        q.area_sum += area;
        double perimeter = norm(b - a) + norm(c - b) + norm(a - c);
        double inradius = 2.0 * area / perimeter;
        q.max_shape_ratio = std::max(q.max_shape_ratio, mesh.diameter(e) / inradius);
        for (int i = 0; i < 3; ++i)
            ++count[edge_key(els[e][i], els[e][(i + 1) % 3])];
    }

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (Point p : mesh.vertices()) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    auto on_box = [&](Point p) { return p.x == xmin || p.x == xmax || p.y == ymin || p.y == ymax; };

    // A boundary edge must lie on the box; an interior edge must not.
    q.conforming = true;
    for (const auto& [key, c] : count) {
        Point a = mesh.vertex(key >> 32), b = mesh.vertex(key & 0xffffffffu);
        bool on_side = (a.x == b.x && (a.x == xmin || a.x == xmax)) || (a.y == b.y && (a.y == ymin || a.y == ymax));
        if (c > 2 || (c == 1 && !on_side) || (c == 2 && on_side))
            q.conforming = false;
    }
    q.boundary_flags_exact = true;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
        q.boundary_flags_exact = q.boundary_flags_exact && (mesh.is_boundary(v) == on_box(mesh.vertex(v)));
    return q;
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh)
{
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (Point p : mesh.vertices()) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const std::size_t ne = mesh.num_elements();
    const std::size_t side = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(ne) / 2.0)));
    nx_ = ny_ = side;
    x0_ = xmin;
    y0_ = ymin;
    dx_ = (xmax - xmin) / static_cast<double>(nx_);
    dy_ = (ymax - ymin) / static_cast<double>(ny_);
    if (!(dx_ > 0.0) || !(dy_ > 0.0))
        throw MeshError("point locator needs a mesh with positive extent");

    auto cell_range = [&](std::size_t e) {
        auto c = mesh.corners(e);
        double bx0 = std::min({c[0].x, c[1].x, c[2].x}), bx1 = std::max({c[0].x, c[1].x, c[2].x});
        double by0 = std::min({c[0].y, c[1].y, c[2].y}), by1 = std::max({c[0].y, c[1].y, c[2].y});
        auto clampi = [](double v, std::size_t n) {
            return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
        };
        // pad by a sliver so points on bucket borders find their element
        const double px = 1e-9 * dx_, py = 1e-9 * dy_;
        return std::array<std::size_t, 4>{clampi(std::floor((bx0 - px - x0_) / dx_), nx_),
                                          clampi(std::floor((bx1 + px - x0_) / dx_), nx_),
                                          clampi(std::floor((by0 - py - y0_) / dy_), ny_),
                                          clampi(std::floor((by1 + py - y0_) / dy_), ny_)};
    };

    std::vector<std::uint32_t> counts(nx_ * ny_ + 1, 0);
    for (std::size_t e = 0; e < ne; ++e) {
        auto r = cell_range(e);
        for (std::size_t j = r[2]; j <= r[3]; ++j)
            for (std::size_t i = r[0]; i <= r[1]; ++i)
                ++counts[j * nx_ + i + 1];
    }
    for (std::size_t k = 1; k < counts.size(); ++k)
        counts[k] += counts[k - 1];
    bucket_offsets_ = counts;
    bucket_elements_.resize(counts.back());
    std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
    for (std::size_t e = 0; e < ne; ++e) {
        auto r = cell_range(e);
        for (std::size_t j = r[2]; j <= r[3]; ++j)
            for (std::size_t i = r[0]; i <= r[1]; ++i)
                bucket_elements_[fill[j * nx_ + i]++] = static_cast<std::uint32_t>(e);
    }
}

std::array<double, 3> PointLocator::barycentric(std::size_t e, Point p) const
{
    auto [a, b, c] = mesh_->corners(e);
    double det = cross(b - a, c - a);
    double l1 = cross(p - a, c - a) / det;
    double l2 = cross(b - a, p - a) / det;
    return {1.0 - l1 - l2, l1, l2};
}

std::optional<std::size_t> PointLocator::locate(Point p, double tol) const
{
    double fi = std::floor((p.x - x0_) / dx_);
    double fj = std::floor((p.y - y0_) / dy_);
    std::size_t i = static_cast<std::size_t>(std::clamp(fi, 0.0, static_cast<double>(nx_ - 1)));
    std::size_t j = static_cast<std::size_t>(std::clamp(fj, 0.0, static_cast<double>(ny_ - 1)));
    std::size_t b = j * nx_ + i;
    std::optional<std::size_t> best;
    for (std::uint32_t k = bucket_offsets_[b]; k < bucket_offsets_[b + 1]; ++k) {
        std::size_t e = bucket_elements_[k];
        if (best && e >= *best)
            continue;
        auto l = barycentric(e, p);
        if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol)
            best = e;
    }
    return best;
}

} // namespace glocal
