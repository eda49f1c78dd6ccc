#include "glocal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace glocal {

namespace {

bool point_in_polygon(const Polygon& poly, Point p)
{
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    // on-boundary points are inside
    for (std::size_t i = 0; i < n; ++i) {
        if (segment_distance(p, v[i], v[(i + 1) % n]) <= 1e-14)
            return true;
    }
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            double xcross = (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x;
            if (p.x < xcross)
                inside = !inside;
        }
    }
    return inside;
}

double polyline_distance(const std::vector<Point>& ring, Point p)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i)
        best = std::min(best, segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
    return best;
}

} // namespace

const char* to_string(DefectKind kind)
{
    switch (kind) {
    case DefectKind::Well: return "well";
    case DefectKind::LShape: return "lshape";
    case DefectKind::Porous: return "porous";
    case DefectKind::Custom: return "custom";
    }
    return "custom";
}

double segment_distance(Point p, Point a, Point b)
{
    Point ab = b - a;
    double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return norm(p - (a + t * ab));
}

bool contains(const Shape& shape, Point p)
{
    return std::visit(
        [p](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Rect>) {
                return p.x >= s.xmin && p.x <= s.xmax && p.y >= s.ymin && p.y <= s.ymax;
            } else if constexpr (std::is_same_v<S, Polygon>) {
                return point_in_polygon(s, p);
            } else {
                double dx = (p.x - s.center.x) / s.semi_x;
                double dy = (p.y - s.center.y) / s.semi_y;
                return dx * dx + dy * dy <= 1.0 + 1e-12;
            }
        },
        shape);
}

bool contains_any(const std::vector<Shape>& shapes, Point p)
{
    return std::any_of(shapes.begin(), shapes.end(), [p](const Shape& s) { return contains(s, p); });
}

std::vector<Point> boundary_samples(const Shape& shape, int n)
{
    return std::visit(
        [n](const auto& s) -> std::vector<Point> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Rect>) {
                return {{s.xmin, s.ymin}, {s.xmax, s.ymin}, {s.xmax, s.ymax}, {s.xmin, s.ymax}};
            } else if constexpr (std::is_same_v<S, Polygon>) {
                return s.vertices;
            } else {
                std::vector<Point> ring(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) {
                    double t = 2.0 * std::numbers::pi * i / n;
                    ring[static_cast<std::size_t>(i)] = {s.center.x + s.semi_x * std::cos(t),
                                                         s.center.y + s.semi_y * std::sin(t)};
                }
                return ring;
            }
        },
        shape);
}

double distance(const Shape& shape, Point p)
{
    if (contains(shape, p))
        return 0.0;
    return polyline_distance(boundary_samples(shape), p);
}

double distance_any(const std::vector<Shape>& shapes, Point p)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : shapes)
        best = std::min(best, distance(s, p));
    return best;
}

Rect bounding_box(const Shape& shape)
{
    if (const auto* e = std::get_if<Ellipse>(&shape))
        return {e->center.x - e->semi_x, e->center.y - e->semi_y, e->center.x + e->semi_x, e->center.y + e->semi_y};
    Rect box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (Point q : boundary_samples(shape)) {
        box.xmin = std::min(box.xmin, q.x);
        box.ymin = std::min(box.ymin, q.y);
        box.xmax = std::max(box.xmax, q.x);
        box.ymax = std::max(box.ymax, q.y);
    }
    return box;
}

double DefectGeometry::diameter() const
{
    std::vector<Point> pts;
    for (const auto& s : k0_shapes) {
        auto b = boundary_samples(s, 64);
        pts.insert(pts.end(), b.begin(), b.end());
    }
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            d = std::max(d, norm(pts[i] - pts[j]));
    return d;
}

void DefectGeometry::validate() const
{
    if (k0_shapes.empty())
        throw GeometryError("defect has no K0 shapes");
    auto check_inside = [](const Shape& s) {
        Rect b = bounding_box(s);
        if (!(b.xmin > 0.0 && b.ymin > 0.0 && b.xmax < 1.0 && b.ymax < 1.0))
            throw GeometryError("defect shape does not lie strictly inside the unit square");
        if (!(b.xmax > b.xmin && b.ymax > b.ymin))
            throw GeometryError("degenerate defect shape");
        if (const auto* e = std::get_if<Ellipse>(&s); e && (e->semi_x <= 0.0 || e->semi_y <= 0.0))
            throw GeometryError("ellipse with non-positive semi-axis");
        if (const auto* p = std::get_if<Polygon>(&s); p && p->vertices.size() < 3)
            throw GeometryError("polygon with fewer than 3 vertices");
    };
    for (const auto& s : k0_shapes)
        check_inside(s);
    for (const auto& s : k_shapes)
        check_inside(s);

    if (kind == DefectKind::Porous) {
        for (std::size_t i = 0; i < k0_shapes.size(); ++i) {
            for (std::size_t j = i + 1; j < k0_shapes.size(); ++j) {
                bool overlap = false;
                for (Point q : boundary_samples(k0_shapes[i]))
                    overlap = overlap || contains(k0_shapes[j], q);
                for (Point q : boundary_samples(k0_shapes[j]))
                    overlap = overlap || contains(k0_shapes[i], q);
                if (overlap)
                    throw GeometryError("porous defect shapes " + std::to_string(i) + " and " + std::to_string(j) +
                                        " are not disjoint");
            }
        }
    }
}

DefectGeometry well_defect()
{
    DefectGeometry g;
    g.kind = DefectKind::Well;
    g.k0_shapes = {Rect{0.45, 0.45, 0.55, 0.55}};
    g.k_shapes = {Rect{0.44, 0.44, 0.56, 0.56}};
    return g;
}

DefectGeometry lshape_defect()
{
    DefectGeometry g;
    g.kind = DefectKind::LShape;
    g.k0_shapes = {Polygon{{{0.4, 0.4}, {0.73, 0.4}, {0.73, 0.43}, {0.43, 0.43}, {0.43, 0.73}, {0.4, 0.73}}}};
    g.k_shapes = {
        Polygon{{{0.385, 0.385}, {0.745, 0.385}, {0.745, 0.445}, {0.445, 0.445}, {0.445, 0.745}, {0.385, 0.745}}}};
    return g;
}

DefectGeometry porous_defect()
{
    const Point centers[6] = {{0.2, 0.8}, {0.2, 0.2}, {0.4, 0.8}, {0.5, 0.2}, {0.7, 0.6}, {0.9, 0.1}};
    const double k0_axes[6][2] = {{0.0125, 0.025}, {0.0125, 0.05}, {0.025, 0.025},
                                  {0.05, 0.0125},  {0.025, 0.0725}, {0.025, 0.025}};
    // K axes listed explicitly; note 1.4 * 0.0725 != 0.0875 for the fifth ellipse.
    const double k_axes[6][2] = {{0.0175, 0.035}, {0.0175, 0.07}, {0.035, 0.035},
                                 {0.07, 0.0175},  {0.035, 0.0875}, {0.035, 0.035}};
    DefectGeometry g;
    g.kind = DefectKind::Porous;
    for (int i = 0; i < 6; ++i) {
        g.k0_shapes.emplace_back(Ellipse{centers[i], k0_axes[i][0], k0_axes[i][1]});
        g.k_shapes.emplace_back(Ellipse{centers[i], k_axes[i][0], k_axes[i][1]});
    }
    return g;
}

} // namespace glocal
