#ifndef GLOCAL_GEOMETRY_HPP
#define GLOCAL_GEOMETRY_HPP

#include <string>
#include <variant>
#include <vector>

#include "glocal/types.hpp"

namespace glocal {

struct Rect {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
};

/// Simple polygon; vertices listed counterclockwise.
struct Polygon {
    std::vector<Point> vertices;
};

/// Axis-aligned ellipse given by center and semi-axes.
struct Ellipse {
    Point center;
    double semi_x = 0.0;
    double semi_y = 0.0;
};

using Shape = std::variant<Rect, Polygon, Ellipse>;

enum class DefectKind { Well, LShape, Porous, Custom };

const char* to_string(DefectKind kind);

/// Defect K0 plus an optional explicit buffer K.
///
/// When k_shapes is empty, K is the one-element-layer dilation of the K0
/// elements on whatever mesh the defect is applied to. When it is given,
/// elements whose barycenter lies in one of k_shapes are added to that
/// dilation.
struct DefectGeometry {
    DefectKind kind = DefectKind::Custom;
    std::vector<Shape> k0_shapes;
    std::vector<Shape> k_shapes;

    /// diam K0, the maximal distance between two points of the union.
    double diameter() const;

    /// Throws GeometryError when a shape leaves (0,1)^2, is degenerate, or
    /// when porous shapes overlap.
    void validate() const;
};

// Closed-set membership: boundary points count as inside.
bool contains(const Shape& shape, Point p);
bool contains_any(const std::vector<Shape>& shapes, Point p);

/// Euclidean distance from p to the shape; zero inside. Ellipses are
/// measured through a 256-gon approximation of their boundary.
double distance(const Shape& shape, Point p);
double distance_any(const std::vector<Shape>& shapes, Point p);

Rect bounding_box(const Shape& shape);

/// Boundary samples: polygon vertices, rectangle corners, or `n` points on
/// an ellipse.
std::vector<Point> boundary_samples(const Shape& shape, int n = 256);

double segment_distance(Point p, Point a, Point b);

// Named defects.
DefectGeometry well_defect();
DefectGeometry lshape_defect();
DefectGeometry porous_defect();

} // namespace glocal

#endif
