#ifndef GLOCAL_TYPES_HPP
#define GLOCAL_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace glocal {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Symmetric 2x2 tensor [[xx, xy], [xy, yy]].
struct SymTensor2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    static SymTensor2 identity(double scale = 1.0) { return {scale, 0.0, scale}; }

    Point apply(Point v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

    friend SymTensor2 operator+(SymTensor2 a, SymTensor2 b) { return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy}; }
    friend SymTensor2 operator-(SymTensor2 a, SymTensor2 b) { return {a.xx - b.xx, a.xy - b.xy, a.yy - b.yy}; }
    friend SymTensor2 operator*(double s, SymTensor2 a) { return {s * a.xx, s * a.xy, s * a.yy}; }
    friend bool operator==(SymTensor2 a, SymTensor2 b) = default;

    double min_eigenvalue() const {
        double m = 0.5 * (xx + yy);
        double r = std::hypot(0.5 * (xx - yy), xy);
        return m - r;
    }
    double max_eigenvalue() const {
        double m = 0.5 * (xx + yy);
        double r = std::hypot(0.5 * (xx - yy), xy);
        return m + r;
    }
    /// Spectral norm, i.e. the largest absolute eigenvalue.
    double spectral_norm() const {
        return std::max(std::abs(min_eigenvalue()), std::abs(max_eigenvalue()));
    }
};

// Error categories. Every failure raised by the library derives from Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CapacityError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };
class MeshError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class EllipticityError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class DefinitenessError : public Error {
public:
    DefinitenessError(const std::string& what, std::size_t iteration) : Error(what), iteration_(iteration) {}
    std::size_t iteration() const { return iteration_; }

private:
    std::size_t iteration_;
};

} // namespace glocal

#endif
