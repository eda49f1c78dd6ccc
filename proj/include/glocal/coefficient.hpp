#ifndef GLOCAL_COEFFICIENT_HPP
#define GLOCAL_COEFFICIENT_HPP

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "glocal/geometry.hpp"
#include "glocal/types.hpp"

namespace glocal {

/// Coefficient as seen by assembly: element index plus evaluation point.
using ElementCoefficient = std::function<SymTensor2(std::size_t element, Point x)>;

/// Symmetric tensor-valued field on D with ellipticity bounds.
class CoefficientField {
public:
    using Eval = std::function<SymTensor2(Point)>;

    CoefficientField(Eval eval, double lambda, double Lambda, std::optional<double> epsilon, std::string description);

    SymTensor2 operator()(Point x) const { return eval_(x); }

    double lambda() const { return lambda_; }
    double Lambda() const { return Lambda_; }
    std::optional<double> epsilon() const { return epsilon_; }
    const std::string& description() const { return description_; }

    ElementCoefficient per_element() const;

private:
    Eval eval_;
    double lambda_;
    double Lambda_;
    std::optional<double> epsilon_;
    std::string description_;
};

/// Two-scale coefficient
///   (R1 + R2 sin 2pi x1)(R1 + R2 cos 2pi x2) / ((R1 + R2 sin 2pi x1/eps)(R1 + R2 sin 2pi x2/eps)) I.
/// Requires R1 > |R2| and eps > 0, otherwise EllipticityError / InputError.
CoefficientField two_scale_coefficient(double eps, double R1, double R2);

/// Its effective tensor (R1 + R2 sin 2pi x1)(R1 + R2 cos 2pi x2) / (R1 sqrt(R1^2 - R2^2)) I.
CoefficientField two_scale_effective(double R1, double R2);

/// Coefficient without scale separation: a piecewise-constant floor-function
/// sum inside K0, 2.1 + cos(2pi x1/eps) cos(2pi x2/eps) + sin(4 x1^2 x2^2) outside.
CoefficientField no_scale_sep_coefficient(double eps, const DefectGeometry& defect);

/// The two scalar profiles of no_scale_sep_coefficient.
double no_scale_sep_inner(Point x);
double no_scale_sep_outer(Point x, double eps);

CoefficientField constant_coefficient(double c);

struct CoefficientParams {
    double eps = 0.0;
    double R1 = 2.5;
    double R2 = 1.5;
    DefectGeometry defect;
};

/// Resolves "two_scale", "two_scale_effective", "no_scale_sep" or
/// "constant:<value>"; throws ConfigError for anything else.
CoefficientField coefficient_from_id(const std::string& id, const CoefficientParams& params);

/// Checks the ellipticity bounds along e1, e2 and (e1+e2)/sqrt2 on an
/// n x n probe grid of cell centers.
bool probe_ellipticity(const CoefficientField& field, std::size_t n = 100);

class EffectiveField;

enum class RhoMode { Indicator };

/// b = rho a_micro + (1 - rho) A_macro with rho the indicator of the element
/// set K.
class HybridField {
public:
    using Macro = std::variant<CoefficientField, std::shared_ptr<const EffectiveField>>;

    /// Throws ConfigError when K is empty.
    HybridField(CoefficientField micro, Macro macro, std::vector<char> in_k);

    SymTensor2 eval(std::size_t element, Point x) const;
    SymTensor2 operator()(std::size_t element, Point x) const { return eval(element, x); }
    ElementCoefficient as_element_coefficient() const;

    /// rho on an element: 1 on K, 0 elsewhere.
    double rho(std::size_t element) const { return in_k_[element] ? 1.0 : 0.0; }
    bool in_k(std::size_t element) const { return in_k_[element] != 0; }
    const std::vector<char>& k_elements() const { return in_k_; }
    RhoMode rho_mode() const { return RhoMode::Indicator; }

    double lambda() const { return lambda_; }
    double Lambda() const { return Lambda_; }
    const CoefficientField& micro() const { return micro_; }

private:
    CoefficientField micro_;
    Macro macro_;
    std::vector<char> in_k_;
    double lambda_;
    double Lambda_;
};

/// Convenience: K taken from the mesh tags (Defect or Layer).
class Mesh;
HybridField hybrid(const CoefficientField& micro, HybridField::Macro macro, const Mesh& mesh);

} // namespace glocal

#endif
