#include "glocal/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "glocal/effective_field.hpp"
#include "glocal/mesh.hpp"

namespace glocal {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void check_two_scale_params(double R1, double R2)
{
    if (!(R1 > std::abs(R2)))
        throw EllipticityError("two-scale coefficient requires R1 > |R2| (got R1 = " + std::to_string(R1) +
                               ", R2 = " + std::to_string(R2) + ")");
}

} // namespace

CoefficientField::CoefficientField(Eval eval, double lambda, double Lambda, std::optional<double> epsilon,
                                   std::string description)
    : eval_(std::move(eval)), lambda_(lambda), Lambda_(Lambda), epsilon_(epsilon), description_(std::move(description))
{
    if (!(lambda_ > 0.0 && Lambda_ >= lambda_))
        throw EllipticityError("coefficient bounds must satisfy 0 < lambda <= Lambda");
}

ElementCoefficient CoefficientField::per_element() const
{
    return [eval = eval_](std::size_t, Point x) { return eval(x); };
}

CoefficientField two_scale_coefficient(double eps, double R1, double R2)
{
    check_two_scale_params(R1, R2);
    if (!(eps > 0.0))
        throw InputError("two-scale coefficient requires eps > 0");
    const double lo = R1 - std::abs(R2), hi = R1 + std::abs(R2);
    auto eval = [eps, R1, R2](Point x) {
        double slow = (R1 + R2 * std::sin(two_pi * x.x)) * (R1 + R2 * std::cos(two_pi * x.y));
        double fast = (R1 + R2 * std::sin(two_pi * x.x / eps)) * (R1 + R2 * std::sin(two_pi * x.y / eps));
        return SymTensor2::identity(slow / fast);
    };
    return CoefficientField(eval, (lo * lo) / (hi * hi), (hi * hi) / (lo * lo), eps,
                            "two_scale(eps=" + std::to_string(eps) + ")");
}

CoefficientField two_scale_effective(double R1, double R2)
{
    check_two_scale_params(R1, R2);
    const double lo = R1 - std::abs(R2), hi = R1 + std::abs(R2);
    const double denom = R1 * std::sqrt(R1 * R1 - R2 * R2);
    auto eval = [R1, R2, denom](Point x) {
        return SymTensor2::identity((R1 + R2 * std::sin(two_pi * x.x)) * (R1 + R2 * std::cos(two_pi * x.y)) / denom);
    };
    return CoefficientField(eval, lo * lo / denom, hi * hi / denom, std::nullopt, "two_scale_effective");
}

double no_scale_sep_inner(Point x)
{
    double sum = 0.0;
    for (int j = 0; j <= 4; ++j) {
        for (int i = 1; i <= j; ++i) {
            double arg = std::floor(8.0 * (i * x.y - x.x / (i + 1))) + std::floor(150.0 * i * x.x) +
                         std::floor(150.0 * x.y);
            sum += std::cos(arg) / (j + 1);
        }
    }
    return 3.0 + sum / 7.0;
}

double no_scale_sep_outer(Point x, double eps)
{
    return 2.1 + std::cos(two_pi * x.x / eps) * std::cos(two_pi * x.y / eps) + std::sin(4.0 * x.x * x.x * x.y * x.y);
}

CoefficientField no_scale_sep_coefficient(double eps, const DefectGeometry& defect)
{
    if (!(eps > 0.0))
        throw InputError("no-scale-separation coefficient requires eps > 0");
    // sum_j j/(j+1) over j = 0..4 bounds the inner cosine sum
    const double inner_amp = (0.5 + 2.0 / 3.0 + 0.75 + 0.8) / 7.0;
    // sin(4 x1^2 x2^2) on [0,1]^2 ranges over sin([0, 4]) = [sin 4, 1]
    const double outer_lo = 2.1 - 1.0 + std::sin(4.0);
    const double outer_hi = 2.1 + 1.0 + 1.0;
    auto shapes = defect.k0_shapes;
    auto eval = [eps, shapes](Point x) {
        return SymTensor2::identity(contains_any(shapes, x) ? no_scale_sep_inner(x) : no_scale_sep_outer(x, eps));
    };
    return CoefficientField(eval, std::min(outer_lo, 3.0 - inner_amp), std::max(outer_hi, 3.0 + inner_amp), eps,
                            "no_scale_sep(eps=" + std::to_string(eps) + ")");
}

CoefficientField constant_coefficient(double c)
{
    if (!(c > 0.0))
        throw EllipticityError("constant coefficient must be positive");
    return CoefficientField([c](Point) { return SymTensor2::identity(c); }, c, c, std::nullopt,
                            "constant:" + std::to_string(c));
}

CoefficientField coefficient_from_id(const std::string& id, const CoefficientParams& params)
{
    if (id == "two_scale")
        return two_scale_coefficient(params.eps, params.R1, params.R2);
    if (id == "two_scale_effective")
        return two_scale_effective(params.R1, params.R2);
    if (id == "no_scale_sep")
        return no_scale_sep_coefficient(params.eps, params.defect);
    if (id.rfind("constant:", 0) == 0) {
        std::size_t used = 0;
        std::string value = id.substr(9);
        double c = 0.0;
        try {
            c = std::stod(value, &used);
        } catch (const std::exception&) {
            throw ConfigError("bad constant coefficient id '" + id + "'");
        }
        if (used != value.size())
            throw ConfigError("bad constant coefficient id '" + id + "'");
        return constant_coefficient(c);
    }
    throw ConfigError("unknown coefficient id '" + id + "'");
}

bool probe_ellipticity(const CoefficientField& field, std::size_t n)
{
    const Point dirs[3] = {{1.0, 0.0}, {0.0, 1.0}, {std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2}};
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            Point x{(i + 0.5) / static_cast<double>(n), (j + 0.5) / static_cast<double>(n)};
            SymTensor2 a = field(x);
            for (Point xi : dirs) {
                Point axi = a.apply(xi);
                double q = dot(xi, axi);
                if (q < field.lambda() * dot(xi, xi) * (1.0 - 1e-12))
                    return false;
                if (q < dot(axi, axi) / field.Lambda() * (1.0 - 1e-12))
                    return false;
            }
        }
    }
    return true;
}

HybridField::HybridField(CoefficientField micro, Macro macro, std::vector<char> in_k)
    : micro_(std::move(micro)), macro_(std::move(macro)), in_k_(std::move(in_k))
{
    if (std::none_of(in_k_.begin(), in_k_.end(), [](char c) { return c != 0; }))
        throw ConfigError("hybrid coefficient needs a nonempty region K");
    lambda_ = micro_.lambda();
    Lambda_ = micro_.Lambda();
    if (const auto* field = std::get_if<CoefficientField>(&macro_)) {
        lambda_ = std::min(lambda_, field->lambda());
        Lambda_ = std::max(Lambda_, field->Lambda());
    } else {
        const auto& eff = std::get<std::shared_ptr<const EffectiveField>>(macro_);
        if (!eff)
            throw ConfigError("hybrid coefficient: null effective field");
        for (const auto& s : eff->samples()) {
            if (s) {
                lambda_ = std::min(lambda_, s->min_eigenvalue());
                Lambda_ = std::max(Lambda_, s->max_eigenvalue());
            }
        }
    }
}

SymTensor2 HybridField::eval(std::size_t element, Point x) const
{
    if (in_k_[element])
        return micro_(x);
    if (const auto* field = std::get_if<CoefficientField>(&macro_))
        return (*field)(x);
    return std::get<std::shared_ptr<const EffectiveField>>(macro_)->at(element);
}

ElementCoefficient HybridField::as_element_coefficient() const
{
    auto self = std::make_shared<const HybridField>(*this);
    return [self](std::size_t e, Point x) { return self->eval(e, x); };
}

HybridField hybrid(const CoefficientField& micro, HybridField::Macro macro, const Mesh& mesh)
{
    std::vector<char> in_k(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        in_k[e] = mesh.region(e) != Region::Exterior;
    return HybridField(micro, std::move(macro), std::move(in_k));
}

} // namespace glocal
