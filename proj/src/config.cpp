#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "glocal/harness.hpp"
#include "json.hpp"

namespace glocal {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

double number(const json& v, const std::string& what)
{
    if (v.is_number())
        return v.get<double>();
    if (v.is_string()) {
        // "a/b" fractions for mesh sizes
        std::string s = v.get<std::string>();
        double a = 0.0, b = 0.0;
        char slash = 0, extra = 0;
        if (std::sscanf(s.c_str(), "%lf %c %lf %c", &a, &slash, &b, &extra) == 3 && slash == '/' && b != 0.0)
            return a / b;
        double x = 0.0;
        if (std::sscanf(s.c_str(), "%lf %c", &x, &extra) == 1)
            return x;
    }
    throw ConfigError(what + ": expected a number or a fraction string");
}

Point point(const json& v, const std::string& what)
{
    if (!v.is_array() || v.size() != 2)
        throw ConfigError(what + ": expected [x, y]");
    return {number(v[0], what), number(v[1], what)};
}

Shape parse_shape(const json& v)
{
    if (!v.is_object() || v.size() != 1)
        throw ConfigError("defect shape: expected exactly one of rect, polygon, ellipse");
    if (v.contains("rect")) {
        const auto& r = v["rect"];
        if (!r.is_array() || r.size() != 4)
            throw ConfigError("rect: expected [xmin, ymin, xmax, ymax]");
        return Rect{number(r[0], "rect"), number(r[1], "rect"), number(r[2], "rect"), number(r[3], "rect")};
    }
    if (v.contains("polygon")) {
        Polygon p;
        for (const auto& q : v["polygon"])
            p.vertices.push_back(point(q, "polygon"));
        return p;
    }
    if (v.contains("ellipse")) {
        const auto& e = v["ellipse"];
        reject_unknown(e, {"center", "semi"}, "ellipse");
        if (!e.contains("center") || !e.contains("semi"))
            throw ConfigError("ellipse: needs center and semi");
        Point semi = point(e["semi"], "ellipse semi");
        return Ellipse{point(e["center"], "ellipse center"), semi.x, semi.y};
    }
    throw ConfigError("defect shape: expected exactly one of rect, polygon, ellipse");
}

DefectGeometry parse_defect(const json& v)
{
    reject_unknown(v, {"kind", "k0", "k"}, "defect");
    DefectGeometry g;
    std::string kind = v.value("kind", "custom");
    if (kind == "well")
        g.kind = DefectKind::Well;
    else if (kind == "lshape")
        g.kind = DefectKind::LShape;
    else if (kind == "porous")
        g.kind = DefectKind::Porous;
    else if (kind == "custom")
        g.kind = DefectKind::Custom;
    else
        throw ConfigError("defect: unknown kind '" + kind + "'");
    if (v.contains("k0"))
        for (const auto& s : v["k0"])
            g.k0_shapes.push_back(parse_shape(s));
    if (v.contains("k"))
        for (const auto& s : v["k"])
            g.k_shapes.push_back(parse_shape(s));
    return g;
}

bool divides(double T, double dt)
{
    if (!(dt > 0.0))
        return false;
    double r = T / dt;
    return std::round(r) >= 1.0 && std::abs(r - std::round(r)) <= 1e-9 * r;
}

} // namespace

const char* to_string(ExampleId id)
{
    switch (id) {
    case ExampleId::TwoScaleWell: return "two_scale_well";
    case ExampleId::TwoScaleLShape: return "two_scale_lshape";
    case ExampleId::TwoScalePorous: return "two_scale_porous";
    case ExampleId::NoScaleSepWell: return "no_scale_sep_well";
    case ExampleId::Custom: return "custom";
    }
    return "custom";
}

ExampleId example_from_string(const std::string& s)
{
    for (auto id : {ExampleId::TwoScaleWell, ExampleId::TwoScaleLShape, ExampleId::TwoScalePorous,
                    ExampleId::NoScaleSepWell, ExampleId::Custom}) {
        if (s == to_string(id))
            return id;
    }
    throw ConfigError("unknown example '" + s + "'");
}

ExperimentConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& ex) {
        throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
    }
    reject_unknown(root,
                   {"example", "eps", "R1", "R2", "defect", "coefficient", "effective_coefficient", "T", "dt", "sweep",
                    "fixed", "effective", "reference", "base_n", "grading_ratio"},
                   "config");

    ExperimentConfig c;
    if (!root.contains("example"))
        throw ConfigError("config: missing 'example'");
    c.example = example_from_string(root["example"].get<std::string>());

    switch (c.example) {
    case ExampleId::TwoScaleWell: c.defect = well_defect(); break;
    case ExampleId::TwoScaleLShape: c.defect = lshape_defect(); break;
    case ExampleId::TwoScalePorous: c.defect = porous_defect(); break;
    case ExampleId::NoScaleSepWell:
        c.defect = well_defect();
        c.eps = 0.0063;
        c.effective_mode = EffectiveMode::Hmm;
        break;
    case ExampleId::Custom: c.defect = DefectGeometry{}; break;
    }

    if (root.contains("defect")) {
        if (c.example != ExampleId::Custom)
            throw ConfigError("config: 'defect' is only accepted for the custom example");
        c.defect = parse_defect(root["defect"]);
    }
    if (root.contains("eps"))
        c.eps = number(root["eps"], "eps");
    if (root.contains("R1"))
        c.R1 = number(root["R1"], "R1");
    if (root.contains("R2"))
        c.R2 = number(root["R2"], "R2");
    if (root.contains("coefficient"))
        c.coefficient = root["coefficient"].get<std::string>();
    if (root.contains("effective_coefficient"))
        c.effective_coefficient = root["effective_coefficient"].get<std::string>();
    if (root.contains("T"))
        c.T = number(root["T"], "T");
    if (root.contains("dt"))
        c.dt = number(root["dt"], "dt");
    if (root.contains("sweep")) {
        const auto& s = root["sweep"];
        reject_unknown(s, {"axis", "values"}, "sweep");
        std::string axis = s.value("axis", "H");
        if (axis == "H")
            c.sweep_axis = ParamAxis::H;
        else if (axis == "h")
            c.sweep_axis = ParamAxis::h;
        else
            throw ConfigError("sweep: axis must be \"H\" or \"h\"");
        if (s.contains("values"))
            for (const auto& v : s["values"])
                c.sweep_values.push_back(number(v, "sweep value"));
    }
    if (root.contains("fixed") && !root["fixed"].is_null())
        c.fixed = number(root["fixed"], "fixed");
    if (root.contains("effective")) {
        const auto& e = root["effective"];
        reject_unknown(e, {"mode", "delta", "bc", "cell_n", "sampling", "patch_n"}, "effective");
        std::string mode = e.value("mode", "analytic");
        if (mode == "analytic") {
            c.effective_mode = EffectiveMode::Analytic;
            if (e.size() > 1)
                throw ConfigError("effective: analytic mode takes no HMM parameters");
        } else if (mode == "hmm") {
            c.effective_mode = EffectiveMode::Hmm;
            if (e.contains("delta") || e.contains("bc") || e.contains("cell_n") || e.contains("sampling") ||
                e.contains("patch_n")) {
                HmmPolicy p;
                p.delta = e.contains("delta") ? number(e["delta"], "delta") : c.eps;
                p.bc = cell_bc_from_string(e.value("bc", "periodic"));
                p.cell_n = e.value("cell_n", std::size_t{32});
                std::string sampling = e.value("sampling", "element");
                if (sampling == "element")
                    p.sampling = Sampling::PerElement;
                else if (sampling == "patch")
                    p.sampling = Sampling::PerPatch;
                else
                    throw ConfigError("effective: sampling must be \"element\" or \"patch\"");
                p.patch_n = e.value("patch_n", std::size_t{1});
                c.hmm = p;
            }
        } else {
            throw ConfigError("effective: mode must be \"analytic\" or \"hmm\"");
        }
    }
    if (root.contains("reference")) {
        const auto& r = root["reference"];
        reject_unknown(r, {"h", "dt"}, "reference");
        if (r.contains("h"))
            c.h_ref = number(r["h"], "reference h");
        if (r.contains("dt"))
            c.dt_ref = number(r["dt"], "reference dt");
    } else {
        c.dt_ref = c.dt / 4.0;
    }
    if (root.contains("base_n"))
        c.base_n = root["base_n"].get<std::size_t>();
    if (root.contains("grading_ratio"))
        c.grading_ratio = number(root["grading_ratio"], "grading_ratio");

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void ExperimentConfig::validate() const
{
    if (example == ExampleId::Custom) {
        if (defect.k0_shapes.empty())
            throw ConfigError("custom example needs at least one defect shape");
        if (coefficient.empty())
            throw ConfigError("custom example needs a 'coefficient' id");
    }
    try {
        defect.validate();
    } catch (const GeometryError& ex) {
        throw ConfigError(std::string("defect: ") + ex.what());
    }
    if (!divides(T, dt))
        throw ConfigError("dt must divide T");
    if (!divides(T, dt_ref))
        throw ConfigError("reference dt must divide T");
    if (base_n == 0)
        throw ConfigError("base_n must be positive");
    for (std::size_t i = 1; i < sweep_values.size(); ++i) {
        if (!(sweep_values[i] < sweep_values[i - 1]))
            throw ConfigError("sweep values must be strictly decreasing");
    }
    if (sweep_axis == ParamAxis::h && !fixed)
        throw ConfigError("an h sweep needs a fixed H");
    double min_h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sweep_values.size(); ++i) {
        auto [H, h] = level_sizes(i);
        if (!(h > 0.0 && h <= H))
            throw ConfigError("level " + std::to_string(i) + ": need 0 < h <= H");
        min_h = std::min(min_h, h);
    }
    if (!sweep_values.empty() && !(h_ref < min_h))
        throw ConfigError("reference h must be smaller than every level h");
    if (effective_mode == EffectiveMode::Analytic && !analytic_effective())
        throw ConfigError("example has no analytic effective coefficient; use effective mode \"hmm\"");
}

std::pair<double, double> ExperimentConfig::level_sizes(std::size_t i) const
{
    double v = sweep_values.at(i);
    if (sweep_axis == ParamAxis::H)
        return {v, fixed.value_or(v)};
    return {*fixed, v};
}

std::string ExperimentConfig::micro_id() const
{
    if (!coefficient.empty())
        return coefficient;
    return example == ExampleId::NoScaleSepWell ? "no_scale_sep" : "two_scale";
}

CoefficientField ExperimentConfig::micro_coefficient() const
{
    return coefficient_from_id(micro_id(), CoefficientParams{eps, R1, R2, defect});
}

std::optional<CoefficientField> ExperimentConfig::analytic_effective() const
{
    CoefficientParams params{eps, R1, R2, defect};
    if (!effective_coefficient.empty())
        return coefficient_from_id(effective_coefficient, params);
    if (micro_id() == "two_scale")
        return two_scale_effective(R1, R2);
    if (micro_id().rfind("constant:", 0) == 0)
        return coefficient_from_id(micro_id(), params);
    return std::nullopt;
}

HmmPolicy ExperimentConfig::hmm_policy() const
{
    if (hmm)
        return *hmm;
    return default_hmm_policy(micro_coefficient(), micro_id() == "two_scale");
}

} // namespace glocal
