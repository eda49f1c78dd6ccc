#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "glocal/harness.hpp"

namespace glocal {

namespace {

std::optional<double> column_value(const LevelResult& l, ErrorColumn column)
{
    if (!l.error.empty())
        return std::nullopt;
    switch (column) {
    case ErrorColumn::E0Global: return l.global ? std::optional(l.global->e0) : std::nullopt;
    case ErrorColumn::E1Global: return l.global ? std::optional(l.global->e1) : std::nullopt;
    case ErrorColumn::E0Defect: return l.defect ? std::optional(l.defect->e0) : std::nullopt;
    case ErrorColumn::E1Defect: return l.defect ? std::optional(l.defect->e1) : std::nullopt;
    }
    return std::nullopt;
}

std::string cell(std::optional<double> v, const char* format)
{
    if (!v || !std::isfinite(*v))
        return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, format, *v);
    return buf;
}

constexpr ErrorColumn kColumns[] = {ErrorColumn::E0Global, ErrorColumn::E1Global, ErrorColumn::E0Defect,
                                    ErrorColumn::E1Defect};
constexpr const char* kColumnNames[] = {"e0_global", "e1_global", "e0_defect", "e1_defect"};
constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};

} // namespace

std::vector<std::optional<double>> column_orders(const ErrorReport& report, ErrorColumn column)
{
    std::vector<std::optional<double>> orders(report.levels.size());
    for (std::size_t i = 1; i < report.levels.size(); ++i) {
        auto a = column_value(report.levels[i - 1], column);
        auto b = column_value(report.levels[i], column);
        if (!a || !b || !(*a > 0.0) || !(*b > 0.0))
            continue;
        std::pair<double, double> pairs[2] = {{report.levels[i - 1].param, *a}, {report.levels[i].param, *b}};
        try {
            orders[i] = convergence_orders(pairs).rows[1].order;
        } catch (const InputError&) {
        }
    }
    return orders;
}

void write_csv(std::ostream& out, const ErrorReport& report, bool include_timing)
{
    out << kCsvHeader << '\n';
    std::vector<std::vector<std::optional<double>>> orders;
    for (auto c : kColumns)
        orders.push_back(column_orders(report, c));
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
        const auto& l = report.levels[i];
        bool ok = l.error.empty();
        out << i << ',' << cell(l.param, "%.10g") << ',' << cell(ok ? std::optional(l.H) : std::nullopt, "%.10g")
            << ',' << cell(ok ? std::optional(l.h) : std::nullopt, "%.10g") << ',' << cell(l.dt, "%.10g");
        for (std::size_t c = 0; c < 4; ++c)
            out << ',' << cell(column_value(l, kColumns[c]), "%.6e") << ',' << cell(orders[c][i], "%.4f");
        out << ',' << cell(ok ? l.e_hmm : std::nullopt, "%.6e") << ',' << cell(ok ? l.eta_K : std::nullopt, "%.6e")
            << ',' << (include_timing ? cell(l.seconds, "%.3f") : std::string()) << '\n';
    }
}

void write_svg(std::ostream& out, const ErrorReport& report)
{
    constexpr double W = 640, Hh = 480, L = 70, R = 150, Tm = 30, B = 50;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& l : report.levels) {
        for (auto c : kColumns) {
            auto v = column_value(l, c);
            if (!v || !(*v > 0.0) || !(l.param > 0.0))
                continue;
            xmin = std::min(xmin, std::log10(l.param));
            xmax = std::max(xmax, std::log10(l.param));
            ymin = std::min(ymin, std::log10(*v));
            ymax = std::max(ymax, std::log10(*v));
        }
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!(xmin <= xmax)) {
        out << "<text x=\"" << W / 2 << "\" y=\"" << Hh / 2 << "\" text-anchor=\"middle\">no data</text>\n</svg>\n";
        return;
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double ly) { return Hh - B - (ly - ymin) / (ymax - ymin) * (Hh - Tm - B); };
    char buf[160];

    out << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - R << "\" height=\"" << Hh - Tm - B
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    const char* axis = report.config.sweep_axis == ParamAxis::H ? "H" : "h";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">log10 %s</text>\n",
                  L + (W - L - R) / 2, Hh - 12, axis);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"16\" y=\"%.1f\" transform=\"rotate(-90 16 %.1f)\" text-anchor=\"middle\">log10 error</text>\n",
                  Tm + (Hh - Tm - B) / 2, Tm + (Hh - Tm - B) / 2);
    out << buf;
    for (double lx : {xmin, xmax}) {
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"11\">%.2f</text>\n",
                      px(lx), Hh - B + 16, lx);
        out << buf;
    }
    for (double ly : {ymin, ymax}) {
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-size=\"11\">%.2f</text>\n",
                      L - 4, py(ly) + 4, ly);
        out << buf;
    }

    for (std::size_t c = 0; c < 4; ++c) {
        std::string points;
        for (const auto& l : report.levels) {
            auto v = column_value(l, kColumns[c]);
            if (!v || !(*v > 0.0) || !(l.param > 0.0))
                continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(std::log10(l.param)), py(std::log10(*v)));
            points += buf;
        }
        if (!points.empty())
            out << "<polyline fill=\"none\" stroke=\"" << kColors[c] << "\" stroke-width=\"2\" points=\"" << points
                << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\" font-size=\"12\">%s</text>\n",
                      W - R + 10, Tm + 16.0 + 18.0 * c, kColors[c], kColumnNames[c]);
        out << buf;
    }

    // slope-1 guide through the midpoint of the data box
    double xm = (xmin + xmax) / 2, ym = (ymin + ymax) / 2, half = (xmax - xmin) / 2;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n",
                  px(xm - half), py(ym - half), px(xm + half), py(ym + half));
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"gray\" font-size=\"12\">slope 1</text>\n",
                  W - R + 10, Tm + 16.0 + 18.0 * 4);
    out << buf << "</svg>\n";
}

void emit_outputs(const ErrorReport& report, const OutputPaths& paths, bool include_timing)
{
    auto open = [](const std::string& path) {
        auto parent = std::filesystem::path(path).parent_path();
        std::error_code ec;
        if (!parent.empty())
            std::filesystem::create_directories(parent, ec);
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw IoError("cannot open " + path + " for writing");
        return out;
    };
    {
        auto out = open(paths.csv);
        write_csv(out, report, include_timing);
        if (!out)
            throw IoError("write failed for " + paths.csv);
    }
    if (!paths.svg.empty()) {
        auto out = open(paths.svg);
        write_svg(out, report);
        if (!out)
            throw IoError("write failed for " + paths.svg);
    }
}

} // namespace glocal
