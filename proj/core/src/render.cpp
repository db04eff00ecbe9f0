#include "fsgen/render.hpp"

#include "fsgen/csv.hpp"
#include "fsgen/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fsgen {

namespace {

namespace fs = std::filesystem;

// Ramp endpoints: #f7fbff (lightest) to #08306b (darkest); integer
// interpolation with round-to-nearest, step i of 10.
struct Rgb {
    int r, g, b;
};

Rgb ramp_step(int i) {
    auto mix = [&](int a, int b) { return (a * (9 - i) + b * i + 4) / 9; };
    return {mix(247, 8), mix(251, 48), mix(255, 107)};
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RenderError("missing bundle file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(split_csv_line(line));
    if (rows.empty()) throw RenderError("empty bundle file: " + path.string());
    return rows;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RenderError("cannot open output file: " + path.string());
    return out;
}

} // namespace

std::string ramp_color(double rate) {
    int step = static_cast<int>(std::floor(rate * 10.0));
    step = std::clamp(step, 0, 9);
    const Rgb c = ramp_step(step);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

std::string render_heatmap_svg(const PositionHistogram& histogram, const std::string& title) {
    const int cell = 56, pad = 24, label_h = 40;
    const int width = pad * 2 + cell * 10;
    const int height = pad + label_h + cell + 36;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    svg << "<text x=\"" << pad << "\" y=\"" << pad + 8
        << "\" font-family=\"monospace\" font-size=\"14\">" << title << "</text>\n";
    for (int b = 0; b < 10; ++b) {
        const int x = pad + b * cell;
        const int y = pad + label_h;
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
            << cell << "\" fill=\"" << ramp_color(histogram.rate[static_cast<std::size_t>(b)])
            << "\" stroke=\"#333333\"/>\n";
        const double rate = histogram.rate[static_cast<std::size_t>(b)];
        const char* text_color = rate >= 0.5 ? "#ffffff" : "#111111";
        svg << "<text x=\"" << x + 4 << "\" y=\"" << y + cell / 2 + 4
            << "\" font-family=\"monospace\" font-size=\"11\" fill=\"" << text_color << "\">"
            << fixed2(rate) << "</text>\n";
        svg << "<text x=\"" << x + 4 << "\" y=\"" << y + cell + 16
            << "\" font-family=\"monospace\" font-size=\"11\">" << b * 10 << "%</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string render_fit_svg(std::span<const CofPoint> points, const ScalingFit& fit,
                           const std::string& title) {
    if (points.empty()) throw RenderError("fit overlay needs at least one point");
    const int width = 480, height = 320, pad = 48;
    double r_min = points[0].r, r_max = points[0].r;
    for (const auto& p : points) {
        r_min = std::min(r_min, p.r);
        r_max = std::max(r_max, p.r);
    }
    if (r_max <= r_min) r_max = r_min * 1.5;
    const double lx0 = std::log10(r_min), lx1 = std::log10(r_max);

    auto sx = [&](double r) {
        return pad + (std::log10(r) - lx0) / (lx1 - lx0) * (width - 2 * pad);
    };
    auto sy = [&](double cof) {
        const double c = std::clamp(cof, 0.0, 1.0);
        return height - pad - c * (height - 2 * pad);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    svg << "<text x=\"" << pad << "\" y=\"20\" font-family=\"monospace\" font-size=\"14\">"
        << title << "</text>\n";
    // Axes.
    svg << "<line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\"" << width - pad
        << "\" y2=\"" << height - pad << "\" stroke=\"#333333\"/>\n";
    svg << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
        << height - pad << "\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << width / 2 - 30 << "\" y=\"" << height - 12
        << "\" font-family=\"monospace\" font-size=\"11\">scale ratio R (log)</text>\n";
    svg << "<text x=\"8\" y=\"" << pad - 8
        << "\" font-family=\"monospace\" font-size=\"11\">CoF</text>\n";
    // Fitted curve sampled on a log grid.
    svg << "<polyline fill=\"none\" stroke=\"#b22222\" stroke-width=\"1.5\" points=\"";
    const int samples = 100;
    for (int i = 0; i <= samples; ++i) {
        const double lr = lx0 + (lx1 - lx0) * i / samples;
        const double r = std::pow(10.0, lr);
        const double cof = predict_cof(fit, r).clamped;
        if (i) svg << ' ';
        svg << fixed2(sx(r)) << ',' << fixed2(sy(cof));
    }
    svg << "\"/>\n";
    for (const auto& p : points) {
        svg << "<circle cx=\"" << fixed2(sx(p.r)) << "\" cy=\"" << fixed2(sy(p.cof))
            << "\" r=\"4\" fill=\"#1f4e96\"/>\n";
    }
    svg << "<text x=\"" << width - pad - 150 << "\" y=\"" << pad + 4
        << "\" font-family=\"monospace\" font-size=\"11\">gamma=" << format_g9(fit.gamma)
        << " alpha=" << format_g9(fit.alpha) << "</text>\n";
    svg << "<text x=\"" << width - pad - 150 << "\" y=\"" << pad + 18
        << "\" font-family=\"monospace\" font-size=\"11\">beta=" << format_g9(fit.beta)
        << " rmse=" << format_g9(fit.rmse) << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::vector<RenderedFile> render_bundle(const std::string& bundle_dir,
                                        const std::string& out_dir) {
    const fs::path bundle(bundle_dir);
    fs::create_directories(out_dir);
    std::vector<RenderedFile> rendered;

    // Heatmaps from positions.csv: task,method,small,large,bin,rate,...
    {
        const auto rows = read_csv(bundle / "positions.csv");
        std::map<std::string, PositionHistogram> groups; // key: method__small__large
        std::map<std::string, std::string> titles;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& row = rows[i];
            if (row.size() < 8) throw RenderError("positions.csv row has too few fields");
            const std::string key = row[1] + "__" + row[2] + "__" + row[3];
            titles[key] = row[1] + " " + row[2] + "+" + row[3];
            auto& hist = groups[key];
            const std::size_t bin = static_cast<std::size_t>(std::stoul(row[4]));
            if (bin > 9) throw RenderError("positions.csv bin out of range");
            hist.rate[bin] = std::stod(row[5]);
            hist.mismatches[bin] = std::stoull(row[6]);
            hist.tokens[bin] = std::stoull(row[7]);
        }
        for (const auto& [key, hist] : groups) {
            const std::string name = "heatmap_" + key + ".svg";
            auto out = open_out(fs::path(out_dir) / name);
            out << render_heatmap_svg(hist, titles[key]);
            rendered.push_back({name});
        }
    }

    // Fit overlays from cof_points.csv + fits.csv.
    {
        const auto point_rows = read_csv(bundle / "cof_points.csv");
        std::map<std::string, std::vector<CofPoint>> per_method;
        for (std::size_t i = 1; i < point_rows.size(); ++i) {
            const auto& row = point_rows[i];
            if (row.size() < 6) throw RenderError("cof_points.csv row has too few fields");
            CofPoint p;
            p.task = row[0];
            p.method = row[1];
            p.r = std::stod(row[4]);
            p.cof = std::stod(row[5]);
            if (p.r > 1.0) per_method[p.method].push_back(p);
        }
        const auto fit_rows = read_csv(bundle / "fits.csv");
        for (std::size_t i = 1; i < fit_rows.size(); ++i) {
            const auto& row = fit_rows[i];
            if (row.size() < 8) throw RenderError("fits.csv row has too few fields");
            const std::string method = row[1];
            ScalingFit fit;
            fit.gamma = std::stod(row[2]);
            fit.alpha = std::stod(row[3]);
            fit.beta = std::stod(row[4]);
            fit.rmse = std::stod(row[5]);
            auto it = per_method.find(method);
            if (it == per_method.end() || it->second.empty()) continue;
            const std::string name = "fit_" + method + ".svg";
            auto out = open_out(fs::path(out_dir) / name);
            out << render_fit_svg(it->second, fit, method + " scaling fit");
            rendered.push_back({name});
        }
    }

    // Scatter extract from uncertainty.csv:
    // top1_prob,entropy,margin,match per step.
    {
        const auto rows = read_csv(bundle / "uncertainty.csv");
        auto out = open_out(fs::path(out_dir) / "scatter.csv");
        out << "method,small,large,top1_prob,entropy,margin,match\n";
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& row = rows[i];
            if (row.size() < 10) throw RenderError("uncertainty.csv row has too few fields");
            out << row[1] << ',' << row[2] << ',' << row[3] << ',' << row[6] << ',' << row[7]
                << ',' << row[8] << ',' << row[9] << '\n';
        }
        rendered.push_back({"scatter.csv"});
    }

    return rendered;
}

} // namespace fsgen
