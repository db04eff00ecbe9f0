#pragma once

#include "fsgen/collab.hpp"
#include "fsgen/scaling.hpp"

#include <string>
#include <vector>

namespace fsgen {

// All renderers emit deterministic byte streams: fixed-precision
// coordinates and a fixed 10-step blue ramp (see FORMATS.md). Shade i of a
// rate r is step floor(10 * r) clamped to 9.
std::string ramp_color(double rate);

// 10-cell mismatch-position heatmap with per-bin labels.
std::string render_heatmap_svg(const PositionHistogram& histogram, const std::string& title);

// Scatter of CoF points with the fitted curve overlaid on a log-R axis.
std::string render_fit_svg(std::span<const CofPoint> points, const ScalingFit& fit,
                           const std::string& title);

struct RenderedFile {
    std::string name; // relative to the bundle root
};

// Reads positions.csv, cof_points.csv and fits.csv from a suite bundle and
// writes one heatmap SVG per (method, pair), one fit overlay SVG per
// method, and scatter.csv extracted from uncertainty.csv. Missing bundle
// members raise RenderError naming the file.
std::vector<RenderedFile> render_bundle(const std::string& bundle_dir,
                                        const std::string& out_dir);

} // namespace fsgen
