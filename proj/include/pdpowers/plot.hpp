#pragma once

#include "pdpowers/csv.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pdpowers {

struct PlotSeries {
    std::string label;
    std::string color;  // any SVG color
    const AggregateSeries* data;
};

/// Standalone SVG: mean line plus shaded 95% band for each series.
std::string render_svg(const std::vector<PlotSeries>& series, const std::string& metric,
                       const std::string& title, const std::string& y_label);

/**
 * Reads aggregate_pdpowers.csv and aggregate_random.csv from `in_dir` and
 * writes regret.svg and violation.svg into `out_dir`. Throws before writing
 * anything if an aggregate is empty or the episode axes differ.
 */
std::vector<std::filesystem::path> emit_plot(const std::filesystem::path& in_dir,
                                             const std::filesystem::path& out_dir);

}  // namespace pdpowers
