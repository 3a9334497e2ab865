#include "pdpowers/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace pdpowers {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

// 1, 2 or 5 times a power of ten, roughly span/5.
double nice_step(double span) {
    if (span <= 0.0) return 1.0;
    double raw = span / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double f = raw / mag;
    double step = f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0;
    return step * mag;
}

std::string num(double v) { return fmt::format("{:.6g}", v); }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const std::string& metric,
                       const std::string& title, const std::string& y_label) {
    if (series.empty()) throw std::invalid_argument("render_svg: no series");
    const std::size_t rows = series.front().data->rows();
    for (const auto& s : series) {
        if (s.data->rows() == 0) throw std::invalid_argument("render_svg: empty aggregate for " + s.label);
        if (s.data->rows() != rows || s.data->k != series.front().data->k)
            throw std::invalid_argument("render_svg: aggregates do not share episode axes");
    }

    double x_min = double(series.front().data->k.front());
    double x_max = double(series.front().data->k.back());
    if (x_max <= x_min) x_max = x_min + 1.0;
    double y_min = 0.0;
    double y_max = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        const std::size_t c = s.data->column(metric);
        for (std::size_t i = 0; i < rows; ++i) {
            double lo = s.data->mean[c][i] - s.data->half_width[c][i];
            double hi = s.data->mean[c][i] + s.data->half_width[c][i];
            if (std::isfinite(lo)) y_min = std::min(y_min, lo);
            if (std::isfinite(hi)) y_max = std::max(y_max, hi);
        }
    }
    if (!std::isfinite(y_max) || y_max <= y_min) y_max = y_min + 1.0;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return kTop + ph - (y - y_min) / (y_max - y_min) * ph; };

    std::string svg;
    svg += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        num(kWidth), num(kHeight));
    svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", num(kWidth), num(kHeight));
    svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                       num(kLeft + pw / 2), escape(title));

    // Grid and tick labels.
    const double xs = nice_step(x_max - x_min);
    for (double x = std::ceil(x_min / xs) * xs; x <= x_max + 1e-9 * xs; x += xs) {
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#e0e0e0\"/>\n", num(px(x)),
                           num(kTop), num(kTop + ph));
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(px(x)),
                           num(kTop + ph + 16), num(x));
    }
    const double ys = nice_step(y_max - y_min);
    for (double y = std::ceil(y_min / ys) * ys; y <= y_max + 1e-9 * ys; y += ys) {
        svg += fmt::format("<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#e0e0e0\"/>\n", num(py(y)),
                           num(kLeft), num(kLeft + pw));
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", num(kLeft - 6),
                           num(py(y) + 4), num(y));
    }
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                       num(kLeft), num(kTop), num(pw), num(ph));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">episode k</text>\n", num(kLeft + pw / 2),
                       num(kHeight - 14));
    svg += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                       num(kTop + ph / 2), escape(y_label));

    for (const auto& s : series) {
        const auto& d = *s.data;
        const std::size_t c = d.column(metric);
        std::string band;
        for (std::size_t i = 0; i < rows; ++i)
            band += fmt::format("{},{} ", num(px(double(d.k[i]))), num(py(d.mean[c][i] + d.half_width[c][i])));
        for (std::size_t i = rows; i-- > 0;)
            band += fmt::format("{},{} ", num(px(double(d.k[i]))), num(py(d.mean[c][i] - d.half_width[c][i])));
        svg += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n", band,
                           s.color);
        std::string line;
        for (std::size_t i = 0; i < rows; ++i)
            line += fmt::format("{},{} ", num(px(double(d.k[i]))), num(py(d.mean[c][i])));
        svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", line,
                           s.color);
    }

    // Legend, top-left inside the axes.
    double ly = kTop + 16;
    for (const auto& s : series) {
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"3\"/>\n",
                           num(kLeft + 10), num(ly), num(kLeft + 34), s.color);
        svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", num(kLeft + 40), num(ly + 4), escape(s.label));
        ly += 18;
    }
    svg += "</svg>\n";
    return svg;
}

std::vector<std::filesystem::path> emit_plot(const std::filesystem::path& in_dir,
                                             const std::filesystem::path& out_dir) {
    const AggregateSeries pd = read_aggregate_csv(in_dir / "aggregate_pdpowers.csv");
    const AggregateSeries rnd = read_aggregate_csv(in_dir / "aggregate_random.csv");
    if (pd.rows() == 0 || rnd.rows() == 0) throw std::runtime_error("emit_plot: empty aggregate");
    if (pd.rows() != rnd.rows() || pd.k != rnd.k)
        throw std::runtime_error(fmt::format("emit_plot: mismatched aggregates ({} vs {} rows)", pd.rows(), rnd.rows()));

    const std::vector<PlotSeries> series = {{"PD-POWERS", "#1f77b4", &pd}, {"random policy", "#d62728", &rnd}};
    // Render both documents before touching the filesystem.
    const std::string regret = render_svg(series, "regret", "Cumulative regret", "Regret(k)");
    const std::string violation = render_svg(series, "violation", "Cumulative constraint violation", "Violation(k)");

    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    for (const auto& [name, body] : {std::pair{"regret.svg", &regret}, std::pair{"violation.svg", &violation}}) {
        auto path = out_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << *body;
        written.push_back(path);
    }
    return written;
}

}  // namespace pdpowers
