#include "pdpowers/csv.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pdpowers {

namespace {

constexpr const char* kMetricsHeader =
    "k,V_est_r,V_est_g,V_true_r,V_true_g,V_star_r,Y,regret,violation,checks,failures";

// Metrics carried into the aggregate files, in column order.
const std::vector<std::string> kAggregateMetrics = {"V_est_r", "V_est_g", "V_true_r", "V_true_g",
                                                    "V_star_r", "Y", "regret", "violation"};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size())
        throw std::runtime_error(fmt::format("{}:{}: bad number '{}'", path.string(), line, cell));
    return v;
}

long parse_long(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
    char* end = nullptr;
    long v = std::strtol(cell.c_str(), &end, 10);
    if (cell.empty() || end != cell.c_str() + cell.size())
        throw std::runtime_error(fmt::format("{}:{}: bad integer '{}'", path.string(), line, cell));
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return in;
}

double metric_of(const MetricsRow& r, std::size_t i) {
    switch (i) {
        case 0: return r.V_est_r;
        case 1: return r.V_est_g;
        case 2: return r.V_true_r;
        case 3: return r.V_true_g;
        case 4: return r.V_star_r;
        case 5: return r.Y;
        case 6: return r.regret;
        default: return r.violation;
    }
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    return fmt::format("{:.17g}", x);
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsSeries& series) {
    auto out = open_out(path);
    out << kMetricsHeader << '\n';
    for (const auto& r : series.rows) {
        out << r.k << ',' << format_double(r.V_est_r) << ',' << format_double(r.V_est_g) << ','
            << format_double(r.V_true_r) << ',' << format_double(r.V_true_g) << ','
            << format_double(r.V_star_r) << ',' << format_double(r.Y) << ','
            << format_double(r.regret) << ',' << format_double(r.violation) << ',' << r.checks << ','
            << r.failures << '\n';
    }
}

MetricsSeries read_metrics_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw std::runtime_error(path.string() + ": unexpected header");
    MetricsSeries series;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != 11)
            throw std::runtime_error(fmt::format("{}:{}: expected 11 columns", path.string(), lineno));
        MetricsRow r;
        r.k = parse_long(cells[0], path, lineno);
        r.V_est_r = parse_double(cells[1], path, lineno);
        r.V_est_g = parse_double(cells[2], path, lineno);
        r.V_true_r = parse_double(cells[3], path, lineno);
        r.V_true_g = parse_double(cells[4], path, lineno);
        r.V_star_r = parse_double(cells[5], path, lineno);
        r.Y = parse_double(cells[6], path, lineno);
        r.regret = parse_double(cells[7], path, lineno);
        r.violation = parse_double(cells[8], path, lineno);
        r.checks = parse_long(cells[9], path, lineno);
        r.failures = parse_long(cells[10], path, lineno);
        series.rows.push_back(r);
    }
    return series;
}

std::size_t AggregateSeries::column(const std::string& metric) const {
    for (std::size_t i = 0; i < metrics.size(); ++i)
        if (metrics[i] == metric) return i;
    throw std::out_of_range("aggregate has no metric " + metric);
}

AggregateSeries aggregate(const std::vector<MetricsSeries>& runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
    const std::size_t rows = runs.front().rows.size();
    for (const auto& r : runs)
        if (r.rows.size() != rows) throw std::invalid_argument("aggregate: runs have different lengths");

    AggregateSeries agg;
    agg.metrics = kAggregateMetrics;
    agg.mean.assign(agg.metrics.size(), std::vector<double>(rows));
    agg.half_width.assign(agg.metrics.size(), std::vector<double>(rows));
    const double n = double(runs.size());
    for (std::size_t i = 0; i < rows; ++i) {
        agg.k.push_back(runs.front().rows[i].k);
        for (std::size_t m = 0; m < agg.metrics.size(); ++m) {
            double sum = 0.0;
            for (const auto& r : runs) sum += metric_of(r.rows[i], m);
            const double mean = sum / n;
            double ss = 0.0;
            for (const auto& r : runs) {
                double dev = metric_of(r.rows[i], m) - mean;
                ss += dev * dev;
            }
            agg.mean[m][i] = mean;
            agg.half_width[m][i] = runs.size() > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
        }
    }
    return agg;
}

void write_aggregate_csv(const std::filesystem::path& path, const AggregateSeries& agg) {
    auto out = open_out(path);
    out << 'k';
    for (const auto& m : agg.metrics) out << ',' << m << "_mean," << m << "_ci95";
    out << '\n';
    for (std::size_t i = 0; i < agg.rows(); ++i) {
        out << agg.k[i];
        for (std::size_t m = 0; m < agg.metrics.size(); ++m)
            out << ',' << format_double(agg.mean[m][i]) << ',' << format_double(agg.half_width[m][i]);
        out << '\n';
    }
}

AggregateSeries read_aggregate_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    auto header = split(line);
    if (header.empty() || header.front() != "k" || header.size() % 2 != 1)
        throw std::runtime_error(path.string() + ": unexpected header");
    AggregateSeries agg;
    for (std::size_t c = 1; c < header.size(); c += 2) {
        const std::string& name = header[c];
        const std::string suffix = "_mean";
        if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
            throw std::runtime_error(path.string() + ": unexpected column " + name);
        agg.metrics.push_back(name.substr(0, name.size() - suffix.size()));
    }
    agg.mean.resize(agg.metrics.size());
    agg.half_width.resize(agg.metrics.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size())
            throw std::runtime_error(fmt::format("{}:{}: wrong column count", path.string(), lineno));
        agg.k.push_back(parse_long(cells[0], path, lineno));
        for (std::size_t m = 0; m < agg.metrics.size(); ++m) {
            agg.mean[m].push_back(parse_double(cells[1 + 2 * m], path, lineno));
            agg.half_width[m].push_back(parse_double(cells[2 + 2 * m], path, lineno));
        }
    }
    return agg;
}

}  // namespace pdpowers
