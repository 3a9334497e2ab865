#pragma once

#include "pdpowers/learner.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pdpowers {

/// Decimal text that round-trips a double exactly (17 significant digits).
std::string format_double(double x);

void write_metrics_csv(const std::filesystem::path& path, const MetricsSeries& series);
MetricsSeries read_metrics_csv(const std::filesystem::path& path);

/// Per-episode mean and 95% normal-approximation half-width across seeds.
struct AggregateSeries {
    std::vector<std::string> metrics;            // e.g. "regret"
    std::vector<long> k;
    std::vector<std::vector<double>> mean;       // [metric][episode]
    std::vector<std::vector<double>> half_width; // [metric][episode]

    std::size_t rows() const { return k.size(); }
    /// Index of a metric name; throws if absent.
    std::size_t column(const std::string& metric) const;
};

/// mean +/- 1.96 * sample_sd / sqrt(n); the half-width is 0 for a single seed.
AggregateSeries aggregate(const std::vector<MetricsSeries>& runs);

void write_aggregate_csv(const std::filesystem::path& path, const AggregateSeries& agg);
AggregateSeries read_aggregate_csv(const std::filesystem::path& path);

}  // namespace pdpowers
