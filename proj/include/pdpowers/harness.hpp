#pragma once

#include "pdpowers/csv.hpp"
#include "pdpowers/environment.hpp"
#include "pdpowers/learner.hpp"
#include "pdpowers/oracle.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pdpowers {

enum class InstanceKind { Benchmark, Tiny };

/// Parse or range error in a config file. `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0) : std::runtime_error(msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct RunConfig {
    InstanceKind instance = InstanceKind::Benchmark;
    BenchmarkParams bench;
    long K = 2000;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    // Unset learner parameters are derived from (H, K, B).
    std::optional<double> alpha;
    std::optional<double> eta;
    std::optional<double> theta_mix;
    std::optional<double> lambda;
    double delta = 0.01;
    DualVariant dual = DualVariant::Regularized;
    std::optional<double> gamma;  // clipped dual only; defaults to the oracle's Slater margin
    double radius_scale = 1.0;

    bool diagnostics = true;
    int workers = 0;  // 0: one per seed
    std::filesystem::path out_dir = "results";

    int horizon() const;
    CmdpInstance build_instance() const;
    /// Learner parameters with defaults filled in; `slater_gamma` feeds the clipped variant.
    LearnerConfig learner_config(double slater_gamma) const;
    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/**
 * Flat `key = value` text, `#` starts a comment. Keys:
 * instance (benchmark|tiny), H, d, b, block_length, p0, slope, reward_scale,
 * feature_scale, B, K, seeds (comma list or a..b), alpha, eta, theta_mix,
 * lambda, delta, dual (regularized|clipped), gamma, radius_scale,
 * diagnostics (on|off), workers, out_dir.
 */
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Integer value of CMDP_SEED_OFFSET, 0 when unset; throws on garbage.
std::int64_t seed_offset_from_env();

struct ExperimentResult {
    std::vector<std::uint64_t> seeds;  // after the offset
    ComparatorResult comparator;
    std::vector<RunResult> pd_powers;  // one per seed, in seed order
    std::vector<RunResult> random;
    AggregateSeries aggregate_pd_powers;
    AggregateSeries aggregate_random;
    long checks = 0;
    long failures = 0;
    std::vector<std::filesystem::path> files;

    bool ok() const { return failures == 0; }
};

/**
 * Runs both algorithms for every seed on `workers` threads and writes
 * run_<algo>_<seed>.csv, aggregate_<algo>.csv and summary.txt into
 * cfg.out_dir. Output bytes do not depend on the worker count. A learner
 * abort is rethrown (first failing seed in seed order).
 */
ExperimentResult run_experiment(const RunConfig& cfg, std::int64_t seed_offset = 0);

std::string summary_text(const RunConfig& cfg, const ExperimentResult& res);

}  // namespace pdpowers
