#include "pdpowers/harness.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace pdpowers {

namespace {

std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v, int line) {
    char* end = nullptr;
    errno = 0;
    double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
        throw ConfigError(fmt::format("line {}: {} expects a number, got '{}'", line, key, v), line);
    return x;
}

long long to_integer(const std::string& key, const std::string& v, int line) {
    long long x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(fmt::format("line {}: {} expects an integer, got '{}'", line, key, v), line);
    return x;
}

std::uint64_t to_seed(const std::string& v, int line) {
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(fmt::format("line {}: seeds: bad seed '{}'", line, v), line);
    return x;
}

std::vector<std::uint64_t> parse_seeds(const std::string& v, int line) {
    std::vector<std::uint64_t> seeds;
    auto range = v.find("..");
    if (range != std::string::npos) {
        std::uint64_t lo = to_seed(trim(v.substr(0, range)), line);
        std::uint64_t hi = to_seed(trim(v.substr(range + 2)), line);
        if (hi < lo || hi - lo >= 100000)
            throw ConfigError(fmt::format("line {}: seeds: bad range '{}'", line, v), line);
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) seeds.push_back(to_seed(trim(item), line));
    return seeds;
}

bool to_switch(const std::string& key, const std::string& v, int line) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError(fmt::format("line {}: {} expects on|off, got '{}'", line, key, v), line);
}

int to_int(const std::string& key, const std::string& v, int line) {
    long long x = to_integer(key, v, line);
    if (x < INT32_MIN || x > INT32_MAX)
        throw ConfigError(fmt::format("line {}: {} out of range", line, key), line);
    return int(x);
}

}  // namespace

int RunConfig::horizon() const { return instance == InstanceKind::Tiny ? 3 : bench.H; }

CmdpInstance RunConfig::build_instance() const {
    return instance == InstanceKind::Tiny ? build_tiny_instance() : build_benchmark_instance(bench);
}

LearnerConfig RunConfig::learner_config(double slater_gamma) const {
    const double B = instance == InstanceKind::Tiny ? 3.0 : bench.B;
    LearnerConfig lc = LearnerConfig::defaults(horizon(), K, B);
    if (alpha) lc.alpha = *alpha;
    if (eta) lc.eta = *eta;
    if (theta_mix) lc.theta_mix = *theta_mix;
    if (lambda) lc.lambda = *lambda;
    lc.delta = delta;
    lc.dual = dual;
    lc.gamma_for_clipped = gamma.value_or(slater_gamma);
    lc.radius_scale = radius_scale;
    lc.diagnostics = diagnostics;
    return lc;
}

void RunConfig::validate() const {
    auto bad = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why); };
    if (K < 1) bad("K", "must be >= 1");
    if (seeds.empty()) bad("seeds", "must not be empty");
    if (alpha && !(*alpha > 0.0)) bad("alpha", "must be positive");
    if (eta && !(*eta > 0.0)) bad("eta", "must be positive");
    if (theta_mix && !(*theta_mix > 0.0 && *theta_mix <= 1.0)) bad("theta_mix", "must lie in (0,1]");
    if (lambda && !(*lambda > 0.0)) bad("lambda", "must be positive");
    if (!(delta > 0.0 && delta < 1.0)) bad("delta", "must lie in (0,1)");
    if (gamma && !(*gamma > 0.0)) bad("gamma", "must be positive");
    if (!(radius_scale >= 0.0)) bad("radius_scale", "must be >= 0");
    if (workers < 0) bad("workers", "must be >= 0");
    if (instance == InstanceKind::Benchmark) {
        try {
            bench.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::map<std::string, int> seen;
    using Setter = std::function<void(const std::string&, int)>;
    const std::map<std::string, Setter> setters = {
        {"instance",
         [&](const std::string& v, int ln) {
             if (v == "benchmark") cfg.instance = InstanceKind::Benchmark;
             else if (v == "tiny") cfg.instance = InstanceKind::Tiny;
             else throw ConfigError(fmt::format("line {}: instance must be benchmark or tiny", ln), ln);
         }},
        {"H", [&](const std::string& v, int ln) { cfg.bench.H = to_int("H", v, ln); }},
        {"d", [&](const std::string& v, int ln) { cfg.bench.d = to_int("d", v, ln); }},
        {"b", [&](const std::string& v, int ln) { cfg.bench.b = to_double("b", v, ln); }},
        {"block_length", [&](const std::string& v, int ln) { cfg.bench.block_length = to_int("block_length", v, ln); }},
        {"p0", [&](const std::string& v, int ln) { cfg.bench.p0 = to_double("p0", v, ln); }},
        {"slope", [&](const std::string& v, int ln) { cfg.bench.slope = to_double("slope", v, ln); }},
        {"reward_scale", [&](const std::string& v, int ln) { cfg.bench.reward_scale = to_double("reward_scale", v, ln); }},
        {"feature_scale",
         [&](const std::string& v, int ln) { cfg.bench.feature_scale = to_double("feature_scale", v, ln); }},
        {"B", [&](const std::string& v, int ln) { cfg.bench.B = to_double("B", v, ln); }},
        {"K", [&](const std::string& v, int ln) { cfg.K = long(to_integer("K", v, ln)); }},
        {"seeds", [&](const std::string& v, int ln) { cfg.seeds = parse_seeds(v, ln); }},
        {"alpha", [&](const std::string& v, int ln) { cfg.alpha = to_double("alpha", v, ln); }},
        {"eta", [&](const std::string& v, int ln) { cfg.eta = to_double("eta", v, ln); }},
        {"theta_mix", [&](const std::string& v, int ln) { cfg.theta_mix = to_double("theta_mix", v, ln); }},
        {"lambda", [&](const std::string& v, int ln) { cfg.lambda = to_double("lambda", v, ln); }},
        {"delta", [&](const std::string& v, int ln) { cfg.delta = to_double("delta", v, ln); }},
        {"dual",
         [&](const std::string& v, int ln) {
             if (v == "regularized") cfg.dual = DualVariant::Regularized;
             else if (v == "clipped") cfg.dual = DualVariant::Clipped;
             else throw ConfigError(fmt::format("line {}: dual must be regularized or clipped", ln), ln);
         }},
        {"gamma", [&](const std::string& v, int ln) { cfg.gamma = to_double("gamma", v, ln); }},
        {"radius_scale", [&](const std::string& v, int ln) { cfg.radius_scale = to_double("radius_scale", v, ln); }},
        {"diagnostics", [&](const std::string& v, int ln) { cfg.diagnostics = to_switch("diagnostics", v, ln); }},
        {"workers", [&](const std::string& v, int ln) { cfg.workers = to_int("workers", v, ln); }},
        {"out_dir", [&](const std::string& v, int) { cfg.out_dir = v; }},
    };

    std::istringstream in{std::string(text)};
    std::string raw;
    int ln = 0;
    while (std::getline(in, raw)) {
        ++ln;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", ln), ln);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(fmt::format("line {}: missing key", ln), ln);
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", ln, key), ln);
        if (auto prev = seen.find(key); prev != seen.end())
            throw ConfigError(fmt::format("line {}: duplicate key '{}' (first on line {})", ln, key, prev->second), ln);
        seen[key] = ln;
        it->second(value, ln);
    }
    if (cfg.instance == InstanceKind::Tiny) {
        for (const char* key : {"H", "d", "b", "block_length", "p0", "slope", "reward_scale", "feature_scale", "B"})
            if (auto s = seen.find(key); s != seen.end())
                throw ConfigError(fmt::format("line {}: {} applies only to the benchmark instance", s->second, key),
                                  s->second);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::int64_t seed_offset_from_env() {
    const char* raw = std::getenv("CMDP_SEED_OFFSET");
    if (raw == nullptr || *raw == '\0') return 0;
    std::string v = trim(raw);
    std::int64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(fmt::format("CMDP_SEED_OFFSET must be an integer, got '{}'", raw));
    return x;
}

ExperimentResult run_experiment(const RunConfig& cfg, std::int64_t seed_offset) {
    cfg.validate();
    const CmdpInstance inst = cfg.build_instance();
    std::mt19937_64 vrng(0x5eed);
    const ValidationReport report = validate_instance(inst, 1000, vrng);
    if (!report.passed) throw std::runtime_error("instance validation failed:\n" + report.to_string());

    ExperimentResult res;
    res.comparator = constrained_comparator(inst, averaged_reward(inst, cfg.K));
    const LearnerConfig lc = cfg.learner_config(res.comparator.gamma);
    lc.validate();

    for (auto s : cfg.seeds) res.seeds.push_back(s + std::uint64_t(seed_offset));
    const std::size_t n = res.seeds.size();
    res.pd_powers.resize(n);
    res.random.resize(n);
    std::vector<std::exception_ptr> errors(n);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                // Distinct streams for the two algorithms under the same seed.
                const RngStream rng(res.seeds[i]);
                const RngStream rng_baseline(res.seeds[i] ^ 0x9e3779b97f4a7c15ULL);
                res.pd_powers[i] = run_pd_powers(inst, lc, rng, res.comparator);
                res.random[i] = run_random_baseline(inst, cfg.K, rng_baseline, res.comparator);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t slots = std::min<std::size_t>(cfg.workers > 0 ? std::size_t(cfg.workers) : n, n);
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < slots; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<MetricsSeries> pd_series, rnd_series;
    for (std::size_t i = 0; i < n; ++i) {
        pd_series.push_back(res.pd_powers[i].series);
        rnd_series.push_back(res.random[i].series);
        res.checks += res.pd_powers[i].diagnostics.total_checks();
        res.failures += res.pd_powers[i].diagnostics.total_failures();
    }
    res.aggregate_pd_powers = aggregate(pd_series);
    res.aggregate_random = aggregate(rnd_series);

    std::filesystem::create_directories(cfg.out_dir);
    for (std::size_t i = 0; i < n; ++i) {
        auto p = cfg.out_dir / fmt::format("run_pdpowers_{}.csv", res.seeds[i]);
        write_metrics_csv(p, pd_series[i]);
        res.files.push_back(p);
        p = cfg.out_dir / fmt::format("run_random_{}.csv", res.seeds[i]);
        write_metrics_csv(p, rnd_series[i]);
        res.files.push_back(p);
    }
    for (const auto& [name, agg] : {std::pair{"aggregate_pdpowers.csv", &res.aggregate_pd_powers},
                                    std::pair{"aggregate_random.csv", &res.aggregate_random}}) {
        auto p = cfg.out_dir / name;
        write_aggregate_csv(p, *agg);
        res.files.push_back(p);
    }
    auto p = cfg.out_dir / "summary.txt";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << summary_text(cfg, res);
    res.files.push_back(p);
    return res;
}

std::string summary_text(const RunConfig& cfg, const ExperimentResult& res) {
    std::string s;
    const auto& cmp = res.comparator;
    s += fmt::format("instance: {}\n", cfg.instance == InstanceKind::Tiny ? "tiny" : "benchmark");
    s += fmt::format("K: {}\n", cfg.K);
    s += "seeds:";
    for (auto seed : res.seeds) s += fmt::format(" {}", seed);
    s += "\n";
    s += fmt::format("slater_margin: {}\n", format_double(cmp.gamma));
    s += fmt::format("comparator: value_r={} value_g={} lambda={} weight={}\n", format_double(cmp.value_r),
                     format_double(cmp.value_g), format_double(cmp.lambda_star), format_double(cmp.weight));
    for (const auto& [name, agg] : {std::pair{"pdpowers", &res.aggregate_pd_powers},
                                    std::pair{"random", &res.aggregate_random}}) {
        const std::size_t last = agg->rows() - 1;
        const std::size_t rc = agg->column("regret"), vc = agg->column("violation");
        s += fmt::format("{}: final_regret={} +/- {} final_violation={} +/- {}\n", name,
                         format_double(agg->mean[rc][last]), format_double(agg->half_width[rc][last]),
                         format_double(agg->mean[vc][last]), format_double(agg->half_width[vc][last]));
    }
    s += fmt::format("assertions: checks={} failures={}\n", res.checks, res.failures);
    if (cfg.diagnostics) {
        for (std::size_t i = 0; i < res.seeds.size(); ++i) {
            const auto& d = res.pd_powers[i].diagnostics;
            const double n = double(std::max(1L, d.optimism_episodes));
            s += fmt::format("optimism seed {}: reward={} constraint={}\n", res.seeds[i],
                             format_double(double(d.optimistic[0]) / n), format_double(double(d.optimistic[1]) / n));
        }
    }
    return s;
}

}  // namespace pdpowers
