#include "proto_rmdp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace proto_rmdp {

namespace {

constexpr std::uint64_t kFamilyStream = 1;
constexpr std::uint64_t kAlgorithmStreamBase = 100;

long long parse_integer(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long parsed = 0;
    try {
        parsed = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': malformed integer '" + value + "'");
    }
    if (used != value.size())
        throw ConfigError("key '" + key + "': malformed integer '" + value + "'");
    return parsed;
}

double parse_real(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': malformed number '" + value + "'");
    }
    if (used != value.size())
        throw ConfigError("key '" + key + "': malformed number '" + value + "'");
    return parsed;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + value + "'");
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

void apply_override(SweepConfig& config, const std::string& key, const std::string& value) {
    if (key == "algorithms") {
        std::vector<Algorithm> algos;
        std::stringstream ss(value);
        std::string tag;
        while (std::getline(ss, tag, ',')) {
            tag = trim(tag);
            auto parsed = parse_algorithm(tag);
            if (!parsed)
                throw ConfigError("key 'algorithms': unknown algorithm tag '" + tag +
                                  "' (known: rpo-aas, nrpo-npc, nrpo-npc2, ucbvi, oracle)");
            if (std::find(algos.begin(), algos.end(), *parsed) != algos.end())
                throw ConfigError("key 'algorithms': duplicate tag '" + tag + "'");
            algos.push_back(*parsed);
        }
        if (algos.empty()) throw ConfigError("key 'algorithms': empty list");
        config.algorithms = std::move(algos);
    } else if (key == "episodes") {
        long long v = parse_integer(key, value);
        if (v < 1) throw ConfigError("key 'episodes': must be >= 1");
        config.episodes = static_cast<int>(v);
    } else if (key == "sims") {
        long long v = parse_integer(key, value);
        if (v < 1) throw ConfigError("key 'sims': must be >= 1");
        config.sims = static_cast<int>(v);
    } else if (key == "seed") {
        config.seed = static_cast<std::uint64_t>(parse_integer(key, value));
    } else if (key == "delta") {
        double v = parse_real(key, value);
        if (v <= 0.0 || v >= 1.0)
            throw ConfigError("key 'delta': must lie strictly between 0 and 1");
        config.delta = v;
    } else if (key == "prototypes") {
        long long v = parse_integer(key, value);
        if (v < 1) throw ConfigError("key 'prototypes': must be >= 1");
        config.prototypes = static_cast<int>(v);
    } else if (key == "mode") {
        if (value == "fixed-gap")
            config.fixed_gap = true;
        else if (value == "random")
            config.fixed_gap = false;
        else
            throw ConfigError("key 'mode': expected fixed-gap or random, got '" + value + "'");
    } else if (key == "gap") {
        double v = parse_real(key, value);
        if (v < 0.0 || v > 1.0) throw ConfigError("key 'gap': must lie in [0, 1]");
        config.gap = v;
    } else if (key == "early_stop") {
        config.early_stop = parse_bool(key, value);
    } else if (key == "ucbvi_bonus_scale") {
        double v = parse_real(key, value);
        if (v <= 0.0) throw ConfigError("key 'ucbvi_bonus_scale': must be positive");
        config.ucbvi_bonus_scale = v;
    } else if (key == "family_per_layer") {
        config.family_per_layer = parse_bool(key, value);
    } else if (key == "out") {
        if (value.empty()) throw ConfigError("key 'out': empty path");
        config.out_dir = value;
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

SweepConfig parse_config_text(const std::string& text) {
    SweepConfig config;
    std::set<std::string> seen;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second)
            throw ConfigError("duplicate key '" + key + "' (line " + std::to_string(line_no) +
                              ")");
        apply_override(config, key, value);
    }
    return config;
}

void validate_config(const SweepConfig& config) {
    if (config.fixed_gap && (config.prototypes - 1) * config.gap > 1.0)
        throw ConfigError("(prototypes - 1) * gap exceeds 1; fixed-gap values cannot fit in "
                          "[0, 1]");
    if (config.out_dir.empty()) throw ConfigError("missing required key 'out'");
}

std::string format_real(Real v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string echo_config(const SweepConfig& config) {
    std::ostringstream os;
    std::string algos;
    for (std::size_t i = 0; i < config.algorithms.size(); ++i) {
        if (i) algos += ",";
        algos += algorithm_name(config.algorithms[i]);
    }
    os << "algorithms = " << algos << "\n";
    os << "delta = " << format_real(config.delta) << "\n";
    os << "early_stop = " << (config.early_stop ? "true" : "false") << "\n";
    os << "episodes = " << config.episodes << "\n";
    os << "family_per_layer = " << (config.family_per_layer ? "true" : "false") << "\n";
    os << "gap = " << format_real(config.gap) << "\n";
    os << "mode = " << (config.fixed_gap ? "fixed-gap" : "random") << "\n";
    os << "out = " << config.out_dir << "\n";
    os << "prototypes = " << config.prototypes << "\n";
    os << "seed = " << config.seed << "\n";
    os << "sims = " << config.sims << "\n";
    os << "ucbvi_bonus_scale = " << format_real(config.ucbvi_bonus_scale) << "\n";
    os << "# paired design: one prototype family per simulation, shared by all algorithms\n";
    return os.str();
}

namespace {

struct SimOutput {
    std::vector<std::vector<Real>> rewards;    // per algorithm
    std::vector<std::vector<Real>> cum_regret; // per algorithm
    std::vector<SimulationSummary> summaries;  // per algorithm
    std::string family_description;
};

int pool_size(int sims) {
    int n = 0;
    if (const char* env = std::getenv("PROTO_RMDP_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 1) n = static_cast<int>(v);
    }
    if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    return std::min(n, sims);
}

SimOutput run_simulation(const SweepConfig& config, int sim) {
    SimOutput out;
    std::uint64_t sim_seed = config.seed + static_cast<std::uint64_t>(sim);
    Rng root(sim_seed);
    Rng family_rng = root.fork(kFamilyStream);

    GridWorldSpec spec;
    PrototypeFamily family =
        config.fixed_gap
            ? generate_fixed_gap_prototypes(spec, config.prototypes, config.gap, family_rng,
                                            config.family_per_layer)
            : generate_random_prototypes(spec, config.prototypes, family_rng,
                                         config.family_per_layer);
    LayeredMdp mdp = build_gridworld(spec, family);
    DenseKernel truth = DenseKernel::compile(mdp.true_kernel(), mdp);
    Real optimal_reward = optimal_policy_dp(truth, mdp).second[mdp.start_state()];

    std::ostringstream family_os;
    family_os << "sim " << sim << " seed " << sim_seed << "\n"
              << describe_family(spec, family);
    out.family_description = family_os.str();

    for (std::size_t ai = 0; ai < config.algorithms.size(); ++ai) {
        Algorithm algo = config.algorithms[ai];
        ExperimentConfig ec;
        ec.episodes = config.episodes;
        ec.delta = config.delta;
        ec.algorithm = algo;
        ec.seed = root.fork(kAlgorithmStreamBase + static_cast<std::uint64_t>(algo)).seed();
        ec.early_stop = config.early_stop;
        ec.ucbvi_bonus_scale = config.ucbvi_bonus_scale;

        std::vector<EpisodeRecord> records = run_learner(ec, mdp, family);
        AnalysisReport report = analyze_run(records, family, mdp, ec);

        std::vector<Real> rewards(records.size());
        for (std::size_t t = 0; t < records.size(); ++t) rewards[t] = records[t].expected_reward;

        SimulationSummary summary;
        summary.algorithm = algo;
        summary.sim = sim;
        summary.seed = sim_seed;
        summary.convergence_episode = report.convergence_episode;
        summary.converged_to_true = report.converged_to_true;
        summary.coverage_all = report.coverage_all;
        summary.coverage_rate = report.coverage_rate;
        summary.final_reward = rewards.empty() ? 0.0 : rewards.back();
        summary.optimal_reward = optimal_reward;
        summary.gamma = report.gamma;
        summary.h = report.h;
        summary.cum_regret_final =
            report.cumulative_regret.empty() ? 0.0 : report.cumulative_regret.back();
        summary.cum_regret_500 =
            report.cumulative_regret.empty()
                ? 0.0
                : report.cumulative_regret[std::min<std::size_t>(
                      499, report.cumulative_regret.size() - 1)];
        summary.bound_violations = report.bound_violations;
        summary.radius_violations = report.radius_violations;
        summary.decomposition_violations = report.decomposition_violations;
        summary.coverage_loss_events = report.coverage_loss_events;
        summary.convergence_threshold = report.convergence_threshold;
        summary.finite_sample_threshold = report.finite_sample_threshold;
        if (report.theoretical_regret_bound && !report.theoretical_regret_bound->empty())
            summary.regret_bound_final = report.theoretical_regret_bound->back();

        out.rewards.push_back(std::move(rewards));
        out.cum_regret.push_back(std::move(report.cumulative_regret));
        out.summaries.push_back(summary);
    }
    return out;
}

} // namespace

SweepResult run_sweep(const SweepConfig& config) {
    if (config.sims < 1) throw ConfigError("key 'sims': must be >= 1");

    std::vector<SimOutput> slots(config.sims);
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (!failed.load()) {
            int sim = next.fetch_add(1);
            if (sim >= config.sims) break;
            try {
                slots[sim] = run_simulation(config, sim);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    int threads = pool_size(config.sims);
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);

    SweepResult result;
    result.config = config;
    std::size_t n_algos = config.algorithms.size();
    result.curves.resize(n_algos);
    result.rewards.resize(n_algos);
    result.cum_regret.resize(n_algos);
    for (std::size_t ai = 0; ai < n_algos; ++ai) {
        auto& curves = result.curves[ai];
        curves.mean_reward.assign(config.episodes, 0.0);
        curves.std_reward.assign(config.episodes, 0.0);
        curves.mean_cum_regret.assign(config.episodes, 0.0);
        for (int sim = 0; sim < config.sims; ++sim) {
            const auto& rewards = slots[sim].rewards[ai];
            const auto& regret = slots[sim].cum_regret[ai];
            for (int t = 0; t < config.episodes; ++t) {
                curves.mean_reward[t] += rewards[t];
                curves.std_reward[t] += rewards[t] * rewards[t];
                curves.mean_cum_regret[t] += regret[t];
            }
        }
        Real n = static_cast<Real>(config.sims);
        for (int t = 0; t < config.episodes; ++t) {
            Real mean = curves.mean_reward[t] / n;
            Real var = std::max(0.0, curves.std_reward[t] / n - mean * mean);
            curves.mean_reward[t] = mean;
            curves.std_reward[t] = std::sqrt(var);
            curves.mean_cum_regret[t] /= n;
        }
        result.rewards[ai].reserve(config.sims);
        result.cum_regret[ai].reserve(config.sims);
        for (int sim = 0; sim < config.sims; ++sim) {
            result.runs.push_back(slots[sim].summaries[ai]);
            result.rewards[ai].push_back(std::move(slots[sim].rewards[ai]));
            result.cum_regret[ai].push_back(std::move(slots[sim].cum_regret[ai]));
        }
    }
    result.families.reserve(config.sims);
    for (int sim = 0; sim < config.sims; ++sim)
        result.families.push_back(std::move(slots[sim].family_description));
    return result;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary); // '\n' endings on every platform
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

std::string opt_str(const std::optional<long long>& v) {
    return v ? std::to_string(*v) : "na";
}

} // namespace

void write_csv(const SweepResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());

    {
        auto os = open_output(fs::path(dir) / "curves.csv");
        os << "algorithm,episode,mean_expected_reward,std_expected_reward,mean_cum_regret\n";
        for (std::size_t ai = 0; ai < result.curves.size(); ++ai) {
            const auto& curves = result.curves[ai];
            std::string name = algorithm_name(result.config.algorithms[ai]);
            for (std::size_t t = 0; t < curves.mean_reward.size(); ++t)
                os << name << ',' << (t + 1) << ',' << format_real(curves.mean_reward[t]) << ','
                   << format_real(curves.std_reward[t]) << ','
                   << format_real(curves.mean_cum_regret[t]) << '\n';
        }
    }
    {
        auto os = open_output(fs::path(dir) / "runs.csv");
        os << "algorithm,sim,seed,convergence_episode,coverage_all_t,final_reward\n";
        for (const auto& run : result.runs)
            os << algorithm_name(run.algorithm) << ',' << run.sim << ',' << run.seed << ','
               << run.convergence_episode << ',' << (run.coverage_all ? 1 : 0) << ','
               << format_real(run.final_reward) << '\n';
    }
    {
        auto os = open_output(fs::path(dir) / "analysis.csv");
        os << "algorithm,sim,gamma,h,optimal_reward,coverage_rate,converged_to_true,"
              "cum_regret_final,bound_violations,radius_violations,decomposition_violations,"
              "coverage_loss_events,convergence_threshold,finite_sample_threshold,"
              "regret_bound_final\n";
        for (const auto& run : result.runs)
            os << algorithm_name(run.algorithm) << ',' << run.sim << ','
               << format_real(run.gamma) << ',' << format_real(run.h) << ','
               << format_real(run.optimal_reward) << ',' << format_real(run.coverage_rate) << ','
               << (run.converged_to_true ? 1 : 0) << ',' << format_real(run.cum_regret_final)
               << ',' << run.bound_violations << ',' << run.radius_violations << ','
               << run.decomposition_violations << ',' << run.coverage_loss_events << ','
               << opt_str(run.convergence_threshold) << ','
               << opt_str(run.finite_sample_threshold) << ','
               << (run.regret_bound_final ? format_real(*run.regret_bound_final) : "na") << '\n';
    }
    {
        auto os = open_output(fs::path(dir) / "config.echo");
        os << echo_config(result.config);
    }
    {
        auto os = open_output(fs::path(dir) / "families.txt");
        for (std::size_t i = 0; i < result.families.size(); ++i) {
            if (i) os << "\n";
            os << result.families[i];
        }
    }
}

namespace {

struct AlgoDigest {
    Real final_reward = 0.0;
    Real early_window = 0.0;
    std::vector<long long> convergence; // converged sims only
    int sims = 0;
    int coverage_all = 0;
    Real coverage_rate_sum = 0.0;
    long long bound_violations = 0;
    long long radius_violations = 0;
    long long decomposition_violations = 0;
    long long coverage_loss = 0;
    Real optimal_sum = 0.0;
};

std::string render_summary(const std::vector<std::string>& algo_names,
                           std::vector<AlgoDigest> digests, const std::string& header) {
    std::ostringstream os;
    os << header;
    for (std::size_t ai = 0; ai < algo_names.size(); ++ai) {
        auto& d = digests[ai];
        os << algo_names[ai] << ":\n";
        os << "  mean expected reward: final " << format_real(d.final_reward)
           << ", episodes 1-200 " << format_real(d.early_window);
        if (d.sims > 0 && d.optimal_sum != 0.0)
            os << ", optimal " << format_real(d.optimal_sum / d.sims);
        os << "\n";
        if (!d.convergence.empty()) {
            std::sort(d.convergence.begin(), d.convergence.end());
            auto quart = [&](double f) {
                std::size_t idx = static_cast<std::size_t>(f * (d.convergence.size() - 1));
                return d.convergence[idx];
            };
            os << "  convergence episode: p25 " << quart(0.25) << ", p50 " << quart(0.5)
               << ", p75 " << quart(0.75) << " (" << d.convergence.size() << "/" << d.sims
               << " sims converged)\n";
        } else {
            os << "  convergence episode: none\n";
        }
        os << "  coverage: all-episode rate " << format_real(d.sims ? static_cast<Real>(d.coverage_all) / d.sims : 0.0)
           << ", per-episode rate " << format_real(d.sims ? d.coverage_rate_sum / d.sims : 0.0)
           << "\n";
        os << "  violations: bound " << d.bound_violations << ", radius " << d.radius_violations
           << ", decomposition " << d.decomposition_violations << ", coverage-loss "
           << d.coverage_loss << "\n";
    }
    return os.str();
}

} // namespace

std::string summarize(const SweepResult& result) {
    std::ostringstream header;
    header << "sweep: " << result.config.sims << " sims x " << result.config.episodes
           << " episodes, K=" << result.config.prototypes << " "
           << (result.config.fixed_gap ? "fixed-gap" : "random");
    if (result.config.fixed_gap) header << " (gap " << format_real(result.config.gap) << ")";
    header << ", delta " << format_real(result.config.delta) << ", seed " << result.config.seed
           << "\n";

    std::vector<std::string> names;
    std::vector<AlgoDigest> digests(result.config.algorithms.size());
    for (std::size_t ai = 0; ai < result.config.algorithms.size(); ++ai) {
        names.push_back(algorithm_name(result.config.algorithms[ai]));
        const auto& curves = result.curves[ai];
        auto& d = digests[ai];
        d.final_reward = curves.mean_reward.empty() ? 0.0 : curves.mean_reward.back();
        std::size_t window = std::min<std::size_t>(200, curves.mean_reward.size());
        for (std::size_t t = 0; t < window; ++t) d.early_window += curves.mean_reward[t];
        if (window) d.early_window /= static_cast<Real>(window);
    }
    for (const auto& run : result.runs) {
        auto it = std::find(result.config.algorithms.begin(), result.config.algorithms.end(),
                            run.algorithm);
        auto& d = digests[static_cast<std::size_t>(it - result.config.algorithms.begin())];
        ++d.sims;
        if (run.convergence_episode > 0) d.convergence.push_back(run.convergence_episode);
        d.coverage_all += run.coverage_all ? 1 : 0;
        d.coverage_rate_sum += run.coverage_rate;
        d.bound_violations += run.bound_violations;
        d.radius_violations += run.radius_violations;
        d.decomposition_violations += run.decomposition_violations;
        d.coverage_loss += run.coverage_loss_events;
        d.optimal_sum += run.optimal_reward;
    }
    return render_summary(names, std::move(digests), header.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace

std::string summarize_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    SweepConfig config = parse_config_text(read_file(fs::path(dir) / "config.echo"));

    std::vector<std::string> names;
    for (Algorithm algo : config.algorithms) names.push_back(algorithm_name(algo));
    std::vector<AlgoDigest> digests(names.size());
    auto digest_of = [&](const std::string& name) -> AlgoDigest& {
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw std::runtime_error("unknown algorithm in CSV: " + name);
        return digests[static_cast<std::size_t>(it - names.begin())];
    };

    {
        std::stringstream ss(read_file(fs::path(dir) / "curves.csv"));
        std::string line;
        std::getline(ss, line); // header
        std::vector<Real> early_sum(names.size(), 0.0);
        std::vector<int> early_n(names.size(), 0);
        while (std::getline(ss, line)) {
            if (line.empty()) continue;
            auto f = split_csv_line(line);
            auto& d = digest_of(f[0]);
            long long episode = std::stoll(f[1]);
            Real mean = std::stod(f[2]);
            if (episode <= 200) {
                auto idx = static_cast<std::size_t>(
                    std::find(names.begin(), names.end(), f[0]) - names.begin());
                early_sum[idx] += mean;
                ++early_n[idx];
            }
            if (episode == config.episodes) d.final_reward = mean;
        }
        for (std::size_t ai = 0; ai < names.size(); ++ai)
            if (early_n[ai]) digests[ai].early_window = early_sum[ai] / early_n[ai];
    }
    {
        std::stringstream ss(read_file(fs::path(dir) / "runs.csv"));
        std::string line;
        std::getline(ss, line);
        while (std::getline(ss, line)) {
            if (line.empty()) continue;
            auto f = split_csv_line(line);
            auto& d = digest_of(f[0]);
            ++d.sims;
            long long conv = std::stoll(f[3]);
            if (conv > 0) d.convergence.push_back(conv);
            d.coverage_all += std::stoi(f[4]);
        }
    }
    {
        std::stringstream ss(read_file(fs::path(dir) / "analysis.csv"));
        std::string line;
        std::getline(ss, line);
        while (std::getline(ss, line)) {
            if (line.empty()) continue;
            auto f = split_csv_line(line);
            auto& d = digest_of(f[0]);
            d.coverage_rate_sum += std::stod(f[5]);
            d.optimal_sum += std::stod(f[4]);
            d.bound_violations += std::stoll(f[8]);
            d.radius_violations += std::stoll(f[9]);
            d.decomposition_violations += std::stoll(f[10]);
            d.coverage_loss += std::stoll(f[11]);
        }
    }

    std::ostringstream header;
    header << "sweep: " << config.sims << " sims x " << config.episodes << " episodes, K="
           << config.prototypes << " " << (config.fixed_gap ? "fixed-gap" : "random");
    if (config.fixed_gap) header << " (gap " << format_real(config.gap) << ")";
    header << ", delta " << format_real(config.delta) << ", seed " << config.seed << "\n";
    return render_summary(names, std::move(digests), header.str());
}

} // namespace proto_rmdp
