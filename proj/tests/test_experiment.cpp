#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "proto_rmdp/experiment.hpp"

using namespace proto_rmdp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

SweepConfig tiny_config(const std::string& out) {
    SweepConfig config;
    config.algorithms = {Algorithm::Oracle, Algorithm::RpoAas};
    config.episodes = 20;
    config.sims = 3;
    config.seed = 7;
    config.prototypes = 2;
    config.gap = 0.3;
    config.out_dir = out;
    return config;
}

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "proto_rmdp_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("config parsing") {
    SUBCASE("empty text keeps the defaults") {
        SweepConfig config = parse_config_text("");
        CHECK(config.episodes == 3000);
        CHECK(config.sims == 100);
        CHECK(config.delta == 0.05);
        CHECK(config.prototypes == 4);
        CHECK(config.fixed_gap);
    }
    SUBCASE("file values and overrides") {
        SweepConfig config = parse_config_text("episodes = 50\n# comment\nmode = random\n");
        CHECK(config.episodes == 50);
        CHECK_FALSE(config.fixed_gap);
        apply_override(config, "episodes", "75");
        CHECK(config.episodes == 75);
    }
    SUBCASE("rejects out-of-range delta with the key name") {
        try {
            SweepConfig config = parse_config_text("delta = 1.5\n");
            FAIL("expected rejection");
        } catch (const ConfigError& e) {
            std::string msg = e.what();
            CHECK(msg.find("delta") != std::string::npos);
            CHECK(msg.find("between 0 and 1") != std::string::npos);
        }
    }
    SUBCASE("rejects duplicate keys") {
        CHECK_THROWS_AS((void)parse_config_text("episodes = 5\nepisodes = 6\n"), ConfigError);
    }
    SUBCASE("rejects unknown keys and malformed values") {
        CHECK_THROWS_AS((void)parse_config_text("epizodes = 5\n"), ConfigError);
        CHECK_THROWS_AS((void)parse_config_text("episodes = five\n"), ConfigError);
        CHECK_THROWS_AS((void)parse_config_text("episodes 5\n"), ConfigError);
    }
    SUBCASE("algorithm lists") {
        SweepConfig config = parse_config_text("algorithms = ucbvi, oracle\n");
        CHECK(config.algorithms == std::vector<Algorithm>{Algorithm::Ucbvi, Algorithm::Oracle});
        CHECK_THROWS_AS((void)parse_config_text("algorithms = ucbvi, frobnicate\n"), ConfigError);
        CHECK_THROWS_AS((void)parse_config_text("algorithms = ucbvi, ucbvi\n"), ConfigError);
    }
    SUBCASE("cross-field feasibility") {
        SweepConfig config = parse_config_text("prototypes = 6\ngap = 0.3\nout = somewhere\n");
        CHECK_THROWS_AS(validate_config(config), ConfigError);
        SweepConfig no_out = parse_config_text("prototypes = 2\n");
        CHECK_THROWS_AS(validate_config(no_out), ConfigError);
    }
    SUBCASE("per-layer family flag") {
        SweepConfig config = parse_config_text("family_per_layer = true\nmode = random\n");
        CHECK(config.family_per_layer);
        CHECK_THROWS_AS((void)parse_config_text("family_per_layer = yes\n"), ConfigError);
    }
    SUBCASE("echo round-trips") {
        SweepConfig config = tiny_config("/tmp/x");
        SweepConfig back = parse_config_text(echo_config(config));
        CHECK(back.algorithms == config.algorithms);
        CHECK(back.episodes == config.episodes);
        CHECK(back.sims == config.sims);
        CHECK(back.seed == config.seed);
        CHECK(back.gap == config.gap);
        CHECK(back.out_dir == config.out_dir);
    }
}

TEST_CASE("oracle sweep produces a flat curve at the optimum") {
    SweepConfig config = tiny_config((temp_dir("oracle") / "out").string());
    config.algorithms = {Algorithm::Oracle};
    config.sims = 1;
    SweepResult result = run_sweep(config);
    REQUIRE(result.curves.size() == 1);
    REQUIRE(result.runs.size() == 1);
    Real optimal = result.runs[0].optimal_reward;
    for (Real r : result.curves[0].mean_reward) CHECK(r == doctest::Approx(optimal).epsilon(1e-12));
    for (Real r : result.curves[0].mean_cum_regret) CHECK(std::abs(r) < 1e-9);
    for (Real s : result.curves[0].std_reward) CHECK(s == 0.0);
}

TEST_CASE("per-layer families run end to end") {
    SweepConfig config = tiny_config((temp_dir("per_layer") / "out").string());
    config.algorithms = {Algorithm::RpoAas, Algorithm::NrpoNpc2};
    config.family_per_layer = true;
    config.fixed_gap = false;
    config.prototypes = 3;
    config.episodes = 30;
    SweepResult result = run_sweep(config);
    REQUIRE(result.runs.size() == 6);
    for (const auto& run : result.runs) {
        CHECK(run.decomposition_violations == 0);
        CHECK(run.radius_violations == 0);
    }
    write_csv(result, config.out_dir);
    CHECK(slurp(fs::path(config.out_dir) / "families.txt").find("layer 3 true_index") !=
          std::string::npos);
}

TEST_CASE("paired families: every algorithm faces the same draw") {
    SweepConfig config = tiny_config((temp_dir("paired") / "out").string());
    SweepResult result = run_sweep(config);
    // grouped by algorithm then sim; gamma/h/optimal describe the family
    REQUIRE(result.runs.size() == 6);
    for (int sim = 0; sim < 3; ++sim) {
        const auto& oracle = result.runs[sim];
        const auto& rpo = result.runs[3 + sim];
        CHECK(oracle.sim == rpo.sim);
        CHECK(oracle.seed == rpo.seed);
        CHECK(oracle.optimal_reward == rpo.optimal_reward);
        CHECK(oracle.gamma == rpo.gamma);
        CHECK(oracle.h == rpo.h);
    }
}

TEST_CASE("csv output") {
    fs::path dir = temp_dir("csv");
    SweepConfig config = tiny_config((dir / "out").string());
    config.algorithms = {Algorithm::Oracle};
    config.episodes = 2;
    config.sims = 1;
    SweepResult result = run_sweep(config);
    write_csv(result, config.out_dir);

    SUBCASE("headers are pinned") {
        std::string curves = slurp(fs::path(config.out_dir) / "curves.csv");
        CHECK(curves.rfind("algorithm,episode,mean_expected_reward,std_expected_reward,"
                           "mean_cum_regret\n", 0) == 0);
        std::string runs = slurp(fs::path(config.out_dir) / "runs.csv");
        CHECK(runs.rfind("algorithm,sim,seed,convergence_episode,coverage_all_t,final_reward\n",
                         0) == 0);
    }
    SUBCASE("row counts follow the config") {
        std::string curves = slurp(fs::path(config.out_dir) / "curves.csv");
        int lines = 0;
        for (char c : curves) lines += c == '\n';
        CHECK(lines == 1 + config.episodes); // header + one row per episode
    }
    SUBCASE("config echo is written and parseable") {
        SweepConfig back = parse_config_text(slurp(fs::path(config.out_dir) / "config.echo"));
        CHECK(back.episodes == config.episodes);
        CHECK(back.algorithms == config.algorithms);
    }
    SUBCASE("families file lists each simulation") {
        std::string families = slurp(fs::path(config.out_dir) / "families.txt");
        CHECK(families.find("sim 0 seed 7") != std::string::npos);
        CHECK(families.find("grid 5x4") != std::string::npos);
    }
}

TEST_CASE("empty result writes headers only") {
    fs::path dir = temp_dir("empty");
    SweepResult result;
    write_csv(result, (dir / "out").string());
    CHECK(slurp(dir / "out" / "curves.csv") ==
          "algorithm,episode,mean_expected_reward,std_expected_reward,mean_cum_regret\n");
    CHECK(slurp(dir / "out" / "runs.csv") ==
          "algorithm,sim,seed,convergence_episode,coverage_all_t,final_reward\n");
}

TEST_CASE("reruns are byte-identical regardless of the worker pool") {
    fs::path dir = temp_dir("determinism");
    SweepConfig config = tiny_config("");
    config.algorithms = {Algorithm::RpoAas, Algorithm::Ucbvi};
    config.episodes = 40;
    config.sims = 4;

    auto run_with_threads = [&](const std::string& out, const char* threads) {
        setenv("PROTO_RMDP_THREADS", threads, 1);
        SweepConfig c = config;
        c.out_dir = out;
        write_csv(run_sweep(c), out);
        unsetenv("PROTO_RMDP_THREADS");
    };
    run_with_threads((dir / "a").string(), "1");
    run_with_threads((dir / "b").string(), "3");
    run_with_threads((dir / "c").string(), "1");
    for (const char* name : {"curves.csv", "runs.csv", "analysis.csv", "config.echo"}) {
        std::string a = slurp(dir / "a" / name);
        // the echoed out path differs by design; skip it
        if (std::string(name) != "config.echo") {
            CHECK(a == slurp(dir / "b" / name));
            CHECK(a == slurp(dir / "c" / name));
        }
    }
    CHECK(slurp(dir / "a" / "families.txt") == slurp(dir / "b" / "families.txt"));
}

TEST_CASE("summaries") {
    fs::path dir = temp_dir("summary");
    SweepConfig config = tiny_config((dir / "out").string());
    config.algorithms = {Algorithm::Oracle, Algorithm::RpoAas};
    config.episodes = 30;
    config.sims = 2;
    config.prototypes = 1; // singleton family: convergence at episode 1
    SweepResult result = run_sweep(config);
    write_csv(result, config.out_dir);

    std::string text = summarize(result);
    CHECK(text.find("oracle:") != std::string::npos);
    CHECK(text.find("rpo-aas:") != std::string::npos);
    CHECK(text.find("p50 1") != std::string::npos); // K=1 converges immediately

    std::string from_dir = summarize_dir(config.out_dir);
    CHECK(from_dir.find("rpo-aas:") != std::string::npos);
    CHECK(from_dir.find("p50 1") != std::string::npos);

    // oracle runs: early window equals the final mean equals the mean optimum
    Real optimal = (result.runs[0].optimal_reward + result.runs[1].optimal_reward) / 2.0;
    CHECK(result.curves[0].mean_reward.front() == doctest::Approx(optimal));
    CHECK(result.curves[0].mean_reward.back() == doctest::Approx(optimal));
}
