#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "proto_rmdp/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw proto_rmdp::ConfigError("cannot read config file " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"online robust MDP learning with transition-kernel prototypes"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a seeded experiment sweep and write CSV output");
    std::string config_path;
    std::vector<std::string> algos;
    // collected as (key, value) overrides so the config module validates
    // everything in one place
    std::vector<std::pair<std::string, std::string>> overrides;
    auto add_override = [&](const std::string& key) {
        return [&overrides, key](const std::string& value) { overrides.emplace_back(key, value); };
    };
    run->add_option("--config", config_path, "key = value configuration file");
    run->add_option("--algo", algos, "algorithm tag (repeatable)");
    run->add_option_function<std::string>("--episodes", add_override("episodes"),
                                          "episodes per simulation");
    run->add_option_function<std::string>("--sims", add_override("sims"),
                                          "number of seeded simulations");
    run->add_option_function<std::string>("--seed", add_override("seed"), "base seed");
    run->add_option_function<std::string>("--delta", add_override("delta"),
                                          "confidence parameter in (0,1)");
    run->add_option_function<std::string>("--prototypes", add_override("prototypes"),
                                          "prototypes per family (K)");
    run->add_option_function<std::string>("--mode", add_override("mode"),
                                          "prototype mode: fixed-gap | random");
    run->add_option_function<std::string>("--gap", add_override("gap"),
                                          "fixed-gap spacing between prototypes");
    run->add_option_function<std::string>("--early-stop", add_override("early_stop"),
                                          "freeze the policy once candidates are singleton "
                                          "(true | false)");
    run->add_option_function<std::string>("--out", add_override("out"), "output directory");
    run->add_option_function<std::string>("--bonus-scale", add_override("ucbvi_bonus_scale"),
                                          "UCBVI exploration bonus scale");
    run->add_option_function<std::string>("--family-per-layer",
                                          add_override("family_per_layer"),
                                          "draw an independent prototype family per layer "
                                          "(true | false)");

    auto* summ = app.add_subcommand("summarize", "summarize a previously written sweep");
    std::string in_dir;
    summ->add_option("--in", in_dir, "sweep output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // malformed invocation is a configuration error
    }

    try {
        if (run->parsed()) {
            proto_rmdp::SweepConfig config;
            if (!config_path.empty()) config = proto_rmdp::parse_config_text(read_file(config_path));
            if (!algos.empty()) {
                std::string joined;
                for (std::size_t i = 0; i < algos.size(); ++i) {
                    if (i) joined += ",";
                    joined += algos[i];
                }
                proto_rmdp::apply_override(config, "algorithms", joined);
            }
            for (const auto& [key, value] : overrides)
                proto_rmdp::apply_override(config, key, value);
            proto_rmdp::validate_config(config);

            proto_rmdp::SweepResult result = proto_rmdp::run_sweep(config);
            proto_rmdp::write_csv(result, config.out_dir);
            std::cout << proto_rmdp::summarize(result);
            std::cout << "wrote " << config.out_dir << "\n";
        } else {
            std::cout << proto_rmdp::summarize_dir(in_dir);
        }
    } catch (const proto_rmdp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
