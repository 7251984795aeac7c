#include "affinescope/runner.hpp"

#include "CLI11.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"affinescope: affine approximation experiments"};
    std::string command, config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("command", command, "fit, modulus, witness, dorronsoro, counterexample, umd or multiplier")->required();
    app.add_option("--config", config_path, "experiment configuration (JSON)")->required();
    auto* seed_opt = app.add_option("--seed", seed, "overrides the configured seed");
    app.add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the configured one)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    afs::configure_logging();
    try {
        std::ifstream in(config_path);
        if (!in) throw afs::ValidationError("cannot open config '" + config_path + "'");
        afs::Json j;
        try {
            j = afs::Json::parse(in);
        } catch (const afs::Json::parse_error& e) {
            throw afs::ValidationError("config '" + config_path + "' is not valid JSON: " + e.what());
        }
        if (!j.is_object()) throw afs::ValidationError("config must be a JSON object");
        if (j.contains("command") && j["command"] != command)
            throw afs::ValidationError("the command line says '" + command + "' but the config says " + j["command"].dump());
        j["command"] = command;
        if (*seed_opt) j["seed"] = seed;
        if (*out_opt) j["output"] = out_dir;
        const afs::ExperimentConfig config = afs::ExperimentConfig::from_json(j);
        const afs::RunReport report = afs::run(config, threads);
        afs::write_outputs(report, config.output);
        spdlog::info("wrote {} files to {}", report.files.size() + 2, config.output);
        std::cout << config.output << "/report.json\n";
        return 0;
    } catch (const std::exception& e) {
        const int code = afs::exit_code_of(e);
        std::cerr << (code == 2 ? "validation error: " : code == 3 ? "numerical error: " : "error: ") << e.what() << "\n";
        return code;
    }
}
