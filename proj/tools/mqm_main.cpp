#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mqm/scenario.hpp"

// Exit codes: 0 success, 1 numerical guard tripped, 2 usage or validation.

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

int cmd_run(const std::string& config_path, const std::string& out_override,
            std::int64_t seed_override, int threads_override) {
    try {
        auto cfg = mqm::ScenarioConfig::from_file(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (threads_override > 0) cfg.threads = static_cast<unsigned>(threads_override);
        mqm::run_scenario(cfg);
        std::cout << "wrote " << (cfg.out_dir / "manifest.json").string() << "\n";
        return kExitOk;
    } catch (const mqm::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const mqm::numerical_error& e) {
        std::cerr << "numerical guard: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

int cmd_validate(const std::string& config_path) {
    try {
        const auto cfg = mqm::ScenarioConfig::from_file(config_path);
        const auto errors = mqm::validate_config(cfg);
        if (errors.empty()) {
            std::cout << "ok: " << cfg.scenario << "\n";
            return kExitOk;
        }
        for (const auto& e : errors) std::cerr << "invalid: " << e << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"measurable-quantum-mechanics laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::int64_t seed_override = -1;
    int threads_override = 0;

    auto* run = app.add_subcommand("run", "execute a scenario config");
    run->add_option("config", config_path, "JSON config file")->required();
    run->add_option("--out", out_override, "output directory (overrides config)");
    run->add_option("--seed", seed_override, "RNG seed (overrides config)");
    run->add_option("--threads", threads_override, "worker threads (overrides config)");

    auto* list = app.add_subcommand("list-scenarios", "print the known scenario names");

    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config_path, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (list->parsed()) {
        for (const auto& n : mqm::valid_scenarios()) std::cout << n << "\n";
        return kExitOk;
    }
    if (validate->parsed()) return cmd_validate(config_path);
    return cmd_run(config_path, out_override, seed_override, threads_override);
}
