#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "salab/scenario.hpp"

namespace {

// CI-facing exit codes: 0 success, 2 schema error, 3 tolerance failure,
// 4 runtime error.
constexpr int kOk = 0;
constexpr int kSchema = 2;
constexpr int kToleranceFail = 3;
constexpr int kRuntime = 4;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw salab::IoFailure("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int execute(salab::ExperimentConfig cfg) {
    salab::ScenarioResult result = salab::run_scenario(cfg);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& c : result.checks)
        std::cout << (c.pass ? "PASS" : "FAIL") << " " << c.name << ": " << c.detail
                  << "\n";
    std::cout << "bundle written to " << cfg.output << "\n";
    return result.ok ? kOk : kToleranceFail;
}

bool is_schema_error(const std::exception& e) {
    return dynamic_cast<const salab::SchemaError*>(&e) ||
           dynamic_cast<const salab::UnknownFamily*>(&e) ||
           dynamic_cast<const salab::InvalidSchedule*>(&e) ||
           dynamic_cast<const salab::UnknownPreset*>(&e);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"salab: seeded stochastic-approximation experiment runner"};
    app.require_subcommand(1);

    std::string run_path;
    auto* run_cmd = app.add_subcommand("run", "execute a config file");
    run_cmd->add_option("config", run_path, "JSON config file")->required();

    std::string preset_name, preset_out;
    std::int64_t preset_seed = -1;
    bool preset_print = false;
    auto* preset_cmd = app.add_subcommand("preset", "execute a shipped scenario");
    preset_cmd->add_option("name", preset_name, "preset name")->required();
    preset_cmd->add_option("--seed", preset_seed, "master seed override");
    preset_cmd->add_option("--out", preset_out, "output directory override");
    preset_cmd->add_flag("--print", preset_print, "print the config instead of running");

    auto* list_cmd = app.add_subcommand("list-presets", "list shipped scenarios");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "parse and validate a config");
    validate_cmd->add_option("config", validate_path, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kSchema;
    }

    try {
        if (*run_cmd) return execute(salab::parse_config_text(slurp(run_path)));
        if (*preset_cmd) {
            if (preset_print) {
                std::cout << salab::preset_text(preset_name) << "\n";
                return kOk;
            }
            salab::ExperimentConfig cfg = salab::preset_config(preset_name);
            if (preset_seed >= 0) cfg.seed = std::uint64_t(preset_seed);
            if (!preset_out.empty()) cfg.output = preset_out;
            return execute(std::move(cfg));
        }
        if (*list_cmd) {
            for (const auto& [name, description] : salab::list_presets())
                std::cout << name << " - " << description << "\n";
            return kOk;
        }
        if (*validate_cmd) {
            salab::parse_config_text(slurp(validate_path));
            std::cout << "valid\n";
            return kOk;
        }
    } catch (const salab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_schema_error(e) ? kSchema : kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kSchema;
}
