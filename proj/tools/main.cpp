#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "deflab/config.hpp"
#include "deflab/scenarios.hpp"

namespace {

void usage() {
    std::cout << "usage:\n"
                 "  deflab run <config-file>       execute a scenario, write CSVs and a report\n"
                 "  deflab list                    list the available scenarios\n"
                 "  deflab validate <config-file>  dry-run config check, no side effects\n"
                 "\n"
                 "exit codes: 0 all checks passed, 1 a statistical check failed,\n"
                 "            2 configuration or usage error\n"
                 "environment: DEFLAB_THREADS caps the worker count\n";
}

int cmd_list() {
    for (const auto& s : deflab::scenario_registry())
        std::cout << s.name << "  -  " << s.summary << '\n';
    return 0;
}

int cmd_validate(const std::string& file) {
    try {
        const auto cfg = deflab::KeyValueConfig::parse_file(file);
        const auto diags = deflab::validate_config(cfg);
        if (!diags.empty()) {
            for (const auto& d : diags) std::cerr << "error: " << d << '\n';
            return 2;
        }
        std::cout << "ok: scenario " << cfg.get_string("scenario") << ", seed "
                  << cfg.get_u64("seed", 42) << ", grid horizon "
                  << cfg.get_double("grid.horizon", 1.0) << " steps "
                  << cfg.get_size("grid.steps", 10000) << ", n_paths "
                  << cfg.get_size("n_paths", 10000) << '\n';
        return 0;
    } catch (const deflab::ConfigError& e) {
        std::cerr << "error (line " << e.line << "): " << e.what() << '\n';
        return 2;
    }
}

int cmd_run(const std::string& file) {
    try {
        const auto cfg = deflab::KeyValueConfig::parse_file(file);
        const auto diags = deflab::validate_config(cfg);
        if (!diags.empty()) {
            for (const auto& d : diags) std::cerr << "error: " << d << '\n';
            return 2;
        }
        const auto report = deflab::run_scenario(cfg);
        std::cout << report.to_text();
        if (!report.passed()) {
            std::cerr << "FAILED: " << report.first_failure() << '\n';
            return 1;
        }
        return 0;
    } catch (const deflab::ConfigError& e) {
        std::cerr << "error (line " << e.line << "): " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        usage();
        return 2;
    }
    const std::string cmd = argv[1];
    if (cmd == "list") return cmd_list();
    if (cmd == "run" && argc == 3) return cmd_run(argv[2]);
    if (cmd == "validate" && argc == 3) return cmd_validate(argv[2]);
    usage();
    return 2;
}
