// Command-line front end: run, check, report.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "bcdcert/commands.hpp"
#include "bcdcert/config.hpp"
#include "bcdcert/trace_io.hpp"

namespace {

bcdcert::RunConfigFile load_config(const std::string& path)
{
    try {
        return bcdcert::parse_run_config(bcdcert::read_file(path));
    } catch (const bcdcert::Error& e) {
        throw bcdcert::Error(e.code(), path + ": " + e.what());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-block coordinate descent with a runtime convergence certificate"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_prefix;
    std::optional<std::string> format;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run the solver and write <prefix>.trace.csv / <prefix>.summary.json");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--seed", seed, "Override the solver seed (random start)");
    run->add_option("--out", out_prefix, "Override the output path prefix");
    run->add_option("--format", format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
    run->add_flag("--quiet", quiet, "Suppress the per-run status line");

    std::size_t points = 20;
    std::uint64_t check_seed = 0;
    auto* check = app.add_subcommand("check", "Verify the problem's gradient, minimizer and Lipschitz oracles");
    check->add_option("--config", config_path, "Experiment config (JSON); only the problem section is used")
        ->required();
    check->add_option("--points", points, "Number of random points")->capture_default_str();
    check->add_option("--seed", check_seed, "Seed for the sampled points")->capture_default_str();
    check->add_flag("--quiet", quiet, "Print only the JSON line");

    std::string trace_path;
    auto* report = app.add_subcommand("report", "Recompute and verify the certificate recorded in a trace");
    report->add_option("trace", trace_path, "Path to <prefix>.trace.csv")->required();
    report->add_flag("--quiet", quiet, "Suppress the success line");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            bcdcert::RunConfigFile cfg = load_config(config_path);
            if (seed) cfg.solver.seed = *seed;
            if (out_prefix) cfg.output = *out_prefix;
            if (format) cfg.format = *bcdcert::parse_format(*format);
            return bcdcert::cmd_run(cfg, std::cout, std::cerr, quiet);
        }
        if (*check) {
            const bcdcert::RunConfigFile cfg = load_config(config_path);
            const auto obj = bcdcert::make_problem(cfg.problem);
            bcdcert::CheckOptions opt;
            opt.points = points;
            opt.seed = check_seed;
            std::ostringstream table;
            const int code = bcdcert::cmd_check(*obj, opt, table);
            const std::string text = table.str();
            if (quiet) {
                const auto last = text.rfind('\n', text.size() - 2);
                std::cout << text.substr(last == std::string::npos ? 0 : last + 1);
            } else {
                std::cout << text;
            }
            return code;
        }
        if (*report) {
            std::ostringstream sink;
            return bcdcert::cmd_report(trace_path, quiet ? static_cast<std::ostream&>(sink) : std::cout, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return bcdcert::kExitError;
    }
    return bcdcert::kExitError;
}
