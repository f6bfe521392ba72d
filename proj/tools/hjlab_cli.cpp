// hjlab: run one configured experiment and write its result bundle.
//
//   hjlab <experiment> --config PATH [--out DIR] [--seed N] [--format csv|json]
//
// Exit status: 0 all assertions pass, 1 an assertion failed, 2 config or
// runtime error. HJLAB_THREADS caps the number of worker threads.

#include "hjlab/experiment.hpp"
#include "hjlab/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

constexpr int kAssertionFailure = 1;
constexpr int kRuntimeError = 2;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
};

nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw hjlab::ConfigError("--config", "cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw hjlab::ConfigError("--config", std::string("malformed JSON: ") + e.what());
    }
}

int run(std::string_view name, const Options& opt)
{
    nlohmann::json j = read_json(opt.config);
    if (!j.is_object())
        throw hjlab::ConfigError("<root>", "expected an object");
    if (!j.contains("experiment"))
        j["experiment"] = std::string(name);
    else if (j["experiment"] != std::string(name))
        throw hjlab::ConfigError("experiment", "config is for '" + j["experiment"].dump() +
                                                   "' but the subcommand is '" + std::string(name) + "'");
    if (opt.seed)
        j["seed"] = *opt.seed;
    const hjlab::ExperimentConfig config = hjlab::parse_config(j);
    const hjlab::ReportFormat format = hjlab::report_format_from_string(opt.format);

    const hjlab::ResultBundle bundle = hjlab::run_experiment(config);
    const std::string out = opt.out.empty() ? "results/" + std::string(name) : opt.out;
    for (const auto& path : hjlab::emit_report(bundle, out, format))
        std::cout << "wrote " << path.string() << "\n";
    for (const hjlab::Check& c : bundle.checks)
        std::printf("%s %-22s measured %.6g (reference %.6g, tolerance %.3g)\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.measured, c.reference, c.tolerance);
    return bundle.all_pass() ? 0 : kAssertionFailure;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Heat-kernel, Hamilton-Jacobi and large-deviation experiments on discrete spaces"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (hjlab::ExperimentKind kind : hjlab::all_experiments()) {
        const std::string name(hjlab::to_string(kind));
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
        sub->add_option("--out", opt.out, "output directory (default results/<experiment>)");
        sub->add_option("--seed", seed, "seed, overrides the config");
        sub->add_option("--format", opt.format, "report format")->check(CLI::IsMember({"csv", "json"}));
        subs.emplace_back(name, sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kRuntimeError;
    }

    for (const auto& [name, sub] : subs) {
        if (!sub->parsed())
            continue;
        if (sub->count("--seed"))
            opt.seed = seed;
        try {
            return run(name, opt);
        } catch (const std::exception& e) {
            std::cerr << "hjlab " << name << ": " << e.what() << "\n";
            if (const auto* ce = dynamic_cast<const hjlab::ConvergenceError*>(&e))
                std::cerr << "  defect at stop: " << ce->defect() << "\n";
            return kRuntimeError;
        }
    }
    return kRuntimeError;
}
