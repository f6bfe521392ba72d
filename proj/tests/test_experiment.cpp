#include "hjlab/experiment.hpp"
#include "hjlab/report.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace hjlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json load(const std::string& name)
{
    std::ifstream in(std::string(HJLAB_CONFIG_DIR) + "/" + name + ".json");
    return json::parse(in);
}

std::string field_of(const json& j)
{
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("hjlab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

int cli(const std::string& args)
{
    const std::string cmd = std::string(HJLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json small_schrodinger()
{
    json j = load("schrodinger_sweep");
    j["space"]["n"] = 32;
    return j;
}

}  // namespace

TEST_CASE("config errors name the field")
{
    json j = load("hj_sweep");
    j["t"] = 0.0;
    CHECK(field_of(j) == "t");
    j = load("hj_sweep");
    j["eps_list"] = json::array({0.4, 0.2, -0.1});
    CHECK(field_of(j) == "eps_list[2]");
    j = load("varadhan");
    j["bogus"] = 1;
    CHECK(field_of(j) == "bogus");
    j = load("varadhan");
    j["space"]["n"] = 1;
    CHECK(field_of(j) == "space.n");
    j = load("varadhan");
    j.erase("space");
    CHECK(field_of(j) == "space");
    j = load("varadhan");
    j["experiment"] = "nope";
    CHECK(field_of(j) == "experiment");
    CHECK_NOTHROW(parse_config(load("tube_ldp")));
}

TEST_CASE("resolution window is enforced before compute")
{
    json j = load("varadhan");
    j["t_grid"] = json::array({0.02, 0.01, 1e-5});
    CHECK_THROWS_AS(run_experiment(parse_config(j)), ResolutionError);
}

TEST_CASE("kernel_validate on a small circle")
{
    json j = load("kernel_validate");
    j["space"]["n"] = 128;
    const ResultBundle b = run_experiment(parse_config(j));
    for (const char* name : {"row_mass", "symmetry", "chapman_kolmogorov", "generator_constants",
                             "generator_symmetry", "eigen_reconstruction", "lattice_oracle"}) {
        const Check* c = b.check(name);
        REQUIRE(c != nullptr);
        CHECK_MESSAGE(c->pass, name);
    }
    CHECK(b.resolution.contains("lo"));
    CHECK(b.schema == kSchemaTag);
}

TEST_CASE("hj_sweep with a constant datum has zero error")
{
    json j = load("hj_sweep");
    j["space"]["n"] = 64;
    j["phi"] = {{"name", "sin"}, {"scale", 0.0}, {"offset", 0.75}};
    const ResultBundle b = run_experiment(parse_config(j));
    const Table* t = b.table("sweep");
    REQUIRE(t != nullptr);
    for (const auto& row : t->rows)
        CHECK(row[2] <= 1e-12);
}

TEST_CASE("csv headers match the documented columns")
{
    const std::vector<std::string> fit{"t", "value", "fitted_limit", "target", "rel_err", "window_lo", "window_hi"};
    const std::vector<std::pair<std::string, std::vector<std::string>>> documented{
        {"sweep", {"eps", "t", "sup_err", "mean_err", "floor", "lip_evolved", "lip_bound", "lapneg_evolved",
                   "lapneg_bound", "pass"}},
        {"schrodinger", {"eps", "cost", "eps_cost", "half_w2sq", "gap", "iters", "marginal_defect"}},
    };
    json h = load("hj_sweep");
    h["space"]["n"] = 64;
    const ResultBundle hb = run_experiment(parse_config(h));
    const ResultBundle sb = run_experiment(parse_config(small_schrodinger()));
    for (const auto& [name, cols] : documented) {
        const Table* t = name == "sweep" ? hb.table(name) : sb.table(name);
        REQUIRE(t != nullptr);
        CHECK(t->columns == cols);
        std::string header;
        for (std::size_t k = 0; k < cols.size(); ++k)
            header += (k ? "," : "") + cols[k];
        CHECK(table_to_csv(*t).substr(0, header.size() + 1) == header + "\n");
    }
    json v = load("varadhan");
    v["space"]["n"] = 100;
    const ResultBundle vb = run_experiment(parse_config(v));
    const Table* ft = vb.table("fit");
    REQUIRE(ft != nullptr);
    CHECK(ft->columns == fit);
}

TEST_CASE("json round trip")
{
    const ResultBundle b = run_experiment(parse_config(small_schrodinger()));
    const json j = bundle_to_json(b);
    const ResultBundle back = bundle_from_json(j);
    CHECK(bundle_to_json(back) == j);
    CHECK(back.checks.size() == b.checks.size());
    json foreign = j;
    foreign["schema"] = "other/9";
    CHECK_THROWS_AS(bundle_from_json(foreign), DomainError);
}

TEST_CASE("formatting uses 17 significant digits")
{
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(1.0) == "1");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("repeated runs are byte identical")
{
    for (ReportFormat fmt : {ReportFormat::Csv, ReportFormat::Json}) {
        const fs::path a = scratch("a"), b = scratch("b");
        const auto fa = emit_report(run_experiment(parse_config(small_schrodinger())), a, fmt);
        const auto fb = emit_report(run_experiment(parse_config(small_schrodinger())), b, fmt);
        REQUIRE(fa.size() == fb.size());
        for (std::size_t k = 0; k < fa.size(); ++k) {
            CHECK(fa[k].filename() == fb[k].filename());
            CHECK(slurp(fa[k]) == slurp(fb[k]));
        }
    }
}

TEST_CASE("cli exit codes")
{
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    const auto write = [&](const std::string& name, const json& j) {
        std::ofstream(dir / name) << j.dump();
        return (dir / name).string();
    };
    const std::string ok = write("ok.json", small_schrodinger());
    json failing = small_schrodinger();
    failing["tolerances"] = {{"marginal_defect", 0.0}};
    const std::string bad = write("fail.json", failing);
    json broken = small_schrodinger();
    broken["bump_sigma"] = -1.0;
    const std::string err = write("err.json", broken);
    const std::string out = " --out " + (dir / "out").string();

    CHECK(cli("schrodinger_sweep --config " + ok + out) == 0);
    CHECK(fs::exists(dir / "out" / "summary.csv"));
    CHECK(cli("schrodinger_sweep --config " + ok + out + " --format json --seed 5") == 0);
    CHECK(cli("schrodinger_sweep --config " + bad + out) == 1);
    CHECK(cli("schrodinger_sweep --config " + err + out) == 2);
    CHECK(cli("varadhan --config " + ok + out) == 2);
    CHECK(cli("schrodinger_sweep --config " + (dir / "missing.json").string() + out) == 2);
    CHECK(cli("schrodinger_sweep --config " + ok + out + " --format xml") == 2);
    CHECK(cli("no_such_experiment --config " + ok) == 2);
}
