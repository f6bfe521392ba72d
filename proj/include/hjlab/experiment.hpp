#pragma once

#include "hjlab/mmspace.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hjlab {

inline constexpr std::string_view kSchemaTag = "hjlab.result/1";

/// A config value is missing, has the wrong type or violates a constraint.
class ConfigError : public DomainError {
public:
    ConfigError(const std::string& field, const std::string& reason)
        : DomainError("config field '" + field + "': " + reason), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class ExperimentKind {
    KernelValidate,
    HjSweep,
    Contraction,
    Varadhan,
    SetLdp,
    VaradhanLemma,
    GammaDirac,
    TubeLdp,
    SchrodingerSweep,
};

std::string_view to_string(ExperimentKind k);
std::optional<ExperimentKind> experiment_from_string(std::string_view s);
const std::vector<ExperimentKind>& all_experiments();

/// Keys: kind ("interval" | "circle" | "graph"), n, length (interval),
/// circumference (circle), edges [[a, b, length], ...], weights, k_lower (graph).
struct SpaceSpec {
    Topology kind = Topology::Interval;
    Index n = 0;
    double extent = 0.0;
    std::vector<Edge> edges;
    std::vector<double> weights;
    double k_lower = 0.0;
};

DiscreteSpace build_space(const SpaceSpec& spec);

/// Initial datum from the catalogue: sin (sin of 2 pi s / extent), coordinate
/// (s), well (squared distance to a centre), custom (one value per point).
/// The result is scale * base + offset.
struct PhiSpec {
    std::string name = "sin";
    double scale = 1.0;
    double offset = 0.0;
    double center = 0.0;          // well
    std::vector<double> values;   // custom
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::KernelValidate;
    SpaceSpec space;
    PhiSpec phi;
    std::uint64_t seed = 0;

    // kernel_validate
    std::vector<double> kernel_times{1e-3, 1e-2, 1e-1, 1.0};
    double ck_s = 0.1;
    double ck_t = 0.2;
    // hj_sweep / contraction
    double t = 1.0;
    std::vector<double> t_list;
    std::vector<double> eps_list;
    // LDP experiments; locations are coordinates on interval/circle, point
    // indices on graphs
    std::vector<double> t_grid;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;                   // gamma_dirac target point
    std::vector<double> set;          // [lo, hi]
    std::vector<double> set_with_x;   // [lo, hi], must contain x
    std::vector<double> path;         // reference path nodes, uniform partition
    double radius_mesh = 4.0;         // tube radius in units of mesh
    double mc_t = 0.05;
    double mc_radius = 0.2;
    std::uint64_t mc_samples = 10000;
    // schrodinger_sweep
    std::vector<double> bump_centers{0.25, 0.75};
    double bump_sigma = 0.2;
    double sinkhorn_tol = 1e-11;

    /// Named tolerances overriding the defaults of each experiment.
    nlohmann::json tolerances = nlohmann::json::object();

    double tolerance(const std::string& name, double fallback) const;
};

/// Validates and converts a parsed config; throws ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// One asserted invariant. measured is compared to reference within tolerance
/// as described by the invariant text; pass is the outcome.
struct Check {
    std::string name;
    std::string invariant;
    double measured = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ResultBundle {
    std::string schema{kSchemaTag};
    std::string experiment;
    nlohmann::json config;
    /// Resolution-window echo: lo, hi and the kernel times checked against it.
    nlohmann::json resolution;
    std::vector<Table> tables;
    std::vector<Check> checks;

    bool all_pass() const;
    const Table* table(std::string_view name) const;
    const Check* check(std::string_view name) const;
};

/// Runs the configured experiment. Grid times are validated against the
/// resolution window before any kernel is computed.
ResultBundle run_experiment(const ExperimentConfig& config);

}  // namespace hjlab
