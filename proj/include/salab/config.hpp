#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "salab/sa.hpp"

namespace salab {

struct VariantConfig {
    std::string name;
    NoiseSpec noise;
    int expected_label = -1;          // OrderK: label implied by the start state
    bool cycle_start = false;         // replica r starts at (start_state + r) % S
};

struct ClassMemoryPass {
    double own_tol = 0.02;
    double other_min = 0.4;
};
struct MimicEstimatePass {
    double smoothing = 0.0;
    double tol_tv = 0.01;
    std::vector<double> label_law; // for the exact-mimic oracle
};
struct MimicComparePass {
    double tol = 0.02;
};
struct DecomposePass {
    std::string source = "estimated"; // or "configured"
    double smoothing = 0.0;
};
struct OdeTrackPass {
    double window = 5.0;
    double dt = 1e-3;
    double t_lo = 0.1;
    int anchors = 16;
    int min_success = 18;
};
struct EquilibriaPass {
    double lo = -2.0, hi = 2.0;
    int grid = 40;
    double tol = 0.05;
    double dispersion_tol = 0.02;
};
struct GradientGapPass {
    std::string objective = "linear-state";
    double x = 1.0;
    double tol = 1e-4;
    double const_tol = 1e-6;
    std::optional<double> expected_gap;
};
struct SettlePass {
    double tol = 0.05;
};
struct SettleComparePass {
    double min_ratio = 3.0;
    int min_success = 18;
};

using PassConfig =
    std::variant<ClassMemoryPass, MimicEstimatePass, MimicComparePass, DecomposePass,
                 OdeTrackPass, EquilibriaPass, GradientGapPass, SettlePass,
                 SettleComparePass>;

/// Declarative description of one seeded experiment.
struct ExperimentConfig {
    std::string scenario;
    int dim = 1;
    Vec state_values;
    std::string drift_family = "value-tracking";
    Drift drift;
    StepSchedule schedule;
    bool schedule_override = false;
    MartingaleNoise martingale;
    long long horizon = 100000;
    int replicas = 1;
    std::uint64_t seed = 0;
    double radius = 1e3;
    Vec x0;
    long long dense_prefix = 1000;
    bool record_full_noise = false;
    std::vector<VariantConfig> variants;
    std::string output = "out";
    std::vector<PassConfig> passes;
};

/// Parses and fully validates a config document. Throws SchemaError carrying
/// every path + reason found, or UnknownFamily / InvalidSchedule when that is
/// the single failure.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);

/// Named drift families available to configs.
Drift make_drift(const std::string& family, const Vec& state_values);

} // namespace salab
