#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crest/filter.hpp"
#include "crest/model.hpp"
#include "crest/scenario.hpp"

namespace crest {

// Experiment description, loadable from a strict JSON document (unknown keys
// are rejected) and overridable by CLI flags.
struct ExperimentConfig {
    std::string model = "two-agent";  // builtin name; empty when model_file set
    std::string model_file;           // JSON file with constant system matrices
    int agents = 2;                   // builtin multi-agent scenario size
    int horizon = 1000;
    std::vector<std::uint64_t> seeds = {1};
    int runs = 0;                     // when > 0, expands seeds[0]..+runs-1
    double alpha = 0.05;
    double p0_scale = 1.0;
    TimeUpdateAttack time_update_attack = TimeUpdateAttack::kUnconstrained;
    bool attack_constraints = true;
    bool state_constraints = true;
    scenario::SpeedBound speed_bound = scenario::SpeedBound::kPerAgent;
    std::string out = "out";

    // Expanded Monte-Carlo seed list (applies `runs`).
    std::vector<std::uint64_t> seed_list() const;
};

// Parses and validates a config file; throws ConfigError on unknown keys,
// malformed JSON, or out-of-range values.
ExperimentConfig load_config(const std::string& path);

// Validates ranges (horizon >= 1, alpha in (0,1), p0_scale > 0, seeds
// non-empty); throws ConfigError.
void validate_config(const ExperimentConfig& config);

// Optional CLI overrides applied on top of a config.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> horizon;
    std::optional<double> alpha;
    bool no_attack_constraints = false;
    bool no_state_constraints = false;
    std::optional<std::string> out;
};

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& ov);

// A ready-to-run experiment: the model, its constraints (either regenerated
// each step from the scenario or a static set), the initial state, and the
// attack injected when simulating.
struct ModelBundle {
    ModelProvider provider;
    bool scenario_constraints = false;       // rebuild per step when true
    scenario::ScenarioOptions scenario_opts; // used when scenario_constraints
    ConstraintSet static_constraints;        // used otherwise
    VectorXd x0;
    std::function<VectorXd(int)> attack;     // truth attack for simulation

    ConstraintSet constraints_at(const VectorXd& x_pred, const VectorXd& u) const;
};

// Builds the experiment from the config: builtin "two-agent" / "one-agent" /
// "<N>-agent" scenarios, or a model file with constant matrices.
ModelBundle build_model(const ExperimentConfig& config);

}  // namespace crest
