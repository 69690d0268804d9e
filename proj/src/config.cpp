#include "crest/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace crest {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!known.count(item.key()))
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

MatrixXd parse_matrix(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError("'" + name + "' must be a non-empty array of arrays");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
            throw ConfigError("'" + name + "' rows have inconsistent lengths");
        for (int c = 0; c < cols; ++c) {
            if (!j[i][c].is_number())
                throw ConfigError("'" + name + "' entries must be numbers");
            m(i, c) = j[i][c].get<double>();
        }
    }
    return m;
}

VectorXd parse_vector(const json& j, const std::string& name) {
    if (!j.is_array())
        throw ConfigError("'" + name + "' must be an array of numbers");
    VectorXd v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) {
        if (!j[i].is_number())
            throw ConfigError("'" + name + "' entries must be numbers");
        v(i) = j[i].get<double>();
    }
    return v;
}

}  // namespace

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
    if (runs <= 0) return seeds;
    std::vector<std::uint64_t> list;
    list.reserve(runs);
    const std::uint64_t base = seeds.empty() ? 1 : seeds.front();
    for (int i = 0; i < runs; ++i) list.push_back(base + static_cast<std::uint64_t>(i));
    return list;
}

ExperimentConfig load_config(const std::string& path) {
    const json root = parse_file(path);
    if (!root.is_object()) throw ConfigError("config root must be an object");
    reject_unknown_keys(root,
                        {"model", "horizon", "seed", "seeds", "runs", "alpha",
                         "p0_scale", "time_update_attack", "attack_constraints",
                         "state_constraints", "speed_bound", "out"},
                        path);

    ExperimentConfig cfg;
    if (root.contains("model")) {
        const json& m = root["model"];
        if (m.is_string()) {
            cfg.model = m.get<std::string>();
        } else if (m.is_object()) {
            reject_unknown_keys(m, {"file", "agents"}, "model object");
            if (m.contains("file")) {
                if (!m["file"].is_string())
                    throw ConfigError("model.file must be a string");
                cfg.model_file = m["file"].get<std::string>();
                cfg.model.clear();
            }
            if (m.contains("agents")) {
                if (!m["agents"].is_number_integer())
                    throw ConfigError("model.agents must be an integer");
                cfg.agents = m["agents"].get<int>();
                if (cfg.model_file.empty()) cfg.model = "multi-agent";
            }
            if (!m.contains("file") && !m.contains("agents"))
                throw ConfigError("model object needs 'file' or 'agents'");
        } else {
            throw ConfigError("'model' must be a string or an object");
        }
    }
    if (root.contains("horizon")) {
        if (!root["horizon"].is_number_integer())
            throw ConfigError("'horizon' must be an integer");
        cfg.horizon = root["horizon"].get<int>();
    }
    if (root.contains("seed") && root.contains("seeds"))
        throw ConfigError("give either 'seed' or 'seeds', not both");
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
            throw ConfigError("'seed' must be a nonnegative integer");
        cfg.seeds = {root["seed"].get<std::uint64_t>()};
    }
    if (root.contains("seeds")) {
        if (!root["seeds"].is_array() || root["seeds"].empty())
            throw ConfigError("'seeds' must be a non-empty array");
        cfg.seeds.clear();
        for (const auto& s : root["seeds"]) {
            if (!s.is_number_unsigned() && !s.is_number_integer())
                throw ConfigError("'seeds' entries must be nonnegative integers");
            cfg.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (root.contains("runs")) {
        if (!root["runs"].is_number_integer())
            throw ConfigError("'runs' must be an integer");
        cfg.runs = root["runs"].get<int>();
        if (cfg.runs < 1) throw ConfigError("'runs' must be >= 1");
    }
    if (root.contains("alpha")) {
        if (!root["alpha"].is_number())
            throw ConfigError("'alpha' must be a number");
        cfg.alpha = root["alpha"].get<double>();
    }
    if (root.contains("p0_scale")) {
        if (!root["p0_scale"].is_number())
            throw ConfigError("'p0_scale' must be a number");
        cfg.p0_scale = root["p0_scale"].get<double>();
    }
    if (root.contains("time_update_attack")) {
        const std::string v = root["time_update_attack"].is_string()
                                  ? root["time_update_attack"].get<std::string>()
                                  : std::string();
        if (v == "unconstrained")
            cfg.time_update_attack = TimeUpdateAttack::kUnconstrained;
        else if (v == "constrained")
            cfg.time_update_attack = TimeUpdateAttack::kConstrained;
        else
            throw ConfigError(
                "'time_update_attack' must be 'unconstrained' or 'constrained'");
    }
    if (root.contains("attack_constraints")) {
        if (!root["attack_constraints"].is_boolean())
            throw ConfigError("'attack_constraints' must be a boolean");
        cfg.attack_constraints = root["attack_constraints"].get<bool>();
    }
    if (root.contains("state_constraints")) {
        if (!root["state_constraints"].is_boolean())
            throw ConfigError("'state_constraints' must be a boolean");
        cfg.state_constraints = root["state_constraints"].get<bool>();
    }
    if (root.contains("speed_bound")) {
        const std::string v = root["speed_bound"].is_string()
                                  ? root["speed_bound"].get<std::string>()
                                  : std::string();
        if (v == "per-agent")
            cfg.speed_bound = scenario::SpeedBound::kPerAgent;
        else if (v == "relative")
            cfg.speed_bound = scenario::SpeedBound::kRelative;
        else
            throw ConfigError("'speed_bound' must be 'per-agent' or 'relative'");
    }
    if (root.contains("out")) {
        if (!root["out"].is_string())
            throw ConfigError("'out' must be a string");
        cfg.out = root["out"].get<std::string>();
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& config) {
    if (config.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw ConfigError("alpha must lie strictly inside (0, 1)");
    if (!(config.p0_scale > 0.0)) throw ConfigError("p0_scale must be positive");
    if (config.seeds.empty()) throw ConfigError("seed list must be non-empty");
    if (config.model.empty() && config.model_file.empty())
        throw ConfigError("a model name or model file is required");
    if (config.model_file.empty() && config.agents < 1)
        throw ConfigError("agent count must be >= 1");
}

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& ov) {
    if (ov.seed) config.seeds = {*ov.seed};
    if (ov.horizon) config.horizon = *ov.horizon;
    if (ov.alpha) config.alpha = *ov.alpha;
    if (ov.no_attack_constraints) config.attack_constraints = false;
    if (ov.no_state_constraints) config.state_constraints = false;
    if (ov.out) config.out = *ov.out;
    validate_config(config);
}

ConstraintSet ModelBundle::constraints_at(const VectorXd& x_pred,
                                          const VectorXd& u) const {
    if (scenario_constraints)
        return scenario::build_constraints(scenario_opts, x_pred, u);
    return static_constraints;
}

ModelBundle build_model(const ExperimentConfig& config) {
    if (!config.model_file.empty()) {
        const json root = parse_file(config.model_file);
        if (!root.is_object())
            throw ConfigError("model file root must be an object");
        reject_unknown_keys(root,
                            {"A", "B", "C", "G", "Q", "R", "x0",
                             "attack_constraints", "state_constraints"},
                            config.model_file);
        for (const char* key : {"A", "B", "C", "G", "Q", "R"})
            if (!root.contains(key))
                throw ConfigError(std::string("model file lacks '") + key + "'");
        SystemStep step = [&] {
            try {
                return SystemStep(parse_matrix(root["A"], "A"),
                                  parse_matrix(root["B"], "B"),
                                  parse_matrix(root["C"], "C"),
                                  parse_matrix(root["G"], "G"),
                                  parse_matrix(root["Q"], "Q"),
                                  parse_matrix(root["R"], "R"));
            } catch (const ArgumentError& e) {
                throw ConfigError("model file is inconsistent: " +
                                  std::string(e.what()));
            }
        }();

        MatrixXd A_d(0, step.p());
        VectorXd b_d(0);
        MatrixXd B_x(0, step.n());
        VectorXd c_x(0);
        if (root.contains("attack_constraints")) {
            const json& blk = root["attack_constraints"];
            reject_unknown_keys(blk, {"A", "b"}, "attack_constraints");
            if (!blk.contains("A") || !blk.contains("b"))
                throw ConfigError("attack_constraints needs 'A' and 'b'");
            A_d = parse_matrix(blk["A"], "attack_constraints.A");
            b_d = parse_vector(blk["b"], "attack_constraints.b");
        }
        if (root.contains("state_constraints")) {
            const json& blk = root["state_constraints"];
            reject_unknown_keys(blk, {"B", "c"}, "state_constraints");
            if (!blk.contains("B") || !blk.contains("c"))
                throw ConfigError("state_constraints needs 'B' and 'c'");
            B_x = parse_matrix(blk["B"], "state_constraints.B");
            c_x = parse_vector(blk["c"], "state_constraints.c");
        }
        if (!config.attack_constraints) {
            A_d = MatrixXd(0, step.p());
            b_d = VectorXd(0);
        }
        if (!config.state_constraints) {
            B_x = MatrixXd(0, step.n());
            c_x = VectorXd(0);
        }

        VectorXd x0 = VectorXd::Zero(step.n());
        if (root.contains("x0")) {
            x0 = parse_vector(root["x0"], "x0");
            if (x0.size() != step.n())
                throw ConfigError("'x0' length must equal the state dimension");
        }

        const int p = step.p();
        ModelBundle bundle{ModelProvider::constant(std::move(step)),
                           false,
                           scenario::ScenarioOptions{},
                           [&] {
                               try {
                                   return ConstraintSet(A_d, b_d, B_x, c_x);
                               } catch (const ArgumentError& e) {
                                   throw ConfigError(
                                       "model file constraints are inconsistent: " +
                                       std::string(e.what()));
                               }
                           }(),
                           x0,
                           [p](int) { return VectorXd::Zero(p); }};
        return bundle;
    }

    int agents = config.agents;
    if (config.model == "two-agent")
        agents = 2;
    else if (config.model == "one-agent")
        agents = 1;
    else if (config.model != "multi-agent")
        throw ConfigError("unknown model '" + config.model +
                          "' (expected 'two-agent', 'one-agent', 'multi-agent', "
                          "or a model file)");

    scenario::ScenarioOptions opts;
    opts.n_agents = agents;
    opts.speed_bound = config.speed_bound;
    opts.attack_constraints = config.attack_constraints;
    opts.state_constraints = config.state_constraints;

    ModelProvider provider = scenario::build_multiagent(agents);
    const int p = provider.p();
    ModelBundle bundle{std::move(provider),
                       true,
                       opts,
                       ConstraintSet::none(p, 4 * agents),
                       scenario::default_initial_state(agents),
                       [p](int k) { return scenario::attack_signal(k, p); }};
    return bundle;
}

}  // namespace crest
