#include "replaygan/config_json.hpp"

#include <stdexcept>

namespace replaygan {

using nlohmann::json;

json schema_to_json(const VariableSchema& schema) {
    json vars = json::array();
    for (const auto& v : schema.variables) {
        json jv;
        jv["name"] = v.name;
        jv["kind"] = v.kind == VarKind::Numeric ? "numeric" : (v.kind == VarKind::Binary ? "binary" : "categorical");
        if (v.unit) jv["unit"] = *v.unit;
        if (!v.levels.empty()) jv["levels"] = v.levels;
        if (v.embed_dim > 0) jv["embed_dim"] = v.embed_dim;
        if (v.log_transform) jv["log_transform"] = true;
        vars.push_back(std::move(jv));
    }
    json out;
    out["variables"] = std::move(vars);
    out["quasi_identifiers"] = schema.quasi_identifiers;
    return out;
}

VariableSchema schema_from_json(const json& j) {
    VariableSchema schema;
    for (const auto& jv : j.at("variables")) {
        VariableSpec v;
        v.name = jv.at("name").get<std::string>();
        const auto kind = jv.at("kind").get<std::string>();
        if (kind == "numeric")
            v.kind = VarKind::Numeric;
        else if (kind == "binary")
            v.kind = VarKind::Binary;
        else if (kind == "categorical")
            v.kind = VarKind::Categorical;
        else
            throw std::invalid_argument("schema json: unknown kind " + kind);
        if (jv.contains("unit")) v.unit = jv.at("unit").get<std::string>();
        if (jv.contains("levels")) v.levels = jv.at("levels").get<std::vector<std::string>>();
        if (jv.contains("embed_dim")) v.embed_dim = jv.at("embed_dim").get<std::int64_t>();
        if (jv.contains("log_transform")) v.log_transform = jv.at("log_transform").get<bool>();
        schema.variables.push_back(std::move(v));
    }
    if (j.contains("quasi_identifiers"))
        schema.quasi_identifiers = j.at("quasi_identifiers").get<std::vector<std::string>>();
    return schema;
}

json sim_config_to_json(const SimConfig& c) {
    json out;
    out["n_patients"] = c.n_patients;
    out["length_lo"] = c.length_lo;
    out["length_hi"] = c.length_hi;
    out["persistence"] = c.persistence;
    out["seed"] = c.seed;
    out["static_vars"] = c.static_vars;
    json marg;
    for (const auto& [k, v] : c.marginals) marg[k] = v;
    out["marginals"] = std::move(marg);
    json links = json::array();
    for (const auto& l : c.missing_links)
        links.push_back({{"flag", l.flag_var}, {"numeric", l.numeric_var}, {"rate", l.rate}});
    out["missing_links"] = std::move(links);
    json rules = json::array();
    for (const auto& r : c.exclusion_rules)
        rules.push_back({{"trigger_var", r.trigger_var},
                         {"trigger_levels", r.trigger_levels},
                         {"target_var", r.target_var},
                         {"forced_level", r.forced_level}});
    out["exclusion_rules"] = std::move(rules);
    json dyn = json::array();
    for (const auto& d : c.numeric_dynamics)
        dyn.push_back({{"var", d.var},
                       {"init_lo", d.init_lo},
                       {"init_hi", d.init_hi},
                       {"drift_scale", d.drift_scale},
                       {"noise_scale", d.noise_scale},
                       {"lo", d.lo},
                       {"hi", d.hi}});
    out["numeric_dynamics"] = std::move(dyn);
    return out;
}

SimConfig sim_config_from_json(const json& j) {
    SimConfig c;
    c.n_patients = j.at("n_patients").get<std::int64_t>();
    if (j.contains("length_lo")) c.length_lo = j.at("length_lo").get<std::int64_t>();
    if (j.contains("length_hi")) c.length_hi = j.at("length_hi").get<std::int64_t>();
    if (j.contains("persistence")) c.persistence = j.at("persistence").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("static_vars")) c.static_vars = j.at("static_vars").get<std::vector<std::string>>();
    if (j.contains("marginals"))
        for (const auto& [k, v] : j.at("marginals").items()) c.marginals[k] = v.get<std::vector<double>>();
    if (j.contains("missing_links"))
        for (const auto& l : j.at("missing_links"))
            c.missing_links.push_back(
                {l.at("flag").get<std::string>(), l.at("numeric").get<std::string>(), l.at("rate").get<double>()});
    if (j.contains("exclusion_rules"))
        for (const auto& r : j.at("exclusion_rules"))
            c.exclusion_rules.push_back({r.at("trigger_var").get<std::string>(),
                                         r.at("trigger_levels").get<std::vector<std::string>>(),
                                         r.at("target_var").get<std::string>(),
                                         r.at("forced_level").get<std::string>()});
    if (j.contains("numeric_dynamics"))
        for (const auto& d : j.at("numeric_dynamics"))
            c.numeric_dynamics.push_back({d.at("var").get<std::string>(), d.at("init_lo").get<double>(),
                                          d.at("init_hi").get<double>(), d.at("drift_scale").get<double>(),
                                          d.at("noise_scale").get<double>(), d.at("lo").get<double>(),
                                          d.at("hi").get<double>()});
    return c;
}

json train_config_to_json(const train::TrainConfig& c) {
    json out;
    out["variant"] = train::to_string(c.variant);
    out["epochs"] = c.epochs;
    out["batch_size"] = c.batch_size;
    out["lr"] = c.lr;
    out["n_critic"] = c.n_critic;
    out["lambda_gp"] = c.lambda_gp;
    out["lambda_corr"] = c.lambda_corr;
    out["lambda_kl"] = c.lambda_kl;
    out["use_alignment"] = c.use_alignment;
    out["curriculum"] = c.curriculum;
    out["buffer_capacity"] = c.buffer_capacity;
    out["mc_critic_interval"] = c.mc_critic_interval;
    out["seed"] = c.seed;
    return out;
}

train::TrainConfig train_config_from_json(const json& j) {
    train::TrainConfig c;
    if (j.contains("variant")) c.variant = train::variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::int64_t>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::int64_t>();
    if (j.contains("lr")) c.lr = j.at("lr").get<double>();
    if (j.contains("n_critic")) c.n_critic = j.at("n_critic").get<std::int64_t>();
    if (j.contains("lambda_gp")) c.lambda_gp = j.at("lambda_gp").get<double>();
    if (j.contains("lambda_corr")) c.lambda_corr = j.at("lambda_corr").get<double>();
    if (j.contains("lambda_kl")) c.lambda_kl = j.at("lambda_kl").get<double>();
    if (j.contains("use_alignment")) c.use_alignment = j.at("use_alignment").get<bool>();
    if (j.contains("curriculum")) c.curriculum = j.at("curriculum").get<std::vector<std::int64_t>>();
    if (j.contains("buffer_capacity")) c.buffer_capacity = j.at("buffer_capacity").get<std::int64_t>();
    if (j.contains("mc_critic_interval")) c.mc_critic_interval = j.at("mc_critic_interval").get<std::int64_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json rl_spec_to_json(const rlutil::RLSpec& s) {
    json out;
    out["observation_numeric"] = s.observation_numeric;
    out["medication_vars"] = s.medication_vars;
    out["action_var_a"] = s.action_var_a;
    out["action_var_b"] = s.action_var_b;
    out["n_state_clusters"] = s.n_state_clusters;
    out["reduce_dim"] = s.reduce_dim;
    out["iterations"] = s.iterations;
    out["step_size"] = s.step_size;
    out["detection_limit"] = s.detection_limit;
    out["gamma_rl"] = s.gamma_rl;
    out["tau_bcq"] = s.tau_bcq;
    if (s.subgroup) out["subgroup"] = {{"variable", s.subgroup->first}, {"level", s.subgroup->second}};
    return out;
}

rlutil::RLSpec rl_spec_from_json(const json& j) {
    rlutil::RLSpec s;
    if (j.contains("observation_numeric"))
        s.observation_numeric = j.at("observation_numeric").get<std::vector<std::string>>();
    if (j.contains("medication_vars")) s.medication_vars = j.at("medication_vars").get<std::vector<std::string>>();
    if (j.contains("action_var_a")) s.action_var_a = j.at("action_var_a").get<std::string>();
    if (j.contains("action_var_b")) s.action_var_b = j.at("action_var_b").get<std::string>();
    if (j.contains("n_state_clusters")) s.n_state_clusters = j.at("n_state_clusters").get<std::int64_t>();
    if (j.contains("reduce_dim")) s.reduce_dim = j.at("reduce_dim").get<std::int64_t>();
    if (j.contains("iterations")) s.iterations = j.at("iterations").get<std::int64_t>();
    if (j.contains("step_size")) s.step_size = j.at("step_size").get<double>();
    if (j.contains("detection_limit")) s.detection_limit = j.at("detection_limit").get<double>();
    if (j.contains("gamma_rl")) s.gamma_rl = j.at("gamma_rl").get<double>();
    if (j.contains("tau_bcq")) s.tau_bcq = j.at("tau_bcq").get<double>();
    if (j.contains("subgroup"))
        s.subgroup = {j.at("subgroup").at("variable").get<std::string>(),
                      j.at("subgroup").at("level").get<std::string>()};
    return s;
}

}  // namespace replaygan
