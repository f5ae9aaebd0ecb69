#include "replaygan/cohortsim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "replaygan/rng.hpp"

namespace replaygan {

namespace {

double reflect(double x, double lo, double hi) {
    if (hi <= lo) return lo;
    const double span = hi - lo;
    double t = std::fmod(x - lo, 2.0 * span);
    if (t < 0.0) t += 2.0 * span;
    return t <= span ? lo + t : hi - (t - span);
}

bool rule_triggered(const ExclusionRule& rule, const VariableSchema& schema, const std::vector<double>& row) {
    const auto var = schema.index_of(rule.trigger_var);
    const auto& spec = schema.variables[static_cast<std::size_t>(*var)];
    const auto lvl = static_cast<std::int64_t>(row[static_cast<std::size_t>(*var)]);
    for (const auto& name : rule.trigger_levels)
        if (spec.level_index(name) == lvl) return true;
    return false;
}

/// Applies rules to fixpoint. Returns false if rules keep rewriting past
/// the iteration cap (conflicting assignments).
bool apply_rules(const std::vector<ExclusionRule>& rules, const VariableSchema& schema, std::vector<double>& row) {
    for (std::size_t pass = 0; pass <= rules.size() + 1; ++pass) {
        bool changed = false;
        for (const auto& rule : rules) {
            if (!rule_triggered(rule, schema, row)) continue;
            const auto target = schema.index_of(rule.target_var);
            const auto& spec = schema.variables[static_cast<std::size_t>(*target)];
            const auto forced = static_cast<double>(*spec.level_index(rule.forced_level));
            if (row[static_cast<std::size_t>(*target)] != forced) {
                row[static_cast<std::size_t>(*target)] = forced;
                changed = true;
            }
        }
        if (!changed) return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> validate_sim_config(const SimConfig& config, const VariableSchema& schema) {
    std::vector<std::string> out;
    if (config.n_patients <= 0) out.push_back("n_patients must be positive");
    if (config.length_lo < kMinRecordMonths || config.length_hi > kMaxRecordMonths ||
        config.length_lo > config.length_hi || config.length_lo % 10 != 0 || config.length_hi % 10 != 0)
        out.push_back("length range must be multiples of 10 within [10, 100]");
    if (config.persistence < 0.0 || config.persistence > 1.0) out.push_back("persistence must lie in [0, 1]");

    for (const auto& v : schema.variables) {
        if (v.is_numeric()) continue;
        bool is_flag = false;
        for (const auto& link : config.missing_links)
            if (link.flag_var == v.name) is_flag = true;
        if (is_flag) continue;
        auto it = config.marginals.find(v.name);
        if (it == config.marginals.end()) {
            out.push_back("missing marginals for variable " + v.name);
            continue;
        }
        if (static_cast<std::int64_t>(it->second.size()) != v.level_count()) {
            out.push_back("marginals for " + v.name + " must list one probability per level");
            continue;
        }
        double total = 0.0;
        for (double p : it->second) {
            if (p < 0.0) out.push_back("negative marginal probability for " + v.name);
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) out.push_back("marginals for " + v.name + " must sum to 1");
    }

    for (const auto& link : config.missing_links) {
        if (link.rate < 0.0 || link.rate > 1.0) out.push_back("missingness rate for " + link.flag_var + " not in [0,1]");
        auto fv = schema.index_of(link.flag_var);
        if (!fv || schema.variables[static_cast<std::size_t>(*fv)].kind != VarKind::Binary)
            out.push_back("missingness flag " + link.flag_var + " must be a binary variable");
        auto nv = schema.index_of(link.numeric_var);
        if (!nv || !schema.variables[static_cast<std::size_t>(*nv)].is_numeric())
            out.push_back("missingness target " + link.numeric_var + " must be a numeric variable");
    }

    for (const auto& v : schema.variables) {
        if (!v.is_numeric()) continue;
        bool found = false;
        for (const auto& d : config.numeric_dynamics)
            if (d.var == v.name) found = true;
        if (!found) out.push_back("missing numeric dynamics for " + v.name);
    }
    for (const auto& d : config.numeric_dynamics) {
        if (d.lo > d.hi || d.init_lo > d.init_hi) out.push_back("bad bounds for numeric dynamics of " + d.var);
        if (d.noise_scale < 0.0 || d.drift_scale < 0.0) out.push_back("negative scale for " + d.var);
    }

    for (const auto& s : config.static_vars) {
        auto idx = schema.index_of(s);
        if (!idx || schema.variables[static_cast<std::size_t>(*idx)].is_numeric())
            out.push_back("static variable " + s + " must be a non-numeric schema variable");
    }

    for (const auto& rule : config.exclusion_rules) {
        auto tv = schema.index_of(rule.trigger_var);
        auto gv = schema.index_of(rule.target_var);
        if (!tv || schema.variables[static_cast<std::size_t>(*tv)].is_numeric()) {
            out.push_back("exclusion rule trigger " + rule.trigger_var + " must be a non-numeric variable");
            continue;
        }
        if (!gv || schema.variables[static_cast<std::size_t>(*gv)].is_numeric()) {
            out.push_back("exclusion rule target " + rule.target_var + " must be a non-numeric variable");
            continue;
        }
        const auto& tspec = schema.variables[static_cast<std::size_t>(*tv)];
        const auto& gspec = schema.variables[static_cast<std::size_t>(*gv)];
        for (const auto& l : rule.trigger_levels)
            if (!tspec.level_index(l)) out.push_back("exclusion rule references unknown level " + l + " of " + rule.trigger_var);
        if (!gspec.level_index(rule.forced_level))
            out.push_back("exclusion rule forces unknown level " + rule.forced_level + " of " + rule.target_var);
        if (rule.trigger_var == rule.target_var) {
            // self-rule is only satisfiable when the forced level cannot re-trigger
            for (const auto& l : rule.trigger_levels)
                if (l == rule.forced_level)
                    out.push_back("infeasible exclusion rule: " + rule.trigger_var + " in {" + l +
                                  "} forces itself to a triggering level");
        }
    }
    // two rules forcing different levels of the same target can deadlock
    for (std::size_t i = 0; i < config.exclusion_rules.size(); ++i) {
        for (std::size_t j = i + 1; j < config.exclusion_rules.size(); ++j) {
            const auto& a = config.exclusion_rules[i];
            const auto& b = config.exclusion_rules[j];
            if (a.target_var != b.target_var || a.forced_level == b.forced_level) continue;
            if (a.trigger_var != b.trigger_var) continue;  // cross-variable conflicts resolve by rule order
            std::set<std::string> sa(a.trigger_levels.begin(), a.trigger_levels.end());
            for (const auto& l : b.trigger_levels)
                if (sa.count(l))
                    out.push_back("infeasible exclusion rules: " + a.trigger_var + "=" + l + " forces " + a.target_var +
                                  " to both " + a.forced_level + " and " + b.forced_level);
        }
    }
    return out;
}

Cohort sample_cohort(const SimConfig& config, const VariableSchema& schema) {
    auto problems = validate_sim_config(config, schema);
    if (!problems.empty()) throw std::invalid_argument("invalid SimConfig: " + problems.front());

    const std::set<std::string> statics(config.static_vars.begin(), config.static_vars.end());
    std::map<std::string, const MissingLink*> flag_of;  // flag var -> link
    std::map<std::string, const MissingLink*> gated_by;  // numeric var -> link
    for (const auto& link : config.missing_links) {
        flag_of[link.flag_var] = &link;
        gated_by[link.numeric_var] = &link;
    }
    std::map<std::string, const NumericDynamics*> dyn_of;
    for (const auto& d : config.numeric_dynamics) dyn_of[d.var] = &d;

    const std::int64_t n_lengths = (config.length_hi - config.length_lo) / 10 + 1;
    Rng base(config.seed);

    Cohort cohort;
    cohort.records.reserve(static_cast<std::size_t>(config.n_patients));
    for (std::int64_t p = 0; p < config.n_patients; ++p) {
        Rng rng = base.substream("patient", static_cast<std::uint64_t>(p));
        PatientRecord rec;
        rec.patient_id = "sim-" + std::to_string(p);
        const std::int64_t length = config.length_lo + 10 * static_cast<std::int64_t>(rng.uniform_index(
                                                               static_cast<std::uint64_t>(n_lengths)));

        std::vector<double> statics_row(static_cast<std::size_t>(schema.var_count()), 0.0);
        for (std::int64_t v = 0; v < schema.var_count(); ++v) {
            const auto& spec = schema.variables[static_cast<std::size_t>(v)];
            if (spec.is_numeric() || !statics.count(spec.name)) continue;
            statics_row[static_cast<std::size_t>(v)] =
                static_cast<double>(rng.categorical(config.marginals.at(spec.name)));
        }

        std::vector<double> walk(static_cast<std::size_t>(schema.var_count()), 0.0);
        std::vector<double> drift(static_cast<std::size_t>(schema.var_count()), 0.0);
        std::vector<double> last_observed(static_cast<std::size_t>(schema.var_count()), 0.0);
        for (std::int64_t v = 0; v < schema.var_count(); ++v) {
            const auto& spec = schema.variables[static_cast<std::size_t>(v)];
            if (!spec.is_numeric()) continue;
            const auto* d = dyn_of.at(spec.name);
            walk[static_cast<std::size_t>(v)] = rng.uniform(d->init_lo, d->init_hi);
            drift[static_cast<std::size_t>(v)] = rng.normal(0.0, d->drift_scale);
            last_observed[static_cast<std::size_t>(v)] = walk[static_cast<std::size_t>(v)];
        }

        std::vector<double> prev_row;
        for (std::int64_t t = 0; t < length; ++t) {
            std::vector<double> row(static_cast<std::size_t>(schema.var_count()), 0.0);

            // flags first: they gate the numeric carry-forward below
            for (std::int64_t v = 0; v < schema.var_count(); ++v) {
                const auto& spec = schema.variables[static_cast<std::size_t>(v)];
                if (spec.is_numeric()) continue;
                const std::size_t sv = static_cast<std::size_t>(v);
                if (statics.count(spec.name)) {
                    row[sv] = statics_row[sv];
                } else if (auto it = flag_of.find(spec.name); it != flag_of.end()) {
                    // levels are [False, True]; unmeasured months fall back on
                    // the walk's initial value via last_observed
                    row[sv] = rng.uniform() < it->second->rate ? 1.0 : 0.0;
                } else {
                    if (t > 0 && rng.uniform() < config.persistence)
                        row[sv] = prev_row[sv];
                    else
                        row[sv] = static_cast<double>(rng.categorical(config.marginals.at(spec.name)));
                }
            }
            if (!apply_rules(config.exclusion_rules, schema, row))
                throw std::invalid_argument("infeasible exclusion rules: no satisfying assignment for row");

            for (std::int64_t v = 0; v < schema.var_count(); ++v) {
                const auto& spec = schema.variables[static_cast<std::size_t>(v)];
                if (!spec.is_numeric()) continue;
                const std::size_t sv = static_cast<std::size_t>(v);
                const auto* d = dyn_of.at(spec.name);
                if (t > 0)
                    walk[sv] = reflect(walk[sv] + drift[sv] + rng.normal(0.0, d->noise_scale), d->lo, d->hi);
                bool measured = true;
                if (auto it = gated_by.find(spec.name); it != gated_by.end()) {
                    const auto fv = schema.index_of(it->second->flag_var);
                    measured = row[static_cast<std::size_t>(*fv)] == 1.0;
                }
                if (measured) last_observed[sv] = walk[sv];
                row[sv] = last_observed[sv];
            }

            prev_row = row;
            rec.rows.push_back(std::move(row));
        }
        cohort.records.push_back(std::move(rec));
    }
    return cohort;
}

CohortSummary cohort_summary(const Cohort& cohort, const VariableSchema& schema) {
    if (cohort.records.empty()) throw std::invalid_argument("cohort_summary: empty cohort");
    CohortSummary out;
    out.total_rows = cohort.total_rows();

    std::vector<std::int64_t> nn_vars;
    for (std::int64_t v = 0; v < schema.var_count(); ++v)
        if (!schema.variables[static_cast<std::size_t>(v)].is_numeric()) nn_vars.push_back(v);

    for (std::int64_t v : nn_vars) {
        const auto& spec = schema.variables[static_cast<std::size_t>(v)];
        VariableMarginal m;
        m.name = spec.name;
        m.counts.assign(static_cast<std::size_t>(spec.level_count()), 0);
        for (const auto& rec : cohort.records)
            for (const auto& row : rec.rows)
                ++m.counts[static_cast<std::size_t>(row[static_cast<std::size_t>(v)])];
        for (auto c : m.counts) m.fractions.push_back(static_cast<double>(c) / static_cast<double>(out.total_rows));
        out.marginals.push_back(std::move(m));
    }

    for (std::size_t i = 0; i < nn_vars.size(); ++i) {
        for (std::size_t j = i + 1; j < nn_vars.size(); ++j) {
            const auto& sa = schema.variables[static_cast<std::size_t>(nn_vars[i])];
            const auto& sb = schema.variables[static_cast<std::size_t>(nn_vars[j])];
            CoOccurrenceTable t;
            t.var_a = sa.name;
            t.var_b = sb.name;
            t.counts.assign(static_cast<std::size_t>(sa.level_count()),
                            std::vector<std::int64_t>(static_cast<std::size_t>(sb.level_count()), 0));
            for (const auto& rec : cohort.records)
                for (const auto& row : rec.rows)
                    ++t.counts[static_cast<std::size_t>(row[static_cast<std::size_t>(nn_vars[i])])]
                              [static_cast<std::size_t>(row[static_cast<std::size_t>(nn_vars[j])])];
            out.cooccurrence.push_back(std::move(t));
        }
    }
    return out;
}

SimConfig default_surrogate_config(std::int64_t n_patients, std::int64_t length_lo, std::int64_t length_hi,
                                   std::uint64_t seed) {
    SimConfig c;
    c.n_patients = n_patients;
    c.length_lo = length_lo;
    c.length_hi = length_hi;
    c.seed = seed;
    c.persistence = 0.9;
    c.static_vars = {"Gender", "Ethnic"};

    // rare gender-ethnicity cell: Female x Asian = 0.5 * 0.02 = 1%
    c.marginals["Gender"] = {0.5, 0.5};
    c.marginals["Ethnic"] = {0.02, 0.10, 0.66, 0.22};
    c.marginals["Base Drug Combo"] = {0.62, 0.14, 0.12, 0.06, 0.04, 0.02};
    c.marginals["Comp. INI"] = {0.22, 0.10, 0.02, 0.66};
    c.marginals["Comp. NNRTI"] = {0.12, 0.20, 0.02, 0.66};
    c.marginals["Extra PI"] = {0.12, 0.08, 0.06, 0.04, 0.02, 0.68};
    c.marginals["Extra pk-En"] = {0.92, 0.08};

    c.missing_links = {
        {"VL (M)", "VL", 0.2427},
        {"CD4 (M)", "CD4", 0.2221},
        {"Drug (M)", "Rel CD4", 0.8513},
    };

    c.exclusion_rules = {
        {"Comp. NNRTI", {"NVP", "EFV", "RPV"}, "Comp. INI", "Not Applied"},
        {"Comp. INI", {"DTG", "RAL", "EVG"}, "Comp. NNRTI", "Not Applied"},
    };

    c.numeric_dynamics = {
        {"VL", 50.0, 100000.0, 1500.0, 6000.0, 10.0, 500000.0},
        {"CD4", 200.0, 900.0, 8.0, 40.0, 50.0, 1500.0},
        {"Rel CD4", 10.0, 40.0, 0.4, 2.0, 2.0, 60.0},
    };
    return c;
}

}  // namespace replaygan
