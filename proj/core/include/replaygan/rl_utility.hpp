#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "replaygan/schema.hpp"
#include "replaygan/tensor.hpp"

namespace replaygan::rlutil {

struct RLSpec {
    std::vector<std::string> observation_numeric = {"VL", "CD4", "Rel CD4"};
    std::vector<std::string> medication_vars = {"Base Drug Combo", "Comp. INI", "Comp. NNRTI", "Extra PI",
                                                "Extra pk-En"};
    std::string action_var_a = "Comp. NNRTI";      // heatmap rows
    std::string action_var_b = "Base Drug Combo";  // heatmap columns
    std::int64_t n_state_clusters = 100;
    std::int64_t reduce_dim = 5;
    std::int64_t iterations = 100;   // full sweeps over the transition set
    double step_size = 0.01;
    double detection_limit = 50.0;   // copies/mL
    double gamma_rl = 0.99;
    double tau_bcq = 0.3;
    std::optional<std::pair<std::string, std::string>> subgroup;  // (variable, level)
};

/// Treatment reward. CD4 arrives in cells/uL and is converted to cells/mL.
/// Above the detection limit: -0.7 ln VL + 0.6 ln CD4_mL; at or below:
/// 5 + 0.6 ln VL. Rejects nonpositive inputs.
double hiv_reward(double vl_copies_ml, double cd4_cells_ul, double detection_limit);

struct StateLabels {
    /// labels[r][k] is the state of record r's row (k+1); the first month
    /// of each record has no state (it lacks a previous-month regimen).
    std::vector<std::vector<std::int64_t>> per_record;
    bool pca_fallback = false;  // cross decomposition was degenerate
    std::int64_t clusters_used = 0;
};

/// Observation features (numerics at t, regimen at t-1) projected to
/// reduce_dim by reward-supervised cross decomposition, then k-means
/// labeled. Deterministic given the seed.
StateLabels build_states(const Cohort& cohort, const VariableSchema& schema, const RLSpec& spec, std::uint64_t seed);

struct Transition {
    std::int64_t state = 0;
    std::int64_t action = 0;
    double reward = 0.0;
    std::int64_t next_state = 0;
    bool terminal = false;
};

/// Consecutive-month transitions within each record; the reward is the
/// next month's health-state reward. Action ids are level_a * |B| + level_b.
std::vector<Transition> build_transitions(const Cohort& cohort, const VariableSchema& schema, const RLSpec& spec,
                                          const StateLabels& labels);

struct PolicyTable {
    Tensor q;                                   // [states, actions]
    std::vector<std::vector<bool>> allowed;     // batch-constrained admissibility
    std::vector<std::int64_t> greedy;           // -1 when the state was never observed
    std::vector<double> action_freq;            // greedy frequencies over the training rows
    std::int64_t n_actions = 0;
    std::int64_t level_count_a = 0;
    std::int64_t level_count_b = 0;
    std::int64_t fallback_states = 0;           // states scored without observed actions
};

/// Tabular batch-constrained Q-learning: an action is admissible in a
/// state iff its empirical count reaches tau_bcq times the state's most
/// frequent action. Q runs `iterations` full sweeps at the configured
/// step size, zero-initialized, gamma_rl discount.
PolicyTable train_bcq(const std::vector<Transition>& transitions, const VariableSchema& schema, const RLSpec& spec,
                      const StateLabels& labels);

/// Greedy action frequencies arranged on the action variables' level
/// grid: [levels_a, levels_b], sums to 1.
Tensor action_heatmap(const PolicyTable& policy, const StateLabels& labels);

struct PolicyComparison {
    double total_variation = 0.0;
    bool top1_match = false;
};

PolicyComparison compare_policies(const Tensor& map_real, const Tensor& map_syn);

/// Records whose static `variable` equals `level` (subgroup experiments).
Cohort filter_cohort(const Cohort& cohort, const VariableSchema& schema, const std::string& variable,
                     const std::string& level);

/// End-to-end: states, transitions, BCQ, heatmap.
Tensor policy_heatmap_for_cohort(const Cohort& cohort, const VariableSchema& schema, const RLSpec& spec,
                                 std::uint64_t seed);

}  // namespace replaygan::rlutil
