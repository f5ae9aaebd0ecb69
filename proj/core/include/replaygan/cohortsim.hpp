#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "replaygan/schema.hpp"

namespace replaygan {

/// "If the trigger variable's value is in trigger_levels, the target
/// variable must equal forced_level."
struct ExclusionRule {
    std::string trigger_var;
    std::vector<std::string> trigger_levels;
    std::string target_var;
    std::string forced_level;
};

/// Measurement indicator: when the flag variable samples False for a
/// month, the paired numeric variable carries its last observed value.
struct MissingLink {
    std::string flag_var;
    std::string numeric_var;
    double rate = 1.0;  // probability of True (measurement taken)
};

/// Bounded AR(1)-style walk: per-patient drift plus month-to-month noise,
/// reflected at [lo, hi].
struct NumericDynamics {
    std::string var;
    double init_lo = 0.0, init_hi = 1.0;
    double drift_scale = 0.0;
    double noise_scale = 0.0;
    double lo = 0.0, hi = 1.0;
};

struct SimConfig {
    std::int64_t n_patients = 0;
    std::int64_t length_lo = 10;  // multiples of 10
    std::int64_t length_hi = 100;
    std::map<std::string, std::vector<double>> marginals;  // non-numeric var -> level probabilities
    std::vector<ExclusionRule> exclusion_rules;
    std::vector<MissingLink> missing_links;
    std::vector<NumericDynamics> numeric_dynamics;
    std::vector<std::string> static_vars;  // constant within a patient (demographics)
    double persistence = 0.9;              // chance a medication-style variable repeats last month
    std::uint64_t seed = 0;
};

/// Every config problem (missing marginals, bad rates, rules referencing
/// unknown levels, provably conflicting rules); empty = usable.
std::vector<std::string> validate_sim_config(const SimConfig& config, const VariableSchema& schema);

/// Deterministic given config.seed; per-patient substreams make patient i
/// independent of cohort size.
Cohort sample_cohort(const SimConfig& config, const VariableSchema& schema);

struct VariableMarginal {
    std::string name;
    std::vector<std::int64_t> counts;    // per level
    std::vector<double> fractions;       // counts / total rows
};

struct CoOccurrenceTable {
    std::string var_a, var_b;
    std::vector<std::vector<std::int64_t>> counts;  // [level_a][level_b]
};

struct CohortSummary {
    std::int64_t total_rows = 0;
    std::vector<VariableMarginal> marginals;           // non-numeric variables
    std::vector<CoOccurrenceTable> cooccurrence;       // all non-numeric pairs a < b
};

CohortSummary cohort_summary(const Cohort& cohort, const VariableSchema& schema);

/// Desk-scale surrogate mirroring the ART-for-HIV table: one dominant
/// (>=60%) and one rare (<=2%) level per categorical, a ~1% rare
/// gender-ethnicity cell, the published measurement rates, and the
/// NNRTI/INI mutual-exclusion pair.
SimConfig default_surrogate_config(std::int64_t n_patients, std::int64_t length_lo, std::int64_t length_hi,
                                   std::uint64_t seed);

}  // namespace replaygan
