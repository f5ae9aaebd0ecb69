#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replaygan/schema.hpp"

namespace replaygan::privacy {

/// Exact minimum over all real x synthetic record pairs of the RMS
/// distance between their scaled encodings, compared over the common
/// prefix of unequal-length records. Scaling is fit on the real cohort.
/// An exact leak of a real record scores 0.
double min_euclidean_distance(const Cohort& real, const Cohort& syn, const VariableSchema& schema);

constexpr double kRiskThreshold = 0.09;  // regulatory 9% ceiling

struct EquivalenceClassRow {
    std::vector<std::string> levels;  // one per quasi-identifier
    std::int64_t real_count = 0;      // F_s
    std::int64_t syn_count = 0;
    bool in_both = false;             // I_s
};

struct RiskResult {
    double risk = 0.0;                 // (1/S) sum I_s / F_s
    std::int64_t synthetic_count = 0;  // S, patients
    std::vector<EquivalenceClassRow> classes;
    bool passes_threshold = true;      // risk <= 9%
};

/// Sample-to-population attack over patient-level equivalence classes of
/// the quasi-identifiers. Rejects records whose quasi-identifiers vary
/// over time.
RiskResult disclosure_risk(const Cohort& real, const Cohort& syn, const VariableSchema& schema,
                           const std::vector<std::string>& quasi_ids);

}  // namespace replaygan::privacy
