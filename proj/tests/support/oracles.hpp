#pragma once

// Brute-force reference implementations, deliberately written in the
// most direct O(n^2)-style form so they stay independent of the
// production algorithms they check.

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "replaygan/schema.hpp"

namespace testsupport {

using replaygan::Cohort;
using replaygan::VariableSchema;

/// Kendall tau-b straight from the concordant/discordant definition.
inline double brute_kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0)
                ++ties_x;
            else if (dy == 0.0)
                ++ties_y;
            else if (dx * dy > 0.0)
                ++concordant;
            else
                ++discordant;
        }
    }
    const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
    long long joint = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (x[i] == x[j] && y[i] == y[j]) ++joint;
    const double nx = static_cast<double>(ties_x + joint), ny = static_cast<double>(ties_y + joint);
    const double denom = std::sqrt((n0 - nx) * (n0 - ny));
    if (denom == 0.0) return 0.0;
    return static_cast<double>(concordant - discordant) / denom;
}

/// Category coverage straight from the definition.
inline double brute_category_coverage(const Cohort& real, const Cohort& syn, const VariableSchema& schema) {
    double total = 0.0;
    int counted = 0;
    for (std::int64_t v = 0; v < schema.var_count(); ++v) {
        if (schema.variables[static_cast<std::size_t>(v)].is_numeric()) continue;
        std::set<double> rl, sl;
        for (const auto& rec : real.records)
            for (const auto& row : rec.rows) rl.insert(row[static_cast<std::size_t>(v)]);
        for (const auto& rec : syn.records)
            for (const auto& row : rec.rows) sl.insert(row[static_cast<std::size_t>(v)]);
        if (rl.empty()) continue;
        total += std::min(1.0, static_cast<double>(sl.size()) / static_cast<double>(rl.size()));
        ++counted;
    }
    return counted ? total / counted : 1.0;
}

/// Disclosure risk evaluated record by record, straight from the formula.
inline double brute_disclosure_risk(const Cohort& real, const Cohort& syn, const VariableSchema& schema,
                                    const std::vector<std::string>& quasi_ids) {
    std::vector<std::int64_t> qi;
    for (const auto& q : quasi_ids) qi.push_back(*schema.index_of(q));
    auto key_of = [&](const replaygan::PatientRecord& rec) {
        std::vector<double> key;
        for (auto v : qi) key.push_back(rec.rows[0][static_cast<std::size_t>(v)]);
        return key;
    };
    std::map<std::vector<double>, long long> f_real;
    for (const auto& rec : real.records) ++f_real[key_of(rec)];
    double acc = 0.0;
    for (const auto& rec : syn.records) {
        auto it = f_real.find(key_of(rec));
        if (it != f_real.end()) acc += 1.0 / static_cast<double>(it->second);
    }
    return syn.records.empty() ? 0.0 : acc / static_cast<double>(syn.records.size());
}

}  // namespace testsupport
