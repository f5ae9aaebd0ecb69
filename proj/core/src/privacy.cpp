#include "replaygan/privacy.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace replaygan::privacy {

double min_euclidean_distance(const Cohort& real, const Cohort& syn, const VariableSchema& schema) {
    if (real.records.empty() || syn.records.empty())
        throw std::invalid_argument("min_euclidean_distance: empty cohort");
    const auto scaling = fit_scaling(real, schema);
    const std::int64_t w = schema.encoded_width();

    std::vector<Tensor> real_enc, syn_enc;
    for (const auto& r : real.records) real_enc.push_back(encode_record(r, schema, scaling));
    for (const auto& s : syn.records) syn_enc.push_back(encode_record(s, schema, scaling));

    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : real_enc) {
        for (const auto& b : syn_enc) {
            const std::int64_t len = std::min(a.dim(0), b.dim(0));
            double acc = 0.0;
            for (std::int64_t t = 0; t < len; ++t)
                for (std::int64_t j = 0; j < w; ++j) {
                    const double d = a.at2(t, j) - b.at2(t, j);
                    acc += d * d;
                }
            best = std::min(best, std::sqrt(acc / static_cast<double>(len * w)));
        }
    }
    return best;
}

RiskResult disclosure_risk(const Cohort& real, const Cohort& syn, const VariableSchema& schema,
                           const std::vector<std::string>& quasi_ids) {
    if (quasi_ids.empty()) throw std::invalid_argument("disclosure_risk: no quasi-identifiers given");
    std::vector<std::int64_t> qi_idx;
    for (const auto& q : quasi_ids) {
        auto idx = schema.index_of(q);
        if (!idx || schema.variables[static_cast<std::size_t>(*idx)].is_numeric())
            throw std::invalid_argument("disclosure_risk: quasi-identifier " + q + " must be a non-numeric variable");
        qi_idx.push_back(*idx);
    }

    auto class_of = [&](const PatientRecord& rec) {
        if (rec.rows.empty()) throw std::invalid_argument("disclosure_risk: empty record " + rec.patient_id);
        std::vector<std::int64_t> key;
        for (auto v : qi_idx) {
            const double first = rec.rows[0][static_cast<std::size_t>(v)];
            for (const auto& row : rec.rows)
                if (row[static_cast<std::size_t>(v)] != first)
                    throw std::invalid_argument("disclosure_risk: quasi-identifier " +
                                                schema.variables[static_cast<std::size_t>(v)].name +
                                                " varies within record " + rec.patient_id);
            key.push_back(static_cast<std::int64_t>(first));
        }
        return key;
    };

    std::map<std::vector<std::int64_t>, std::int64_t> real_classes, syn_classes;
    for (const auto& rec : real.records) ++real_classes[class_of(rec)];
    for (const auto& rec : syn.records) ++syn_classes[class_of(rec)];

    RiskResult out;
    out.synthetic_count = syn.size();
    double acc = 0.0;
    for (const auto& [key, syn_count] : syn_classes) {
        EquivalenceClassRow row;
        for (std::size_t i = 0; i < qi_idx.size(); ++i) {
            const auto& spec = schema.variables[static_cast<std::size_t>(qi_idx[i])];
            row.levels.push_back(spec.levels[static_cast<std::size_t>(key[i])]);
        }
        row.syn_count = syn_count;
        auto it = real_classes.find(key);
        if (it != real_classes.end()) {
            row.real_count = it->second;
            row.in_both = true;
            acc += static_cast<double>(syn_count) / static_cast<double>(it->second);
        }
        out.classes.push_back(std::move(row));
    }
    out.risk = out.synthetic_count > 0 ? acc / static_cast<double>(out.synthetic_count) : 0.0;
    out.passes_threshold = out.risk <= kRiskThreshold;
    return out;
}

}  // namespace replaygan::privacy
