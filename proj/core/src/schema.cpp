#include "replaygan/schema.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "replaygan/rng.hpp"

namespace replaygan {

VariableSpec VariableSpec::numeric(std::string name, std::string unit, bool log_transform) {
    VariableSpec v;
    v.name = std::move(name);
    v.kind = VarKind::Numeric;
    v.unit = std::move(unit);
    v.log_transform = log_transform;
    return v;
}

VariableSpec VariableSpec::binary(std::string name, std::vector<std::string> levels) {
    VariableSpec v;
    v.name = std::move(name);
    v.kind = VarKind::Binary;
    v.levels = std::move(levels);
    return v;
}

VariableSpec VariableSpec::categorical(std::string name, std::vector<std::string> levels) {
    VariableSpec v;
    v.name = std::move(name);
    v.kind = VarKind::Categorical;
    v.levels = std::move(levels);
    return v;
}

std::int64_t VariableSpec::effective_embed_dim() const {
    if (kind == VarKind::Numeric) return 1;
    if (embed_dim > 0) return embed_dim;
    return kind == VarKind::Binary ? 2 : 4;
}

std::int64_t VariableSpec::onehot_width() const { return is_numeric() ? 1 : level_count(); }

std::optional<std::int64_t> VariableSpec::level_index(const std::string& level) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == level) return static_cast<std::int64_t>(i);
    return std::nullopt;
}

std::int64_t VariableSchema::encoded_width() const {
    std::int64_t w = 0;
    for (const auto& v : variables) w += v.onehot_width();
    return w;
}

std::int64_t VariableSchema::embed_width() const {
    std::int64_t w = 0;
    for (const auto& v : variables) w += v.effective_embed_dim();
    return w;
}

std::int64_t VariableSchema::onehot_offset(std::int64_t v) const {
    std::int64_t off = 0;
    for (std::int64_t i = 0; i < v; ++i) off += variables[static_cast<std::size_t>(i)].onehot_width();
    return off;
}

std::optional<std::int64_t> VariableSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
        if (variables[i].name == name) return static_cast<std::int64_t>(i);
    return std::nullopt;
}

std::uint64_t VariableSchema::content_hash() const {
    std::ostringstream os;
    for (const auto& v : variables) {
        os << v.name << '\x1f' << static_cast<int>(v.kind) << '\x1f' << v.unit.value_or("") << '\x1f'
           << v.effective_embed_dim() << '\x1f' << v.log_transform << '\x1f';
        for (const auto& l : v.levels) os << l << '\x1e';
        os << '\x1d';
    }
    for (const auto& q : quasi_identifiers) os << q << '\x1c';
    return fnv1a64(os.str());
}

std::vector<SchemaViolation> validate_schema(const VariableSchema& schema) {
    std::vector<SchemaViolation> out;
    std::set<std::string> seen;
    for (const auto& v : schema.variables) {
        if (v.name.empty()) out.push_back({v.name, "empty variable name"});
        if (!seen.insert(v.name).second) out.push_back({v.name, "duplicate name"});
        if (v.is_numeric()) {
            if (!v.levels.empty()) out.push_back({v.name, "numeric variable must not declare levels"});
        } else {
            if (v.levels.empty()) out.push_back({v.name, "levels empty"});
            std::set<std::string> lv;
            for (const auto& l : v.levels)
                if (!lv.insert(l).second) out.push_back({v.name, "duplicate level '" + l + "'"});
            if (v.kind == VarKind::Binary && v.levels.size() != 2 && !v.levels.empty())
                out.push_back({v.name, "binary variable must have exactly 2 levels"});
            if (v.embed_dim < 0) out.push_back({v.name, "embed_dim must be positive"});
        }
    }
    for (const auto& q : schema.quasi_identifiers) {
        auto idx = schema.index_of(q);
        if (!idx) {
            out.push_back({q, "quasi-identifier refers to unknown variable"});
        } else if (schema.variables[static_cast<std::size_t>(*idx)].is_numeric()) {
            out.push_back({q, "quasi-identifier must be non-numeric"});
        }
    }
    return out;
}

std::int64_t Cohort::total_rows() const {
    std::int64_t n = 0;
    for (const auto& r : records) n += r.length();
    return n;
}

bool operator==(const PatientRecord& a, const PatientRecord& b) {
    return a.patient_id == b.patient_id && a.rows == b.rows;
}

double NumericScaling::encode(double raw) const {
    const double t = log_transform ? std::log1p(raw) : raw;
    if (hi <= lo) return 0.5;
    return (t - lo) / (hi - lo);
}

double NumericScaling::decode(double scaled) const {
    const double t = (hi <= lo) ? lo : lo + scaled * (hi - lo);
    return log_transform ? std::expm1(t) : t;
}

std::vector<NumericScaling> fit_scaling(const Cohort& cohort, const VariableSchema& schema) {
    std::vector<NumericScaling> out;
    for (std::int64_t v = 0; v < schema.var_count(); ++v) {
        const auto& spec = schema.variables[static_cast<std::size_t>(v)];
        if (!spec.is_numeric()) continue;
        NumericScaling s;
        s.log_transform = spec.log_transform;
        bool first = true;
        for (const auto& rec : cohort.records) {
            for (const auto& row : rec.rows) {
                const double raw = row[static_cast<std::size_t>(v)];
                const double t = s.log_transform ? std::log1p(raw) : raw;
                if (first) {
                    s.lo = s.hi = t;
                    first = false;
                } else {
                    s.lo = std::min(s.lo, t);
                    s.hi = std::max(s.hi, t);
                }
            }
        }
        out.push_back(s);
    }
    return out;
}

namespace {

void check_conformance(const PatientRecord& rec, const VariableSchema& schema) {
    for (const auto& row : rec.rows) {
        if (static_cast<std::int64_t>(row.size()) != schema.var_count())
            throw std::invalid_argument("record " + rec.patient_id + ": row width does not match schema");
        for (std::int64_t v = 0; v < schema.var_count(); ++v) {
            const auto& spec = schema.variables[static_cast<std::size_t>(v)];
            const double cell = row[static_cast<std::size_t>(v)];
            if (spec.is_numeric()) {
                if (!std::isfinite(cell))
                    throw std::invalid_argument("record " + rec.patient_id + ": non-finite value for " + spec.name);
            } else {
                const auto idx = static_cast<std::int64_t>(cell);
                if (cell != static_cast<double>(idx) || idx < 0 || idx >= spec.level_count())
                    throw std::invalid_argument("record " + rec.patient_id + ": unknown categorical level index for " +
                                                spec.name);
            }
        }
    }
}

}  // namespace

Tensor encode_record(const PatientRecord& rec, const VariableSchema& schema,
                     const std::vector<NumericScaling>& scaling) {
    const std::int64_t width = schema.encoded_width();
    Tensor out({rec.length(), width});
    for (std::int64_t t = 0; t < rec.length(); ++t) {
        const auto& row = rec.rows[static_cast<std::size_t>(t)];
        std::int64_t off = 0;
        std::size_t num_idx = 0;
        for (std::int64_t v = 0; v < schema.var_count(); ++v) {
            const auto& spec = schema.variables[static_cast<std::size_t>(v)];
            if (spec.is_numeric()) {
                out.at2(t, off) = scaling[num_idx].encode(row[static_cast<std::size_t>(v)]);
                ++num_idx;
                off += 1;
            } else {
                const auto idx = static_cast<std::int64_t>(row[static_cast<std::size_t>(v)]);
                out.at2(t, off + idx) = 1.0;
                off += spec.level_count();
            }
        }
    }
    return out;
}

EncodedBatch encode_cohort(const Cohort& cohort, const VariableSchema& schema,
                           const std::vector<NumericScaling>& scaling) {
    for (const auto& rec : cohort.records) check_conformance(rec, schema);
    const std::int64_t width = schema.encoded_width();
    std::int64_t tmax = 0;
    for (const auto& rec : cohort.records) tmax = std::max(tmax, rec.length());

    EncodedBatch batch;
    batch.scaling = scaling;
    batch.values = Tensor({cohort.size(), tmax, width});
    for (std::int64_t b = 0; b < cohort.size(); ++b) {
        const auto& rec = cohort.records[static_cast<std::size_t>(b)];
        batch.lengths.push_back(rec.length());
        Tensor enc = encode_record(rec, schema, scaling);
        for (std::int64_t t = 0; t < tmax; ++t) {
            const std::int64_t src = std::min(t, rec.length() - 1);
            for (std::int64_t w = 0; w < width; ++w) batch.values.at3(b, t, w) = enc.at2(src, w);
        }
    }
    return batch;
}

EncodedBatch encode_cohort(const Cohort& cohort, const VariableSchema& schema) {
    return encode_cohort(cohort, schema, fit_scaling(cohort, schema));
}

Cohort decode_cohort(const EncodedBatch& batch, const VariableSchema& schema) {
    if (batch.values.rank() != 3 || batch.values.dim(2) != schema.encoded_width())
        throw std::invalid_argument("decode_cohort: batch width does not match schema encoded width");
    const std::int64_t b_count = batch.values.dim(0);

    Cohort out;
    for (std::int64_t b = 0; b < b_count; ++b) {
        PatientRecord rec;
        rec.patient_id = "p" + std::to_string(b);
        const std::int64_t len =
            b < static_cast<std::int64_t>(batch.lengths.size()) ? batch.lengths[static_cast<std::size_t>(b)]
                                                                : batch.values.dim(1);
        for (std::int64_t t = 0; t < len; ++t) {
            std::vector<double> row(static_cast<std::size_t>(schema.var_count()));
            std::int64_t off = 0;
            std::size_t num_idx = 0;
            for (std::int64_t v = 0; v < schema.var_count(); ++v) {
                const auto& spec = schema.variables[static_cast<std::size_t>(v)];
                if (spec.is_numeric()) {
                    row[static_cast<std::size_t>(v)] = batch.scaling[num_idx].decode(batch.values.at3(b, t, off));
                    ++num_idx;
                    off += 1;
                } else {
                    std::int64_t best = 0;
                    double best_v = batch.values.at3(b, t, off);
                    for (std::int64_t l = 1; l < spec.level_count(); ++l) {
                        const double x = batch.values.at3(b, t, off + l);
                        if (x > best_v) {
                            best_v = x;
                            best = l;
                        }
                    }
                    row[static_cast<std::size_t>(v)] = static_cast<double>(best);
                    off += spec.level_count();
                }
            }
            rec.rows.push_back(std::move(row));
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

std::vector<PatientRecord> segment_records(const std::vector<RawRecord>& raw, int gap_months, SegmentReport* report) {
    SegmentReport local;
    std::vector<PatientRecord> out;

    for (const auto& rr : raw) {
        // monthly summarization: last reported observation per month
        std::map<int, std::vector<double>> by_month;
        for (const auto& obs : rr.observations) by_month[obs.month] = obs.values;

        std::vector<std::vector<std::vector<double>>> segments;  // raw monthly rows per segment
        std::vector<std::vector<double>> cur;
        int prev_month = 0;
        bool have_prev = false;
        for (const auto& [month, values] : by_month) {
            if (have_prev) {
                const int gap = month - prev_month - 1;  // months with no observation
                if (gap > gap_months) {
                    segments.push_back(std::move(cur));
                    cur.clear();
                } else {
                    for (int m = 0; m < gap; ++m) cur.push_back(cur.back());  // carry forward
                }
            }
            cur.push_back(values);
            prev_month = month;
            have_prev = true;
        }
        if (!cur.empty()) segments.push_back(std::move(cur));

        int sub = 0;
        for (auto& seg : segments) {
            const auto truncated = (static_cast<std::int64_t>(seg.size()) / 10) * 10;
            if (truncated < kMinRecordMonths) {
                ++local.dropped_short;
                continue;
            }
            const auto keep = std::min<std::int64_t>(truncated, kMaxRecordMonths);
            PatientRecord rec;
            rec.patient_id = segments.size() > 1 ? rr.patient_id + "#" + std::to_string(sub) : rr.patient_id;
            rec.rows.assign(seg.begin(), seg.begin() + keep);
            out.push_back(std::move(rec));
            ++local.produced;
            ++sub;
        }
    }
    if (report) *report = local;
    return out;
}

VariableSchema art_hiv_schema() {
    VariableSchema s;
    s.variables = {
        VariableSpec::numeric("VL", "copies/mL"),
        VariableSpec::numeric("CD4", "cells/uL"),
        VariableSpec::numeric("Rel CD4", "cells/uL"),
        VariableSpec::binary("Gender", {"Male", "Female"}),
        VariableSpec::categorical("Ethnic", {"Asian", "African", "Caucasian", "Other"}),
        VariableSpec::categorical("Base Drug Combo", {"FTC + TDF", "3TC + ABC", "FTC + TAF", "DRV + FTC + TDF",
                                                      "FTC + RTVB + TDF", "Other"}),
        VariableSpec::categorical("Comp. INI", {"DTG", "RAL", "EVG", "Not Applied"}),
        VariableSpec::categorical("Comp. NNRTI", {"NVP", "EFV", "RPV", "Not Applied"}),
        VariableSpec::categorical("Extra PI", {"DRV", "RTVB", "LPV", "RTV", "ATV", "Not Applied"}),
        VariableSpec::binary("Extra pk-En", {"False", "True"}),
        VariableSpec::binary("VL (M)", {"False", "True"}),
        VariableSpec::binary("CD4 (M)", {"False", "True"}),
        VariableSpec::binary("Drug (M)", {"False", "True"}),
    };
    s.quasi_identifiers = {"Gender", "Ethnic"};
    return s;
}

}  // namespace replaygan
