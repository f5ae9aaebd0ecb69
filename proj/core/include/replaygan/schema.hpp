#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "replaygan/tensor.hpp"

namespace replaygan {

enum class VarKind { Numeric, Binary, Categorical };

/// One dataset column: a numeric measurement or a leveled variable.
struct VariableSpec {
    std::string name;
    VarKind kind = VarKind::Numeric;
    std::optional<std::string> unit;
    std::vector<std::string> levels;  // binary/categorical only
    std::int64_t embed_dim = 0;       // binary/categorical only; 0 = kind default
    bool log_transform = false;       // numeric only: log1p before min-max scaling

    static VariableSpec numeric(std::string name, std::string unit, bool log_transform = true);
    static VariableSpec binary(std::string name, std::vector<std::string> levels);
    static VariableSpec categorical(std::string name, std::vector<std::string> levels);

    bool is_numeric() const { return kind == VarKind::Numeric; }
    std::int64_t level_count() const { return static_cast<std::int64_t>(levels.size()); }
    /// 2 for binary, 4 for categorical unless overridden.
    std::int64_t effective_embed_dim() const;
    /// Channels in the one-hot encoding: 1 for numeric, #levels otherwise.
    std::int64_t onehot_width() const;
    std::optional<std::int64_t> level_index(const std::string& level) const;
};

struct VariableSchema {
    std::vector<VariableSpec> variables;
    std::vector<std::string> quasi_identifiers;

    std::int64_t encoded_width() const;
    std::int64_t embed_width() const;
    std::int64_t var_count() const { return static_cast<std::int64_t>(variables.size()); }
    /// Offset of variable v's block in the one-hot encoding.
    std::int64_t onehot_offset(std::int64_t v) const;
    std::optional<std::int64_t> index_of(const std::string& name) const;
    std::uint64_t content_hash() const;
};

struct SchemaViolation {
    std::string variable;  // empty for schema-level violations
    std::string reason;
};

/// Every invariant breach; empty list iff the schema is usable.
std::vector<SchemaViolation> validate_schema(const VariableSchema& schema);

/// One patient's time series. Cells are doubles: the measurement for
/// numeric variables, the 0-based level index otherwise.
struct PatientRecord {
    std::string patient_id;
    std::vector<std::vector<double>> rows;  // [time][variable]

    std::int64_t length() const { return static_cast<std::int64_t>(rows.size()); }
};

struct Cohort {
    std::vector<PatientRecord> records;

    std::int64_t size() const { return static_cast<std::int64_t>(records.size()); }
    std::int64_t total_rows() const;
    bool operator==(const Cohort&) const = default;
};

bool operator==(const PatientRecord& a, const PatientRecord& b);

struct NumericScaling {
    bool log_transform = false;
    double lo = 0.0;  // min of the (possibly log1p-) transformed values
    double hi = 1.0;

    double encode(double raw) const;
    double decode(double scaled) const;
};

/// Rectangular real-valued view of a cohort. Numeric channels are scaled
/// to [0,1]; every non-numeric block is a probability simplex. Rows past
/// a record's length repeat the record's last row so padding stays on the
/// simplex.
struct EncodedBatch {
    Tensor values;  // [batch, time, width]
    std::vector<std::int64_t> lengths;
    std::vector<NumericScaling> scaling;  // one per numeric variable, schema order
};

/// Fit scaling on `cohort` and encode it.
EncodedBatch encode_cohort(const Cohort& cohort, const VariableSchema& schema);
/// Encode with pre-fit scaling (e.g. apply real-data scaling to synthetic data).
EncodedBatch encode_cohort(const Cohort& cohort, const VariableSchema& schema,
                           const std::vector<NumericScaling>& scaling);
std::vector<NumericScaling> fit_scaling(const Cohort& cohort, const VariableSchema& schema);

/// Inverse of encode_cohort. Categorical blocks decode to the level with
/// the maximal entry; ties break toward the lowest level index.
Cohort decode_cohort(const EncodedBatch& batch, const VariableSchema& schema);

/// Encode a single record (no padding) with given scaling: [time, width].
Tensor encode_record(const PatientRecord& rec, const VariableSchema& schema,
                     const std::vector<NumericScaling>& scaling);

struct RawObservation {
    int month = 0;  // calendar month stamp
    std::vector<double> values;
};

struct RawRecord {
    std::string patient_id;
    std::vector<RawObservation> observations;
};

struct SegmentReport {
    std::int64_t dropped_short = 0;   // sub-records below 10 months
    std::int64_t produced = 0;
};

/// Monthly summarization (last value per month, carry-forward over short
/// gaps), gap splitting, truncation to a multiple of ten months.
std::vector<PatientRecord> segment_records(const std::vector<RawRecord>& raw, int gap_months,
                                           SegmentReport* report = nullptr);

/// The ART-for-HIV variable table: 3 numeric, 5 binary, 5 categorical.
VariableSchema art_hiv_schema();

constexpr std::int64_t kMinRecordMonths = 10;
constexpr std::int64_t kMaxRecordMonths = 100;

}  // namespace replaygan
