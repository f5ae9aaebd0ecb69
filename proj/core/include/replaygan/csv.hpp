#pragma once

#include <iosfwd>
#include <string>

#include "replaygan/schema.hpp"

namespace replaygan {

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Column layout: patient_id, timepoint, then schema order. Non-numeric
/// cells are written as level names. UTF-8, comma-separated; fields
/// containing commas or quotes are quoted.
void write_cohort_csv(std::ostream& os, const Cohort& cohort, const VariableSchema& schema);
void write_cohort_csv_file(const std::string& path, const Cohort& cohort, const VariableSchema& schema);

/// Rejects unknown levels, bad headers and malformed numerics, naming the
/// offending record and variable.
Cohort read_cohort_csv(std::istream& is, const VariableSchema& schema);
Cohort read_cohort_csv_file(const std::string& path, const VariableSchema& schema);

}  // namespace replaygan
