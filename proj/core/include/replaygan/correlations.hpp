#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replaygan/schema.hpp"
#include "replaygan/tensor.hpp"

namespace replaygan::corr {

/// Tie-corrected Kendall tau-b over [N,V] rows (O(n log n) per pair).
/// Zero-variance columns get 0 against everything, flagged by index.
struct TauMatrix {
    Tensor matrix;  // symmetric, unit diagonal, entries in [-1,1]
    std::vector<std::int64_t> zero_variance;
};

TauMatrix kendall_tau_matrix(const std::vector<std::vector<double>>& rows);

/// Pairwise tau-b of two columns (the production path used by the matrix).
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

/// Cohort rows with non-numeric variables mapped to level indices.
std::vector<std::vector<double>> cohort_rows(const Cohort& cohort, const VariableSchema& schema);

struct Detrended {
    std::vector<double> trend;  // OLS line over time 1..T
    std::vector<double> cycle;  // residual; trend + cycle == series exactly
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares linear detrend; requires length >= 3.
Detrended detrend(const std::vector<double>& series);

enum class DynamicMode { Trend, Cycle };

/// Per-patient detrended Kendall matrices averaged entrywise across
/// patients; per-patient undefined entries (ties everywhere) are skipped.
Tensor dynamic_correlation(const Cohort& cohort, const VariableSchema& schema, DynamicMode mode);

struct CorrelationReport {
    Tensor static_tau;
    Tensor trend_tau;
    Tensor cycle_tau;
    std::int64_t patients_used = 0;
};

CorrelationReport correlation_report(const Cohort& cohort, const VariableSchema& schema);

}  // namespace replaygan::corr
