#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "replaygan/schema.hpp"

namespace replaygan::fidelity {

struct LogClusterResult {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> per_repeat;
    std::int64_t excluded_clusters = 0;  // clusters with no members across all repeats
};

/// Log-cluster divergence U: sample rows from each cohort, merge, k-means
/// with `clusters` centers, and score the logged mean squared deviation of
/// each cluster's real share from the population real share. Squared terms
/// are floored at 1e-12 so the log stays finite. Lower is better.
///
/// Synthetic rows are encoded with scaling fit on the real cohort. Merged
/// rows are sorted canonically before clustering, which makes the score
/// exactly symmetric under swapping equal-size cohorts.
LogClusterResult log_cluster(const Cohort& real, const Cohort& syn, const VariableSchema& schema,
                             std::int64_t clusters = 20, std::int64_t repeats = 20, std::int64_t sample_n = 100000,
                             std::uint64_t seed = 0);

/// The U statistic from per-cluster counts: log of the mean squared gap
/// between each cluster's real share and `real_share`, terms floored at
/// 1e-12, zero-member clusters excluded. At equal sample sizes this is
/// exactly symmetric under relabeling real as synthetic.
double log_cluster_from_counts(const std::vector<std::int64_t>& real_members,
                               const std::vector<std::int64_t>& total_members, double real_share);

struct CategoryCoverage {
    double cat = 1.0;
    std::vector<std::string> excluded;  // variables with no observed real levels
    std::map<std::string, double> per_variable;
};

/// Mean over non-numeric variables of |distinct synthetic levels| /
/// |distinct real levels|, each ratio capped at 1.
CategoryCoverage category_coverage(const Cohort& real, const Cohort& syn, const VariableSchema& schema);

struct TestCounts {
    // pass counts out of `iterations`; -1 marks a test that does not apply
    int ks = 0;
    int t = -1;
    int f = 0;
    int three_sigma = -1;
};

struct TestTable {
    std::map<std::string, TestCounts> per_variable;
    std::int64_t iterations = 0;
    std::int64_t batch = 0;
};

/// Hierarchical per-variable tests on repeated paired batches: two-sample
/// KS always; Student's t, Snedecor's F and the three-sigma containment
/// (mean within +-2 real std) for numerics; a two-group ANOVA F over level
/// indices for the rest. Pass = p > 0.05 (containment for three-sigma).
TestTable run_test_table(const Cohort& real, const Cohort& syn, const VariableSchema& schema,
                         std::int64_t iterations = 100, std::int64_t batch = 32, std::uint64_t seed = 0);

// p-value helpers (exposed for the test-side oracles)
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);
double t_test_pvalue(const std::vector<double>& a, const std::vector<double>& b);
double f_test_pvalue(const std::vector<double>& a, const std::vector<double>& b);
double anova_f_pvalue(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace replaygan::fidelity
