#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "replaygan/cohortsim.hpp"
#include "replaygan/fidelity.hpp"
#include "replaygan/kmeans.hpp"
#include "replaygan/rng.hpp"

using namespace replaygan;
namespace fid = replaygan::fidelity;

namespace {

Cohort surrogate(std::int64_t n, std::uint64_t seed, std::int64_t lo = 10, std::int64_t hi = 20) {
    auto schema = art_hiv_schema();
    return sample_cohort(default_surrogate_config(n, lo, hi, seed), schema);
}

/// Single repeated row: the maximally collapsed synthetic cohort.
Cohort collapsed_like(const Cohort& real, std::int64_t n_records) {
    Cohort out;
    for (std::int64_t i = 0; i < n_records; ++i) {
        PatientRecord rec;
        rec.patient_id = "col-" + std::to_string(i);
        for (std::int64_t t = 0; t < 10; ++t) rec.rows.push_back(real.records[0].rows[0]);
        out.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

TEST_CASE("kmeans partitions well-separated blobs deterministically") {
    Rng rng(3);
    Tensor pts({60, 2});
    for (std::int64_t i = 0; i < 60; ++i) {
        const double cx = i % 3 == 0 ? 0.0 : (i % 3 == 1 ? 10.0 : 20.0);
        pts.at2(i, 0) = cx + rng.uniform(-0.5, 0.5);
        pts.at2(i, 1) = rng.uniform(-0.5, 0.5);
    }
    auto a = kmeans(pts, 3, 42);
    auto b = kmeans(pts, 3, 42);
    CHECK(a.labels == b.labels);
    // blob membership is consistent: points in the same blob share labels
    for (std::int64_t i = 0; i < 60; ++i)
        for (std::int64_t j = 0; j < 60; ++j)
            if (i % 3 == j % 3) CHECK(a.labels[static_cast<std::size_t>(i)] == a.labels[static_cast<std::size_t>(j)]);
    CHECK(a.centers.dim(0) == 3);
}

TEST_CASE("kmeans clamps k to the number of points") {
    Tensor pts({2, 1}, {0.0, 1.0});
    auto r = kmeans(pts, 5, 1);
    CHECK(r.centers.dim(0) == 2);
}

TEST_CASE("category coverage is exact on hand-built cohorts") {
    VariableSchema s;
    s.variables = {VariableSpec::categorical("c3", {"a", "b", "c"}), VariableSpec::categorical("c4", {"p", "q", "r", "t"})};
    Cohort real, syn;
    real.records.push_back({"r", {{0, 0}, {1, 1}, {2, 2}, {2, 3}}});  // 3 and 4 levels present
    syn.records.push_back({"s", {{0, 0}, {1, 1}, {1, 2}, {0, 3}}});   // 2 of 3, 4 of 4
    auto cc = fid::category_coverage(real, syn, s);
    CHECK(cc.cat == doctest::Approx((2.0 / 3.0 + 1.0) / 2.0).epsilon(1e-12));
    CHECK(cc.cat == doctest::Approx(testsupport::brute_category_coverage(real, syn, s)).epsilon(1e-12));
}

TEST_CASE("category coverage of a cohort with itself is exactly 1") {
    Cohort real = surrogate(30, 5);
    auto schema = art_hiv_schema();
    auto cc = fid::category_coverage(real, real, schema);
    CHECK(cc.cat == 1.0);
}

TEST_CASE("degenerate single-level variables still contribute 1 when matched") {
    VariableSchema s;
    s.variables = {VariableSpec::categorical("only", {"l1", "l2"})};
    Cohort real, syn;
    real.records.push_back({"r", {{0.0}, {0.0}}});
    syn.records.push_back({"s", {{0.0}}});
    auto cc = fid::category_coverage(real, syn, s);
    CHECK(cc.cat == 1.0);
}

TEST_CASE("dropping a categorical level strictly decreases coverage") {
    auto schema = art_hiv_schema();
    Cohort real = surrogate(100, 7);
    Cohort pruned = real;
    // collapse the dominant Caucasian level into Other
    const auto ethnic = *schema.index_of("Ethnic");
    for (auto& rec : pruned.records)
        for (auto& row : rec.rows)
            if (row[static_cast<std::size_t>(ethnic)] == 2.0) row[static_cast<std::size_t>(ethnic)] = 3.0;
    const double full = fid::category_coverage(real, real, schema).cat;
    const double dropped = fid::category_coverage(real, pruned, schema).cat;
    CHECK(full == 1.0);
    CHECK(dropped < full);
    CHECK(dropped == doctest::Approx(testsupport::brute_category_coverage(real, pruned, schema)).epsilon(1e-12));
}

TEST_CASE("category coverage matches the brute force on randomized cohorts") {
    auto schema = art_hiv_schema();
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        Cohort real = surrogate(20, 100 + trial);
        Cohort syn = surrogate(15, 200 + trial);
        // randomly remix some synthetic levels
        for (auto& rec : syn.records)
            for (auto& row : rec.rows)
                if (rng.uniform() < 0.2) row[4] = static_cast<double>(rng.uniform_index(4));
        CHECK(fid::category_coverage(real, syn, schema).cat ==
              doctest::Approx(testsupport::brute_category_coverage(real, syn, schema)).epsilon(1e-12));
    }
}

TEST_CASE("log-cluster separates an identical resample from a collapsed cohort") {
    auto schema = art_hiv_schema();
    Cohort real = surrogate(120, 11);
    Cohort resample;  // same distribution: a reshuffled copy of real records
    for (std::size_t i = 0; i < real.records.size(); ++i)
        resample.records.push_back(real.records[(i * 7 + 3) % real.records.size()]);
    Cohort collapsed = collapsed_like(real, 120);

    auto u_good = fid::log_cluster(real, resample, schema, 20, 5, 6000, 42);
    auto u_bad = fid::log_cluster(real, collapsed, schema, 20, 5, 6000, 42);
    CHECK(u_good.mean < u_bad.mean);
    // a well-mixed equal-size sample scores clearly negative
    CHECK(u_good.mean <= std::log(1e-3));
}

TEST_CASE("the U statistic is exactly symmetric under relabeling at equal sample sizes") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::int64_t> total, real_m, syn_m;
        std::int64_t sum_real = 0, sum_total = 0;
        for (int c = 0; c < 20; ++c) {
            const auto n = static_cast<std::int64_t>(rng.uniform_index(40));
            const auto r = n > 0 ? static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(n + 1))) : 0;
            total.push_back(n);
            real_m.push_back(r);
            syn_m.push_back(n - r);
            sum_real += r;
            sum_total += n;
        }
        if (sum_total == 0) continue;
        // equal-size case: the population share is 1/2 for both labelings
        const double u_real = fid::log_cluster_from_counts(real_m, total, 0.5);
        const double u_syn = fid::log_cluster_from_counts(syn_m, total, 0.5);
        CHECK(u_real == u_syn);
    }
}

TEST_CASE("log_cluster is reproducible given the seed") {
    auto schema = art_hiv_schema();
    Cohort a = surrogate(40, 21);
    Cohort b = surrogate(40, 22);
    auto u1 = fid::log_cluster(a, b, schema, 10, 3, 500, 77);
    auto u2 = fid::log_cluster(a, b, schema, 10, 3, 500, 77);
    REQUIRE(u1.per_repeat.size() == u2.per_repeat.size());
    for (std::size_t i = 0; i < u1.per_repeat.size(); ++i) CHECK(u1.per_repeat[i] == u2.per_repeat[i]);
}

TEST_CASE("log-cluster brute check on a tiny two-cluster toy") {
    // two clearly separated numeric clusters; synthetic hits only one of
    // them, so roughly half the clusters go pure-real
    VariableSchema s;
    s.variables = {VariableSpec::numeric("x", "u", false)};
    Cohort real, syn;
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        PatientRecord r1{"r" + std::to_string(i), {{rng.uniform(0.0, 0.1)}}};
        real.records.push_back(r1);
        PatientRecord r2{"rr" + std::to_string(i), {{rng.uniform(0.9, 1.0)}}};
        real.records.push_back(r2);
        PatientRecord sy{"s" + std::to_string(i), {{rng.uniform(0.0, 0.1)}}};
        syn.records.push_back(sy);
    }
    auto u = fid::log_cluster(real, syn, s, 2, 4, 200, 5);
    // one cluster is all-real (term (1 - 1/2)^2), the other is one-third
    // real ((1/3 - 1/2)^2); the mean of the two terms fixes U
    const double expected = std::log(((0.5 * 0.5) + (1.0 / 3.0 - 0.5) * (1.0 / 3.0 - 0.5)) / 2.0);
    CHECK(u.mean == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("statistical tests are calibrated: a cohort against itself passes") {
    auto schema = art_hiv_schema();
    Cohort real = surrogate(150, 31, 10, 30);
    auto table = fid::run_test_table(real, real, schema, 100, 32, 26);
    for (const auto& [name, counts] : table.per_variable) {
        CAPTURE(name);
        CHECK(counts.ks >= 93);
        CHECK(counts.f >= 93);
        if (counts.t >= 0) CHECK(counts.t >= 93);
        if (counts.three_sigma >= 0) CHECK(counts.three_sigma >= 93);
    }
}

TEST_CASE("a +10 sigma mean shift obliterates the t-test pass count") {
    auto schema = art_hiv_schema();
    Cohort real = surrogate(100, 37);
    const auto vl = *schema.index_of("VL");
    // compute the real std of VL to place the shift
    double mean = 0.0, var = 0.0;
    std::int64_t n = 0;
    for (const auto& rec : real.records)
        for (const auto& row : rec.rows) {
            mean += row[static_cast<std::size_t>(vl)];
            ++n;
        }
    mean /= static_cast<double>(n);
    for (const auto& rec : real.records)
        for (const auto& row : rec.rows)
            var += (row[static_cast<std::size_t>(vl)] - mean) * (row[static_cast<std::size_t>(vl)] - mean);
    var /= static_cast<double>(n - 1);

    Cohort shifted = real;
    const double shift = 10.0 * std::sqrt(var);
    for (auto& rec : shifted.records)
        for (auto& row : rec.rows) row[static_cast<std::size_t>(vl)] += shift;

    auto table = fid::run_test_table(real, shifted, schema, 100, 32, 11);
    CHECK(table.per_variable.at("VL").t <= 5);
}

TEST_CASE("test tables are reproducible given the seed") {
    auto schema = art_hiv_schema();
    Cohort real = surrogate(40, 41);
    Cohort syn = surrogate(40, 43);
    auto t1 = fid::run_test_table(real, syn, schema, 20, 32, 9);
    auto t2 = fid::run_test_table(real, syn, schema, 20, 32, 9);
    for (const auto& [name, c1] : t1.per_variable) {
        const auto& c2 = t2.per_variable.at(name);
        CHECK(c1.ks == c2.ks);
        CHECK(c1.t == c2.t);
        CHECK(c1.f == c2.f);
        CHECK(c1.three_sigma == c2.three_sigma);
    }
}

TEST_CASE("p-value helpers recover known references") {
    // KS: identical samples have D=0 -> p=1
    CHECK(fid::ks_two_sample_pvalue({1, 2, 3, 4}, {1, 2, 3, 4}) == doctest::Approx(1.0));
    // t-test: equal means p near 1, strongly shifted near 0
    std::vector<double> a, b_far;
    Rng rng(50);
    for (int i = 0; i < 32; ++i) {
        a.push_back(rng.normal());
        b_far.push_back(rng.normal() + 50.0);
    }
    CHECK(fid::t_test_pvalue(a, a) == doctest::Approx(1.0));
    CHECK(fid::t_test_pvalue(a, b_far) < 1e-6);
    // F-test: equal variances p=1 by symmetry of the two-sided form
    CHECK(fid::f_test_pvalue(a, a) == doctest::Approx(1.0));
    // ANOVA with identical groups: F=0 -> p=1
    CHECK(fid::anova_f_pvalue(a, a) == doctest::Approx(1.0));
    CHECK(fid::anova_f_pvalue(a, b_far) < 1e-6);
}
