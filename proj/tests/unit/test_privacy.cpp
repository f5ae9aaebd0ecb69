#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "replaygan/cohortsim.hpp"
#include "replaygan/privacy.hpp"
#include "replaygan/rng.hpp"

using namespace replaygan;
namespace priv = replaygan::privacy;

namespace {

VariableSchema qi_schema() {
    VariableSchema s;
    s.variables = {VariableSpec::binary("Gender", {"Male", "Female"}),
                   VariableSpec::categorical("Ethnic", {"Asian", "African", "Caucasian", "Other"})};
    s.quasi_identifiers = {"Gender", "Ethnic"};
    return s;
}

PatientRecord static_record(const std::string& id, double gender, double ethnic, int months = 3) {
    PatientRecord r;
    r.patient_id = id;
    for (int t = 0; t < months; ++t) r.rows.push_back({gender, ethnic});
    return r;
}

}  // namespace

TEST_CASE("a leaked record is flagged with distance exactly zero") {
    auto schema = art_hiv_schema();
    Cohort real = sample_cohort(default_surrogate_config(20, 10, 20, 3), schema);
    Cohort syn = sample_cohort(default_surrogate_config(10, 10, 20, 99), schema);
    syn.records[4] = real.records[7];  // the leak
    CHECK(priv::min_euclidean_distance(real, syn, schema) == 0.0);
}

TEST_CASE("2x2 toy distances reduce to the hand minimum") {
    VariableSchema s;
    s.variables = {VariableSpec::numeric("x", "u", false)};
    // single-month records: RMS distance over 1 dim = |a-b| after scaling.
    // real values 0 and 10 scale to 0 and 1; synthetic 5 and 13 scale to
    // 0.5 and 1.3, so the pairwise distances are {0.5, 1.3, 0.9, 2.0}/...
    Cohort real, syn;
    real.records.push_back({"r0", {{0.0}}});
    real.records.push_back({"r1", {{10.0}}});
    syn.records.push_back({"s0", {{5.0}}});
    syn.records.push_back({"s1", {{13.0}}});
    // scaled: r0=0, r1=1, s0=0.5, s1=1.3 -> min |diff| = |1-1.3| = 0.3
    CHECK(priv::min_euclidean_distance(real, syn, s) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("distance over unequal lengths uses the common prefix with per-dimension normalization") {
    VariableSchema s;
    s.variables = {VariableSpec::numeric("x", "u", false)};
    Cohort real, syn;
    real.records.push_back({"r", {{0.0}, {10.0}, {10.0}, {10.0}}});
    syn.records.push_back({"s", {{0.0}, {0.0}}});
    // prefix of 2 months: diffs (0, 1) scaled; RMS = sqrt(1/2)
    CHECK(priv::min_euclidean_distance(real, syn, s) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("hand-built equivalence classes give risk one half") {
    auto s = qi_schema();
    Cohort real, syn;
    real.records.push_back(static_record("r0", 0.0, 0.0));
    real.records.push_back(static_record("r1", 0.0, 0.0));
    syn.records.push_back(static_record("s0", 0.0, 0.0));
    syn.records.push_back(static_record("s1", 0.0, 0.0));
    auto risk = priv::disclosure_risk(real, syn, s, s.quasi_identifiers);
    CHECK(risk.risk == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(risk.synthetic_count == 2);
    REQUIRE(risk.classes.size() == 1);
    CHECK(risk.classes[0].real_count == 2);
    CHECK(risk.classes[0].in_both);
    CHECK_FALSE(risk.passes_threshold);
}

TEST_CASE("synthetic classes absent from the real data carry zero risk") {
    auto s = qi_schema();
    Cohort real, syn;
    real.records.push_back(static_record("r0", 0.0, 0.0));
    syn.records.push_back(static_record("s0", 1.0, 3.0));
    auto risk = priv::disclosure_risk(real, syn, s, s.quasi_identifiers);
    CHECK(risk.risk == 0.0);
    CHECK(risk.passes_threshold);
}

TEST_CASE("singleton matches everywhere give risk one") {
    auto s = qi_schema();
    Cohort real, syn;
    real.records.push_back(static_record("r0", 0.0, 1.0));
    real.records.push_back(static_record("r1", 1.0, 2.0));
    syn.records.push_back(static_record("s0", 0.0, 1.0));
    syn.records.push_back(static_record("s1", 1.0, 2.0));
    auto risk = priv::disclosure_risk(real, syn, s, s.quasi_identifiers);
    CHECK(risk.risk == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quasi-identifiers that vary within a record are rejected") {
    auto s = qi_schema();
    Cohort real, syn;
    real.records.push_back(static_record("r0", 0.0, 0.0));
    PatientRecord bad = static_record("s0", 0.0, 0.0);
    bad.rows[1][0] = 1.0;  // gender flips mid-record
    syn.records.push_back(bad);
    CHECK_THROWS_WITH_AS(priv::disclosure_risk(real, syn, s, s.quasi_identifiers), doctest::Contains("varies"),
                         std::invalid_argument);
}

TEST_CASE("risk equals the brute-force per-record evaluation on randomized cohorts") {
    auto schema = art_hiv_schema();
    Rng rng(71);
    for (int trial = 0; trial < 6; ++trial) {
        Cohort real = sample_cohort(default_surrogate_config(120, 10, 20, 500 + trial), schema);
        Cohort syn = sample_cohort(default_surrogate_config(90, 10, 20, 800 + trial), schema);
        auto risk = priv::disclosure_risk(real, syn, schema, schema.quasi_identifiers);
        const double brute = testsupport::brute_disclosure_risk(real, syn, schema, schema.quasi_identifiers);
        CHECK(risk.risk == doctest::Approx(brute).epsilon(1e-12));
        CHECK(risk.risk >= 0.0);
        CHECK(risk.risk <= 1.0);
    }
}

TEST_CASE("distance is positive when no record is shared") {
    auto schema = art_hiv_schema();
    Cohort real = sample_cohort(default_surrogate_config(15, 10, 10, 5), schema);
    Cohort syn = sample_cohort(default_surrogate_config(15, 10, 10, 6), schema);
    CHECK(priv::min_euclidean_distance(real, syn, schema) > 0.0);
}
