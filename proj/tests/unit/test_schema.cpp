#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gradcheck.hpp"
#include "replaygan/csv.hpp"
#include "replaygan/schema.hpp"

using namespace replaygan;

namespace {

Cohort random_conforming_cohort(Rng& rng, const VariableSchema& schema, int n_records, int min_len, int max_len) {
    Cohort c;
    for (int r = 0; r < n_records; ++r) {
        PatientRecord rec;
        rec.patient_id = "p" + std::to_string(r);
        const int len = min_len + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_len - min_len + 1)));
        for (int t = 0; t < len; ++t) {
            std::vector<double> row;
            for (const auto& spec : schema.variables) {
                if (spec.is_numeric())
                    row.push_back(rng.uniform(1.0, 2000.0));
                else
                    row.push_back(static_cast<double>(rng.uniform_index(static_cast<std::uint64_t>(spec.level_count()))));
            }
            rec.rows.push_back(std::move(row));
        }
        c.records.push_back(std::move(rec));
    }
    return c;
}

}  // namespace

TEST_CASE("ART schema validates cleanly and has the expected widths") {
    auto schema = art_hiv_schema();
    CHECK(validate_schema(schema).empty());
    int numerics = 0, binaries = 0, categoricals = 0;
    for (const auto& v : schema.variables) {
        if (v.kind == VarKind::Numeric) ++numerics;
        if (v.kind == VarKind::Binary) ++binaries;
        if (v.kind == VarKind::Categorical) ++categoricals;
    }
    CHECK(numerics == 3);
    CHECK(binaries == 5);
    CHECK(categoricals == 5);
    // 3 numeric + 5 binary one-hots (2 each) + categorical blocks 4+6+4+4+6
    CHECK(schema.encoded_width() == 37);
    // 3 + 5*2 + 5*4; the schema is the authority on this width
    CHECK(schema.embed_width() == 33);
}

TEST_CASE("validate_schema reports duplicate names and empty levels") {
    VariableSchema s;
    s.variables = {VariableSpec::numeric("VL", "copies/mL"), VariableSpec::numeric("VL", "copies/mL")};
    auto v1 = validate_schema(s);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].variable == "VL");
    CHECK(v1[0].reason == "duplicate name");

    VariableSchema s2;
    s2.variables = {VariableSpec::categorical("Ethnic", {})};
    auto v2 = validate_schema(s2);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0].reason == "levels empty");

    VariableSchema s3;
    s3.variables = {VariableSpec::numeric("VL", "copies/mL")};
    s3.quasi_identifiers = {"VL", "Gender"};
    auto v3 = validate_schema(s3);
    CHECK(v3.size() == 2);
}

TEST_CASE("one-hot encoding puts unit mass on the active level") {
    VariableSchema s;
    s.variables = {VariableSpec::binary("Gender", {"Male", "Female"})};
    Cohort c;
    c.records.push_back({"p0", {{0.0}}});
    auto batch = encode_cohort(c, s);
    CHECK(batch.values.at3(0, 0, 0) == 1.0);
    CHECK(batch.values.at3(0, 0, 1) == 0.0);
}

TEST_CASE("log+min-max scaling of {10,100,1000}") {
    // independent oracle: direct evaluation of the declared transform
    const double lo = std::log1p(10.0), hi = std::log1p(1000.0);
    const double expected_mid = (std::log1p(100.0) - lo) / (hi - lo);
    CHECK(expected_mid == doctest::Approx(0.49153054774586935).epsilon(1e-10));

    VariableSchema s;
    s.variables = {VariableSpec::numeric("VL", "copies/mL", /*log_transform=*/true)};
    Cohort c;
    c.records.push_back({"p0", {{10.0}, {100.0}, {1000.0}}});
    auto batch = encode_cohort(c, s);
    CHECK(batch.values.at3(0, 0, 0) == doctest::Approx(0.0));
    CHECK(batch.values.at3(0, 1, 0) == doctest::Approx(expected_mid).epsilon(1e-12));
    CHECK(batch.values.at3(0, 2, 0) == doctest::Approx(1.0));

    // inverse of the encode example: scaled 0.5 with these parameters
    const double expected_halfway = std::expm1(lo + 0.5 * (hi - lo));
    CHECK(expected_halfway == doctest::Approx(103.93331215586402).epsilon(1e-10));
    CHECK(batch.scaling[0].decode(0.5) == doctest::Approx(expected_halfway).epsilon(1e-12));
}

TEST_CASE("categorical decode takes the maximal entry, ties break low") {
    VariableSchema s;
    s.variables = {VariableSpec::binary("Gender", {"Male", "Female"})};
    EncodedBatch b;
    b.values = Tensor({2, 1, 2}, {0.2, 0.8, 0.5, 0.5});
    b.lengths = {1, 1};
    auto c = decode_cohort(b, s);
    CHECK(c.records[0].rows[0][0] == 1.0);  // Female
    CHECK(c.records[1].rows[0][0] == 0.0);  // tie -> Male
}

TEST_CASE("decode rejects width mismatch") {
    auto schema = art_hiv_schema();
    EncodedBatch b;
    b.values = Tensor({1, 1, 5});
    CHECK_THROWS(decode_cohort(b, schema));
}

TEST_CASE("encode rejects unknown level index naming record and variable") {
    VariableSchema s;
    s.variables = {VariableSpec::binary("Gender", {"Male", "Female"})};
    Cohort c;
    c.records.push_back({"bad-rec", {{7.0}}});
    CHECK_THROWS_WITH_AS(encode_cohort(c, s), doctest::Contains("bad-rec"), std::invalid_argument);
}

TEST_CASE("encode-decode round trip is the identity on conforming cohorts") {
    auto schema = art_hiv_schema();
    Rng rng(1234);
    for (int trial = 0; trial < 5; ++trial) {
        Cohort c = random_conforming_cohort(rng, schema, 6, 3, 12);
        auto batch = encode_cohort(c, schema);
        Cohort back = decode_cohort(batch, schema);
        REQUIRE(back.size() == c.size());
        for (std::int64_t r = 0; r < c.size(); ++r) {
            const auto& orig = c.records[static_cast<std::size_t>(r)];
            const auto& dec = back.records[static_cast<std::size_t>(r)];
            REQUIRE(dec.length() == orig.length());
            for (std::int64_t t = 0; t < orig.length(); ++t) {
                for (std::int64_t v = 0; v < schema.var_count(); ++v) {
                    const double a = orig.rows[t][static_cast<std::size_t>(v)];
                    const double b = dec.rows[t][static_cast<std::size_t>(v)];
                    if (schema.variables[static_cast<std::size_t>(v)].is_numeric())
                        CHECK(b == doctest::Approx(a).epsilon(1e-9));
                    else
                        CHECK(b == a);
                }
            }
        }
    }
}

TEST_CASE("encoded categorical blocks sum to one") {
    auto schema = art_hiv_schema();
    Rng rng(99);
    Cohort c = random_conforming_cohort(rng, schema, 4, 2, 6);
    auto batch = encode_cohort(c, schema);
    for (std::int64_t b = 0; b < batch.values.dim(0); ++b) {
        for (std::int64_t t = 0; t < batch.values.dim(1); ++t) {
            for (std::int64_t v = 0; v < schema.var_count(); ++v) {
                const auto& spec = schema.variables[static_cast<std::size_t>(v)];
                if (spec.is_numeric()) continue;
                double sum = 0.0;
                const auto off = schema.onehot_offset(v);
                for (std::int64_t l = 0; l < spec.level_count(); ++l) sum += batch.values.at3(b, t, off + l);
                CHECK(std::abs(sum - 1.0) < 1e-9);
            }
        }
    }
}

TEST_CASE("segment_records truncates, splits on gaps and drops short stubs") {
    auto mk = [](const std::string& id, const std::vector<int>& months) {
        RawRecord r;
        r.patient_id = id;
        for (int m : months) r.observations.push_back({m, {static_cast<double>(m)}});
        return r;
    };

    SUBCASE("23 contiguous months truncate to 20") {
        std::vector<int> months;
        for (int m = 0; m < 23; ++m) months.push_back(m);
        SegmentReport rep;
        auto recs = segment_records({mk("a", months)}, 6, &rep);
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].length() == 20);
        CHECK(rep.dropped_short == 0);
    }

    SUBCASE("12 months, 8-month gap, 15 months split into 10 and 10") {
        std::vector<int> months;
        for (int m = 0; m < 12; ++m) months.push_back(m);
        for (int m = 20; m < 35; ++m) months.push_back(m);  // months 12..19 unobserved
        auto recs = segment_records({mk("a", months)}, 6, nullptr);
        REQUIRE(recs.size() == 2);
        CHECK(recs[0].length() == 10);
        CHECK(recs[1].length() == 10);
    }

    SUBCASE("9-month record is dropped") {
        std::vector<int> months;
        for (int m = 0; m < 9; ++m) months.push_back(m);
        SegmentReport rep;
        auto recs = segment_records({mk("a", months)}, 6, &rep);
        CHECK(recs.empty());
        CHECK(rep.dropped_short == 1);
    }

    SUBCASE("short gaps carry the last observation forward") {
        auto recs = segment_records({mk("a", {0, 1, 4, 5, 6, 7, 8, 9, 10, 11})}, 6, nullptr);
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].length() == 10);
        CHECK(recs[0].rows[2][0] == 1.0);  // month 2 repeats month 1
        CHECK(recs[0].rows[3][0] == 1.0);
        CHECK(recs[0].rows[4][0] == 4.0);
    }

    SUBCASE("output lengths are always multiples of ten in range") {
        Rng rng(5);
        std::vector<RawRecord> raw;
        for (int r = 0; r < 30; ++r) {
            RawRecord rec;
            rec.patient_id = "r" + std::to_string(r);
            int month = 0;
            const int n = 5 + static_cast<int>(rng.uniform_index(140));
            for (int i = 0; i < n; ++i) {
                rec.observations.push_back({month, {rng.uniform(0.0, 1.0)}});
                month += 1 + static_cast<int>(rng.uniform_index(10));
            }
            raw.push_back(std::move(rec));
        }
        for (const auto& rec : segment_records(raw, 6, nullptr)) {
            CHECK(rec.length() % 10 == 0);
            CHECK(rec.length() >= kMinRecordMonths);
            CHECK(rec.length() <= kMaxRecordMonths);
        }
    }
}

TEST_CASE("cohort CSV round trip preserves records and layout") {
    auto schema = art_hiv_schema();
    Rng rng(7);
    Cohort c = random_conforming_cohort(rng, schema, 3, 2, 4);
    std::ostringstream os;
    write_cohort_csv(os, c, schema);
    const std::string text = os.str();
    CHECK(text.rfind("patient_id,timepoint,VL,CD4,", 0) == 0);

    std::istringstream is(text);
    Cohort back = read_cohort_csv(is, schema);
    REQUIRE(back.size() == c.size());
    for (std::int64_t r = 0; r < c.size(); ++r) {
        CHECK(back.records[static_cast<std::size_t>(r)].patient_id == c.records[static_cast<std::size_t>(r)].patient_id);
        CHECK(back.records[static_cast<std::size_t>(r)].rows == c.records[static_cast<std::size_t>(r)].rows);
    }

    // byte-stable: writing the parsed cohort reproduces the text
    std::ostringstream os2;
    write_cohort_csv(os2, back, schema);
    CHECK(os2.str() == text);
}

TEST_CASE("CSV reader rejects unknown levels") {
    auto schema = art_hiv_schema();
    std::string header = "patient_id,timepoint,VL,CD4,Rel CD4,Gender,Ethnic,Base Drug Combo,Comp. INI,"
                         "Comp. NNRTI,Extra PI,Extra pk-En,VL (M),CD4 (M),Drug (M)";
    std::istringstream is(header +
                          "\np0,0,100,500,25,Martian,Asian,FTC + TDF,DTG,NVP,DRV,False,True,True,True\n");
    CHECK_THROWS_WITH_AS(read_cohort_csv(is, schema), doctest::Contains("Martian"), std::invalid_argument);
}
