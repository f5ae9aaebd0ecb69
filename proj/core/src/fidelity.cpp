#include "replaygan/fidelity.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "replaygan/kmeans.hpp"
#include "replaygan/rng.hpp"

namespace replaygan::fidelity {

namespace {

/// Encoded per-month rows of a cohort, scaling supplied by the caller.
std::vector<std::vector<double>> encoded_rows(const Cohort& cohort, const VariableSchema& schema,
                                              const std::vector<NumericScaling>& scaling) {
    std::vector<std::vector<double>> rows;
    const std::int64_t w = schema.encoded_width();
    for (const auto& rec : cohort.records) {
        Tensor enc = encode_record(rec, schema, scaling);
        for (std::int64_t t = 0; t < rec.length(); ++t) {
            std::vector<double> row(static_cast<std::size_t>(w));
            for (std::int64_t j = 0; j < w; ++j) row[static_cast<std::size_t>(j)] = enc.at2(t, j);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return v.size() > 1 ? s / static_cast<double>(v.size() - 1) : 0.0;
}

/// Kolmogorov Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-12) break;
        sign = -sign;
    }
    return std::min(1.0, std::max(0.0, 2.0 * sum));
}

}  // namespace

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks test: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double sqrt_ne = std::sqrt(ne);
    return kolmogorov_q((sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d);
}

double t_test_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("t test: need at least 2 per sample");
    const double ma = sample_mean(a), mb = sample_mean(b);
    const double va = sample_var(a, ma), vb = sample_var(b, mb);
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    if (pooled <= 0.0) return ma == mb ? 1.0 : 0.0;
    const double t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    boost::math::students_t_distribution<double> dist(na + nb - 2.0);
    return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

double f_test_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("f test: need at least 2 per sample");
    const double va = sample_var(a, sample_mean(a));
    const double vb = sample_var(b, sample_mean(b));
    if (va <= 0.0 && vb <= 0.0) return 1.0;
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    const double f = va / vb;
    boost::math::fisher_f_distribution<double> dist(static_cast<double>(a.size() - 1),
                                                    static_cast<double>(b.size() - 1));
    const double lower = boost::math::cdf(dist, f);
    return std::min(1.0, 2.0 * std::min(lower, 1.0 - lower));
}

double anova_f_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    if (a.size() + b.size() < 3) throw std::invalid_argument("anova: too few observations");
    const double ma = sample_mean(a), mb = sample_mean(b);
    const double grand = (ma * na + mb * nb) / (na + nb);
    const double ssb = na * (ma - grand) * (ma - grand) + nb * (mb - grand) * (mb - grand);
    double ssw = 0.0;
    for (double x : a) ssw += (x - ma) * (x - ma);
    for (double x : b) ssw += (x - mb) * (x - mb);
    const double dfw = na + nb - 2.0;
    if (ssw <= 0.0) return ssb <= 0.0 ? 1.0 : 0.0;
    const double f = ssb / (ssw / dfw);
    boost::math::fisher_f_distribution<double> dist(1.0, dfw);
    return 1.0 - boost::math::cdf(dist, f);
}

double log_cluster_from_counts(const std::vector<std::int64_t>& real_members,
                               const std::vector<std::int64_t>& total_members, double real_share) {
    if (real_members.size() != total_members.size())
        throw std::invalid_argument("log_cluster_from_counts: count vectors must pair up");
    double acc = 0.0;
    std::int64_t used = 0;
    for (std::size_t c = 0; c < total_members.size(); ++c) {
        if (total_members[c] == 0) continue;
        // (r - share*n)/n rather than r/n - share: at share 1/2 the gap
        // negates exactly under relabeling, making the swap symmetry exact
        const double gap = (static_cast<double>(real_members[c]) - real_share * static_cast<double>(total_members[c])) /
                           static_cast<double>(total_members[c]);
        acc += std::max(gap * gap, 1e-12);
        ++used;
    }
    return std::log(acc / static_cast<double>(std::max<std::int64_t>(used, 1)));
}

LogClusterResult log_cluster(const Cohort& real, const Cohort& syn, const VariableSchema& schema,
                             std::int64_t clusters, std::int64_t repeats, std::int64_t sample_n, std::uint64_t seed) {
    if (real.records.empty() || syn.records.empty()) throw std::invalid_argument("log_cluster: empty cohort");
    const auto scaling = fit_scaling(real, schema);
    const auto real_rows = encoded_rows(real, schema, scaling);
    const auto syn_rows = encoded_rows(syn, schema, scaling);
    const std::int64_t w = schema.encoded_width();

    Rng base(seed);
    LogClusterResult out;
    for (std::int64_t rep = 0; rep < repeats; ++rep) {
        Rng rng = base.substream("repeat", static_cast<std::uint64_t>(rep));

        // draw, merge and sort rows so labels play no role in clustering
        std::vector<std::pair<std::vector<double>, int>> merged;
        merged.reserve(static_cast<std::size_t>(2 * sample_n));
        for (std::int64_t i = 0; i < sample_n; ++i)
            merged.emplace_back(real_rows[rng.uniform_index(real_rows.size())], 0);
        for (std::int64_t i = 0; i < sample_n; ++i)
            merged.emplace_back(syn_rows[rng.uniform_index(syn_rows.size())], 1);
        std::sort(merged.begin(), merged.end());

        Tensor pts({static_cast<std::int64_t>(merged.size()), w});
        for (std::size_t i = 0; i < merged.size(); ++i)
            for (std::int64_t j = 0; j < w; ++j) pts.at2(static_cast<std::int64_t>(i), j) = merged[i].first[static_cast<std::size_t>(j)];

        auto km = kmeans(pts, clusters, rng.next_u64());
        const std::int64_t k_eff = km.centers.dim(0);
        std::vector<std::int64_t> n_k(static_cast<std::size_t>(k_eff), 0), n_real(static_cast<std::size_t>(k_eff), 0);
        for (std::size_t i = 0; i < merged.size(); ++i) {
            const auto c = static_cast<std::size_t>(km.labels[i]);
            ++n_k[c];
            if (merged[i].second == 0) ++n_real[c];
        }

        const double real_share = static_cast<double>(sample_n) / static_cast<double>(merged.size());
        for (std::int64_t c = 0; c < k_eff; ++c)
            if (n_k[static_cast<std::size_t>(c)] == 0) ++out.excluded_clusters;
        out.per_repeat.push_back(log_cluster_from_counts(n_real, n_k, real_share));
    }

    out.mean = sample_mean(out.per_repeat);
    out.stddev = std::sqrt(sample_var(out.per_repeat, out.mean));
    return out;
}

CategoryCoverage category_coverage(const Cohort& real, const Cohort& syn, const VariableSchema& schema) {
    CategoryCoverage out;
    double total = 0.0;
    std::int64_t counted = 0;
    for (std::int64_t v = 0; v < schema.var_count(); ++v) {
        const auto& spec = schema.variables[static_cast<std::size_t>(v)];
        if (spec.is_numeric()) continue;
        std::set<std::int64_t> real_levels, syn_levels;
        for (const auto& rec : real.records)
            for (const auto& row : rec.rows) real_levels.insert(static_cast<std::int64_t>(row[static_cast<std::size_t>(v)]));
        for (const auto& rec : syn.records)
            for (const auto& row : rec.rows) syn_levels.insert(static_cast<std::int64_t>(row[static_cast<std::size_t>(v)]));
        if (real_levels.empty()) {
            out.excluded.push_back(spec.name);
            continue;
        }
        const double ratio = std::min(1.0, static_cast<double>(syn_levels.size()) / static_cast<double>(real_levels.size()));
        out.per_variable[spec.name] = ratio;
        total += ratio;
        ++counted;
    }
    out.cat = counted > 0 ? total / static_cast<double>(counted) : 1.0;
    return out;
}

TestTable run_test_table(const Cohort& real, const Cohort& syn, const VariableSchema& schema, std::int64_t iterations,
                         std::int64_t batch, std::uint64_t seed) {
    if (real.records.empty() || syn.records.empty()) throw std::invalid_argument("run_test_table: empty cohort");

    // pooled per-month rows in raw units (level indices for non-numerics)
    auto pool = [&](const Cohort& c) {
        std::vector<std::vector<double>> rows;
        for (const auto& rec : c.records)
            for (const auto& row : rec.rows) rows.push_back(row);
        return rows;
    };
    const auto real_rows = pool(real);
    const auto syn_rows = pool(syn);

    TestTable table;
    table.iterations = iterations;
    table.batch = batch;
    for (const auto& spec : schema.variables) {
        TestCounts c;
        c.ks = 0;
        c.f = 0;
        if (spec.is_numeric()) {
            c.t = 0;
            c.three_sigma = 0;
        }
        table.per_variable[spec.name] = c;
    }

    Rng base(seed);
    for (std::int64_t it = 0; it < iterations; ++it) {
        Rng rng = base.substream("iter", static_cast<std::uint64_t>(it));
        std::vector<std::size_t> ridx, sidx;
        for (std::int64_t i = 0; i < batch; ++i) ridx.push_back(rng.uniform_index(real_rows.size()));
        for (std::int64_t i = 0; i < batch; ++i) sidx.push_back(rng.uniform_index(syn_rows.size()));

        for (std::int64_t v = 0; v < schema.var_count(); ++v) {
            const auto& spec = schema.variables[static_cast<std::size_t>(v)];
            std::vector<double> a, b;
            for (auto i : ridx) a.push_back(real_rows[i][static_cast<std::size_t>(v)]);
            for (auto i : sidx) b.push_back(syn_rows[i][static_cast<std::size_t>(v)]);
            auto& counts = table.per_variable[spec.name];

            if (ks_two_sample_pvalue(a, b) > 0.05) ++counts.ks;
            if (spec.is_numeric()) {
                if (t_test_pvalue(a, b) > 0.05) ++counts.t;
                if (f_test_pvalue(b, a) > 0.05) ++counts.f;
                const double rm = sample_mean(a);
                const double rs = std::sqrt(sample_var(a, rm));
                if (std::abs(sample_mean(b) - rm) <= 2.0 * rs) ++counts.three_sigma;
            } else {
                if (anova_f_pvalue(a, b) > 0.05) ++counts.f;
            }
        }
    }
    return table;
}

}  // namespace replaygan::fidelity
