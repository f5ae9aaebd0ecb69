#include "replaygan/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace replaygan::corr {

namespace {

/// Merge-sort inversion count: pairs (i < j) with y[i] > y[j] strictly.
std::uint64_t count_inversions(std::vector<double>& y, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 1) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = count_inversions(y, scratch, lo, mid) + count_inversions(y, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (y[j] < y[i]) {
            inv += mid - i;
            scratch[k++] = y[j++];
        } else {
            scratch[k++] = y[i++];
        }
    }
    while (i < mid) scratch[k++] = y[i++];
    while (j < hi) scratch[k++] = y[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              y.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

std::uint64_t tie_pairs(const std::vector<double>& sorted) {
    std::uint64_t pairs = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            pairs += static_cast<std::uint64_t>(run) * (run - 1) / 2;
            run = 1;
        }
    }
    return pairs;
}

}  // namespace

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw std::invalid_argument("kendall_tau_b: need two same-length columns, n >= 2");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;

    // ties in x and joint ties, scanned over the sorted order
    std::uint64_t n1 = 0, n_joint = 0;
    {
        std::size_t run_x = 1, run_xy = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            const bool same_x = i < n && x[order[i]] == x[order[i - 1]];
            const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
            if (same_x) ++run_x;
            if (same_xy) ++run_xy;
            if (!same_x || i == n) {
                n1 += static_cast<std::uint64_t>(run_x) * (run_x - 1) / 2;
                run_x = 1;
            }
            if (!same_xy || i == n) {
                n_joint += static_cast<std::uint64_t>(run_xy) * (run_xy - 1) / 2;
                run_xy = 1;
            }
        }
    }

    std::vector<double> y_seq(n);
    for (std::size_t i = 0; i < n; ++i) y_seq[i] = y[order[i]];
    std::vector<double> scratch(n);
    const std::uint64_t discordant = count_inversions(y_seq, scratch, 0, n);  // y_seq now sorted

    const std::uint64_t n2 = tie_pairs(y_seq);

    const double denom = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
    if (denom == 0.0) return 0.0;

    const double con_minus_dis = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                                 static_cast<double>(n_joint) - 2.0 * static_cast<double>(discordant);
    return std::max(-1.0, std::min(1.0, con_minus_dis / denom));
}

TauMatrix kendall_tau_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) throw std::invalid_argument("kendall_tau_matrix: need at least 2 rows");
    const std::size_t v = rows[0].size();
    std::vector<std::vector<double>> cols(v, std::vector<double>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != v) throw std::invalid_argument("kendall_tau_matrix: ragged rows");
        for (std::size_t j = 0; j < v; ++j) cols[j][i] = rows[i][j];
    }

    TauMatrix out;
    out.matrix = Tensor({static_cast<std::int64_t>(v), static_cast<std::int64_t>(v)});
    std::vector<bool> constant(v, false);
    for (std::size_t j = 0; j < v; ++j) {
        constant[j] = std::all_of(cols[j].begin(), cols[j].end(), [&](double x) { return x == cols[j][0]; });
        if (constant[j]) out.zero_variance.push_back(static_cast<std::int64_t>(j));
        out.matrix.at2(static_cast<std::int64_t>(j), static_cast<std::int64_t>(j)) = 1.0;
    }
    for (std::size_t i = 0; i < v; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double tau = (constant[i] || constant[j]) ? 0.0 : kendall_tau_b(cols[i], cols[j]);
            out.matrix.at2(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = tau;
            out.matrix.at2(static_cast<std::int64_t>(j), static_cast<std::int64_t>(i)) = tau;
        }
    }
    return out;
}

std::vector<std::vector<double>> cohort_rows(const Cohort& cohort, const VariableSchema& schema) {
    std::vector<std::vector<double>> rows;
    for (const auto& rec : cohort.records)
        for (const auto& row : rec.rows) {
            if (static_cast<std::int64_t>(row.size()) != schema.var_count())
                throw std::invalid_argument("cohort_rows: row width does not match schema");
            rows.push_back(row);
        }
    return rows;
}

Detrended detrend(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 3) throw std::invalid_argument("detrend: series length must be >= 3");

    // time runs 1..T
    const double t_mean = static_cast<double>(n + 1) / 2.0;
    double y_mean = 0.0;
    for (double y : series) y_mean += y;
    y_mean /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i + 1) - t_mean;
        sxy += dt * (series[i] - y_mean);
        sxx += dt * dt;
    }
    Detrended out;
    out.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    out.intercept = y_mean - out.slope * t_mean;
    out.trend.resize(n);
    out.cycle.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.trend[i] = out.intercept + out.slope * static_cast<double>(i + 1);
        out.cycle[i] = series[i] - out.trend[i];
    }
    return out;
}

Tensor dynamic_correlation(const Cohort& cohort, const VariableSchema& schema, DynamicMode mode) {
    const std::int64_t v = schema.var_count();
    Tensor acc({v, v});
    Tensor counts({v, v});

    for (const auto& rec : cohort.records) {
        if (rec.length() < 3) continue;
        const auto n = static_cast<std::size_t>(rec.length());
        std::vector<std::vector<double>> comp(static_cast<std::size_t>(v), std::vector<double>(n));
        for (std::int64_t var = 0; var < v; ++var) {
            std::vector<double> series(n);
            for (std::size_t t = 0; t < n; ++t) series[t] = rec.rows[t][static_cast<std::size_t>(var)];
            auto d = detrend(series);
            comp[static_cast<std::size_t>(var)] = mode == DynamicMode::Trend ? std::move(d.trend) : std::move(d.cycle);
        }
        for (std::int64_t i = 0; i < v; ++i) {
            for (std::int64_t j = 0; j < i; ++j) {
                const auto& a = comp[static_cast<std::size_t>(i)];
                const auto& b = comp[static_cast<std::size_t>(j)];
                const bool const_a = std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; });
                const bool const_b = std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; });
                if (const_a || const_b) continue;  // undefined for this patient
                const double tau = kendall_tau_b(a, b);
                acc.at2(i, j) += tau;
                counts.at2(i, j) += 1.0;
            }
        }
    }

    Tensor out({v, v});
    for (std::int64_t i = 0; i < v; ++i) {
        out.at2(i, i) = 1.0;
        for (std::int64_t j = 0; j < i; ++j) {
            const double value = counts.at2(i, j) > 0.0 ? acc.at2(i, j) / counts.at2(i, j) : 0.0;
            out.at2(i, j) = value;
            out.at2(j, i) = value;
        }
    }
    return out;
}

CorrelationReport correlation_report(const Cohort& cohort, const VariableSchema& schema) {
    CorrelationReport rep;
    rep.static_tau = kendall_tau_matrix(cohort_rows(cohort, schema)).matrix;
    rep.trend_tau = dynamic_correlation(cohort, schema, DynamicMode::Trend);
    rep.cycle_tau = dynamic_correlation(cohort, schema, DynamicMode::Cycle);
    for (const auto& rec : cohort.records)
        if (rec.length() >= 3) ++rep.patients_used;
    return rep;
}

}  // namespace replaygan::corr
