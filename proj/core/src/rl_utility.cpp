#include "replaygan/rl_utility.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "replaygan/kmeans.hpp"
#include "replaygan/rng.hpp"

namespace replaygan::rlutil {

double hiv_reward(double vl_copies_ml, double cd4_cells_ul, double detection_limit) {
    if (vl_copies_ml <= 0.0 || cd4_cells_ul <= 0.0)
        throw std::invalid_argument("hiv_reward: VL and CD4 must be positive");
    if (vl_copies_ml > detection_limit) {
        const double cd4_ml = cd4_cells_ul * 1000.0;
        return -0.7 * std::log(vl_copies_ml) + 0.6 * std::log(cd4_ml);
    }
    return 5.0 + 0.6 * std::log(vl_copies_ml);
}

namespace {

struct FeatureSet {
    Eigen::MatrixXd x;          // [N, D] observation features
    Eigen::VectorXd y;          // [N] reward response
    std::vector<std::pair<std::int64_t, std::int64_t>> row_of;  // (record, time) per feature row
};

FeatureSet observation_features(const Cohort& cohort, const VariableSchema& schema, const RLSpec& spec) {
    std::vector<std::int64_t> num_idx, med_idx;
    for (const auto& name : spec.observation_numeric) {
        auto i = schema.index_of(name);
        if (!i) throw std::invalid_argument("build_states: unknown observation variable " + name);
        num_idx.push_back(*i);
    }
    std::int64_t med_width = 0;
    for (const auto& name : spec.medication_vars) {
        auto i = schema.index_of(name);
        if (!i || schema.variables[static_cast<std::size_t>(*i)].is_numeric())
            throw std::invalid_argument("build_states: medication variable " + name + " must be non-numeric");
        med_idx.push_back(*i);
        med_width += schema.variables[static_cast<std::size_t>(*i)].level_count();
    }

    const auto scaling = fit_scaling(cohort, schema);
    std::vector<const NumericScaling*> scale_of(static_cast<std::size_t>(schema.var_count()), nullptr);
    {
        std::size_t k = 0;
        for (std::int64_t v = 0; v < schema.var_count(); ++v)
            if (schema.variables[static_cast<std::size_t>(v)].is_numeric()) scale_of[static_cast<std::size_t>(v)] = &scaling[k++];
    }

    const auto vl = schema.index_of("VL");
    const auto cd4 = schema.index_of("CD4");
    if (!vl || !cd4) throw std::invalid_argument("build_states: schema must carry VL and CD4");

    std::int64_t n = 0;
    for (const auto& rec : cohort.records) n += std::max<std::int64_t>(rec.length() - 1, 0);
    const std::int64_t d = static_cast<std::int64_t>(num_idx.size()) + med_width;

    FeatureSet fs;
    fs.x.resize(n, d);
    fs.y.resize(n);
    std::int64_t row = 0;
    for (std::size_t r = 0; r < cohort.records.size(); ++r) {
        const auto& rec = cohort.records[r];
        for (std::int64_t t = 1; t < rec.length(); ++t) {
            std::int64_t col = 0;
            for (auto v : num_idx)
                fs.x(row, col++) =
                    scale_of[static_cast<std::size_t>(v)]->encode(rec.rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)]);
            for (auto v : med_idx) {
                const auto& sp = schema.variables[static_cast<std::size_t>(v)];
                const auto lvl =
                    static_cast<std::int64_t>(rec.rows[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(v)]);
                for (std::int64_t l = 0; l < sp.level_count(); ++l) fs.x(row, col++) = l == lvl ? 1.0 : 0.0;
            }
            fs.y(row) = hiv_reward(rec.rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(*vl)],
                                   rec.rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(*cd4)],
                                   spec.detection_limit);
            fs.row_of.emplace_back(static_cast<std::int64_t>(r), t);
            ++row;
        }
    }
    return fs;
}

/// PLS1 scores by NIPALS deflation; returns false when a component
/// degenerates before reduce_dim directions are found.
bool pls_scores(const Eigen::MatrixXd& x0, const Eigen::VectorXd& y0, std::int64_t k, Eigen::MatrixXd& scores) {
    Eigen::MatrixXd x = x0;
    Eigen::VectorXd y = y0;
    const auto n = x.rows();
    scores.resize(n, k);
    for (std::int64_t c = 0; c < k; ++c) {
        Eigen::VectorXd w = x.transpose() * y;
        const double wn = w.norm();
        if (wn < 1e-10) return false;
        w /= wn;
        Eigen::VectorXd t = x * w;
        const double tn = t.squaredNorm();
        if (tn < 1e-10) return false;
        scores.col(c) = t;
        // deflate
        Eigen::VectorXd p = x.transpose() * t / tn;
        x -= t * p.transpose();
        y -= t * (t.dot(y) / tn);
    }
    return true;
}

Eigen::MatrixXd pca_scores(const Eigen::MatrixXd& x, std::int64_t k) {
    Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const auto d = x.cols();
    Eigen::MatrixXd dirs(d, k);
    for (std::int64_t c = 0; c < k; ++c) dirs.col(c) = es.eigenvectors().col(d - 1 - c);  // descending variance
    return x * dirs;
}

}  // namespace

StateLabels build_states(const Cohort& cohort, const VariableSchema& schema, const RLSpec& spec, std::uint64_t seed) {
    for (const auto& rec : cohort.records)
        if (rec.length() < 2)
            throw std::invalid_argument("build_states: record " + rec.patient_id +
                                        " is too short to supply previous-month medications");

    FeatureSet fs = observation_features(cohort, schema, spec);
    const auto n = fs.x.rows();
    if (n == 0) throw std::invalid_argument("build_states: no usable rows");

    // center columns; unit-scale the nonconstant ones
    Eigen::VectorXd mean = fs.x.colwise().mean();
    fs.x.rowwise() -= mean.transpose();
    for (Eigen::Index c = 0; c < fs.x.cols(); ++c) {
        const double sd = std::sqrt(fs.x.col(c).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(n - 1, 1)));
        if (sd > 1e-12) fs.x.col(c) /= sd;
    }
    fs.y.array() -= fs.y.mean();

    StateLabels out;
    Eigen::MatrixXd scores;
    if (!pls_scores(fs.x, fs.y, spec.reduce_dim, scores)) {
        scores = pca_scores(fs.x, spec.reduce_dim);
        out.pca_fallback = true;
    }

    Tensor pts({n, spec.reduce_dim});
    for (Eigen::Index i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < spec.reduce_dim; ++j) pts.at2(i, j) = scores(i, j);
    auto km = kmeans(pts, spec.n_state_clusters, seed);
    out.clusters_used = km.centers.dim(0);

    out.per_record.resize(cohort.records.size());
    for (std::size_t r = 0; r < cohort.records.size(); ++r)
        out.per_record[r].assign(static_cast<std::size_t>(std::max<std::int64_t>(cohort.records[r].length() - 1, 0)),
                                 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto [rec, t] = fs.row_of[static_cast<std::size_t>(i)];
        out.per_record[static_cast<std::size_t>(rec)][static_cast<std::size_t>(t - 1)] = km.labels[static_cast<std::size_t>(i)];
    }
    return out;
}

namespace {

std::pair<std::int64_t, std::int64_t> action_levels(const VariableSchema& schema, const RLSpec& spec) {
    auto a = schema.index_of(spec.action_var_a);
    auto b = schema.index_of(spec.action_var_b);
    if (!a || !b) throw std::invalid_argument("action variables must exist in the schema");
    return {schema.variables[static_cast<std::size_t>(*a)].level_count(),
            schema.variables[static_cast<std::size_t>(*b)].level_count()};
}

}  // namespace

std::vector<Transition> build_transitions(const Cohort& cohort, const VariableSchema& schema, const RLSpec& spec,
                                          const StateLabels& labels) {
    const auto va = *schema.index_of(spec.action_var_a);
    const auto vb = *schema.index_of(spec.action_var_b);
    const auto [la, lb] = action_levels(schema, spec);
    (void)la;
    const auto vl = *schema.index_of("VL");
    const auto cd4 = *schema.index_of("CD4");

    std::vector<Transition> out;
    for (std::size_t r = 0; r < cohort.records.size(); ++r) {
        const auto& rec = cohort.records[r];
        for (std::int64_t t = 1; t + 1 < rec.length(); ++t) {
            Transition tr;
            tr.state = labels.per_record[r][static_cast<std::size_t>(t - 1)];
            const auto level_a = static_cast<std::int64_t>(rec.rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(va)]);
            const auto level_b = static_cast<std::int64_t>(rec.rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(vb)]);
            tr.action = level_a * lb + level_b;
            tr.reward = hiv_reward(rec.rows[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(vl)],
                                   rec.rows[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(cd4)],
                                   spec.detection_limit);
            tr.next_state = labels.per_record[r][static_cast<std::size_t>(t)];
            tr.terminal = t + 2 == rec.length();
            out.push_back(tr);
        }
    }
    return out;
}

PolicyTable train_bcq(const std::vector<Transition>& transitions, const VariableSchema& schema, const RLSpec& spec,
                      const StateLabels& labels) {
    const auto [la, lb] = action_levels(schema, spec);
    const std::int64_t n_actions = la * lb;
    const std::int64_t n_states = spec.n_state_clusters;

    PolicyTable out;
    out.n_actions = n_actions;
    out.level_count_a = la;
    out.level_count_b = lb;
    out.q = Tensor({n_states, n_actions});

    std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(n_states),
                                                  std::vector<std::int64_t>(static_cast<std::size_t>(n_actions), 0));
    for (const auto& tr : transitions) ++counts[static_cast<std::size_t>(tr.state)][static_cast<std::size_t>(tr.action)];

    out.allowed.assign(static_cast<std::size_t>(n_states),
                       std::vector<bool>(static_cast<std::size_t>(n_actions), false));
    for (std::int64_t s = 0; s < n_states; ++s) {
        std::int64_t most = 0;
        for (std::int64_t a = 0; a < n_actions; ++a)
            most = std::max(most, counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]);
        for (std::int64_t a = 0; a < n_actions; ++a) {
            const auto c = counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
            out.allowed[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] =
                c > 0 && static_cast<double>(c) >= spec.tau_bcq * static_cast<double>(most);
        }
    }

    auto max_allowed_q = [&](std::int64_t s) {
        double best = 0.0;
        bool any = false;
        for (std::int64_t a = 0; a < n_actions; ++a) {
            if (!out.allowed[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) continue;
            const double q = out.q.at2(s, a);
            if (!any || q > best) best = q;
            any = true;
        }
        return best;  // unobserved next states bootstrap as 0
    };

    for (std::int64_t sweep = 0; sweep < spec.iterations; ++sweep) {
        for (const auto& tr : transitions) {
            const double target = tr.terminal ? tr.reward : tr.reward + spec.gamma_rl * max_allowed_q(tr.next_state);
            double& q = out.q.at2(tr.state, tr.action);
            q += spec.step_size * (target - q);
        }
    }

    out.greedy.assign(static_cast<std::size_t>(n_states), -1);
    for (std::int64_t s = 0; s < n_states; ++s) {
        double best = 0.0;
        std::int64_t best_a = -1;
        for (std::int64_t a = 0; a < n_actions; ++a) {
            if (!out.allowed[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) continue;
            const double q = out.q.at2(s, a);
            if (best_a < 0 || q > best) {
                best = q;
                best_a = a;
            }
        }
        out.greedy[static_cast<std::size_t>(s)] = best_a;
    }

    // greedy action frequencies over the training rows (all labeled rows)
    out.action_freq.assign(static_cast<std::size_t>(n_actions), 0.0);
    std::vector<std::int64_t> observed_actions;
    for (std::int64_t a = 0; a < n_actions; ++a) {
        bool seen = false;
        for (std::int64_t s = 0; s < n_states; ++s)
            if (counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] > 0) seen = true;
        if (seen) observed_actions.push_back(a);
    }
    std::int64_t rows = 0;
    for (const auto& rec_labels : labels.per_record) {
        for (auto s : rec_labels) {
            ++rows;
            const auto g = out.greedy[static_cast<std::size_t>(s)];
            if (g >= 0) {
                out.action_freq[static_cast<std::size_t>(g)] += 1.0;
            } else {
                ++out.fallback_states;
                for (auto a : observed_actions)
                    out.action_freq[static_cast<std::size_t>(a)] += 1.0 / static_cast<double>(observed_actions.size());
            }
        }
    }
    if (rows > 0)
        for (auto& f : out.action_freq) f /= static_cast<double>(rows);
    return out;
}

Tensor action_heatmap(const PolicyTable& policy, const StateLabels& labels) {
    (void)labels;  // frequencies were accumulated over these rows in train_bcq
    Tensor grid({policy.level_count_a, policy.level_count_b});
    for (std::int64_t a = 0; a < policy.n_actions; ++a)
        grid.at2(a / policy.level_count_b, a % policy.level_count_b) = policy.action_freq[static_cast<std::size_t>(a)];
    return grid;
}

PolicyComparison compare_policies(const Tensor& map_real, const Tensor& map_syn) {
    if (!map_real.same_shape(map_syn)) throw std::invalid_argument("compare_policies: action grids differ");
    PolicyComparison out;
    double acc = 0.0;
    std::int64_t arg_real = 0, arg_syn = 0;
    for (std::int64_t i = 0; i < map_real.size(); ++i) {
        acc += std::abs(map_real[i] - map_syn[i]);
        if (map_real[i] > map_real[arg_real]) arg_real = i;
        if (map_syn[i] > map_syn[arg_syn]) arg_syn = i;
    }
    out.total_variation = 0.5 * acc;
    out.top1_match = arg_real == arg_syn;
    return out;
}

Cohort filter_cohort(const Cohort& cohort, const VariableSchema& schema, const std::string& variable,
                     const std::string& level) {
    auto idx = schema.index_of(variable);
    if (!idx) throw std::invalid_argument("filter_cohort: unknown variable " + variable);
    const auto& spec = schema.variables[static_cast<std::size_t>(*idx)];
    auto lvl = spec.level_index(level);
    if (!lvl) throw std::invalid_argument("filter_cohort: unknown level " + level + " of " + variable);

    Cohort out;
    for (const auto& rec : cohort.records) {
        if (!rec.rows.empty() && rec.rows[0][static_cast<std::size_t>(*idx)] == static_cast<double>(*lvl))
            out.records.push_back(rec);
    }
    return out;
}

Tensor policy_heatmap_for_cohort(const Cohort& cohort, const VariableSchema& schema, const RLSpec& spec,
                                 std::uint64_t seed) {
    Cohort view = cohort;
    if (spec.subgroup) view = filter_cohort(cohort, schema, spec.subgroup->first, spec.subgroup->second);
    if (view.records.empty()) throw std::invalid_argument("policy_heatmap_for_cohort: no records after filtering");
    auto labels = build_states(view, schema, spec, seed);
    auto transitions = build_transitions(view, schema, spec, labels);
    if (transitions.empty()) throw std::invalid_argument("policy_heatmap_for_cohort: no transitions available");
    auto policy = train_bcq(transitions, schema, spec, labels);
    return action_heatmap(policy, labels);
}

}  // namespace replaygan::rlutil
