#include "replaygan/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace replaygan::losses {

LossBreakdown LossTerms::breakdown() const {
    LossBreakdown out;
    out.total = total.value().item();
    for (const auto& [name, var] : components) out.components[name] = var.value().item();
    out.weights = weights;
    return out;
}

LossTerms critic_loss(const CriticFn& critic, const Var& x_real, const Var& x_syn,
                      const std::vector<double>& epsilons, double lambda_gp) {
    const auto& rs = x_real.value().shape();
    if (!x_real.value().same_shape(x_syn.value()))
        throw std::invalid_argument("critic_loss: x_real and x_syn must share a shape");
    if (rs.empty() || static_cast<std::int64_t>(epsilons.size()) != rs[0])
        throw std::invalid_argument("critic_loss: one epsilon per sample required");

    Var wasserstein = ad::sub(ad::mean_all(critic(x_syn)), ad::mean_all(critic(x_real)));

    // per-sample interpolate, probed as a fresh leaf
    Tensor mix(rs);
    const std::int64_t b = rs[0];
    const std::int64_t per = b > 0 ? mix.size() / b : 0;
    for (std::int64_t i = 0; i < b; ++i) {
        const double e = epsilons[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < per; ++j)
            mix[i * per + j] = e * x_real.value()[i * per + j] + (1.0 - e) * x_syn.value()[i * per + j];
    }
    Var x_tilde = ad::param(std::move(mix));
    Var tilde_scores = critic(x_tilde);
    Var g = ad::grad(ad::sum_all(tilde_scores), {x_tilde})[0];
    Var norms = ad::l2_norm_per_sample(g);
    if (!norms.value().all_finite())
        throw std::runtime_error("critic_loss: non-finite gradient norm in the penalty term");
    Var penalty = ad::mean_all(ad::square(ad::add_scalar(norms, -1.0)));

    LossTerms terms;
    terms.components = {{"wasserstein", wasserstein}, {"gradient_penalty", penalty}};
    terms.weights = {{"wasserstein", 1.0}, {"gradient_penalty", lambda_gp}};
    terms.total = ad::add(wasserstein, ad::mul_scalar(penalty, lambda_gp));
    return terms;
}

Var alignment_sum(const Var& r_syn, const Tensor& r_real) {
    const auto& sh = r_syn.value().shape();
    if (sh.size() != 2 || sh[0] != sh[1] || !(r_real.shape() == sh))
        throw std::invalid_argument("alignment_sum: correlation matrices must be same-shape square");
    const std::int64_t v = sh[0];
    // mask selects each unordered pair once (strict lower triangle)
    Tensor mask({v, v});
    for (std::int64_t i = 0; i < v; ++i)
        for (std::int64_t j = 0; j < i; ++j) mask.at2(i, j) = 1.0;
    Var diff = ad::abs_v(ad::sub(r_syn, ad::constant(r_real)));
    return ad::sum_all(ad::mul(diff, ad::constant(std::move(mask))));
}

Var feature_matching_term(const Var& f_real, const Var& f_syn) {
    if (f_real.value().rank() != 3 || f_syn.value().rank() != 3)
        throw std::invalid_argument("feature_matching_term: features must be [B,T,E]");
    auto averaged = [](const Var& f) {
        const double n = static_cast<double>(f.value().dim(0) * f.value().dim(1));
        return ad::mul_scalar(ad::sum_axis0(ad::sum_axis1(f)), 1.0 / n);
    };
    return ad::mean_all(ad::abs_v(ad::sub(averaged(f_syn), averaged(ad::detach(f_real)))));
}

LossTerms generator_loss(const CriticFn& critic, const Var& x_syn, const Var& r_syn, const Tensor& r_real,
                         double lambda_corr) {
    Var adversarial = ad::neg(ad::mean_all(critic(x_syn)));

    LossTerms terms;
    terms.components = {{"adversarial", adversarial}};
    terms.weights = {{"adversarial", 1.0}, {"alignment", lambda_corr}};
    if (r_syn.defined()) {
        Var alignment = alignment_sum(r_syn, r_real);
        terms.components.emplace_back("alignment", alignment);
        terms.total = ad::add(adversarial, ad::mul_scalar(alignment, lambda_corr));
    } else {
        terms.components.emplace_back("alignment", ad::constant_scalar(0.0));
        terms.total = adversarial;
    }
    return terms;
}

namespace {

/// Rows scalarized per variable: numeric channel as-is, non-numeric as
/// the index-weighted expectation of the block.
Var scalarize_rows(const Var& values, const VariableSchema& schema) {
    const auto& sh = values.value().shape();
    const std::int64_t n = sh[0] * sh[1];
    std::vector<Var> cols;
    std::int64_t off = 0;
    for (const auto& spec : schema.variables) {
        if (spec.is_numeric()) {
            cols.push_back(ad::reshape(ad::slice_last(values, off, 1), {n, 1}));
            off += 1;
        } else {
            const std::int64_t l = spec.level_count();
            Tensor idx({l, 1});
            for (std::int64_t i = 0; i < l; ++i) idx.at2(i, 0) = static_cast<double>(i);
            Var block = ad::reshape(ad::slice_last(values, off, l), {n, l});
            cols.push_back(ad::matmul(block, ad::constant(std::move(idx))));
            off += l;
        }
    }
    return ad::concat_last(cols);  // [N, V]
}

}  // namespace

Var pearson_matrix_var(const Var& values, const VariableSchema& schema) {
    const auto& sh = values.value().shape();
    if (sh.size() != 3 || sh[2] != schema.encoded_width())
        throw std::invalid_argument("pearson_matrix: values width does not match schema");
    const std::int64_t n = sh[0] * sh[1];
    if (n < 2) throw std::invalid_argument("pearson_matrix: need at least 2 rows");

    Var x = scalarize_rows(values, schema);                       // [N,V]
    Var mean = ad::mul_scalar(ad::sum_axis0(x), 1.0 / static_cast<double>(n));
    Var centered = ad::sub(x, ad::expand_axis0(mean, n));
    Var cov = ad::mul_scalar(ad::matmul(ad::transpose2(centered), centered), 1.0 / static_cast<double>(n));
    Var var = ad::mul_scalar(ad::sum_axis0(ad::square(centered)), 1.0 / static_cast<double>(n));
    Var std_eps = ad::sqrt_v(ad::add_scalar(var, 1e-12));
    const std::int64_t v = schema.var_count();
    Var denom = ad::matmul(ad::reshape(std_eps, {v, 1}), ad::reshape(std_eps, {1, v}));
    return ad::divide(cov, denom);
}

PearsonResult pearson_matrix(const EncodedBatch& batch, const VariableSchema& schema) {
    const auto& sh = batch.values.shape();
    if (sh.size() != 3 || sh[2] != schema.encoded_width())
        throw std::invalid_argument("pearson_matrix: batch width does not match schema");

    // scalarize only rows within each record's length
    const std::int64_t v_count = schema.var_count();
    std::vector<std::vector<double>> rows;
    for (std::int64_t b = 0; b < sh[0]; ++b) {
        const std::int64_t len =
            b < static_cast<std::int64_t>(batch.lengths.size()) ? batch.lengths[static_cast<std::size_t>(b)] : sh[1];
        for (std::int64_t t = 0; t < len; ++t) {
            std::vector<double> row(static_cast<std::size_t>(v_count));
            std::int64_t off = 0;
            for (std::int64_t v = 0; v < v_count; ++v) {
                const auto& spec = schema.variables[static_cast<std::size_t>(v)];
                if (spec.is_numeric()) {
                    row[static_cast<std::size_t>(v)] = batch.values.at3(b, t, off);
                    off += 1;
                } else {
                    double e = 0.0;
                    for (std::int64_t l = 0; l < spec.level_count(); ++l)
                        e += static_cast<double>(l) * batch.values.at3(b, t, off + l);
                    row[static_cast<std::size_t>(v)] = e;
                    off += spec.level_count();
                }
            }
            rows.push_back(std::move(row));
        }
    }
    const std::int64_t n = static_cast<std::int64_t>(rows.size());
    if (n < 2) throw std::invalid_argument("pearson_matrix: need at least 2 rows");

    std::vector<double> mean(static_cast<std::size_t>(v_count), 0.0), var(static_cast<std::size_t>(v_count), 0.0);
    for (const auto& row : rows)
        for (std::int64_t v = 0; v < v_count; ++v) mean[static_cast<std::size_t>(v)] += row[static_cast<std::size_t>(v)];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& row : rows)
        for (std::int64_t v = 0; v < v_count; ++v) {
            const double d = row[static_cast<std::size_t>(v)] - mean[static_cast<std::size_t>(v)];
            var[static_cast<std::size_t>(v)] += d * d;
        }
    for (auto& x : var) x /= static_cast<double>(n);

    PearsonResult out;
    out.matrix = Tensor({v_count, v_count});
    for (std::int64_t i = 0; i < v_count; ++i) out.matrix.at2(i, i) = 1.0;
    for (std::int64_t i = 0; i < v_count; ++i) {
        if (var[static_cast<std::size_t>(i)] <= 0.0)
            out.zero_variance.push_back(schema.variables[static_cast<std::size_t>(i)].name);
    }
    for (std::int64_t i = 0; i < v_count; ++i) {
        for (std::int64_t j = 0; j < i; ++j) {
            double r = 0.0;
            if (var[static_cast<std::size_t>(i)] > 0.0 && var[static_cast<std::size_t>(j)] > 0.0) {
                double cov = 0.0;
                for (const auto& row : rows)
                    cov += (row[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) *
                           (row[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]);
                cov /= static_cast<double>(n);
                r = cov / std::sqrt(var[static_cast<std::size_t>(i)] * var[static_cast<std::size_t>(j)]);
                r = std::max(-1.0, std::min(1.0, r));
            }
            out.matrix.at2(i, j) = r;
            out.matrix.at2(j, i) = r;
        }
    }
    return out;
}

LossTerms vae_loss(const Var& gamma, const Var& sigma, const Var& x_real, const Var& x_hat, double lambda_kl,
                   const VariableSchema& schema) {
    for (std::int64_t i = 0; i < sigma.value().size(); ++i)
        if (sigma.value()[i] <= 0.0) throw std::invalid_argument("vae_loss: sigma must be strictly positive");
    if (!gamma.value().same_shape(sigma.value())) throw std::invalid_argument("vae_loss: gamma/sigma shape mismatch");
    if (!x_real.value().same_shape(x_hat.value()))
        throw std::invalid_argument("vae_loss: reconstruction shape mismatch");

    const auto& gsh = gamma.value().shape();
    const double bt = static_cast<double>(gsh[0] * gsh[1]);

    // closed-form Gaussian KL against N(0, I), summed over latent dims
    Var sigma_sq = ad::square(sigma);
    Var per_dim = ad::mul_scalar(
        ad::sub(ad::add(ad::square(gamma), sigma_sq), ad::add_scalar(ad::log_v(sigma_sq), 1.0)), 0.5);
    Var kl = ad::mul_scalar(ad::sum_all(per_dim), 1.0 / bt);

    // reconstruction NLL: squared error on numerics, cross-entropy on blocks
    std::vector<Var> pieces;
    std::int64_t off = 0;
    for (const auto& spec : schema.variables) {
        if (spec.is_numeric()) {
            Var d = ad::sub(ad::slice_last(x_hat, off, 1), ad::slice_last(x_real, off, 1));
            pieces.push_back(ad::sum_all(ad::square(d)));
            off += 1;
        } else {
            const std::int64_t l = spec.level_count();
            Var p = ad::slice_last(x_hat, off, l);
            Var target = ad::slice_last(x_real, off, l);
            Var ce = ad::neg(ad::sum_all(ad::mul(target, ad::log_v(ad::add_scalar(p, 1e-12)))));
            pieces.push_back(ce);
            off += l;
        }
    }
    Var recon = pieces[0];
    for (std::size_t i = 1; i < pieces.size(); ++i) recon = ad::add(recon, pieces[i]);
    recon = ad::mul_scalar(recon, 1.0 / bt);

    LossTerms terms;
    terms.components = {{"kl", kl}, {"reconstruction", recon}};
    terms.weights = {{"kl", lambda_kl}, {"reconstruction", 1.0}};
    terms.total = ad::add(ad::mul_scalar(kl, lambda_kl), recon);
    return terms;
}

}  // namespace replaygan::losses
