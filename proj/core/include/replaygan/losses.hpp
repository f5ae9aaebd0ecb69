#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "replaygan/autodiff.hpp"
#include "replaygan/nets.hpp"
#include "replaygan/schema.hpp"

namespace replaygan::losses {

using ad::Var;

/// Scalar view of a loss: total plus unweighted named components.
/// total == sum of weight(name) * component(name) within 1e-8.
struct LossBreakdown {
    double total = 0.0;
    std::map<std::string, double> components;
    std::map<std::string, double> weights;
};

/// Graph-attached loss; breakdown() snapshots the scalar values.
struct LossTerms {
    Var total;
    std::vector<std::pair<std::string, Var>> components;
    std::map<std::string, double> weights;

    LossBreakdown breakdown() const;
};

using CriticFn = std::function<Var(const Var&)>;  // [B,T,W] -> scores [B]

/// Wasserstein critic objective with two-sided gradient penalty:
///   mean C(x_syn) - mean C(x_real) + lambda_gp * mean (||grad C(x~)|| - 1)^2
/// where x~ interpolates real and synthetic per sample with the given
/// epsilons. The interpolate is probed as a fresh leaf; the penalty's
/// parameter gradients flow through the double-backward graph.
LossTerms critic_loss(const CriticFn& critic, const Var& x_real, const Var& x_syn,
                      const std::vector<double>& epsilons, double lambda_gp);

/// Generator objective: -mean C(x_syn) + lambda_corr * alignment, where
/// alignment sums |r_syn - r_real| over unordered off-diagonal pairs.
/// Pass an undefined r_syn to drop the alignment term (ablation mode);
/// the component then reads 0.
LossTerms generator_loss(const CriticFn& critic, const Var& x_syn, const Var& r_syn, const Tensor& r_real,
                         double lambda_corr);

/// Alignment sum by itself (also the per-iteration convergence metric).
Var alignment_sum(const Var& r_syn, const Tensor& r_real);

/// Moment-matching penalty: mean absolute difference between the
/// batch-and-time-averaged embedding features of real and synthetic data.
/// The real side is detached.
Var feature_matching_term(const Var& f_real, const Var& f_syn);

struct PearsonResult {
    Tensor matrix;  // [V,V], symmetric, unit diagonal
    std::vector<std::string> zero_variance;  // variables pinned to r = 0
};

/// Per-variable Pearson correlations over all rows (time flattened).
/// Non-numeric variables are scalarized as the index-weighted expectation
/// of their simplex block.
PearsonResult pearson_matrix(const EncodedBatch& batch, const VariableSchema& schema);

/// Differentiable Pearson (epsilon-guarded denominators) for the
/// alignment term; values match pearson_matrix away from zero variance.
Var pearson_matrix_var(const Var& values, const VariableSchema& schema);

/// Negative evidence bound (minimization form):
///   lambda_kl * KL(N(gamma, sigma^2) || N(0,I)) + reconstruction NLL,
/// squared error on numeric channels, cross-entropy on simplex blocks,
/// both averaged over batch and time. Rejects sigma <= 0.
LossTerms vae_loss(const Var& gamma, const Var& sigma, const Var& x_real, const Var& x_hat, double lambda_kl,
                   const VariableSchema& schema);

}  // namespace replaygan::losses
