#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "replaygan/cohortsim.hpp"
#include "replaygan/losses.hpp"
#include "replaygan/nets.hpp"
#include "replaygan/replay_buffer.hpp"
#include "replaygan/schema.hpp"

namespace replaygan::train {

enum class Variant { WganGpBaseline, VaeWganGp, OursBiLstm, OursEot, Mbd, Mm, Mc };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Does the variant run the VAE phase of Algorithm 1?
bool variant_has_vae(Variant v);
/// Does the variant maintain the external feature buffer?
bool variant_has_buffer(Variant v);

struct TrainConfig {
    Variant variant = Variant::OursEot;
    std::int64_t epochs = 200;
    std::int64_t batch_size = 256;
    double lr = 0.001;
    std::int64_t n_critic = 5;
    double lambda_gp = 10.0;
    double lambda_corr = 10.0;
    double lambda_kl = 1.0;
    bool use_alignment = true;
    std::vector<std::int64_t> curriculum;  // record-length stages; empty = single stage at 100
    std::int64_t buffer_capacity = 10000;
    std::int64_t mc_critic_interval = 50;  // epochs between critic additions (mc variant)
    std::uint64_t seed = 0;
};

std::vector<std::string> validate_train_config(const TrainConfig& config);

struct TraceRow {
    std::int64_t epoch = 0;
    std::int64_t iteration = 0;       // outer loop index within the run
    std::string phase;                // vae | critic | generator
    std::int64_t phase_step = 0;      // 0..n_critic-1 for critic rows
    double total = 0.0;
    std::map<std::string, double> components;
    double l_corr_logged = 0.0;       // ln of the alignment metric; generator rows only
    double wall_ms = 0.0;
};

struct TrainTrace {
    std::vector<TraceRow> rows;

    /// Mean of l_corr_logged over the last epoch's generator rows.
    double final_logged_l_corr() const;
};

struct ModelBundle {
    VariableSchema schema;
    Variant variant = Variant::OursEot;
    nets::Generator generator;
    std::vector<nets::Critic> critics;  // mc grows this; index 0 carries the tied embedding
    nets::VaeEncoder encoder;
    nets::VaeDecoder decoder;
    bool has_vae = false;
    std::vector<NumericScaling> scaling;
    TrainConfig config;

    nets::NamedParams named_params() const;
    std::uint64_t params_hash() const;
};

/// Fresh networks for the given variant (mbd projections installed,
/// VAE tied to the first critic's embedding when the variant uses one).
/// Throws on unknown variants.
ModelBundle apply_variant(const TrainConfig& config, const VariableSchema& schema, Rng& rng);

struct TrainResult {
    ModelBundle bundle;
    replay::FeatureBuffer buffer;
    TrainTrace trace;
};

/// Thrown when a loss goes non-finite; carries the trace so far.
struct TrainingDiverged : std::runtime_error {
    TrainTrace trace;
    explicit TrainingDiverged(const std::string& what, TrainTrace t)
        : std::runtime_error(what), trace(std::move(t)) {}
};

/// Algorithm: per outer iteration, one VAE step (when the variant has
/// one), n_critic critic steps, one generator step. Deterministic given
/// config.seed.
TrainResult train(const TrainConfig& config, const Cohort& cohort, const VariableSchema& schema);

/// Epochs split evenly across stages, in order; earlier stages take the
/// remainder. Example: stages {10,20,30} over 6 epochs -> 10,10,20,20,30,30.
std::vector<std::int64_t> curriculum_schedule(const std::vector<std::int64_t>& stages, std::int64_t epochs);

/// Critics live during a 0-based epoch under the mc schedule: one initial
/// plus one per completed interval.
std::int64_t mc_live_critics(std::int64_t epoch_index, std::int64_t interval);

/// Adam with per-parameter moment state.
class Adam {
  public:
    Adam(std::vector<ad::Var> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(const std::vector<Tensor>& grads);
    const std::vector<ad::Var>& params() const { return params_; }

  private:
    std::vector<ad::Var> params_;
    std::vector<Tensor> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

/// Test-time synthesis: replay variants draw buffer features and
/// reparameterize them; classic variants draw z ~ N(0, I). Months <= 100.
Cohort generate_cohort(const ModelBundle& bundle, const replay::FeatureBuffer& buffer, std::int64_t n_patients,
                       std::int64_t months, std::uint64_t seed);

/// Truncate a [T,K] feature sequence to `target` steps, tiling cyclically
/// when the stored sequence is shorter.
Tensor fit_feature_length(const Tensor& seq, std::int64_t target);

}  // namespace replaygan::train
