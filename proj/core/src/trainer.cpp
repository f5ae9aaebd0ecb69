#include "replaygan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>

#include "replaygan/csv.hpp"

namespace replaygan::train {

namespace {

namespace chrono = std::chrono;

double elapsed_ms(chrono::steady_clock::time_point from) {
    return chrono::duration<double, std::milli>(chrono::steady_clock::now() - from).count();
}

nets::GeneratorVariant generator_variant_for(Variant v) {
    return v == Variant::OursEot ? nets::GeneratorVariant::Eot : nets::GeneratorVariant::BiLstm;
}

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::WganGpBaseline: return "wgan_gp_baseline";
        case Variant::VaeWganGp: return "vae_wgan_gp";
        case Variant::OursBiLstm: return "ours_bilstm";
        case Variant::OursEot: return "ours_eot";
        case Variant::Mbd: return "mbd";
        case Variant::Mm: return "mm";
        case Variant::Mc: return "mc";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& s) {
    for (Variant v : {Variant::WganGpBaseline, Variant::VaeWganGp, Variant::OursBiLstm, Variant::OursEot, Variant::Mbd,
                      Variant::Mm, Variant::Mc})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown training variant: " + s);
}

bool variant_has_vae(Variant v) {
    return v == Variant::VaeWganGp || v == Variant::OursBiLstm || v == Variant::OursEot;
}

bool variant_has_buffer(Variant v) { return v == Variant::OursBiLstm || v == Variant::OursEot; }

std::vector<std::string> validate_train_config(const TrainConfig& config) {
    std::vector<std::string> out;
    if (config.epochs <= 0) out.push_back("epochs must be positive");
    if (config.batch_size <= 0) out.push_back("batch_size must be positive");
    if (config.lr <= 0.0) out.push_back("learning rate must be positive");
    if (config.n_critic <= 0) out.push_back("n_critic must be positive");
    if (config.lambda_gp < 0.0 || config.lambda_corr < 0.0 || config.lambda_kl < 0.0)
        out.push_back("loss weights must be nonnegative");
    if (config.buffer_capacity <= 0) out.push_back("buffer capacity must be positive");
    if (config.mc_critic_interval <= 0) out.push_back("mc critic interval must be positive");
    std::int64_t prev = 0;
    for (auto s : config.curriculum) {
        if (s % 10 != 0 || s < kMinRecordMonths || s > kMaxRecordMonths)
            out.push_back("curriculum stages must be multiples of 10 in [10, 100]");
        if (s < prev) out.push_back("curriculum stages must be nondecreasing");
        prev = s;
    }
    return out;
}

double TrainTrace::final_logged_l_corr() const {
    if (rows.empty()) return 0.0;
    const std::int64_t last_epoch = rows.back().epoch;
    double sum = 0.0;
    std::int64_t n = 0;
    for (const auto& r : rows) {
        if (r.epoch == last_epoch && r.phase == "generator") {
            sum += r.l_corr_logged;
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

nets::NamedParams ModelBundle::named_params() const {
    nets::NamedParams out = generator.named_params("generator");
    for (std::size_t i = 0; i < critics.size(); ++i) {
        auto c = critics[i].named_params("critic" + std::to_string(i));
        out.insert(out.end(), c.begin(), c.end());
    }
    if (has_vae) {
        auto e = encoder.named_params("vae.encoder");
        out.insert(out.end(), e.begin(), e.end());
        auto d = decoder.named_params("vae.decoder");
        out.insert(out.end(), d.begin(), d.end());
    }
    return out;
}

std::uint64_t ModelBundle::params_hash() const { return nets::params_hash(named_params()); }

ModelBundle apply_variant(const TrainConfig& config, const VariableSchema& schema, Rng& rng) {
    ModelBundle bundle;
    bundle.schema = schema;
    bundle.variant = config.variant;
    bundle.config = config;
    bundle.generator = nets::Generator::init(generator_variant_for(config.variant), schema, rng);
    bundle.critics.push_back(nets::Critic::init(schema, rng, config.variant == Variant::Mbd));
    bundle.has_vae = variant_has_vae(config.variant);
    if (bundle.has_vae) {
        bundle.encoder = nets::VaeEncoder::init(schema, bundle.critics[0].emb, rng);
        bundle.decoder = nets::VaeDecoder::init(schema, rng);
    }
    return bundle;
}

std::vector<std::int64_t> curriculum_schedule(const std::vector<std::int64_t>& stages, std::int64_t epochs) {
    if (stages.empty()) throw std::invalid_argument("curriculum_schedule: stages must be nonempty");
    const auto n = static_cast<std::int64_t>(stages.size());
    const std::int64_t base = epochs / n;
    const std::int64_t rem = epochs % n;
    std::vector<std::int64_t> caps;
    caps.reserve(static_cast<std::size_t>(epochs));
    for (std::int64_t s = 0; s < n; ++s) {
        const std::int64_t reps = base + (s < rem ? 1 : 0);
        for (std::int64_t i = 0; i < reps; ++i) caps.push_back(stages[static_cast<std::size_t>(s)]);
    }
    return caps;
}

Adam::Adam(std::vector<ad::Var> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.push_back(Tensor::zeros(p.value().shape()));
        v_.push_back(Tensor::zeros(p.value().shape()));
    }
}

void Adam::step(const std::vector<Tensor>& grads) {
    if (grads.size() != params_.size()) throw std::invalid_argument("Adam: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        Tensor& value = params_[p].node()->value;
        const Tensor& g = grads[p];
        for (std::int64_t i = 0; i < value.size(); ++i) {
            m_[p][i] = beta1_ * m_[p][i] + (1.0 - beta1_) * g[i];
            v_[p][i] = beta2_ * v_[p][i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m_[p][i] / bc1;
            const double vhat = v_[p][i] / bc2;
            value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::int64_t mc_live_critics(std::int64_t epoch_index, std::int64_t interval) {
    return 1 + epoch_index / interval;
}

Tensor fit_feature_length(const Tensor& seq, std::int64_t target) {
    if (seq.rank() != 2) throw std::invalid_argument("fit_feature_length: sequence must be [T,K]");
    const std::int64_t t = seq.dim(0), k = seq.dim(1);
    if (t == target) return seq;
    Tensor out({target, k});
    for (std::int64_t i = 0; i < target; ++i)
        for (std::int64_t j = 0; j < k; ++j) out.at2(i, j) = seq.at2(i % t, j);
    return out;
}

namespace {

struct BatchDraw {
    std::int64_t length = 0;
    std::vector<std::int64_t> indices;
};

/// Length-homogeneous batches: pick a length bucket proportional to its
/// record count, then draw records with replacement inside it.
class BatchSampler {
  public:
    BatchSampler(const std::vector<std::int64_t>& record_lengths, std::int64_t cap) {
        for (std::size_t i = 0; i < record_lengths.size(); ++i) {
            const std::int64_t eff = std::min(record_lengths[i], cap);
            buckets_[eff].push_back(static_cast<std::int64_t>(i));
        }
        for (const auto& [len, idx] : buckets_) {
            lengths_.push_back(len);
            weights_.push_back(static_cast<double>(idx.size()));
        }
    }

    BatchDraw draw(std::int64_t batch_size, Rng& rng) const {
        BatchDraw out;
        const std::size_t b = rng.categorical(weights_);
        out.length = lengths_[b];
        const auto& idx = buckets_.at(out.length);
        for (std::int64_t i = 0; i < batch_size; ++i)
            out.indices.push_back(idx[rng.uniform_index(static_cast<std::uint64_t>(idx.size()))]);
        return out;
    }

  private:
    std::map<std::int64_t, std::vector<std::int64_t>> buckets_;
    std::vector<std::int64_t> lengths_;
    std::vector<double> weights_;
};

Tensor assemble_batch(const std::vector<Tensor>& encoded, const BatchDraw& draw) {
    const std::int64_t b = static_cast<std::int64_t>(draw.indices.size());
    const std::int64_t w = encoded[0].dim(1);
    Tensor out({b, draw.length, w});
    for (std::int64_t i = 0; i < b; ++i) {
        const Tensor& rec = encoded[static_cast<std::size_t>(draw.indices[static_cast<std::size_t>(i)])];
        for (std::int64_t t = 0; t < draw.length; ++t)
            for (std::int64_t j = 0; j < w; ++j) out.at3(i, t, j) = rec.at2(t, j);
    }
    return out;
}

Tensor normal_tensor(Rng& rng, std::vector<std::int64_t> shape) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
    return t;
}

Tensor stack_entries(const std::vector<replay::BufferEntry>& entries, std::int64_t length, bool sigma) {
    const std::int64_t b = static_cast<std::int64_t>(entries.size());
    const std::int64_t k = entries[0].gamma.dim(1);
    Tensor out({b, length, k});
    for (std::int64_t i = 0; i < b; ++i) {
        Tensor fitted = fit_feature_length(sigma ? entries[static_cast<std::size_t>(i)].sigma
                                                 : entries[static_cast<std::size_t>(i)].gamma,
                                           length);
        for (std::int64_t t = 0; t < length; ++t)
            for (std::int64_t j = 0; j < k; ++j) out.at3(i, t, j) = fitted.at2(t, j);
    }
    return out;
}

std::vector<Tensor> grad_values(const ad::Var& loss, const std::vector<ad::Var>& params) {
    auto gs = ad::grad(loss, params);
    std::vector<Tensor> out;
    out.reserve(gs.size());
    for (auto& g : gs) out.push_back(g.value());
    return out;
}

std::vector<ad::Var> param_vars(const nets::NamedParams& named) {
    std::vector<ad::Var> out;
    out.reserve(named.size());
    for (const auto& [name, var] : named) out.push_back(var);
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Cohort& cohort, const VariableSchema& schema) {
    {
        auto problems = validate_train_config(config);
        if (!problems.empty()) throw std::invalid_argument("invalid TrainConfig: " + problems.front());
        if (cohort.records.empty()) throw std::invalid_argument("train: empty cohort");
    }

    Rng base(config.seed);
    Rng init_rng = base.substream("init");
    ModelBundle bundle = apply_variant(config, schema, init_rng);
    bundle.scaling = fit_scaling(cohort, schema);

    // records encoded once at full length; batches copy row ranges
    std::vector<Tensor> encoded;
    std::vector<std::int64_t> record_lengths;
    for (const auto& rec : cohort.records) {
        encoded.push_back(encode_record(rec, schema, bundle.scaling));
        record_lengths.push_back(rec.length());
    }

    const std::vector<std::int64_t> stages = config.curriculum.empty()
                                                 ? std::vector<std::int64_t>{kMaxRecordMonths}
                                                 : config.curriculum;
    const auto caps = curriculum_schedule(stages, config.epochs);

    replay::FeatureBuffer buffer(config.buffer_capacity, base.substream("buffer").raw_state());

    Adam adam_gen(param_vars(bundle.generator.named_params("g")), config.lr);
    std::vector<Adam> adam_critics;
    adam_critics.emplace_back(param_vars(bundle.critics[0].named_params("c")), config.lr);
    std::unique_ptr<Adam> adam_vae;
    if (bundle.has_vae) {
        auto vae_named = bundle.critics[0].emb.named_params("tied");
        auto enc = bundle.encoder.named_params("e");
        auto dec = bundle.decoder.named_params("d");
        vae_named.insert(vae_named.end(), enc.begin(), enc.end());
        vae_named.insert(vae_named.end(), dec.begin(), dec.end());
        adam_vae = std::make_unique<Adam>(param_vars(vae_named), config.lr);
    }

    const bool has_buffer = variant_has_buffer(config.variant);
    const std::int64_t n_records = cohort.size();
    const std::int64_t iters_per_epoch = (n_records + config.batch_size - 1) / config.batch_size;

    TrainTrace trace;
    std::int64_t iteration = 0;

    auto average_scores = [&bundle, &schema](const ad::Var& batch) {
        ad::Var acc = nets::criticize(bundle.critics[0], batch, schema);
        for (std::size_t i = 1; i < bundle.critics.size(); ++i)
            acc = ad::add(acc, nets::criticize(bundle.critics[i], batch, schema));
        return ad::mul_scalar(acc, 1.0 / static_cast<double>(bundle.critics.size()));
    };

    auto require_finite = [&trace](double v, const char* what) {
        if (!std::isfinite(v)) throw TrainingDiverged(std::string("training diverged: non-finite ") + what, trace);
    };

    // generator input for the adversarial phases, per variant
    auto draw_generator_input = [&](std::int64_t b, std::int64_t length, Rng& rng,
                                    const Tensor* real_batch) -> Tensor {
        if (has_buffer) {
            auto entries = buffer.sample(b, rng.next_u64());
            Tensor gamma = stack_entries(entries, length, false);
            Tensor sigma = stack_entries(entries, length, true);
            return replay::make_generator_input(gamma, sigma, replay::ReplayMode::Train, rng.next_u64());
        }
        if (config.variant == Variant::VaeWganGp && real_batch != nullptr) {
            auto latent = nets::vae_encode(bundle.encoder, ad::constant(*real_batch), schema);
            Tensor z = latent.gamma.value();
            const Tensor& sg = latent.sigma.value();
            for (std::int64_t i = 0; i < z.size(); ++i) z[i] += sg[i] * rng.normal();
            return z;
        }
        return normal_tensor(rng, {b, length, nets::kLatentDim});
    };

    for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.variant == Variant::Mc) {
            while (static_cast<std::int64_t>(bundle.critics.size()) <
                   mc_live_critics(epoch, config.mc_critic_interval)) {
                Rng crng = base.substream("mc_critic", bundle.critics.size());
                bundle.critics.push_back(nets::Critic::init(schema, crng, false));
                adam_critics.emplace_back(param_vars(bundle.critics.back().named_params("c")), config.lr);
            }
        }

        const std::int64_t cap = caps[static_cast<std::size_t>(epoch)];
        BatchSampler sampler(record_lengths, cap);

        // alignment target refreshed once per epoch over the stage view
        Tensor r_real;
        {
            EncodedBatch view;
            std::int64_t tmax = 0;
            for (auto l : record_lengths) tmax = std::max(tmax, std::min(l, cap));
            view.values = Tensor({n_records, tmax, schema.encoded_width()});
            for (std::int64_t i = 0; i < n_records; ++i) {
                const Tensor& rec = encoded[static_cast<std::size_t>(i)];
                const std::int64_t len = std::min(record_lengths[static_cast<std::size_t>(i)], cap);
                view.lengths.push_back(len);
                for (std::int64_t t = 0; t < tmax; ++t)
                    for (std::int64_t j = 0; j < schema.encoded_width(); ++j)
                        view.values.at3(i, t, j) = rec.at2(std::min(t, len - 1), j);
            }
            view.scaling = bundle.scaling;
            r_real = losses::pearson_matrix(view, schema).matrix;
        }

        for (std::int64_t it = 0; it < iters_per_epoch; ++it) {
            Rng iter_rng = base.substream("iter", static_cast<std::uint64_t>(iteration));

            // --- VAE phase -------------------------------------------------
            if (bundle.has_vae) {
                const auto t0 = chrono::steady_clock::now();
                Rng rng = iter_rng.substream("vae");
                BatchDraw draw = sampler.draw(config.batch_size, rng);
                Tensor x = assemble_batch(encoded, draw);
                ad::Var xv = ad::constant(x);
                auto latent = nets::vae_encode(bundle.encoder, xv, schema);
                Tensor noise = normal_tensor(rng, latent.gamma.value().shape());
                ad::Var xi = ad::add(latent.gamma, ad::mul(latent.sigma, ad::constant(noise)));
                ad::Var xhat = nets::vae_decode(bundle.decoder, xi, schema);
                auto terms = losses::vae_loss(latent.gamma, latent.sigma, xv, xhat, config.lambda_kl, schema);
                require_finite(terms.total.value().item(), "VAE loss");
                adam_vae->step(grad_values(terms.total, adam_vae->params()));
                if (has_buffer)
                    buffer.append_batch(latent.gamma.value(), latent.sigma.value(),
                                        std::vector<std::int64_t>(static_cast<std::size_t>(draw.indices.size()),
                                                                  draw.length));
                TraceRow row;
                row.epoch = epoch;
                row.iteration = iteration;
                row.phase = "vae";
                auto b = terms.breakdown();
                row.total = b.total;
                row.components = b.components;
                row.wall_ms = elapsed_ms(t0);
                trace.rows.push_back(std::move(row));
            }

            // --- critic phase ----------------------------------------------
            for (std::int64_t tc = 0; tc < config.n_critic; ++tc) {
                const auto t0 = chrono::steady_clock::now();
                Rng rng = iter_rng.substream("critic", static_cast<std::uint64_t>(tc));
                BatchDraw draw = sampler.draw(config.batch_size, rng);
                Tensor x_real = assemble_batch(encoded, draw);
                Tensor z = draw_generator_input(static_cast<std::int64_t>(draw.indices.size()), draw.length, rng,
                                                &x_real);
                ad::Var x_syn = ad::detach(nets::generate_forward(bundle.generator, ad::constant(z), schema));
                std::vector<double> eps;
                for (std::size_t i = 0; i < draw.indices.size(); ++i) eps.push_back(rng.uniform());

                ad::Var total_acc;
                losses::LossBreakdown bd_acc;
                for (std::size_t ci = 0; ci < bundle.critics.size(); ++ci) {
                    const auto& critic = bundle.critics[ci];
                    auto critic_fn = [&critic, &schema](const ad::Var& v) {
                        return nets::criticize(critic, v, schema);
                    };
                    auto terms =
                        losses::critic_loss(critic_fn, ad::constant(x_real), x_syn, eps, config.lambda_gp);
                    total_acc = ci == 0 ? terms.total : ad::add(total_acc, terms.total);
                    auto b = terms.breakdown();
                    for (const auto& [k, v] : b.components) bd_acc.components[k] += v;
                }
                const double n_crit = static_cast<double>(bundle.critics.size());
                total_acc = ad::mul_scalar(total_acc, 1.0 / n_crit);
                for (auto& [k, v] : bd_acc.components) v /= n_crit;
                require_finite(total_acc.value().item(), "critic loss");

                for (std::size_t ci = 0; ci < bundle.critics.size(); ++ci)
                    adam_critics[ci].step(grad_values(total_acc, adam_critics[ci].params()));

                TraceRow row;
                row.epoch = epoch;
                row.iteration = iteration;
                row.phase = "critic";
                row.phase_step = tc;
                row.total = total_acc.value().item();
                row.components = bd_acc.components;
                row.wall_ms = elapsed_ms(t0);
                trace.rows.push_back(std::move(row));
            }

            // --- generator phase -------------------------------------------
            {
                const auto t0 = chrono::steady_clock::now();
                Rng rng = iter_rng.substream("generator");
                BatchDraw draw = sampler.draw(config.batch_size, rng);
                Tensor x_real = assemble_batch(encoded, draw);  // mm feature target / vae_wgan_gp source
                Tensor z = draw_generator_input(static_cast<std::int64_t>(draw.indices.size()), draw.length, rng,
                                                &x_real);
                ad::Var x_syn = nets::generate_forward(bundle.generator, ad::constant(z), schema);
                ad::Var r_syn;
                if (config.use_alignment) r_syn = losses::pearson_matrix_var(x_syn, schema);
                auto terms = losses::generator_loss(average_scores, x_syn, r_syn, r_real, config.lambda_corr);

                if (config.variant == Variant::Mm) {
                    ad::Var f_real =
                        nets::critic_embedding_features(bundle.critics[0], ad::constant(x_real), schema);
                    ad::Var f_syn = nets::critic_embedding_features(bundle.critics[0], x_syn, schema);
                    ad::Var fm = losses::feature_matching_term(f_real, f_syn);
                    terms.components.emplace_back("feature_matching", fm);
                    terms.weights["feature_matching"] = 1.0;
                    terms.total = ad::add(terms.total, fm);
                }
                require_finite(terms.total.value().item(), "generator loss");
                adam_gen.step(grad_values(terms.total, adam_gen.params()));

                // convergence metric, logged every iteration whether or not
                // the alignment term is in the objective
                EncodedBatch syn_view;
                syn_view.values = x_syn.value();
                syn_view.lengths.assign(static_cast<std::size_t>(x_syn.value().dim(0)), draw.length);
                syn_view.scaling = bundle.scaling;
                Tensor r_syn_metric = losses::pearson_matrix(syn_view, schema).matrix;
                double corr = 0.0;
                for (std::int64_t i = 0; i < r_syn_metric.dim(0); ++i)
                    for (std::int64_t j = 0; j < i; ++j)
                        corr += std::abs(r_syn_metric.at2(i, j) - r_real.at2(i, j));

                TraceRow row;
                row.epoch = epoch;
                row.iteration = iteration;
                row.phase = "generator";
                auto b = terms.breakdown();
                row.total = b.total;
                row.components = b.components;
                row.l_corr_logged = std::log(std::max(corr, 1e-12));
                row.wall_ms = elapsed_ms(t0);
                trace.rows.push_back(std::move(row));
            }

            ++iteration;
        }
    }

    return TrainResult{std::move(bundle), std::move(buffer), std::move(trace)};
}

Cohort generate_cohort(const ModelBundle& bundle, const replay::FeatureBuffer& buffer, std::int64_t n_patients,
                       std::int64_t months, std::uint64_t seed) {
    if (n_patients <= 0 || months <= 0) throw std::invalid_argument("generate_cohort: positive sizes required");
    if (months > kMaxRecordMonths)
        throw std::invalid_argument("generate_cohort: months exceeds the maximum record length");

    Rng base(seed);
    const bool replayed = variant_has_buffer(bundle.variant);
    if (replayed && buffer.empty()) throw std::logic_error("generate_cohort: replay variant requires a nonempty buffer");

    Cohort out;
    const std::int64_t chunk = 64;
    for (std::int64_t start = 0; start < n_patients; start += chunk) {
        const std::int64_t b = std::min(chunk, n_patients - start);
        Rng rng = base.substream("chunk", static_cast<std::uint64_t>(start));
        Tensor z;
        if (replayed) {
            auto entries = buffer.sample(b, rng.next_u64());
            Tensor gamma = stack_entries(entries, months, false);
            Tensor sigma = stack_entries(entries, months, true);
            z = replay::make_generator_input(gamma, sigma, replay::ReplayMode::Test, rng.next_u64());
        } else {
            z = normal_tensor(rng, {b, months, nets::kLatentDim});
        }
        ad::Var values = nets::generate_forward(bundle.generator, ad::constant(z), bundle.schema);
        EncodedBatch batch;
        batch.values = values.value();
        batch.lengths.assign(static_cast<std::size_t>(b), months);
        batch.scaling = bundle.scaling;
        Cohort decoded = decode_cohort(batch, bundle.schema);
        for (std::int64_t i = 0; i < decoded.size(); ++i) {
            decoded.records[static_cast<std::size_t>(i)].patient_id = "synth-" + std::to_string(start + i);
            out.records.push_back(std::move(decoded.records[static_cast<std::size_t>(i)]));
        }
    }

    // demographics are constant within a patient; decode the quasi-
    // identifier variables by per-record majority vote (ties break low)
    for (const auto& qi : bundle.schema.quasi_identifiers) {
        const auto idx = bundle.schema.index_of(qi);
        if (!idx) continue;
        const auto& spec = bundle.schema.variables[static_cast<std::size_t>(*idx)];
        for (auto& rec : out.records) {
            std::vector<std::int64_t> votes(static_cast<std::size_t>(spec.level_count()), 0);
            for (const auto& row : rec.rows) ++votes[static_cast<std::size_t>(row[static_cast<std::size_t>(*idx)])];
            std::int64_t best = 0;
            for (std::int64_t l = 1; l < spec.level_count(); ++l)
                if (votes[static_cast<std::size_t>(l)] > votes[static_cast<std::size_t>(best)]) best = l;
            for (auto& row : rec.rows) row[static_cast<std::size_t>(*idx)] = static_cast<double>(best);
        }
    }
    return out;
}

}  // namespace replaygan::train
