#include <benchmark/benchmark.h>

#include "replaygan/cohortsim.hpp"
#include "replaygan/correlations.hpp"
#include "replaygan/fidelity.hpp"
#include "replaygan/kmeans.hpp"
#include "replaygan/losses.hpp"
#include "replaygan/nets.hpp"
#include "replaygan/rng.hpp"
#include "replaygan/trainer.hpp"

using namespace replaygan;

namespace {

Tensor random_encoded(Rng& rng, const VariableSchema& schema, std::int64_t b, std::int64_t t) {
    Tensor out({b, t, schema.encoded_width()});
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t j = 0; j < t; ++j) {
            std::int64_t off = 0;
            for (const auto& spec : schema.variables) {
                if (spec.is_numeric()) {
                    out.at3(i, j, off++) = rng.uniform();
                } else {
                    out.at3(i, j, off + static_cast<std::int64_t>(rng.uniform_index(
                                     static_cast<std::uint64_t>(spec.level_count())))) = 1.0;
                    off += spec.level_count();
                }
            }
        }
    return out;
}

void bm_critic_forward(benchmark::State& state) {
    auto schema = art_hiv_schema();
    Rng rng(1);
    auto critic = nets::Critic::init(schema, rng);
    Tensor batch = random_encoded(rng, schema, 32, 20);
    for (auto _ : state) {
        auto scores = nets::criticize(critic, ad::constant(batch), schema);
        benchmark::DoNotOptimize(scores.value().data());
    }
}
BENCHMARK(bm_critic_forward)->Unit(benchmark::kMillisecond);

void bm_critic_loss_step(benchmark::State& state) {
    auto schema = art_hiv_schema();
    Rng rng(2);
    auto critic = nets::Critic::init(schema, rng);
    Tensor x_real = random_encoded(rng, schema, 32, 20);
    Tensor x_syn = random_encoded(rng, schema, 32, 20);
    std::vector<double> eps;
    for (int i = 0; i < 32; ++i) eps.push_back(rng.uniform());
    auto params = critic.named_params("c");
    std::vector<ad::Var> wrt;
    for (auto& [n, v] : params) wrt.push_back(v);
    auto fn = [&](const ad::Var& v) { return nets::criticize(critic, v, schema); };
    for (auto _ : state) {
        auto terms = losses::critic_loss(fn, ad::constant(x_real), ad::constant(x_syn), eps, 10.0);
        auto grads = ad::grad(terms.total, wrt);
        benchmark::DoNotOptimize(grads.data());
    }
}
BENCHMARK(bm_critic_loss_step)->Unit(benchmark::kMillisecond);

void bm_generator_forward_eot(benchmark::State& state) {
    auto schema = art_hiv_schema();
    Rng rng(3);
    auto gen = nets::Generator::init(nets::GeneratorVariant::Eot, schema, rng);
    Tensor z({32, 20, nets::kLatentDim});
    for (std::int64_t i = 0; i < z.size(); ++i) z[i] = rng.normal();
    for (auto _ : state) {
        auto out = nets::generate_forward(gen, ad::constant(z), schema);
        benchmark::DoNotOptimize(out.value().data());
    }
}
BENCHMARK(bm_generator_forward_eot)->Unit(benchmark::kMillisecond);

void bm_kendall_matrix(benchmark::State& state) {
    auto schema = art_hiv_schema();
    Cohort cohort = sample_cohort(default_surrogate_config(100, 10, 20, 5), schema);
    auto rows = corr::cohort_rows(cohort, schema);
    for (auto _ : state) {
        auto m = corr::kendall_tau_matrix(rows);
        benchmark::DoNotOptimize(m.matrix.data());
    }
}
BENCHMARK(bm_kendall_matrix)->Unit(benchmark::kMillisecond);

void bm_kmeans(benchmark::State& state) {
    Rng rng(7);
    Tensor pts({5000, 37});
    for (std::int64_t i = 0; i < pts.size(); ++i) pts[i] = rng.uniform();
    for (auto _ : state) {
        auto r = kmeans(pts, 20, 11);
        benchmark::DoNotOptimize(r.labels.data());
    }
}
BENCHMARK(bm_kmeans)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
