#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "replaygan/nets.hpp"

using namespace replaygan;
namespace ad = replaygan::ad;
using testsupport::fd_gradient;
using testsupport::max_rel_error;
using testsupport::random_tensor;

namespace {

VariableSchema tiny_schema() {
    VariableSchema s;
    s.variables = {VariableSpec::numeric("n", "u", false), VariableSpec::binary("b", {"x", "y"})};
    return s;  // encoded width 3, embed width 3
}

Tensor random_encoded(Rng& rng, const VariableSchema& schema, std::int64_t b, std::int64_t t) {
    Tensor out({b, t, schema.encoded_width()});
    for (std::int64_t i = 0; i < b; ++i) {
        for (std::int64_t j = 0; j < t; ++j) {
            std::int64_t off = 0;
            for (const auto& spec : schema.variables) {
                if (spec.is_numeric()) {
                    out.at3(i, j, off) = rng.uniform();
                    off += 1;
                } else {
                    // random simplex by normalizing uniforms
                    double total = 0.0;
                    std::vector<double> u;
                    for (std::int64_t l = 0; l < spec.level_count(); ++l) {
                        u.push_back(rng.uniform(0.05, 1.0));
                        total += u.back();
                    }
                    for (std::int64_t l = 0; l < spec.level_count(); ++l) out.at3(i, j, off + l) = u[l] / total;
                    off += spec.level_count();
                }
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("soft_embed looks up one-hot rows exactly and is linear in the simplex") {
    VariableSchema s;
    s.variables = {VariableSpec::binary("g", {"a", "b"})};
    Rng rng(1);
    auto emb = nets::SoftEmbedding::init(s, rng);
    const Tensor& table = emb.tables[0].value();

    Tensor onehot({1, 1, 2}, {1.0, 0.0});
    auto out = nets::soft_embed(ad::constant(onehot), emb, s);
    CHECK(out.value().at3(0, 0, 0) == table.at2(0, 0));
    CHECK(out.value().at3(0, 0, 1) == table.at2(0, 1));

    Tensor soft({1, 1, 2}, {0.5, 0.5});
    auto out2 = nets::soft_embed(ad::constant(soft), emb, s);
    CHECK(out2.value().at3(0, 0, 0) == doctest::Approx(0.5 * table.at2(0, 0) + 0.5 * table.at2(1, 0)).epsilon(1e-12));
    CHECK(out2.value().at3(0, 0, 1) == doctest::Approx(0.5 * table.at2(0, 1) + 0.5 * table.at2(1, 1)).epsilon(1e-12));
}

TEST_CASE("Table 1 embedding width is 33 (3 numerics + 5x2 + 5x4)") {
    auto schema = art_hiv_schema();
    Rng rng(2);
    auto emb = nets::SoftEmbedding::init(schema, rng);
    Tensor batch = random_encoded(rng, schema, 2, 3);
    auto out = nets::soft_embed(ad::constant(batch), emb, schema);
    CHECK(out.value().shape() == std::vector<std::int64_t>{2, 3, 33});
}

TEST_CASE("soft_embed rejects width mismatch") {
    auto schema = art_hiv_schema();
    Rng rng(3);
    auto emb = nets::SoftEmbedding::init(schema, rng);
    CHECK_THROWS(nets::soft_embed(ad::constant(Tensor({1, 1, 5})), emb, schema));
}

TEST_CASE("generator outputs valid simplices deterministically") {
    auto schema = art_hiv_schema();
    Rng rng(4);
    auto gen = nets::Generator::init(nets::GeneratorVariant::BiLstm, schema, rng);
    Rng zrng(5);
    Tensor z = random_tensor(zrng, {2, 10, nets::kLatentDim});

    auto out = nets::generate_forward(gen, ad::constant(z), schema);
    // encoded width for Table 1 (generator emits decodable data, so the
    // schema's one-hot width governs, not the embedding width)
    CHECK(out.value().shape() == std::vector<std::int64_t>{2, 10, 37});

    for (std::int64_t b = 0; b < 2; ++b) {
        for (std::int64_t t = 0; t < 10; ++t) {
            std::int64_t off = 0;
            for (const auto& spec : schema.variables) {
                if (spec.is_numeric()) {
                    CHECK(out.value().at3(b, t, off) > 0.0);
                    CHECK(out.value().at3(b, t, off) < 1.0);
                    off += 1;
                } else {
                    double sum = 0.0;
                    for (std::int64_t l = 0; l < spec.level_count(); ++l) sum += out.value().at3(b, t, off + l);
                    CHECK(std::abs(sum - 1.0) < 1e-6);
                    off += spec.level_count();
                }
            }
        }
    }

    auto out2 = nets::generate_forward(gen, ad::constant(z), schema);
    for (std::int64_t i = 0; i < out.value().size(); ++i) CHECK(out.value()[i] == out2.value()[i]);
}

TEST_CASE("EOT generator rejects sequences beyond the positional table") {
    auto schema = art_hiv_schema();
    Rng rng(6);
    auto gen = nets::Generator::init(nets::GeneratorVariant::Eot, schema, rng);
    Tensor z({1, 101, nets::kLatentDim});
    CHECK_THROWS_WITH_AS(nets::generate_forward(gen, ad::constant(z), schema), doctest::Contains("positional"),
                         std::invalid_argument);
}

TEST_CASE("EOT generator emits simplices too") {
    auto schema = art_hiv_schema();
    Rng rng(7);
    auto gen = nets::Generator::init(nets::GeneratorVariant::Eot, schema, rng);
    Rng zrng(8);
    Tensor z = random_tensor(zrng, {2, 6, nets::kLatentDim});
    auto out = nets::generate_forward(gen, ad::constant(z), schema);
    CHECK(out.value().shape() == std::vector<std::int64_t>{2, 6, 37});
    std::int64_t off = 3 + 2;  // first categorical block (Ethnic)
    for (std::int64_t b = 0; b < 2; ++b) {
        double s = 0.0;
        for (std::int64_t l = 0; l < 4; ++l) s += out.value().at3(b, 0, off + l);
        CHECK(std::abs(s - 1.0) < 1e-6);
    }
}

TEST_CASE("critic with zero output layer scores zero") {
    auto schema = art_hiv_schema();
    Rng rng(9);
    auto critic = nets::Critic::init(schema, rng);
    critic.out.w.node()->value = Tensor::zeros(critic.out.w.value().shape());
    critic.out.b.node()->value = Tensor::zeros(critic.out.b.value().shape());
    Tensor batch = random_encoded(rng, schema, 3, 4);
    auto scores = nets::criticize(critic, ad::constant(batch), schema);
    for (std::int64_t i = 0; i < 3; ++i) CHECK(scores.value()[i] == 0.0);
}

TEST_CASE("critic scores stay finite across 1000 random draws") {
    auto schema = art_hiv_schema();
    Rng rng(10);
    auto critic = nets::Critic::init(schema, rng);
    Tensor batch = random_encoded(rng, schema, 1000, 3);
    auto scores = nets::criticize(critic, ad::constant(batch), schema);
    CHECK(scores.value().size() == 1000);
    CHECK(scores.value().all_finite());
}

TEST_CASE("permuting the batch permutes scores identically") {
    auto schema = art_hiv_schema();
    Rng rng(11);
    auto critic = nets::Critic::init(schema, rng);
    Tensor batch = random_encoded(rng, schema, 4, 5);
    auto scores = nets::criticize(critic, ad::constant(batch), schema);

    // reverse the batch
    Tensor rev(batch.shape());
    for (std::int64_t b = 0; b < 4; ++b)
        for (std::int64_t t = 0; t < 5; ++t)
            for (std::int64_t w = 0; w < batch.dim(2); ++w) rev.at3(b, t, w) = batch.at3(3 - b, t, w);
    auto scores_rev = nets::criticize(critic, ad::constant(rev), schema);
    for (std::int64_t i = 0; i < 4; ++i)
        CHECK(scores.value()[i] == doctest::Approx(scores_rev.value()[3 - i]).epsilon(1e-12));
}

TEST_CASE("vae_encode emits strictly positive time-resolved sigmas") {
    auto schema = art_hiv_schema();
    Rng rng(12);
    auto critic = nets::Critic::init(schema, rng);
    auto enc = nets::VaeEncoder::init(schema, critic.emb, rng);
    Tensor batch = random_encoded(rng, schema, 4, 10);
    auto latent = nets::vae_encode(enc, ad::constant(batch), schema);
    CHECK(latent.gamma.value().shape() == std::vector<std::int64_t>{4, 10, 128});
    CHECK(latent.sigma.value().shape() == std::vector<std::int64_t>{4, 10, 128});
    for (std::int64_t i = 0; i < latent.sigma.value().size(); ++i) CHECK(latent.sigma.value()[i] > 0.0);
}

TEST_CASE("weight tying: a write through the critic is visible to the encoder") {
    auto schema = art_hiv_schema();
    Rng rng(13);
    auto critic = nets::Critic::init(schema, rng);
    auto enc = nets::VaeEncoder::init(schema, critic.emb, rng);
    Tensor batch = random_encoded(rng, schema, 2, 3);

    auto before = nets::vae_encode(enc, ad::constant(batch), schema).gamma.value();
    critic.emb.tables[0].node()->value[0] += 0.75;  // poke the shared table
    auto after = nets::vae_encode(enc, ad::constant(batch), schema).gamma.value();

    CHECK(enc.tied_emb.tables[0].node() == critic.emb.tables[0].node());  // same storage
    bool changed = false;
    for (std::int64_t i = 0; i < before.size(); ++i)
        if (before[i] != after[i]) changed = true;
    CHECK(changed);
}

TEST_CASE("vae_decode produces simplices and the encoded width") {
    auto schema = art_hiv_schema();
    Rng rng(14);
    auto dec = nets::VaeDecoder::init(schema, rng);
    Tensor xi = random_tensor(rng, {2, 10, 128});
    auto out = nets::vae_decode(dec, ad::constant(xi), schema);
    CHECK(out.value().shape() == std::vector<std::int64_t>{2, 10, 37});
    std::int64_t off = 3;  // Gender block
    for (std::int64_t b = 0; b < 2; ++b) {
        double s = out.value().at3(b, 3, off) + out.value().at3(b, 3, off + 1);
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
    auto out2 = nets::vae_decode(dec, ad::constant(xi), schema);
    for (std::int64_t i = 0; i < out.value().size(); ++i) CHECK(out.value()[i] == out2.value()[i]);
}

TEST_CASE("criticize input gradients match finite differences on a tiny schema") {
    auto schema = tiny_schema();
    Rng rng(15);
    auto critic = nets::Critic::init(schema, rng);
    Tensor batch = random_encoded(rng, schema, 2, 3);

    ad::Var x = ad::param(batch);
    auto scores = nets::criticize(critic, x, schema);
    Rng wr(16);
    Tensor wt = random_tensor(wr, {2}, 0.3, 1.0);
    ad::Var loss = ad::sum_all(ad::mul(scores, ad::constant(wt)));
    auto g = ad::grad(loss, {x});

    auto fn = [&](const std::vector<Tensor>& ins) {
        auto s = nets::criticize(critic, ad::constant(ins[0]), schema);
        return s.value()[0] * wt[0] + s.value()[1] * wt[1];
    };
    Tensor numeric = fd_gradient(fn, {batch}, 0);
    CHECK(max_rel_error(g[0].value(), numeric, 1e-4) < 1e-4);
}

TEST_CASE("vae_decode input gradients match finite differences on a tiny schema") {
    auto schema = tiny_schema();
    Rng rng(17);
    auto dec = nets::VaeDecoder::init(schema, rng);
    Tensor xi = random_tensor(rng, {1, 2, 128});

    ad::Var x = ad::param(xi);
    auto out = nets::vae_decode(dec, x, schema);
    Rng wr(18);
    Tensor wt = random_tensor(wr, out.value().shape(), 0.2, 1.0);
    ad::Var loss = ad::sum_all(ad::mul(out, ad::constant(wt)));
    auto g = ad::grad(loss, {x});

    auto fn = [&](const std::vector<Tensor>& ins) {
        auto o = nets::vae_decode(dec, ad::constant(ins[0]), schema);
        double s = 0.0;
        for (std::int64_t i = 0; i < o.value().size(); ++i) s += o.value()[i] * wt[i];
        return s;
    };
    Tensor numeric = fd_gradient(fn, {xi}, 0);
    CHECK(max_rel_error(g[0].value(), numeric, 1e-4) < 1e-4);
}

TEST_CASE("attention works over the time axis only") {
    Rng rng(19);
    const std::int64_t dim = 16, heads = 4;
    auto q = nets::Linear::init(dim, dim, rng);
    auto k = nets::Linear::init(dim, dim, rng);
    auto v = nets::Linear::init(dim, dim, rng);
    auto o = nets::Linear::init(dim, dim, rng);
    Tensor x = random_tensor(rng, {2, 5, dim});

    SUBCASE("time-permutation equivariance") {
        auto base = nets::multi_head_attention(ad::constant(x), q, k, v, o, heads).value();
        // swap timesteps 1 and 3
        Tensor perm = x;
        for (std::int64_t b = 0; b < 2; ++b)
            for (std::int64_t c = 0; c < dim; ++c) std::swap(perm.at3(b, 1, c), perm.at3(b, 3, c));
        auto swapped = nets::multi_head_attention(ad::constant(perm), q, k, v, o, heads).value();
        for (std::int64_t b = 0; b < 2; ++b)
            for (std::int64_t c = 0; c < dim; ++c) {
                CHECK(swapped.at3(b, 1, c) == doctest::Approx(base.at3(b, 3, c)).epsilon(1e-9));
                CHECK(swapped.at3(b, 3, c) == doctest::Approx(base.at3(b, 1, c)).epsilon(1e-9));
            }
    }

    SUBCASE("consistent feature permutation of input and projection rows is a no-op") {
        auto base = nets::multi_head_attention(ad::constant(x), q, k, v, o, heads).value();
        std::vector<std::int64_t> perm(dim);
        for (std::int64_t i = 0; i < dim; ++i) perm[static_cast<std::size_t>(i)] = (i + 7) % dim;

        Tensor xp(x.shape());
        for (std::int64_t b = 0; b < 2; ++b)
            for (std::int64_t t = 0; t < 5; ++t)
                for (std::int64_t c = 0; c < dim; ++c) xp.at3(b, t, c) = x.at3(b, t, perm[static_cast<std::size_t>(c)]);

        auto permute_rows = [&](const nets::Linear& l) {
            nets::Linear out = l;
            Tensor w(l.w.value().shape());
            for (std::int64_t r = 0; r < dim; ++r)
                for (std::int64_t c = 0; c < dim; ++c) w.at2(r, c) = l.w.value().at2(perm[static_cast<std::size_t>(r)], c);
            out.w = ad::constant(std::move(w));
            return out;
        };
        auto out = nets::multi_head_attention(ad::constant(xp), permute_rows(q), permute_rows(k), permute_rows(v), o,
                                              heads)
                       .value();
        for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(base[i]).epsilon(1e-9));
    }
}

TEST_CASE("mbd insert widens the extraction input and keeps shapes consistent") {
    auto schema = art_hiv_schema();
    Rng rng(20);
    auto critic = nets::Critic::init(schema, rng, /*use_mbd=*/true);
    CHECK(critic.lin1.w.value().shape()[0] == schema.embed_width() + 3);
    Tensor batch = random_encoded(rng, schema, 5, 4);
    auto scores = nets::criticize(critic, ad::constant(batch), schema);
    CHECK(scores.value().size() == 5);
    CHECK(scores.value().all_finite());
}
