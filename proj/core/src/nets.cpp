#include "replaygan/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace replaygan::nets {

namespace {

using ad::Var;

Tensor xavier(std::int64_t in, std::int64_t out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor t({in, out});
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

void append(NamedParams& into, const NamedParams& more) {
    into.insert(into.end(), more.begin(), more.end());
}

}  // namespace

// ------------------------------------------------------------- soft embedding

SoftEmbedding SoftEmbedding::init(const VariableSchema& schema, Rng& rng) {
    SoftEmbedding emb;
    for (const auto& spec : schema.variables) {
        if (spec.is_numeric()) continue;
        Tensor table({spec.level_count(), spec.effective_embed_dim()});
        for (std::int64_t i = 0; i < table.size(); ++i) table[i] = rng.normal(0.0, 0.5);
        emb.tables.push_back(ad::param(std::move(table)));
    }
    return emb;
}

NamedParams SoftEmbedding::named_params(const std::string& prefix) const {
    NamedParams out;
    for (std::size_t i = 0; i < tables.size(); ++i) out.emplace_back(prefix + ".table" + std::to_string(i), tables[i]);
    return out;
}

Var soft_embed(const Var& batch, const SoftEmbedding& emb, const VariableSchema& schema) {
    const auto& sh = batch.value().shape();
    if (sh.size() != 3 || sh[2] != schema.encoded_width())
        throw std::invalid_argument("soft_embed: batch width does not match schema encoded width");
    const std::int64_t b = sh[0], t = sh[1];

    std::vector<Var> parts;
    std::int64_t off = 0;
    std::size_t table_idx = 0;
    for (const auto& spec : schema.variables) {
        if (spec.is_numeric()) {
            parts.push_back(ad::slice_last(batch, off, 1));
            off += 1;
        } else {
            Var block = ad::slice_last(batch, off, spec.level_count());
            Var flat = ad::reshape(block, {b * t, spec.level_count()});
            Var looked = ad::matmul(flat, emb.tables[table_idx]);
            parts.push_back(ad::reshape(looked, {b, t, spec.effective_embed_dim()}));
            off += spec.level_count();
            ++table_idx;
        }
    }
    return ad::concat_last(parts);
}

// --------------------------------------------------------------------- layers

Linear Linear::init(std::int64_t in, std::int64_t out, Rng& rng) {
    Linear l;
    l.w = ad::param(xavier(in, out, rng));
    l.b = ad::param(Tensor::zeros({out}));
    return l;
}

Var Linear::apply(const Var& x) const {
    const auto& sh = x.value().shape();
    const std::int64_t in = w.value().shape()[0];
    const std::int64_t out = w.value().shape()[1];
    if (sh.back() != in) throw std::invalid_argument("Linear: input width mismatch");
    const std::int64_t rows = x.value().size() / in;
    Var flat = ad::reshape(x, {rows, in});
    Var y = ad::add_rowwise(ad::matmul(flat, w), b);
    std::vector<std::int64_t> oshape(sh.begin(), sh.end() - 1);
    oshape.push_back(out);
    return ad::reshape(y, oshape);
}

NamedParams Linear::named_params(const std::string& prefix) const {
    return {{prefix + ".w", w}, {prefix + ".b", b}};
}

Lstm Lstm::init(std::int64_t in, std::int64_t hidden, Rng& rng) {
    Lstm l;
    l.wx = ad::param(xavier(in, 4 * hidden, rng));
    l.wh = ad::param(xavier(hidden, 4 * hidden, rng));
    Tensor bias = Tensor::zeros({4 * hidden});
    for (std::int64_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;  // forget gate starts open
    l.b = ad::param(std::move(bias));
    return l;
}

Var Lstm::apply(const Var& x, bool reversed) const {
    const auto& sh = x.value().shape();
    if (sh.size() != 3) throw std::invalid_argument("Lstm: input must be [B,T,in]");
    const std::int64_t b = sh[0], t_len = sh[1];
    const std::int64_t hidden = wh.value().shape()[0];

    Var h = ad::constant(Tensor::zeros({b, hidden}));
    Var c = ad::constant(Tensor::zeros({b, hidden}));
    std::vector<Var> outputs(static_cast<std::size_t>(t_len));
    for (std::int64_t step = 0; step < t_len; ++step) {
        const std::int64_t t = reversed ? t_len - 1 - step : step;
        Var xt = ad::reshape(ad::slice_axis1(x, t, 1), {b, sh[2]});
        Var gates = ad::add_rowwise(ad::add(ad::matmul(xt, wx), ad::matmul(h, wh)), this->b);
        Var i_g = ad::sigmoid(ad::slice_last(gates, 0, hidden));
        Var f_g = ad::sigmoid(ad::slice_last(gates, hidden, hidden));
        Var g_g = ad::tanh_v(ad::slice_last(gates, 2 * hidden, hidden));
        Var o_g = ad::sigmoid(ad::slice_last(gates, 3 * hidden, hidden));
        c = ad::add(ad::mul(f_g, c), ad::mul(i_g, g_g));
        h = ad::mul(o_g, ad::tanh_v(c));
        outputs[static_cast<std::size_t>(t)] = ad::reshape(h, {b, 1, hidden});
    }
    return ad::concat_axis1(outputs);
}

NamedParams Lstm::named_params(const std::string& prefix) const {
    return {{prefix + ".wx", wx}, {prefix + ".wh", wh}, {prefix + ".b", b}};
}

BiLstm BiLstm::init(std::int64_t in, std::int64_t hidden, Rng& rng) {
    BiLstm r;
    r.fwd = Lstm::init(in, hidden, rng);
    r.bwd = Lstm::init(in, hidden, rng);
    r.proj = Linear::init(2 * hidden, hidden, rng);
    return r;
}

Var BiLstm::apply(const Var& x) const {
    Var f = fwd.apply(x, false);
    Var b = bwd.apply(x, true);
    return proj.apply(ad::concat_last({f, b}));
}

NamedParams BiLstm::named_params(const std::string& prefix) const {
    NamedParams out = fwd.named_params(prefix + ".fwd");
    append(out, bwd.named_params(prefix + ".bwd"));
    append(out, proj.named_params(prefix + ".proj"));
    return out;
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias) {
    const std::int64_t k = x.value().shape().back();
    Var mu = ad::mean_last(x);
    Var centered = ad::sub(x, ad::expand_last(mu, k));
    Var var = ad::mean_last(ad::square(centered));
    Var inv = ad::reciprocal(ad::sqrt_v(ad::add_scalar(var, 1e-5)));
    Var normed = ad::mul(centered, ad::expand_last(inv, k));
    return ad::add_rowwise(ad::mul_rowwise(normed, gain), bias);
}

Var multi_head_attention(const Var& x, const Linear& q, const Linear& k, const Linear& v, const Linear& o,
                         std::int64_t heads) {
    const auto& sh = x.value().shape();
    const std::int64_t dim = sh[2];
    if (dim % heads != 0) throw std::invalid_argument("attention: dim not divisible by heads");
    const std::int64_t head_dim = dim / heads;
    Var qs = q.apply(x), ks = k.apply(x), vs = v.apply(x);
    std::vector<Var> outs;
    for (std::int64_t h = 0; h < heads; ++h) {
        Var qh = ad::slice_last(qs, h * head_dim, head_dim);
        Var kh = ad::slice_last(ks, h * head_dim, head_dim);
        Var vh = ad::slice_last(vs, h * head_dim, head_dim);
        Var scores = ad::mul_scalar(ad::bmm(qh, kh, false, true), 1.0 / std::sqrt(static_cast<double>(head_dim)));
        Var attn = ad::softmax_last(scores);  // [B,T,T]: time axis only
        outs.push_back(ad::bmm(attn, vh));
    }
    return o.apply(ad::concat_last(outs));
}

AttentionBlock AttentionBlock::init(std::int64_t dim, Rng& rng) {
    AttentionBlock blk;
    blk.q = Linear::init(dim, dim, rng);
    blk.k = Linear::init(dim, dim, rng);
    blk.v = Linear::init(dim, dim, rng);
    blk.o = Linear::init(dim, dim, rng);
    blk.ff1 = Linear::init(dim, dim, rng);
    blk.ff2 = Linear::init(dim, dim, rng);
    blk.ln1_gain = ad::param(Tensor::full({dim}, 1.0));
    blk.ln1_bias = ad::param(Tensor::zeros({dim}));
    blk.ln2_gain = ad::param(Tensor::full({dim}, 1.0));
    blk.ln2_bias = ad::param(Tensor::zeros({dim}));
    return blk;
}

Var AttentionBlock::apply(const Var& x) const {
    Var attn_in = layer_norm(x, ln1_gain, ln1_bias);
    Var h = ad::add(x, multi_head_attention(attn_in, q, k, v, o, kAttnHeads));
    Var ff_in = layer_norm(h, ln2_gain, ln2_bias);
    return ad::add(h, ff2.apply(ad::relu(ff1.apply(ff_in))));
}

NamedParams AttentionBlock::named_params(const std::string& prefix) const {
    NamedParams out = q.named_params(prefix + ".q");
    append(out, k.named_params(prefix + ".k"));
    append(out, v.named_params(prefix + ".v"));
    append(out, o.named_params(prefix + ".o"));
    append(out, ff1.named_params(prefix + ".ff1"));
    append(out, ff2.named_params(prefix + ".ff2"));
    out.emplace_back(prefix + ".ln1_gain", ln1_gain);
    out.emplace_back(prefix + ".ln1_bias", ln1_bias);
    out.emplace_back(prefix + ".ln2_gain", ln2_gain);
    out.emplace_back(prefix + ".ln2_bias", ln2_bias);
    return out;
}

// ------------------------------------------------------------------ generator

std::string to_string(GeneratorVariant v) { return v == GeneratorVariant::BiLstm ? "bilstm" : "eot"; }

GeneratorVariant generator_variant_from_string(const std::string& s) {
    if (s == "bilstm") return GeneratorVariant::BiLstm;
    if (s == "eot") return GeneratorVariant::Eot;
    throw std::invalid_argument("unknown generator variant: " + s);
}

Generator Generator::init(GeneratorVariant variant, const VariableSchema& schema, Rng& rng) {
    Generator g;
    g.variant = variant;
    if (variant == GeneratorVariant::BiLstm) {
        g.rnn = BiLstm::init(kLatentDim, kHiddenDim, rng);
    } else {
        Tensor pos({kPositionalSlots, kHiddenDim});
        for (std::int64_t i = 0; i < pos.size(); ++i) pos[i] = rng.normal(0.0, 0.02);
        g.positional = ad::param(std::move(pos));
        for (int i = 0; i < kAttnBlocks; ++i) g.blocks.push_back(AttentionBlock::init(kHiddenDim, rng));
    }
    g.head1 = Linear::init(kHiddenDim, kHiddenDim, rng);
    g.head2 = Linear::init(kHiddenDim, kHiddenDim, rng);
    g.head3 = Linear::init(kHiddenDim, schema.encoded_width(), rng);
    return g;
}

NamedParams Generator::named_params(const std::string& prefix) const {
    NamedParams out;
    if (variant == GeneratorVariant::BiLstm) {
        append(out, rnn.named_params(prefix + ".rnn"));
    } else {
        out.emplace_back(prefix + ".positional", positional);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            append(out, blocks[i].named_params(prefix + ".block" + std::to_string(i)));
    }
    append(out, head1.named_params(prefix + ".head1"));
    append(out, head2.named_params(prefix + ".head2"));
    append(out, head3.named_params(prefix + ".head3"));
    return out;
}

Var apply_output_heads(const Var& raw, const VariableSchema& schema) {
    std::vector<Var> parts;
    std::int64_t off = 0;
    for (const auto& spec : schema.variables) {
        if (spec.is_numeric()) {
            parts.push_back(ad::sigmoid(ad::slice_last(raw, off, 1)));
            off += 1;
        } else {
            parts.push_back(ad::softmax_last(ad::slice_last(raw, off, spec.level_count())));
            off += spec.level_count();
        }
    }
    return ad::concat_last(parts);
}

Var generate_forward(const Generator& gen, const Var& z, const VariableSchema& schema) {
    const auto& sh = z.value().shape();
    if (sh.size() != 3 || sh[2] != kLatentDim) throw std::invalid_argument("generate: z must be [B,T,128]");
    const std::int64_t t_len = sh[1];

    Var h;
    if (gen.variant == GeneratorVariant::BiLstm) {
        h = gen.rnn.apply(z);
    } else {
        if (t_len > kPositionalSlots)
            throw std::invalid_argument("generate: sequence length " + std::to_string(t_len) +
                                        " exceeds positional capacity " + std::to_string(kPositionalSlots));
        Var pos = ad::slice_axis0(gen.positional, 0, t_len);
        h = ad::add_bcast0(z, pos);
        for (const auto& blk : gen.blocks) h = blk.apply(h);
    }
    h = ad::relu(gen.head1.apply(h));
    h = ad::relu(gen.head2.apply(h));
    return apply_output_heads(gen.head3.apply(h), schema);
}

// --------------------------------------------------------------------- critic

MbdProjection MbdProjection::init(std::int64_t embed_width, Rng& rng) {
    MbdProjection m;
    m.t = ad::param(xavier(embed_width, 15, rng));
    return m;
}

Var MbdProjection::apply(const Var& f) const {
    const auto& sh = f.value().shape();
    const std::int64_t b = sh[0], t_len = sh[1];
    Var pooled = ad::mul_scalar(ad::sum_axis1(f), 1.0 / static_cast<double>(t_len));  // [B,E]
    Var m = ad::matmul(pooled, t);                                                    // [B,15]
    std::vector<Var> kernel_feats;
    for (int kern = 0; kern < 3; ++kern) {
        Var mk = ad::slice_last(m, kern * 5, 5);  // [B,5]
        Var rows = ad::reshape(mk, {b, 1, 5});
        std::vector<Var> copies(static_cast<std::size_t>(b), rows);
        Var x1 = ad::concat_axis1(copies);          // x1[i][j] = mk[i]
        Var x2 = ad::expand_axis0(mk, b);           // x2[i][j] = mk[j]
        Var dist = ad::sum_last(ad::abs_v(ad::sub(x1, x2)));  // [B,B] pairwise L1
        Var sim = ad::exp_v(ad::neg(dist));
        Var o = ad::add_scalar(ad::sum_last(sim), -1.0);  // drop the self term
        kernel_feats.push_back(ad::reshape(o, {b, 1}));
    }
    Var feats = ad::concat_last(kernel_feats);  // [B,3]
    return ad::expand_axis1(feats, t_len);      // [B,T,3]
}

NamedParams MbdProjection::named_params(const std::string& prefix) const { return {{prefix + ".t", t}}; }

Critic Critic::init(const VariableSchema& schema, Rng& rng, bool use_mbd) {
    Critic c;
    c.emb = SoftEmbedding::init(schema, rng);
    c.use_mbd = use_mbd;
    std::int64_t in = schema.embed_width();
    if (use_mbd) {
        c.mbd = MbdProjection::init(schema.embed_width(), rng);
        in += 3;
    }
    c.lin1 = Linear::init(in, kHiddenDim, rng);
    c.lin2 = Linear::init(kHiddenDim, kHiddenDim, rng);
    c.rnn = BiLstm::init(kHiddenDim, kHiddenDim, rng);
    c.out = Linear::init(kHiddenDim, 1, rng);
    return c;
}

NamedParams Critic::named_params(const std::string& prefix) const {
    NamedParams params = emb.named_params(prefix + ".emb");
    if (use_mbd) append(params, mbd.named_params(prefix + ".mbd"));
    append(params, lin1.named_params(prefix + ".lin1"));
    append(params, lin2.named_params(prefix + ".lin2"));
    append(params, rnn.named_params(prefix + ".rnn"));
    append(params, out.named_params(prefix + ".out"));
    return params;
}

Var critic_embedding_features(const Critic& critic, const Var& batch, const VariableSchema& schema) {
    return soft_embed(batch, critic.emb, schema);
}

Var criticize(const Critic& critic, const Var& batch, const VariableSchema& schema) {
    Var f = soft_embed(batch, critic.emb, schema);
    if (critic.use_mbd) f = ad::concat_last({f, critic.mbd.apply(f)});
    Var h = ad::relu(critic.lin1.apply(f));
    h = ad::relu(critic.lin2.apply(h));
    h = critic.rnn.apply(h);
    const std::int64_t t_len = h.value().shape()[1];
    Var pooled = ad::mul_scalar(ad::sum_axis1(h), 1.0 / static_cast<double>(t_len));  // [B,H]
    Var scores = ad::reshape(critic.out.apply(pooled), {h.value().shape()[0]});
    if (!scores.value().all_finite())
        throw std::runtime_error("criticize: non-finite scores (activations diverged)");
    return scores;
}

// ------------------------------------------------------------------------ VAE

VaeEncoder VaeEncoder::init(const VariableSchema& schema, const SoftEmbedding& tied, Rng& rng) {
    VaeEncoder e;
    e.tied_emb = tied;  // same Var handles: one physical copy of the tables
    e.input = Linear::init(schema.embed_width(), kHiddenDim, rng);
    for (int i = 0; i < 3; ++i) e.residual.push_back(Linear::init(kHiddenDim, kHiddenDim, rng));
    e.gamma_head = Linear::init(kHiddenDim, kLatentDim, rng);
    e.sigma_head = Linear::init(kHiddenDim, kLatentDim, rng);
    return e;
}

NamedParams VaeEncoder::named_params(const std::string& prefix) const {
    // tied tables are reported under the critic's name, not here
    NamedParams out = input.named_params(prefix + ".input");
    for (std::size_t i = 0; i < residual.size(); ++i)
        append(out, residual[i].named_params(prefix + ".res" + std::to_string(i)));
    append(out, gamma_head.named_params(prefix + ".gamma"));
    append(out, sigma_head.named_params(prefix + ".sigma"));
    return out;
}

VaeOutputs vae_encode(const VaeEncoder& enc, const Var& batch, const VariableSchema& schema) {
    Var f = soft_embed(batch, enc.tied_emb, schema);
    Var h = ad::relu(enc.input.apply(f));
    for (const auto& layer : enc.residual) h = ad::add(h, ad::relu(layer.apply(h)));
    VaeOutputs out;
    out.gamma = enc.gamma_head.apply(h);
    out.sigma = ad::clamp(ad::exp_v(enc.sigma_head.apply(h)), kSigmaFloor, kSigmaCeil);
    return out;
}

VaeDecoder VaeDecoder::init(const VariableSchema& schema, Rng& rng) {
    VaeDecoder d;
    d.out = Linear::init(kLatentDim, schema.encoded_width(), rng);
    return d;
}

NamedParams VaeDecoder::named_params(const std::string& prefix) const { return out.named_params(prefix + ".out"); }

Var vae_decode(const VaeDecoder& dec, const Var& xi, const VariableSchema& schema) {
    return apply_output_heads(dec.out.apply(xi), schema);
}

std::uint64_t params_hash(const NamedParams& params) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [name, var] : params) {
        mix(name.data(), name.size());
        const auto& t = var.value();
        mix(t.data(), static_cast<std::size_t>(t.size()) * sizeof(double));
    }
    return h;
}

}  // namespace replaygan::nets
