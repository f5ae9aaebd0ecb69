#pragma once

#include <string>
#include <vector>

#include "replaygan/autodiff.hpp"
#include "replaygan/rng.hpp"
#include "replaygan/schema.hpp"

namespace replaygan::nets {

using ad::Var;

constexpr std::int64_t kLatentDim = 128;
constexpr std::int64_t kHiddenDim = 128;
constexpr std::int64_t kAttnHeads = 8;
constexpr std::int64_t kAttnBlocks = 3;
constexpr std::int64_t kPositionalSlots = 100;
constexpr double kSigmaFloor = 1e-4;
constexpr double kSigmaCeil = 10.0;

using NamedParams = std::vector<std::pair<std::string, Var>>;

/// Per-variable lookup tables. Numeric channels pass through; each
/// binary/categorical block maps its simplex weights to a dense vector
/// (2-dim for binary, 4-dim for categorical by default).
struct SoftEmbedding {
    std::vector<Var> tables;  // one per non-numeric variable, [levels, embed_dim]

    static SoftEmbedding init(const VariableSchema& schema, Rng& rng);
    NamedParams named_params(const std::string& prefix) const;
};

/// [B,T,encoded_width] -> [B,T,embed_width]. Hard one-hot input reduces
/// to a plain table lookup; soft simplex input takes the weighted sum.
Var soft_embed(const Var& batch, const SoftEmbedding& emb, const VariableSchema& schema);

struct Linear {
    Var w;  // [in, out]
    Var b;  // [out]

    static Linear init(std::int64_t in, std::int64_t out, Rng& rng);
    /// x [.., in] -> [.., out]
    Var apply(const Var& x) const;
    NamedParams named_params(const std::string& prefix) const;
};

struct Lstm {
    Var wx;  // [in, 4H]
    Var wh;  // [H, 4H]
    Var b;   // [4H]  gate order: input, forget, cell, output

    static Lstm init(std::int64_t in, std::int64_t hidden, Rng& rng);
    /// x [B,T,in] -> outputs [B,T,H]; set `reversed` to scan right-to-left.
    Var apply(const Var& x, bool reversed) const;
    NamedParams named_params(const std::string& prefix) const;
};

/// Direction outputs are concatenated then projected back to hidden_dim.
struct BiLstm {
    Lstm fwd, bwd;
    Linear proj;  // [2H, H]

    static BiLstm init(std::int64_t in, std::int64_t hidden, Rng& rng);
    Var apply(const Var& x) const;
    NamedParams named_params(const std::string& prefix) const;
};

struct AttentionBlock {
    Linear q, k, v, o;
    Linear ff1, ff2;
    Var ln1_gain, ln1_bias, ln2_gain, ln2_bias;

    static AttentionBlock init(std::int64_t dim, Rng& rng);
    Var apply(const Var& x) const;
    NamedParams named_params(const std::string& prefix) const;
};

/// Scaled dot-product attention over the time axis only (heads split the
/// channel dimension; scores are [B,T,T]).
Var multi_head_attention(const Var& x, const Linear& q, const Linear& k, const Linear& v, const Linear& o,
                         std::int64_t heads);

Var layer_norm(const Var& x, const Var& gain, const Var& bias);

enum class GeneratorVariant { BiLstm, Eot };

std::string to_string(GeneratorVariant v);
GeneratorVariant generator_variant_from_string(const std::string& s);

struct Generator {
    GeneratorVariant variant = GeneratorVariant::BiLstm;
    BiLstm rnn;                          // biLSTM variant
    Var positional;                      // EOT variant, [100, 128]
    std::vector<AttentionBlock> blocks;  // EOT variant
    Linear head1, head2, head3;          // shared 3-layer output stack

    static Generator init(GeneratorVariant variant, const VariableSchema& schema, Rng& rng);
    NamedParams named_params(const std::string& prefix) const;
};

/// z [B,T,128] -> encoded-space values: sigmoid numeric channels, softmax
/// categorical blocks. EOT rejects T beyond the positional table.
Var generate_forward(const Generator& gen, const Var& z, const VariableSchema& schema);

/// Shared output-head convention (generator and VAE decoder).
Var apply_output_heads(const Var& raw, const VariableSchema& schema);

/// Minibatch-discrimination insert: projects time-pooled embedding
/// features through 3 kernels of dimension 5 and appends per-sample
/// dissimilarity features between embedding and feature extraction.
struct MbdProjection {
    Var t;  // [embed_width, 15]
    static MbdProjection init(std::int64_t embed_width, Rng& rng);
    /// f [B,T,E] -> [B,T,3]
    Var apply(const Var& f) const;
    NamedParams named_params(const std::string& prefix) const;
};

struct Critic {
    SoftEmbedding emb;
    bool use_mbd = false;
    MbdProjection mbd;
    Linear lin1, lin2;  // feature extraction entry
    BiLstm rnn;
    Linear out;  // [H, 1]

    static Critic init(const VariableSchema& schema, Rng& rng, bool use_mbd = false);
    NamedParams named_params(const std::string& prefix) const;
};

/// batch [B,T,encoded_width] -> scores [B]. Throws on non-finite scores.
Var criticize(const Critic& critic, const Var& batch, const VariableSchema& schema);

/// Embedding-block output as the critic sees it (feature-matching hook).
Var critic_embedding_features(const Critic& critic, const Var& batch, const VariableSchema& schema);

struct VaeEncoder {
    SoftEmbedding tied_emb;  // shares table storage with the critic
    Linear input;            // [embed_width, 128]
    std::vector<Linear> residual;  // 3 x [128,128], applied as x + relu(L(x))
    Linear gamma_head, sigma_head;

    /// `tied` must be the critic's embedding; the encoder keeps the same
    /// underlying parameter nodes, so updates through either side are
    /// visible to both.
    static VaeEncoder init(const VariableSchema& schema, const SoftEmbedding& tied, Rng& rng);
    NamedParams named_params(const std::string& prefix) const;
};

struct VaeOutputs {
    Var gamma;  // [B,T,128]
    Var sigma;  // [B,T,128], strictly positive
};

VaeOutputs vae_encode(const VaeEncoder& enc, const Var& batch, const VariableSchema& schema);

struct VaeDecoder {
    Linear out;  // [128, encoded_width]

    static VaeDecoder init(const VariableSchema& schema, Rng& rng);
    NamedParams named_params(const std::string& prefix) const;
};

/// xi [B,T,128] -> reconstruction with the generator's head convention.
Var vae_decode(const VaeDecoder& dec, const Var& xi, const VariableSchema& schema);

/// FNV hash over all parameter bytes, in named_params order.
std::uint64_t params_hash(const NamedParams& params);

}  // namespace replaygan::nets
