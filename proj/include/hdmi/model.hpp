#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hdmi/autodiff.hpp"
#include "hdmi/tensor.hpp"

namespace hdmi {

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t hidden_size = 64;
    std::size_t embed_size = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t max_seq_len = 32;
    std::uint64_t seed = 0;

    std::size_t head_dim() const { return hidden_size / heads; }
    void validate() const;
};

/// Last-position activation captured at a given layer. For layers below the
/// top this is the block output; at the top layer it is the normalized
/// vector the unembedding consumes, so the head is exactly affine in it.
struct HiddenState {
    std::size_t layer = 0;
    std::size_t position = 0;
    Tensor vector;
};

struct LayerParams {
    Tensor ln1_gain, ln1_bias;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_gain, ln2_bias;
    Tensor w_up, b_up, w_down, b_down;
};

/// Decoder-only pre-norm transformer with learned absolute positions, GELU
/// MLP at 4x expansion and an untied embedding / unembedding pair.
class TinyTransformer {
public:
    explicit TinyTransformer(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }

    Tensor& token_embedding() { return tok_embed_; }
    const Tensor& token_embedding() const { return tok_embed_; }
    Tensor& unembedding() { return w_unembed_; }
    const Tensor& unembedding() const { return w_unembed_; }
    Tensor& unembedding_bias() { return b_unembed_; }
    const Tensor& unembedding_bias() const { return b_unembed_; }

    /// All parameters in checkpoint declaration order.
    std::vector<std::pair<std::string, Tensor*>> named_parameters();
    std::vector<std::pair<std::string, const Tensor*>> named_parameters() const;

    const std::vector<LayerParams>& layers() const { return layers_; }
    std::vector<LayerParams>& layers() { return layers_; }
    const Tensor& positional_embedding() const { return pos_embed_; }
    const Tensor& final_norm_gain() const { return lnf_gain_; }
    const Tensor& final_norm_bias() const { return lnf_bias_; }

private:
    ModelConfig cfg_;
    Tensor tok_embed_;   // [V x d_e]
    Tensor pos_embed_;   // [max_seq_len x D]
    std::vector<LayerParams> layers_;
    Tensor lnf_gain_, lnf_bias_;
    Tensor w_unembed_;   // [V x D]
    Tensor b_unembed_;   // [V]
};

// ---- graph plumbing (shared with interventions / lookahead) -------------

/// Model parameters lifted into graph leaves. When used for inference the
/// leaves act as constants; for training their gradients are read back.
struct GraphParams {
    struct Layer {
        Var ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo;
        Var ln2_gain, ln2_bias, w_up, b_up, w_down, b_down;
    };
    Var tok_embed, pos_embed;
    std::vector<Layer> layers;
    Var lnf_gain, lnf_bias, w_unembed, b_unembed;

    std::vector<Var> all() const;
};

GraphParams lift_parameters(const TinyTransformer& model);

struct SequenceGraph {
    std::vector<Var> block_out;  // per layer, [T x D]
    std::vector<Var> keys;       // per layer, [T x D]
    std::vector<Var> values;     // per layer, [T x D]
    Var final_hidden;            // [T x D], after the final norm
    Var logits_rows;             // [T x V]
};

SequenceGraph build_sequence_graph(const GraphParams& p, const ModelConfig& cfg,
                                   const std::vector<int>& tokens);

/// Clean forward pass with everything interventions need to rebuild the
/// upper part of the network around a replaced hidden state.
struct CleanTrace {
    std::size_t seq_len = 0;
    std::vector<Tensor> keys, values;  // per layer, [T x D]
    std::vector<Tensor> block_last;    // per layer, block output at last position
    Tensor final_hidden_last;          // [D]
    Tensor logits;                     // [V]
};

CleanTrace run_clean_forward(const TinyTransformer& model, const std::vector<int>& tokens);

/// Logits as a function of a replacement hidden state at (layer, last
/// position): layers above `layer` recompute from the leaf while every other
/// position keeps its clean keys/values. At layer == L the result is exactly
/// the affine head applied to the leaf.
Var build_patched_logits_graph(const GraphParams& p, const ModelConfig& cfg,
                               const CleanTrace& trace, std::size_t layer, const Var& h_leaf);

// ---- public model operations ---------------------------------------------

Tensor forward_logits(const TinyTransformer& model, const std::vector<int>& tokens);

std::pair<Tensor, HiddenState> forward_capture(const TinyTransformer& model,
                                               const std::vector<int>& tokens,
                                               std::size_t layer);

Tensor forward_patch(const TinyTransformer& model, const std::vector<int>& tokens,
                     std::size_t layer, const Tensor& replacement);

/// Per-layer key/value history for incremental decoding. `length` positions
/// have been consumed; tensors are [length x D] (empty at length 0).
struct DecodeCache {
    std::vector<Tensor> keys, values;
    std::size_t length = 0;
};

/// One decoding step from an arbitrary input embedding (not necessarily a
/// token row). Returns the post-norm last-layer hidden state and the
/// extended cache.
std::pair<Tensor, DecodeCache> transition_step(const TinyTransformer& model,
                                               const DecodeCache& cache,
                                               const Tensor& input_embedding);

/// Differentiable version of transition_step for lookahead objectives.
struct VirtualCache {
    std::vector<Var> keys, values;  // null Vars at length 0
    std::size_t length = 0;

    static VirtualCache from(const DecodeCache& cache);
};

struct TransitionGraph {
    Var hidden;  // [D]
    VirtualCache extended;
};

TransitionGraph transition_step_graph(const GraphParams& p, const ModelConfig& cfg,
                                      const VirtualCache& cache, const Var& input_embedding);

struct TrainOptions {
    std::size_t epochs = 10;
    double lr = 1e-3;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double weight_decay = 1e-6;
};

struct TrainResult {
    std::vector<double> batch_losses;
    std::vector<double> epoch_losses;
};

/// Next-token cross-entropy training with decoupled weight decay (AdamW).
/// Deterministic for a fixed seed.
TrainResult train_lm(TinyTransformer& model, const std::vector<std::vector<int>>& corpus,
                     const TrainOptions& opts);

/// Repeated argmax continuation; ties break toward the lowest token id.
std::vector<int> greedy_decode(const TinyTransformer& model, const std::vector<int>& prompt,
                               std::size_t max_new);

void save_model(const TinyTransformer& model, const std::string& path);
TinyTransformer load_model(const std::string& path);

}  // namespace hdmi
