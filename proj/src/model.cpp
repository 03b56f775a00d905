#include "hdmi/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hdmi/checkpoint.hpp"

namespace hdmi {

void ModelConfig::validate() const {
    if (vocab_size < 4) throw ConfigError("vocab_size must be at least 4 (pad/bos/eos/mask)");
    if (hidden_size == 0 || layers == 0 || heads == 0 || max_seq_len == 0)
        throw ConfigError("model dimensions must be positive");
    if (hidden_size % heads != 0) throw ConfigError("hidden_size must be divisible by heads");
    if (embed_size != hidden_size)
        throw ConfigError("embed_size must equal hidden_size (untied input projection not supported)");
}

TinyTransformer::TinyTransformer(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(derive_seed(cfg_.seed, "model-init"));
    const std::size_t V = cfg_.vocab_size, D = cfg_.hidden_size;
    const double w_std = 1.0 / std::sqrt(static_cast<double>(D));

    tok_embed_ = Tensor::randn({V, cfg_.embed_size}, rng, 0.1);
    pos_embed_ = Tensor::randn({cfg_.max_seq_len, D}, rng, 0.1);
    layers_.resize(cfg_.layers);
    for (auto& lp : layers_) {
        lp.ln1_gain = Tensor::full({D}, 1.0);
        lp.ln1_bias = Tensor::zeros({D});
        lp.wq = Tensor::randn({D, D}, rng, w_std);
        lp.bq = Tensor::zeros({D});
        lp.wk = Tensor::randn({D, D}, rng, w_std);
        lp.bk = Tensor::zeros({D});
        lp.wv = Tensor::randn({D, D}, rng, w_std);
        lp.bv = Tensor::zeros({D});
        lp.wo = Tensor::randn({D, D}, rng, w_std);
        lp.bo = Tensor::zeros({D});
        lp.ln2_gain = Tensor::full({D}, 1.0);
        lp.ln2_bias = Tensor::zeros({D});
        lp.w_up = Tensor::randn({D, 4 * D}, rng, w_std);
        lp.b_up = Tensor::zeros({4 * D});
        lp.w_down = Tensor::randn({4 * D, D}, rng, 1.0 / std::sqrt(static_cast<double>(4 * D)));
        lp.b_down = Tensor::zeros({D});
    }
    lnf_gain_ = Tensor::full({D}, 1.0);
    lnf_bias_ = Tensor::zeros({D});
    w_unembed_ = Tensor::randn({V, D}, rng, w_std);
    b_unembed_ = Tensor::zeros({V});
}

std::vector<std::pair<std::string, Tensor*>> TinyTransformer::named_parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("tok_embed", &tok_embed_);
    out.emplace_back("pos_embed", &pos_embed_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto& lp = layers_[i];
        const std::string pfx = "layer" + std::to_string(i) + ".";
        out.emplace_back(pfx + "ln1_gain", &lp.ln1_gain);
        out.emplace_back(pfx + "ln1_bias", &lp.ln1_bias);
        out.emplace_back(pfx + "wq", &lp.wq);
        out.emplace_back(pfx + "bq", &lp.bq);
        out.emplace_back(pfx + "wk", &lp.wk);
        out.emplace_back(pfx + "bk", &lp.bk);
        out.emplace_back(pfx + "wv", &lp.wv);
        out.emplace_back(pfx + "bv", &lp.bv);
        out.emplace_back(pfx + "wo", &lp.wo);
        out.emplace_back(pfx + "bo", &lp.bo);
        out.emplace_back(pfx + "ln2_gain", &lp.ln2_gain);
        out.emplace_back(pfx + "ln2_bias", &lp.ln2_bias);
        out.emplace_back(pfx + "w_up", &lp.w_up);
        out.emplace_back(pfx + "b_up", &lp.b_up);
        out.emplace_back(pfx + "w_down", &lp.w_down);
        out.emplace_back(pfx + "b_down", &lp.b_down);
    }
    out.emplace_back("lnf_gain", &lnf_gain_);
    out.emplace_back("lnf_bias", &lnf_bias_);
    out.emplace_back("w_unembed", &w_unembed_);
    out.emplace_back("b_unembed", &b_unembed_);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> TinyTransformer::named_parameters() const {
    auto mut = const_cast<TinyTransformer*>(this)->named_parameters();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mut.size());
    for (auto& [name, t] : mut) out.emplace_back(name, t);
    return out;
}

std::vector<Var> GraphParams::all() const {
    std::vector<Var> out{tok_embed, pos_embed};
    for (const auto& l : layers) {
        out.insert(out.end(), {l.ln1_gain, l.ln1_bias, l.wq, l.bq, l.wk, l.bk, l.wv, l.bv,
                               l.wo, l.bo, l.ln2_gain, l.ln2_bias, l.w_up, l.b_up, l.w_down,
                               l.b_down});
    }
    out.insert(out.end(), {lnf_gain, lnf_bias, w_unembed, b_unembed});
    return out;
}

GraphParams lift_parameters(const TinyTransformer& model) {
    GraphParams p;
    p.tok_embed = make_var(model.token_embedding(), "tok_embed");
    p.pos_embed = make_var(model.positional_embedding(), "pos_embed");
    for (const auto& lp : model.layers()) {
        GraphParams::Layer l;
        l.ln1_gain = make_var(lp.ln1_gain);
        l.ln1_bias = make_var(lp.ln1_bias);
        l.wq = make_var(lp.wq);
        l.bq = make_var(lp.bq);
        l.wk = make_var(lp.wk);
        l.bk = make_var(lp.bk);
        l.wv = make_var(lp.wv);
        l.bv = make_var(lp.bv);
        l.wo = make_var(lp.wo);
        l.bo = make_var(lp.bo);
        l.ln2_gain = make_var(lp.ln2_gain);
        l.ln2_bias = make_var(lp.ln2_bias);
        l.w_up = make_var(lp.w_up);
        l.b_up = make_var(lp.b_up);
        l.w_down = make_var(lp.w_down);
        l.b_down = make_var(lp.b_down);
        p.layers.push_back(std::move(l));
    }
    p.lnf_gain = make_var(model.final_norm_gain());
    p.lnf_bias = make_var(model.final_norm_bias());
    p.w_unembed = make_var(model.unembedding());
    p.b_unembed = make_var(model.unembedding_bias());
    return p;
}

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kMaskNegative = -1e30;

void check_tokens(const ModelConfig& cfg, const std::vector<int>& tokens) {
    if (tokens.empty()) throw InputError("token sequence must be nonempty");
    if (tokens.size() > cfg.max_seq_len) throw InputError("token sequence exceeds max_seq_len");
    for (int t : tokens)
        if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size)
            throw InputError("token id out of range");
}

Tensor causal_mask(std::size_t t) {
    Tensor m({t, t});
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = i + 1; j < t; ++j) m.at(i, j) = kMaskNegative;
    return m;
}

Var attention_heads(const ModelConfig& cfg, const Var& q, const Var& k, const Var& v,
                    const Var* mask) {
    const std::size_t dh = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> outs;
    outs.reserve(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        Var qh = vslice_cols(q, h * dh, dh);
        Var kh = vslice_cols(k, h * dh, dh);
        Var vh = vslice_cols(v, h * dh, dh);
        Var scores = vscale(vmatmul(qh, vtranspose(kh)), scale);
        if (mask) scores = vadd(scores, *mask);
        Var attn = vsoftmax_rows(scores, 1.0);
        outs.push_back(vmatmul(attn, vh));
    }
    return vconcat_cols(outs);
}

struct BlockStep {
    Var x;      // [1 x D]
    Var k_row;  // [1 x D]
    Var v_row;  // [1 x D]
};

// One block applied to a single position against a fixed key/value history.
// `k_hist`/`v_hist` may be null when this is the first position.
BlockStep incremental_block(const GraphParams::Layer& lp, const ModelConfig& cfg, const Var& x,
                            const Var& k_hist, const Var& v_hist) {
    Var xn = vlayer_norm_rows(x, lp.ln1_gain, lp.ln1_bias, kLnEps);
    Var q = vadd_row(vmatmul(xn, lp.wq), lp.bq);
    Var k_row = vadd_row(vmatmul(xn, lp.wk), lp.bk);
    Var v_row = vadd_row(vmatmul(xn, lp.wv), lp.bv);
    Var k_all = k_hist ? vconcat_rows(k_hist, k_row) : k_row;
    Var v_all = v_hist ? vconcat_rows(v_hist, v_row) : v_row;
    Var attn = attention_heads(cfg, q, k_all, v_all, nullptr);
    Var x1 = vadd(x, vadd_row(vmatmul(attn, lp.wo), lp.bo));
    Var xn2 = vlayer_norm_rows(x1, lp.ln2_gain, lp.ln2_bias, kLnEps);
    Var mlp = vadd_row(vmatmul(vgelu(vadd_row(vmatmul(xn2, lp.w_up), lp.b_up)), lp.w_down),
                       lp.b_down);
    return {vadd(x1, mlp), k_row, v_row};
}

}  // namespace

SequenceGraph build_sequence_graph(const GraphParams& p, const ModelConfig& cfg,
                                   const std::vector<int>& tokens) {
    check_tokens(cfg, tokens);
    const std::size_t T = tokens.size();

    std::vector<int> positions(T);
    std::iota(positions.begin(), positions.end(), 0);
    Var x = vadd(vembed_rows(p.tok_embed, tokens), vembed_rows(p.pos_embed, positions));

    Var mask = make_var(causal_mask(T), "causal_mask");
    SequenceGraph g;
    for (const auto& lp : p.layers) {
        Var xn = vlayer_norm_rows(x, lp.ln1_gain, lp.ln1_bias, kLnEps);
        Var q = vadd_row(vmatmul(xn, lp.wq), lp.bq);
        Var k = vadd_row(vmatmul(xn, lp.wk), lp.bk);
        Var v = vadd_row(vmatmul(xn, lp.wv), lp.bv);
        Var attn = attention_heads(cfg, q, k, v, &mask);
        Var x1 = vadd(x, vadd_row(vmatmul(attn, lp.wo), lp.bo));
        Var xn2 = vlayer_norm_rows(x1, lp.ln2_gain, lp.ln2_bias, kLnEps);
        Var mlp = vadd_row(vmatmul(vgelu(vadd_row(vmatmul(xn2, lp.w_up), lp.b_up)), lp.w_down),
                           lp.b_down);
        x = vadd(x1, mlp);
        g.block_out.push_back(x);
        g.keys.push_back(k);
        g.values.push_back(v);
    }
    g.final_hidden = vlayer_norm_rows(x, p.lnf_gain, p.lnf_bias, kLnEps);
    g.logits_rows = vadd_row(vmatmul(g.final_hidden, vtranspose(p.w_unembed)), p.b_unembed);
    return g;
}

CleanTrace run_clean_forward(const TinyTransformer& model, const std::vector<int>& tokens) {
    GraphParams p = lift_parameters(model);
    SequenceGraph g = build_sequence_graph(p, model.config(), tokens);
    const std::size_t T = tokens.size();

    CleanTrace trace;
    trace.seq_len = T;
    for (std::size_t l = 0; l < model.config().layers; ++l) {
        trace.keys.push_back(g.keys[l]->value);
        trace.values.push_back(g.values[l]->value);
        trace.block_last.push_back(vrow(g.block_out[l], T - 1)->value);
    }
    trace.final_hidden_last = vrow(g.final_hidden, T - 1)->value;
    trace.logits = vrow(g.logits_rows, T - 1)->value;
    trace.logits.assert_finite("forward logits");
    return trace;
}

Var build_patched_logits_graph(const GraphParams& p, const ModelConfig& cfg,
                               const CleanTrace& trace, std::size_t layer, const Var& h_leaf) {
    if (layer < 1 || layer > cfg.layers) throw InputError("patch layer out of range");
    if (h_leaf->value.rank() != 1 || h_leaf->value.size() != cfg.hidden_size)
        throw ShapeError("patched hidden state must have length hidden_size");

    if (layer == cfg.layers) {
        // The capture site at the top layer is the pre-head vector, so the
        // head applies directly.
        Var logits_row = vadd_row(vmatmul(vas_row(h_leaf), vtranspose(p.w_unembed)), p.b_unembed);
        return vrow(logits_row, 0);
    }

    const std::size_t T = trace.seq_len;
    Var x = vas_row(h_leaf);
    for (std::size_t l = layer; l < cfg.layers; ++l) {
        Var k_hist, v_hist;
        if (T > 1) {
            // Clean keys/values of the other positions are reused; only the
            // last position recomputes from the replacement.
            Tensor kh({T - 1, cfg.hidden_size});
            Tensor vh({T - 1, cfg.hidden_size});
            for (std::size_t r = 0; r + 1 < T; ++r)
                for (std::size_t c = 0; c < cfg.hidden_size; ++c) {
                    kh.at(r, c) = trace.keys[l].at(r, c);
                    vh.at(r, c) = trace.values[l].at(r, c);
                }
            k_hist = make_var(std::move(kh), "clean_keys");
            v_hist = make_var(std::move(vh), "clean_values");
        }
        BlockStep step = incremental_block(p.layers[l], cfg, x, k_hist, v_hist);
        x = step.x;
    }
    Var h = vlayer_norm_rows(x, p.lnf_gain, p.lnf_bias, kLnEps);
    Var logits_row = vadd_row(vmatmul(h, vtranspose(p.w_unembed)), p.b_unembed);
    return vrow(logits_row, 0);
}

Tensor forward_logits(const TinyTransformer& model, const std::vector<int>& tokens) {
    return run_clean_forward(model, tokens).logits;
}

std::pair<Tensor, HiddenState> forward_capture(const TinyTransformer& model,
                                               const std::vector<int>& tokens,
                                               std::size_t layer) {
    if (layer < 1 || layer > model.config().layers) throw InputError("capture layer out of range");
    CleanTrace trace = run_clean_forward(model, tokens);
    HiddenState h;
    h.layer = layer;
    h.position = tokens.size() - 1;
    h.vector = layer == model.config().layers ? trace.final_hidden_last
                                              : trace.block_last[layer - 1];
    return {trace.logits, std::move(h)};
}

Tensor forward_patch(const TinyTransformer& model, const std::vector<int>& tokens,
                     std::size_t layer, const Tensor& replacement) {
    if (replacement.rank() != 1 || replacement.size() != model.config().hidden_size)
        throw ShapeError("replacement must have length hidden_size");
    replacement.assert_finite("patch replacement");
    CleanTrace trace = run_clean_forward(model, tokens);
    GraphParams p = lift_parameters(model);
    Var leaf = make_var(replacement, "patched_hidden");
    return build_patched_logits_graph(p, model.config(), trace, layer, leaf)->value;
}

VirtualCache VirtualCache::from(const DecodeCache& cache) {
    VirtualCache vc;
    vc.length = cache.length;
    for (std::size_t l = 0; l < cache.keys.size(); ++l) {
        vc.keys.push_back(cache.length ? make_var(cache.keys[l], "cache_k") : Var{});
        vc.values.push_back(cache.length ? make_var(cache.values[l], "cache_v") : Var{});
    }
    return vc;
}

TransitionGraph transition_step_graph(const GraphParams& p, const ModelConfig& cfg,
                                      const VirtualCache& cache, const Var& input_embedding) {
    if (cache.length >= cfg.max_seq_len)
        throw CapacityError("decode cache is at max_seq_len capacity");
    if (input_embedding->value.rank() != 1 || input_embedding->value.size() != cfg.embed_size)
        throw ShapeError("input embedding must have length embed_size");

    Var pos_row = vrow(p.pos_embed, cache.length);
    Var x = vas_row(vadd(input_embedding, pos_row));

    TransitionGraph out;
    out.extended.length = cache.length + 1;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const Var& k_hist = cache.keys.empty() ? Var{} : cache.keys[l];
        const Var& v_hist = cache.values.empty() ? Var{} : cache.values[l];
        BlockStep step = incremental_block(p.layers[l], cfg, x, k_hist, v_hist);
        x = step.x;
        out.extended.keys.push_back(k_hist ? vconcat_rows(k_hist, step.k_row) : step.k_row);
        out.extended.values.push_back(v_hist ? vconcat_rows(v_hist, step.v_row) : step.v_row);
    }
    out.hidden = vrow(vlayer_norm_rows(x, p.lnf_gain, p.lnf_bias, kLnEps), 0);
    return out;
}

std::pair<Tensor, DecodeCache> transition_step(const TinyTransformer& model,
                                               const DecodeCache& cache,
                                               const Tensor& input_embedding) {
    GraphParams p = lift_parameters(model);
    VirtualCache vc = VirtualCache::from(cache);
    if (vc.keys.empty()) {
        vc.keys.resize(model.config().layers);
        vc.values.resize(model.config().layers);
    }
    TransitionGraph g = transition_step_graph(p, model.config(), vc, make_var(input_embedding));

    DecodeCache next;
    next.length = cache.length + 1;
    for (std::size_t l = 0; l < model.config().layers; ++l) {
        next.keys.push_back(g.extended.keys[l]->value);
        next.values.push_back(g.extended.values[l]->value);
    }
    return {g.hidden->value, std::move(next)};
}

namespace {

class AdamW {
public:
    AdamW(double lr, double weight_decay) : lr_(lr), wd_(weight_decay) {}

    void step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
        if (m_.empty()) {
            for (Tensor* p : params) {
                m_.push_back(Tensor::zeros(p->shape()));
                v_.push_back(Tensor::zeros(p->shape()));
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = *params[i];
            const Tensor& g = grads[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
                v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
                const double mhat = m_[i][j] / bc1;
                const double vhat = v_[i][j] / bc2;
                p[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * p[j]);
            }
        }
    }

private:
    double lr_, wd_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::vector<Tensor> m_, v_;
    long t_ = 0;
};

}  // namespace

TrainResult train_lm(TinyTransformer& model, const std::vector<std::vector<int>>& corpus,
                     const TrainOptions& opts) {
    if (corpus.empty()) throw InputError("train_lm: empty corpus");
    for (const auto& s : corpus) check_tokens(model.config(), s);

    Rng rng(derive_seed(opts.seed, "train-lm"));
    AdamW opt(opts.lr, opts.weight_decay);

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    auto named = model.named_parameters();
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t end = std::min(order.size(), start + opts.batch_size);
            GraphParams p = lift_parameters(model);
            std::vector<Var> leaves = p.all();

            Var total;
            std::size_t n_in_batch = 0;
            for (std::size_t bi = start; bi < end; ++bi) {
                const auto& sent = corpus[order[bi]];
                if (sent.size() < 2) continue;
                SequenceGraph g = build_sequence_graph(p, model.config(), sent);
                std::vector<int> targets(sent.begin() + 1, sent.end());
                Var logp = vlog_softmax_rows(g.logits_rows);
                Var nll = vscale(vmean(vpick_positions(logp, targets)), -1.0);
                total = total ? vadd(total, nll) : nll;
                ++n_in_batch;
            }
            if (!total) continue;
            Var loss = vscale(total, 1.0 / static_cast<double>(n_in_batch));
            run_backward(loss);

            std::vector<Tensor*> params;
            std::vector<Tensor> grads;
            for (std::size_t i = 0; i < named.size(); ++i) {
                params.push_back(named[i].second);
                grads.push_back(leaves[i]->has_grad ? leaves[i]->grad
                                                    : Tensor::zeros(named[i].second->shape()));
            }
            opt.step(params, grads);

            const double loss_value = loss->value[0];
            if (!std::isfinite(loss_value)) throw DomainError("train_lm: non-finite loss");
            result.batch_losses.push_back(loss_value);
            epoch_loss += loss_value;
            ++epoch_batches;
        }
        result.epoch_losses.push_back(epoch_batches ? epoch_loss / epoch_batches : 0.0);
    }
    return result;
}

std::vector<int> greedy_decode(const TinyTransformer& model, const std::vector<int>& prompt,
                               std::size_t max_new) {
    if (prompt.empty()) throw InputError("greedy_decode: prompt must be nonempty");
    std::vector<int> tokens = prompt;
    for (std::size_t i = 0; i < max_new && tokens.size() < model.config().max_seq_len; ++i) {
        Tensor logits = forward_logits(model, tokens);
        tokens.push_back(static_cast<int>(argmax_lowest_id(logits)));
    }
    return tokens;
}

void save_model(const TinyTransformer& model, const std::string& path) {
    const ModelConfig& c = model.config();
    std::vector<std::pair<std::string, std::string>> config{
        {"kind", "model"},
        {"vocab_size", std::to_string(c.vocab_size)},
        {"hidden_size", std::to_string(c.hidden_size)},
        {"embed_size", std::to_string(c.embed_size)},
        {"layers", std::to_string(c.layers)},
        {"heads", std::to_string(c.heads)},
        {"max_seq_len", std::to_string(c.max_seq_len)},
        {"seed", std::to_string(c.seed)},
    };
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (const auto& [name, t] : model.named_parameters()) tensors.emplace_back(name, t);
    write_checkpoint(path, config, tensors);
}

TinyTransformer load_model(const std::string& path) {
    CheckpointData data = read_checkpoint(path);
    if (data.config_value("kind") != "model") throw InputError("checkpoint is not a model");
    ModelConfig cfg;
    cfg.vocab_size = std::stoul(data.config_value("vocab_size"));
    cfg.hidden_size = std::stoul(data.config_value("hidden_size"));
    cfg.embed_size = std::stoul(data.config_value("embed_size"));
    cfg.layers = std::stoul(data.config_value("layers"));
    cfg.heads = std::stoul(data.config_value("heads"));
    cfg.max_seq_len = std::stoul(data.config_value("max_seq_len"));
    cfg.seed = std::stoull(data.config_value("seed"));

    TinyTransformer model(cfg);
    auto named = model.named_parameters();
    if (named.size() != data.tensors.size())
        throw InputError("checkpoint tensor count does not match model layout");
    for (std::size_t i = 0; i < named.size(); ++i) {
        if (!named[i].second->same_shape(data.tensors[i].second))
            throw InputError("checkpoint tensor shape mismatch at " + named[i].first);
        *named[i].second = data.tensors[i].second;
    }
    return model;
}

}  // namespace hdmi
