#include "hdmi/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hdmi/interventions.hpp"
#include "hdmi/lookahead.hpp"
#include "hdmi/model.hpp"

namespace hdmi {

namespace {

Tensor central_differences(const std::function<double(const Tensor&)>& f, const Tensor& x) {
    Tensor g(x.shape());
    Tensor xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = 1e-5 * std::max(1.0, std::fabs(x[i]));
        const double orig = x[i];
        xp[i] = orig + h;
        const double fp = f(xp);
        xp[i] = orig - h;
        const double fm = f(xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double relative_error(const Tensor& got, const Tensor& want) {
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double d = got[i] - want[i];
        diff += d * d;
        ref += want[i] * want[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-12);
}

ModelConfig check_config(std::uint64_t seed) {
    ModelConfig cfg;
    cfg.vocab_size = 20;
    cfg.hidden_size = 16;
    cfg.embed_size = 16;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.max_seq_len = 16;
    cfg.seed = seed;
    return cfg;
}

Var margin_graph(const Var& logits, const MarginObjective& obj) {
    Var m;
    for (int t : obj.targets) {
        Var term = vpick(logits, static_cast<std::size_t>(t));
        m = m ? vadd(m, term) : term;
    }
    for (int s : obj.sources) m = vsub(m, vpick(logits, static_cast<std::size_t>(s)));
    return m;
}

}  // namespace

std::vector<GradCheckRow> run_gradient_checks(std::size_t cases, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "gradcheck"));

    GradCheckRow head{"closed-form head gradient vs recorded graph (max-abs)", 0.0, 1e-6, true,
                      cases};
    GradCheckRow below{"below-head margin gradient vs finite differences", 0.0, 1e-3, true,
                       cases};
    GradCheckRow transition{"transition-step embedding gradient vs finite differences", 0.0,
                            1e-4, true, cases};
    GradCheckRow lookahead{"lookahead-chain gradient vs finite differences", 0.0, 1e-3, true,
                           cases};

    for (std::size_t c = 0; c < cases; ++c) {
        TinyTransformer model(check_config(rng.next_u64()));
        const ModelConfig& cfg = model.config();

        std::vector<int> tokens;
        const std::size_t len = 3 + rng.index(5);
        for (std::size_t i = 0; i < len; ++i)
            tokens.push_back(static_cast<int>(rng.index(cfg.vocab_size)));
        int tau = static_cast<int>(rng.index(cfg.vocab_size));
        int sigma = static_cast<int>(rng.index(cfg.vocab_size));
        if (tau == sigma) sigma = (sigma + 1) % static_cast<int>(cfg.vocab_size);
        MarginObjective obj{{tau}, {sigma}};

        CleanTrace trace = run_clean_forward(model, tokens);
        GraphParams params = lift_parameters(model);

        // 1. At the top layer: the graph gradient equals W_U^T (u+ - u-).
        {
            Var leaf = make_var(trace.final_hidden_last);
            Var logits = build_patched_logits_graph(params, cfg, trace, cfg.layers, leaf);
            Tensor vjp = backward(margin_graph(logits, obj), leaf);
            Tensor closed = closed_form_final_gradient(model, obj);
            double worst = 0.0;
            for (std::size_t i = 0; i < vjp.size(); ++i)
                worst = std::max(worst, std::fabs(vjp[i] - closed[i]));
            head.worst = std::max(head.worst, worst);
            if (worst > head.tolerance) head.passed = false;
        }

        // 2. Below the head: graph gradient vs finite differences.
        {
            Var leaf = make_var(trace.block_last[0]);
            Var logits = build_patched_logits_graph(params, cfg, trace, 1, leaf);
            Tensor vjp = backward(margin_graph(logits, obj), leaf);
            Tensor fd = central_differences(
                [&](const Tensor& h) {
                    return margin_loss(forward_patch(model, tokens, 1, h), obj);
                },
                trace.block_last[0]);
            const double err = relative_error(vjp, fd);
            below.worst = std::max(below.worst, err);
            if (err > below.tolerance) below.passed = false;
        }

        // 3. Transition step: d(logit_tau)/d(embedding).
        {
            DecodeCache cache;
            Tensor e0({cfg.embed_size});
            for (std::size_t i = 0; i < e0.size(); ++i)
                e0[i] = model.token_embedding().at(static_cast<std::size_t>(tokens[0]), i);
            cache = transition_step(model, cache, e0).second;

            Tensor emb = Tensor::randn({cfg.embed_size}, rng, 0.3);
            Var leaf = make_var(emb);
            TransitionGraph tg =
                transition_step_graph(params, cfg, VirtualCache::from(cache), leaf);
            Var logits = vrow(vadd_row(vmatmul(vas_row(tg.hidden), vtranspose(params.w_unembed)),
                                       params.b_unembed), 0);
            Tensor vjp = backward(vpick(logits, static_cast<std::size_t>(tau)), leaf);
            Tensor fd = central_differences(
                [&](const Tensor& x) {
                    Tensor h = transition_step(model, cache, x).first;
                    return matvec(model.unembedding(), h)[static_cast<std::size_t>(tau)] +
                           model.unembedding_bias()[static_cast<std::size_t>(tau)];
                },
                emb);
            const double err = relative_error(vjp, fd);
            transition.worst = std::max(transition.worst, err);
            if (err > transition.tolerance) transition.passed = false;
        }

        // 4. Lookahead chain: objective gradient through softmax -> expected
        // embedding -> transition.
        {
            std::vector<int> input;
            for (int i = 0; i < 6; ++i)
                input.push_back(static_cast<int>(rng.index(cfg.vocab_size)));
            std::vector<int> edited = input;
            edited[3] = (input[3] + 1 + static_cast<int>(rng.index(cfg.vocab_size - 1))) %
                        static_cast<int>(cfg.vocab_size);
            EditSpec edits = EditSpec::from_sequences(input, edited);

            LookaheadState state;
            for (int i = 0; i < 2; ++i) {
                Tensor emb({cfg.embed_size});
                for (std::size_t k = 0; k < emb.size(); ++k)
                    emb[k] = model.token_embedding().at(static_cast<std::size_t>(input[i]), k);
                auto [h, cc] = transition_step(model, state.cache, emb);
                state.cache = std::move(cc);
                state.hidden = std::move(h);
                ++state.step;
            }

            EditConfig ecfg;
            ecfg.horizon = 3;
            ecfg.lambda_fact = 0.5;
            LookaheadObjective obj2 = lookahead_objective(model, state, edits, ecfg);
            Tensor vjp = backward_or_zero(obj2.value, obj2.hidden_leaf);
            Tensor fd = central_differences(
                [&](const Tensor& h) {
                    LookaheadState s = state;
                    s.hidden = h;
                    return lookahead_objective(model, s, edits, ecfg).value->value[0];
                },
                state.hidden);
            const double err = relative_error(vjp, fd);
            lookahead.worst = std::max(lookahead.worst, err);
            if (err > lookahead.tolerance) lookahead.passed = false;
        }
    }

    return {head, below, transition, lookahead};
}

}  // namespace hdmi
