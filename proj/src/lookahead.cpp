#include "hdmi/lookahead.hpp"

#include <algorithm>
#include <cmath>

#include "hdmi/autodiff.hpp"

namespace hdmi {

EditSpec EditSpec::from_sequences(std::vector<int> input, std::vector<int> edited) {
    if (input.empty()) throw InputError("EditSpec: input must be nonempty");
    EditSpec spec;
    spec.input = std::move(input);
    spec.edited = std::move(edited);
    const std::size_t n = spec.length();
    for (std::size_t j = 0; j < n; ++j)
        if (spec.input[j] != spec.edited[j]) spec.edit_positions.push_back(j);
    return spec;
}

bool EditSpec::is_edit(std::size_t pos) const {
    return std::find(edit_positions.begin(), edit_positions.end(), pos) != edit_positions.end();
}

void EditConfig::validate() const {
    if (horizon < 1) throw ConfigError("edit config: horizon must be at least 1");
    if (!(beta_f > 0.0) || !(beta_g > 0.0))
        throw ConfigError("edit config: temperatures must be positive");
    if (!(beta_f < beta_g)) throw ConfigError("edit config: beta_f must be below beta_g");
    if (lambda_fact < 0.0 || lambda_fact > 1.0)
        throw ConfigError("edit config: lambda_fact must lie in [0,1]");
    if (step_size < 0.0) throw ConfigError("edit config: step size must be nonnegative");
    if (inner_steps < 1) throw ConfigError("edit config: inner steps must be at least 1");
}

namespace {

Var head_logits(const GraphParams& p, const Var& hidden) {
    return vrow(vadd_row(vmatmul(vas_row(hidden), vtranspose(p.w_unembed)), p.b_unembed), 0);
}

struct ObjectiveBuild {
    Var value;
    Var leaf;
    std::vector<std::pair<std::size_t, double>> edit_margins;
};

ObjectiveBuild build_objective(const TinyTransformer& model, const GraphParams& params,
                               const Tensor& hidden, const DecodeCache& cache, std::size_t step,
                               const EditSpec& edits, const EditConfig& cfg) {
    cfg.validate();
    const std::size_t total = edits.length();
    if (step + 1 > total)
        throw InputError("lookahead objective: step is past the edited horizon");

    ObjectiveBuild build;
    build.leaf = make_var(hidden, "lookahead_hidden");

    Var phi = head_logits(params, build.leaf);
    Var objective;
    VirtualCache virtual_cache = VirtualCache::from(cache);
    if (virtual_cache.keys.empty()) {
        virtual_cache.keys.resize(model.config().layers);
        virtual_cache.values.resize(model.config().layers);
    }

    auto has_edit_in = [&](std::size_t lo, std::size_t hi) {  // [lo, hi)
        for (std::size_t j : edits.edit_positions)
            if (j >= lo && j < hi) return true;
        return false;
    };

    for (std::size_t s = 1; s <= cfg.horizon; ++s) {
        const std::size_t pos = step + s - 1;  // output position read from phi
        if (pos >= total) break;

        if (edits.is_edit(pos)) {
            const auto target = static_cast<std::size_t>(edits.edited[pos]);
            const auto source = static_cast<std::size_t>(edits.input[pos]);
            Var margin = vsub(vpick(phi, target), vpick(phi, source));
            build.edit_margins.emplace_back(pos, margin->value[0]);
            objective = objective ? vadd(objective, margin) : margin;
        }
        if (s == 1 && cfg.lambda_fact > 0.0) {
            // Anchor on the input's own next token, immediate step only.
            Var anchor = vscale(vpick(phi, static_cast<std::size_t>(edits.input[pos])),
                                cfg.lambda_fact);
            objective = objective ? vadd(objective, anchor) : anchor;
        }

        // Unroll further only while some edit still lies inside the horizon.
        const bool need_more = s < cfg.horizon && pos + 1 < total &&
                               has_edit_in(pos + 1, step + cfg.horizon);
        if (!need_more) break;
        if (virtual_cache.length >= model.config().max_seq_len) break;

        Var y = vsoftmax(phi, cfg.beta_g);
        Var m = vrow(vmatmul(vas_row(y), params.tok_embed), 0);
        TransitionGraph tg = transition_step_graph(params, model.config(), virtual_cache, m);
        virtual_cache = tg.extended;
        phi = head_logits(params, tg.hidden);
    }

    build.value = objective ? objective : make_var(Tensor::scalar(0.0), "zero_objective");
    return build;
}

}  // namespace

LookaheadObjective lookahead_objective(const TinyTransformer& model, const LookaheadState& state,
                                       const EditSpec& edits, const EditConfig& cfg) {
    GraphParams params = lift_parameters(model);
    ObjectiveBuild b = build_objective(model, params, state.hidden, state.cache, state.step,
                                       edits, cfg);
    return {b.value, b.leaf, std::move(b.edit_margins)};
}

LaStepResult la_hdmi_step(const TinyTransformer& model, const LookaheadState& state,
                          const EditSpec& edits, const EditConfig& cfg) {
    cfg.validate();
    GraphParams params = lift_parameters(model);

    LaStepResult result;
    result.diag.step = state.step;

    Tensor h = state.hidden;
    for (std::size_t k = 0; k < cfg.inner_steps; ++k) {
        ObjectiveBuild b =
            build_objective(model, params, h, state.cache, state.step, edits, cfg);
        Tensor grad = backward_or_zero(b.value, b.leaf);
        if (k == 0) {
            result.diag.objective_before = b.value->value[0];
            result.diag.gradient_norm = grad.norm2();
        }
        h += grad * cfg.step_size;
    }
    {
        ObjectiveBuild b = build_objective(model, params, h, state.cache, state.step, edits, cfg);
        result.diag.objective_after = b.value->value[0];
        result.diag.edit_margins = std::move(b.edit_margins);
    }

    // Display token under the low forward temperature, lowest id on ties.
    Tensor logits = matvec(model.unembedding(), h) + model.unembedding_bias();
    Tensor y = softmax(logits, cfg.beta_f);
    const std::size_t display = argmax_lowest_id(y);
    result.display_token = static_cast<int>(display);
    result.diag.display_token = result.display_token;

    std::vector<std::pair<int, double>> ranked;
    for (std::size_t i = 0; i < y.size(); ++i) ranked.emplace_back(static_cast<int>(i), y[i]);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i)
        result.diag.top3.push_back(ranked[i]);

    // The forward pass continues with the expected embedding, not the token.
    Tensor m = matvec(transpose(model.token_embedding()), y);
    auto [h_next, cache_next] = transition_step(model, state.cache, m);

    result.state.cache = std::move(cache_next);
    result.state.hidden = std::move(h_next);
    result.state.expected_embedding = std::move(m);
    result.state.step = state.step + 1;
    return result;
}

GenerateResult la_hdmi_generate(const TinyTransformer& model, const EditSpec& edits,
                                const EditConfig& cfg) {
    cfg.validate();
    if (edits.input.empty()) throw InputError("la_hdmi_generate: input must be nonempty");
    const std::size_t total = edits.length();
    if (total > model.config().max_seq_len)
        throw InputError("la_hdmi_generate: sequence exceeds max_seq_len");

    GenerateResult out;
    // The first token is given; feed its embedding row to start the chain.
    Tensor first({model.config().embed_size});
    for (std::size_t c = 0; c < first.size(); ++c)
        first[c] = model.token_embedding().at(static_cast<std::size_t>(edits.input[0]), c);

    LookaheadState state;
    auto [h0, cache0] = transition_step(model, state.cache, first);
    state.cache = std::move(cache0);
    state.hidden = std::move(h0);
    state.expected_embedding = std::move(first);
    state.step = 1;
    out.tokens.push_back(edits.input[0]);

    for (std::size_t t = 1; t < total; ++t) {
        LaStepResult step = la_hdmi_step(model, state, edits, cfg);
        out.tokens.push_back(step.display_token);
        out.diagnostics.push_back(std::move(step.diag));
        state = std::move(step.state);
    }
    return out;
}

}  // namespace hdmi
