#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hdmi/interventions.hpp"
#include "hdmi/lookahead.hpp"
#include "testutil.hpp"

using namespace hdmi;
using namespace hdmi::testutil;

namespace {

ModelConfig la_config(std::uint64_t seed = 7) {
    ModelConfig cfg;
    cfg.vocab_size = 20;
    cfg.hidden_size = 16;
    cfg.embed_size = 16;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.max_seq_len = 24;
    cfg.seed = seed;
    return cfg;
}

LookaheadState consume_prefix(const TinyTransformer& model, const std::vector<int>& prefix) {
    LookaheadState state;
    for (int tok : prefix) {
        Tensor emb({model.config().embed_size});
        for (std::size_t c = 0; c < emb.size(); ++c)
            emb[c] = model.token_embedding().at(static_cast<std::size_t>(tok), c);
        auto [h, cache] = transition_step(model, state.cache, emb);
        state.cache = std::move(cache);
        state.hidden = std::move(h);
        state.expected_embedding = std::move(emb);
        ++state.step;
    }
    return state;
}

Tensor head_logits_of(const TinyTransformer& model, const Tensor& hidden) {
    return matvec(model.unembedding(), hidden) + model.unembedding_bias();
}

}  // namespace

TEST_CASE("edit spec derives the edit set") {
    EditSpec spec = EditSpec::from_sequences({1, 2, 3, 4}, {1, 5, 3, 6});
    CHECK(spec.edit_positions == std::vector<std::size_t>{1, 3});
    CHECK(spec.is_edit(1));
    CHECK_FALSE(spec.is_edit(0));
    CHECK(spec.length() == 4);

    EditSpec empty = EditSpec::from_sequences({1, 2, 3}, {1, 2, 3});
    CHECK(empty.edit_positions.empty());

    // Length mismatch: positions beyond min(T_in, T_ed) are out of scope.
    EditSpec shorter = EditSpec::from_sequences({1, 2, 3, 4, 5}, {1, 9});
    CHECK(shorter.length() == 2);
    CHECK(shorter.edit_positions == std::vector<std::size_t>{1});

    CHECK_THROWS_AS(EditSpec::from_sequences({}, {1}), InputError);
}

TEST_CASE("edit config validation") {
    EditConfig ok;
    ok.validate();

    EditConfig bad = ok;
    bad.horizon = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.beta_f = 1.0;
    bad.beta_g = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.lambda_fact = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.inner_steps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("objective with no edits and full anchor is the anchored logit") {
    TinyTransformer model(la_config());
    std::vector<int> input{3, 8, 5, 11, 2};
    EditSpec edits = EditSpec::from_sequences(input, input);
    LookaheadState state = consume_prefix(model, {3, 8});

    EditConfig cfg;
    cfg.lambda_fact = 1.0;
    LookaheadObjective obj = lookahead_objective(model, state, edits, cfg);
    Tensor logits = head_logits_of(model, state.hidden);
    CHECK(obj.value->value[0] ==
          doctest::Approx(logits[static_cast<std::size_t>(input[2])]).epsilon(1e-12));
    CHECK(obj.edit_margins.empty());
}

TEST_CASE("single-step reduction recovers the margin objective") {
    TinyTransformer model(la_config());
    std::vector<int> input{3, 8, 5, 11};
    std::vector<int> edited = input;
    edited[2] = 14;  // the immediately next position is the only edit
    EditSpec edits = EditSpec::from_sequences(input, edited);
    LookaheadState state = consume_prefix(model, {3, 8});

    EditConfig cfg;
    cfg.horizon = 1;
    cfg.lambda_fact = 0.0;
    LookaheadObjective obj = lookahead_objective(model, state, edits, cfg);
    Tensor logits = head_logits_of(model, state.hidden);
    CHECK(obj.value->value[0] ==
          doctest::Approx(margin_loss(logits, {{14}, {5}})).epsilon(1e-12));
    REQUIRE(obj.edit_margins.size() == 1);
    CHECK(obj.edit_margins[0].first == 2);
}

TEST_CASE("objective is identically zero with no edits and no anchor") {
    TinyTransformer model(la_config());
    std::vector<int> input{3, 8, 5, 11};
    EditSpec edits = EditSpec::from_sequences(input, input);
    LookaheadState state = consume_prefix(model, {3, 8});

    EditConfig cfg;
    cfg.lambda_fact = 0.0;
    LookaheadObjective obj = lookahead_objective(model, state, edits, cfg);
    CHECK(obj.value->value[0] == 0.0);
    Tensor g = backward_or_zero(obj.value, obj.hidden_leaf);
    CHECK(g.norm2() == 0.0);
}

TEST_CASE("gradient flows through the virtual chain to a future-only edit") {
    TinyTransformer model(la_config());
    std::vector<int> input{3, 8, 5, 11, 2, 7};
    std::vector<int> edited = input;
    edited[3] = 15;  // edit at step+1, reachable only through the unroll
    EditSpec edits = EditSpec::from_sequences(input, edited);
    LookaheadState state = consume_prefix(model, {3, 8});

    EditConfig cfg;
    cfg.horizon = 3;
    cfg.lambda_fact = 0.0;
    LookaheadObjective obj = lookahead_objective(model, state, edits, cfg);
    Tensor g = backward_or_zero(obj.value, obj.hidden_leaf);
    CHECK(g.norm2() > 1e-8);

    // And the gradient matches finite differences through the whole chain.
    Tensor fd = finite_difference(
        [&](const Tensor& h) {
            LookaheadState s = state;
            s.hidden = h;
            return lookahead_objective(model, s, edits, cfg).value->value[0];
        },
        state.hidden);
    CHECK(rel_error(g, fd) < 1e-3);
}

TEST_CASE("zero step size displays the model's own greedy token") {
    TinyTransformer model(la_config());
    std::vector<int> input{3, 8, 5, 11};
    EditSpec edits = EditSpec::from_sequences(input, input);
    LookaheadState state = consume_prefix(model, {3});

    EditConfig cfg;
    cfg.step_size = 0.0;
    cfg.beta_f = 0.01;
    LaStepResult step = la_hdmi_step(model, state, edits, cfg);
    Tensor clean = forward_logits(model, {3});
    CHECK(step.display_token == static_cast<int>(argmax_lowest_id(clean)));
    CHECK(step.state.step == 2);
    CHECK(step.diag.top3.size() == 3);
}

TEST_CASE("pure regeneration of a greedy sequence matches greedy decode") {
    TinyTransformer model(la_config(21));
    for (int seed_tok : {2, 5, 9, 13}) {
        std::vector<int> greedy = greedy_decode(model, {seed_tok}, 7);
        EditSpec edits = EditSpec::from_sequences(greedy, greedy);
        EditConfig cfg;
        cfg.beta_f = 0.01;
        cfg.lambda_fact = 1.0;
        GenerateResult gen = la_hdmi_generate(model, edits, cfg);
        CHECK(gen.tokens == greedy);
        CHECK(gen.diagnostics.size() == greedy.size() - 1);
    }
}

TEST_CASE("a single-token edit is realized at the edit position") {
    TinyTransformer model(la_config(33));
    std::vector<int> input = greedy_decode(model, {4}, 7);
    for (std::size_t pos : {2ul, 4ul, 6ul}) {
        std::vector<int> edited = input;
        edited[pos] = (input[pos] + 5) % 20;
        EditSpec edits = EditSpec::from_sequences(input, edited);
        EditConfig cfg;
        cfg.step_size = 2.0;
        cfg.inner_steps = 10;
        cfg.beta_f = 0.01;
        GenerateResult gen = la_hdmi_generate(model, edits, cfg);
        REQUIRE(gen.tokens.size() == input.size());
        CHECK(gen.tokens[pos] == edited[pos]);
    }
}

TEST_CASE("objective increases across inner ascent steps for small alpha") {
    TinyTransformer model(la_config(9));
    std::vector<int> input = greedy_decode(model, {6}, 6);
    std::vector<int> edited = input;
    edited[3] = (input[3] + 7) % 20;
    EditSpec edits = EditSpec::from_sequences(input, edited);
    LookaheadState state = consume_prefix(model, {input[0], input[1]});

    EditConfig cfg;
    cfg.step_size = 1e-2;
    cfg.lambda_fact = 0.5;
    Tensor h = state.hidden;
    double prev = -1e300;
    for (int k = 0; k < 10; ++k) {
        LookaheadState s = state;
        s.hidden = h;
        LookaheadObjective obj = lookahead_objective(model, s, edits, cfg);
        CHECK(obj.value->value[0] >= prev - 1e-12);
        prev = obj.value->value[0];
        Tensor g = backward_or_zero(obj.value, obj.hidden_leaf);
        h += g * cfg.step_size;
    }

    // la_hdmi_step reports the same monotone improvement.
    LaStepResult step = la_hdmi_step(model, state, edits, cfg);
    CHECK(step.diag.objective_after >= step.diag.objective_before - 1e-12);
    CHECK(step.diag.gradient_norm > 0.0);
}

TEST_CASE("near-one-hot display distributions commit the argmax embedding") {
    TinyTransformer model(la_config(15));
    std::vector<int> input = greedy_decode(model, {2}, 6);
    EditSpec edits = EditSpec::from_sequences(input, input);
    EditConfig cfg;
    cfg.beta_f = 0.01;
    cfg.lambda_fact = 1.0;

    LookaheadState state = consume_prefix(model, {input[0]});
    LaStepResult step = la_hdmi_step(model, state, edits, cfg);
    // top-1 probability under beta_f = 0.01.
    const double top1 = step.diag.top3[0].second;
    if (top1 > 1.0 - 1e-8) {
        Tensor row({model.config().embed_size});
        for (std::size_t c = 0; c < row.size(); ++c)
            row[c] = model.token_embedding().at(static_cast<std::size_t>(step.display_token), c);
        CHECK(max_abs_diff(step.state.expected_embedding, row) <= 1e-6);
    } else {
        WARN("top-1 probability not saturated in this configuration");
    }
}

TEST_CASE("generation stops at the shorter of input and edit") {
    TinyTransformer model(la_config());
    std::vector<int> input{3, 8, 5, 11, 2, 7};
    std::vector<int> edited{3, 8, 5};
    EditSpec edits = EditSpec::from_sequences(input, edited);
    GenerateResult gen = la_hdmi_generate(model, edits, EditConfig{});
    CHECK(gen.tokens.size() == 3);
}
