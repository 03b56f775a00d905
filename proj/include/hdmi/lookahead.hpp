#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hdmi/model.hpp"
#include "hdmi/tensor.hpp"

namespace hdmi {

/// A user edit: the original token sequence, the edited sequence, and the
/// derived set of positions where they disagree. An empty edit set means
/// pure regeneration.
struct EditSpec {
    std::vector<int> input;
    std::vector<int> edited;
    std::vector<std::size_t> edit_positions;  // M, 0-based

    static EditSpec from_sequences(std::vector<int> input, std::vector<int> edited);

    std::size_t length() const { return std::min(input.size(), edited.size()); }
    bool is_edit(std::size_t pos) const;
};

// Defaults picked by a small grid against the trained desk-scale model:
// step sizes below 1 fail to realize edits against its margins, and larger
// anchors fight the edit terms.
struct EditConfig {
    std::size_t horizon = 4;       // S_max: virtual steps contributing margins
    double beta_f = 0.05;          // low forward temperature (display path)
    double beta_g = 1.0;           // near-1 gradient temperature (lookahead path)
    double lambda_fact = 0.5;      // anchor on the input's own next token
    double step_size = 1.0;        // alpha
    std::size_t inner_steps = 10;  // K

    void validate() const;
};

struct LookaheadState {
    DecodeCache cache;
    Tensor hidden;              // h_t after consuming `step` tokens
    Tensor expected_embedding;  // m committed at the previous step
    std::size_t step = 0;       // tokens consumed so far
};

struct LookaheadObjective {
    Var value;
    Var hidden_leaf;
    // Margin value per in-horizon edit position at this evaluation.
    std::vector<std::pair<std::size_t, double>> edit_margins;
};

/// Cumulative future-edit margin from the current hidden state: the s=1 term
/// reads the head directly; later terms flow through softmax(beta_g) ->
/// expected embedding -> decoder transition, all differentiable. The anchor
/// term applies at the immediate step only.
LookaheadObjective lookahead_objective(const TinyTransformer& model, const LookaheadState& state,
                                       const EditSpec& edits, const EditConfig& cfg);

struct StepDiagnostics {
    std::size_t step = 0;  // output position produced by this step
    double objective_before = 0.0;
    double objective_after = 0.0;
    double gradient_norm = 0.0;  // at the first inner step
    int display_token = -1;
    std::vector<std::pair<int, double>> top3;
    std::vector<std::pair<std::size_t, double>> edit_margins;
};

struct LaStepResult {
    int display_token = -1;
    LookaheadState state;
    StepDiagnostics diag;
};

/// K inner ascent steps on h_t, then the display token under beta_f and the
/// expected-embedding commit that keeps the forward chain differentiable.
LaStepResult la_hdmi_step(const TinyTransformer& model, const LookaheadState& state,
                          const EditSpec& edits, const EditConfig& cfg);

struct GenerateResult {
    std::vector<int> tokens;
    std::vector<StepDiagnostics> diagnostics;
};

/// Regenerates positions 1..min(T_in,T_ed)-1 from the input's first token,
/// steering each step by the lookahead objective.
GenerateResult la_hdmi_generate(const TinyTransformer& model, const EditSpec& edits,
                                const EditConfig& cfg);

}  // namespace hdmi
