#pragma once

#include <cstdint>
#include <vector>

#include "hdmi/model.hpp"
#include "hdmi/probes.hpp"
#include "hdmi/tensor.hpp"

namespace hdmi {

/// Token-id sets defining the logit-margin objective: raise every target,
/// lower every source. Singletons reduce to the pairwise margin.
struct MarginObjective {
    std::vector<int> targets;  // T+
    std::vector<int> sources;  // T-

    void validate(std::size_t vocab_size) const;
};

struct AscentConfig {
    double step_size = 1.0;  // alpha
    std::size_t steps = 30;  // K
    std::size_t layer = 0;   // 1..L

    void validate(const ModelConfig& cfg) const;
};

enum class BallNorm { linf, l2 };

struct BallConstraint {
    BallNorm norm = BallNorm::linf;
    double radius = 1.0;  // epsilon

    void validate() const;
};

/// Sum of target logits minus sum of source logits.
double margin_loss(const Tensor& logits, const MarginObjective& obj);

/// W_U^T (u+ - u-): the exact ascent direction at the top layer, independent
/// of the input because the head is affine in that hidden state.
Tensor closed_form_final_gradient(const TinyTransformer& model, const MarginObjective& obj);

struct AscentResult {
    Tensor state;   // intervened hidden state at the configured layer
    Tensor logits;  // logits after patching the intervened state back in
    double margin_before = 0.0;
    double margin_after = 0.0;
    std::vector<double> margin_trace;  // margin after each ascent step
};

/// K steps of gradient ascent on the margin objective starting from the
/// captured hidden state, patched back into the forward pass.
AscentResult hdmi_ascend(const TinyTransformer& model, const std::vector<int>& tokens,
                         const MarginObjective& obj, const AscentConfig& cfg);

/// Ablation: ascend only the summed target logits, ignoring the sources.
AscentResult target_only_ascend(const TinyTransformer& model, const std::vector<int>& tokens,
                                const MarginObjective& obj, const AscentConfig& cfg);

/// One signed (l_inf) or normalized (l2) step of size radius toward the
/// counterfactual class of the probe. sign(0) counts as +1. A zero gradient
/// under l2 returns the state unchanged.
Tensor fgsm(const Tensor& state, const ProbeModel& probe, int counterfactual_class,
            const BallConstraint& ball);

/// Iterated ascent on the counterfactual log-probability with projection
/// back onto the epsilon-ball after every step.
Tensor pgd(const Tensor& state, const ProbeModel& probe, int counterfactual_class,
           const BallConstraint& ball, std::size_t steps, double step_size);

struct InlpResult {
    Tensor projection;  // [D x D], projector onto the joint nullspace
    Tensor rowspace;    // [r x D], orthonormal rows, oriented toward class 1
};

/// Iterative nullspace projection: repeatedly fit a linear classifier on the
/// projected states and remove its direction, `rank` times.
InlpResult inlp_fit(const std::vector<Tensor>& states, const std::vector<int>& labels,
                    std::size_t rank, std::uint64_t seed);

/// Replace the rowspace component of the state with a copy forced to the
/// requested side of every classifier hyperplane, scaled by `strength`.
Tensor alterrep_apply(const Tensor& state, const Tensor& rowspace, int direction_sign,
                      double strength);

}  // namespace hdmi
