#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdmi/tensor.hpp"

namespace hdmi {

/// One affine-head margin problem: logits z(h) = W h + b, margin between a
/// target row and a source row, perturbations bounded in l2 by epsilon.
struct TheoryInstance {
    Tensor w;  // [V x D]
    Tensor b;  // [V]
    Tensor h;  // [D]
    std::size_t tau = 0;
    std::size_t sigma = 1;
    double epsilon = 1.0;

    Tensor row_difference() const;  // d = w_tau - w_sigma
    double margin(const Tensor& state) const;

    static TheoryInstance random(std::size_t vocab, std::size_t dim, Rng& rng, double epsilon);
};

struct OptimalDelta {
    Tensor delta;
    double gain = 0.0;
};

/// Margin-optimal perturbation: delta* = eps * d / |d|, gain = eps * |d|.
OptimalDelta optimal_margin_delta(const TheoryInstance& inst);

struct TargetOnlyDelta {
    Tensor delta;
    double margin_gain = 0.0;
    double cos_theta = 0.0;
};

/// l2-optimal update that maximizes the target logit alone; its margin gain
/// is eps * |d| * cos(theta) and can be negative.
TargetOnlyDelta target_only_delta(const TheoryInstance& inst);

/// Rows chosen as w_tau = u, w_sigma = 2u, the constructive case where the
/// target-only update strictly decreases the margin.
TheoryInstance build_failure_case(const Tensor& u, double epsilon);

/// Best margin gain over `n_directions` uniform unit directions scaled to
/// the ball radius; a brute-force lower bound on the optimum.
double brute_force_best_gain(const TheoryInstance& inst, std::size_t n_directions, Rng& rng);

struct TheoryCheck {
    std::string name;
    bool passed = false;
    double worst = 0.0;  // worst observed deviation
    std::string detail;
};

/// Runs every numeric check over `n_instances` random instances (dim <= 16,
/// vocab <= 32) plus the failure construction. All tolerances are fixed.
std::vector<TheoryCheck> verify_margin_theory(std::size_t n_instances, std::uint64_t seed);

}  // namespace hdmi
