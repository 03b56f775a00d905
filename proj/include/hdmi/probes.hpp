#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdmi/tensor.hpp"

namespace hdmi {

enum class ProbeKind { linear, mlp };

struct ProbeHparams {
    double lr = 1e-2;
    double weight_decay = 1e-6;
    std::size_t batch_size = 256;
    std::size_t epochs = 100;
    double holdout_frac = 0.2;
    // Candidate hidden widths for MLP probes; the best holdout accuracy wins.
    std::vector<std::size_t> mlp_widths = {64, 256, 512};
};

/// Linear or one-hidden-layer classifier over hidden states. `trained_on`
/// records which split produced it; the pipeline refuses to let validation
/// probes touch intervened or test states.
struct ProbeModel {
    ProbeKind kind = ProbeKind::linear;
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    std::size_t hidden = 0;  // mlp only
    Tensor w, b;             // linear head: [K x D], [K]
    Tensor w1, b1, w2, b2;   // mlp: [H x D], [H], [K x H], [K]
    std::string trained_on;
    double holdout_accuracy = 0.0;
};

/// Cross-entropy training with AdamW on an internal holdout split.
/// Deterministic for a fixed seed; throws DegenerateError when fewer than
/// two classes are present.
ProbeModel train_probe(const std::vector<Tensor>& states, const std::vector<int>& labels,
                       ProbeKind kind, const ProbeHparams& hp, std::uint64_t seed,
                       const std::string& trained_on = "");

Tensor probe_logits(const ProbeModel& probe, const Tensor& state);

/// Softmax over probe logits; a valid distribution for any finite state.
Tensor probe_predict(const ProbeModel& probe, const Tensor& state);

/// Gradient of log P(target_class | state) with respect to the state.
Tensor probe_gradient(const ProbeModel& probe, const Tensor& state, int target_class);

double probe_accuracy(const ProbeModel& probe, const std::vector<Tensor>& states,
                      const std::vector<int>& labels);

void save_probe(const ProbeModel& probe, const std::string& path);
ProbeModel load_probe(const std::string& path);

}  // namespace hdmi
