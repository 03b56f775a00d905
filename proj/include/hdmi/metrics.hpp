#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdmi/tensor.hpp"

namespace hdmi {

/// Total variation distance between two distributions of equal length.
double tv_distance(const Tensor& p, const Tensor& q);

/// 1 - TV(p_after, one_hot(z')): how close the causal-probe posterior landed
/// on the counterfactual value.
double completeness(const Tensor& p_after, std::size_t counterfactual_class);

/// m(p) = max{1 - min_i p_i, max_i p_i}: the largest TV shift any
/// intervention could cause from p.
double max_tv_shift(const Tensor& p);

/// 1 - TV(p_after, p_before) / m(p_before), clamped into [0,1]. Clamps are
/// counted, not raised.
double selectivity(const Tensor& p_before, const Tensor& p_after);

std::uint64_t selectivity_clamp_count();
void reset_selectivity_clamp_count();

/// Harmonic mean of completeness and selectivity; 0 when both are 0.
double reliability(double comp, double sel);

struct MetricsRecord {
    std::string task;
    std::string method;
    double completeness = 0.0;
    double selectivity = 0.0;
    double reliability = 0.0;
    std::size_t n_samples = 0;
};

std::string metrics_tsv_header();
std::string metrics_tsv_row(const MetricsRecord& r);

}  // namespace hdmi
