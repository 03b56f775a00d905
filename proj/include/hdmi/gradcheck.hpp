#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hdmi {

struct GradCheckRow {
    std::string name;
    double worst = 0.0;  // worst relative (or max-abs) deviation observed
    double tolerance = 0.0;
    bool passed = false;
    std::size_t cases = 0;
};

/// Numeric gradient battery over random small models: closed-form head
/// gradient vs the recorded graph, below-head margin gradients, the decoder
/// transition and the lookahead chain, each against central finite
/// differences.
std::vector<GradCheckRow> run_gradient_checks(std::size_t cases, std::uint64_t seed);

}  // namespace hdmi
