#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hdmi/tensor.hpp"

namespace hdmi {

/// Shared binary container for model and probe checkpoints: magic bytes
/// "HDMI1", a one-byte format version, a key=value config block, then the
/// tensors in declaration order as little-endian 32-bit floats. A text
/// manifest (`<path>.manifest`) lists tensor names and shapes.
struct CheckpointData {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, Tensor>> tensors;

    std::string config_value(const std::string& key) const;
};

void write_checkpoint(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& config,
                      const std::vector<std::pair<std::string, const Tensor*>>& tensors);

CheckpointData read_checkpoint(const std::string& path);

}  // namespace hdmi
