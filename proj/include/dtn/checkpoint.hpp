#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dtn/model.hpp"
#include "dtn/tensor.hpp"

namespace dtn {

// Binary container: magic "DTNC", u32 version, then length-prefixed named
// sections in insertion order. Arrays are rank + dims + little-endian f64
// payloads, so a save -> load -> save round trip is byte-identical.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    struct Array {
        Shape shape;
        std::vector<double> values;
    };

    std::string schedule_string;
    std::string config_text;                               // flat key=value lines
    std::uint64_t next_epoch = 0;
    std::uint64_t step_count = 0;
    std::vector<std::pair<std::string, std::string>> rng_states;  // stream -> engine text
    std::vector<std::pair<std::string, Array>> params;
    std::vector<std::pair<std::string, Array>> velocities;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Model-level helpers: capture/restore all named parameters. Restoring
// requires shapes to match the initialized model.
Checkpoint checkpoint_from_model(const ModelState& state);
void restore_model(ModelState& state, const Checkpoint& ckpt);

// ModelConfig <-> "model.*" key=value lines inside config_text.
std::string model_config_text(const ModelConfig& config);
ModelConfig model_config_from_text(const std::string& text);

}  // namespace dtn
