#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dtn/extractor.hpp"
#include "dtn/generator.hpp"
#include "dtn/metaclassifier.hpp"

namespace dtn {

struct ModelConfig {
    std::size_t input_dim = 16;
    std::vector<std::size_t> hidden_dims = {128, 128};
    std::size_t feature_dim = 64;    // C
    std::size_t latent_dim = 128;    // C'
    double dropout_rate = 0.3;
    double leaky_slope = 0.2;
    std::size_t n_aux_classes = 1;   // N', seen classes
    double alpha_init = 10.0;
    bool aux_normalize_rows = true;
};

// Every trainable parameter of the network: extractor F, generator G,
// auxiliary head (W', alpha') and the meta temperature alpha.
struct ModelState {
    ModelConfig config;
    ExtractorParams extractor;
    GeneratorParams generator;
    AuxiliaryHead aux_head;
    MetaTemperature meta_alpha;
    std::size_t step_count = 0;

    // Stable name -> tensor view over all trainables, used by the optimizer
    // and the checkpoint format.
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;

    bool all_finite() const;
};

ModelState init_model(const ModelConfig& config, SeededRng& rng);

}  // namespace dtn
