#pragma once

#include <cstddef>
#include <vector>

#include "dtn/ops.hpp"
#include "dtn/rng.hpp"
#include "dtn/tensor.hpp"

namespace dtn {

// MLP feature extractor: raw input vectors -> L2-normalized C-dimensional
// features. Hidden layers use leaky ReLU (slope 0.2); the final affine output
// is row-normalized, so every feature lands on the unit sphere.
struct ExtractorParams {
    struct Layer {
        Tensor weight;
        Tensor bias;
    };
    std::vector<Layer> layers;
    std::size_t input_dim = 0;
    std::size_t feature_dim = 0;  // C
    double leaky_slope = 0.2;
};

// Glorot-uniform weights, zero biases. hidden_dims may be empty (single affine).
ExtractorParams init_extractor(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                               std::size_t feature_dim, SeededRng& rng);

// Fan-based uniform init shared with the generator and auxiliary head.
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, SeededRng& rng);

Tensor extract(Tape& tape, const ExtractorParams& params, const Tensor& x, bool training);

}  // namespace dtn
