#pragma once

#include <cstddef>

#include "dtn/ops.hpp"
#include "dtn/rng.hpp"
#include "dtn/tensor.hpp"

namespace dtn {

// Diversity-transfer feature generator: two mapping blocks phi1 (C -> C') and
// phi2 (C' -> C), each affine -> leaky ReLU -> dropout. The latent offset of a
// same-class reference pair is composited onto a support feature between them.
struct GeneratorParams {
    Tensor phi1_weight;  // [C x C']
    Tensor phi1_bias;    // [C']
    Tensor phi2_weight;  // [C' x C]
    Tensor phi2_bias;    // [C]
    std::size_t feature_dim = 0;  // C
    std::size_t latent_dim = 0;   // C'
    double dropout_rate = 0.3;
    double leaky_slope = 0.2;
};

GeneratorParams init_generator(std::size_t feature_dim, std::size_t latent_dim,
                               double dropout_rate, double leaky_slope, SeededRng& rng);

// phi1 block: affine -> leaky ReLU -> dropout. Output is NOT normalized.
Tensor phi1_map(Tape& tape, const GeneratorParams& params, const Tensor& z, bool training,
                SeededRng& rng);

// phi2 block over an already-composited latent batch, then row normalization.
Tensor phi2_map(Tape& tape, const GeneratorParams& params, const Tensor& latent, bool training,
                SeededRng& rng);

// One support row, one reference pair:
//   l2_normalize(phi2(phi1(z_s) + (phi1(z_r1) - phi1(z_r2)))).
Tensor generate(Tape& tape, const GeneratorParams& params, const Tensor& z_support,
                const Tensor& z_ref1, const Tensor& z_ref2, bool training, SeededRng& rng);

// All supports x all reference pairs. z_support: [N*K x C], refs: [H x C] each.
// Output: [N*K*H x C], row s*H + h generated from (support s, pair h). The H
// pairs are shared across every support of the episode. H = 0 yields an empty
// [0 x C] tensor.
Tensor generate_batch(Tape& tape, const GeneratorParams& params, const Tensor& z_support,
                      const Tensor& z_ref1, const Tensor& z_ref2, bool training, SeededRng& rng);

}  // namespace dtn
