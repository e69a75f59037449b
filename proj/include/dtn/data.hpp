#pragma once

#include <cstdint>
#include <string>

#include "dtn/episodes.hpp"
#include "dtn/rng.hpp"

namespace dtn {

// Synthetic classification data with transferable intra-class diversity: all
// classes share one variation basis V, so the offset between two samples of a
// seen class is informative about the spread of an unseen class.
struct SyntheticSpec {
    std::size_t class_count = 20;
    std::size_t dim = 16;
    std::size_t samples_per_class = 60;
    std::size_t variation_dims = 6;   // V_d
    double variation_scale = 1.0;
    double noise_scale = 0.3;
    std::uint64_t seed = 7;
};

// Per class c: mean mu_c = 4 * (unit-sphere draw); sample x = mu_c + V*a + eps
// with a ~ N(0, variation_scale^2 I_{V_d}), eps ~ N(0, noise_scale^2 I_dim)
// and V a shared dim x V_d orthonormal basis.
Dataset gen_synthetic(const SyntheticSpec& spec);

// The exact basis V a given spec draws (columns as rows); the within-class
// covariance is variation_scale^2 V V^T + noise_scale^2 I.
std::vector<std::vector<double>> synthetic_variation_basis(const SyntheticSpec& spec);

// Embedding text format: line 1 "dtn-embed v1 dim=<D>", then one
// "<class_label>,<v1>,...,<vD>" line per item, floats at round-trip precision.
Dataset load_embeddings(const std::string& path);
void save_embeddings(const Dataset& ds, const std::string& path);

}  // namespace dtn
