#pragma once

#include <cstddef>
#include <vector>

#include "dtn/ops.hpp"
#include "dtn/rng.hpp"
#include "dtn/tensor.hpp"

namespace dtn {

// Row layout of one episode's feature batch: supports are class-major
// (class n occupies rows n*K .. n*K+K-1), generated rows are grouped by
// (support row, pair index) as produced by generate_batch.
struct EpisodeLayout {
    std::size_t n_way = 0;     // N
    std::size_t k_shot = 0;    // K
    std::size_t n_pairs = 0;   // H
};

// N-way cosine classifier built from averaged proxies. Each row has unit norm.
struct ProxyMatrix {
    Tensor weights;               // [N x C]
    std::vector<int> class_ids;   // dataset class ids per row (optional, may be empty)
};

// Trainable classifier over all seen classes, plus its temperature.
struct AuxiliaryHead {
    Tensor weights;      // [N' x C]
    Tensor temperature;  // alpha', scalar
    bool normalize_rows = true;  // L2-normalize rows before scoring
};

struct MetaTemperature {
    Tensor alpha;  // scalar
};

AuxiliaryHead init_auxiliary_head(std::size_t n_classes, std::size_t feature_dim, double alpha0,
                                  SeededRng& rng);

// w_n = normalize(mean of the K supports and K*H generated features of class n).
// A class whose features cancel below 1e-12 raises DegenerateProxyError.
ProxyMatrix build_proxies(Tape& tape, const Tensor& z_support, const Tensor& z_generated,
                          const EpisodeLayout& layout);

// Cosine scores: z_q * W^T, entries in [-1, 1].
Tensor score_query(Tape& tape, const Tensor& z_query, const ProxyMatrix& proxies);

// Temperature-scaled cross entropy over an episode's query scores.
Tensor meta_loss(Tape& tape, const Tensor& scores, const MetaTemperature& alpha,
                 const std::vector<int>& labels);

// Conventional classification loss over all seen classes.
Tensor auxiliary_loss(Tape& tape, const Tensor& z_batch, const AuxiliaryHead& head,
                      const std::vector<int>& labels);

}  // namespace dtn
