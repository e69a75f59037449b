#include "dtn/metaclassifier.hpp"

#include <cmath>
#include <string>

#include "dtn/extractor.hpp"

namespace dtn {

AuxiliaryHead init_auxiliary_head(std::size_t n_classes, std::size_t feature_dim, double alpha0,
                                  SeededRng& rng) {
    AuxiliaryHead head;
    head.weights = glorot_uniform(n_classes, feature_dim, rng);
    head.temperature = Tensor::scalar(alpha0, /*requires_grad=*/true);
    return head;
}

ProxyMatrix build_proxies(Tape& tape, const Tensor& z_support, const Tensor& z_generated,
                          const EpisodeLayout& layout) {
    const std::size_t n = layout.n_way;
    const std::size_t k = layout.k_shot;
    const std::size_t h = layout.n_pairs;
    const std::size_t cols = z_support.cols();

    if (z_support.rows() != n * k) {
        throw DimensionError("build_proxies: support rows " + std::to_string(z_support.rows()) +
                             " != N*K = " + std::to_string(n * k));
    }
    if (z_generated.rows() != n * k * h) {
        throw DimensionError("build_proxies: generated rows " +
                             std::to_string(z_generated.rows()) +
                             " != N*K*H = " + std::to_string(n * k * h));
    }

    // class n averages its K supports plus their K*H generated features
    std::vector<std::size_t> ids;
    ids.reserve(n * k * (h + 1));
    for (std::size_t row = 0; row < n * k; ++row) ids.push_back(row / k);
    Tensor pooled = z_support;
    if (h > 0) {
        for (std::size_t row = 0; row < n * k * h; ++row) ids.push_back(row / (k * h));
        pooled = ops::concat_rows(tape, z_support, z_generated);
    }
    Tensor means = ops::segment_mean(tape, pooled, ids, n);

    for (std::size_t c = 0; c < n; ++c) {
        const double* row = means.values().data() + c * cols;
        double sq = 0.0;
        for (std::size_t j = 0; j < cols; ++j) sq += row[j] * row[j];
        if (!(std::sqrt(sq) > 1e-12)) {
            throw DegenerateProxyError("build_proxies: features of episode class " +
                                       std::to_string(c) + " cancel to a near-zero proxy");
        }
    }

    ProxyMatrix proxies;
    proxies.weights = ops::l2_normalize(tape, means);
    return proxies;
}

Tensor score_query(Tape& tape, const Tensor& z_query, const ProxyMatrix& proxies) {
    return ops::matmul_nt(tape, z_query, proxies.weights);
}

Tensor meta_loss(Tape& tape, const Tensor& scores, const MetaTemperature& alpha,
                 const std::vector<int>& labels) {
    return ops::scaled_cross_entropy(tape, scores, alpha.alpha, labels);
}

Tensor auxiliary_loss(Tape& tape, const Tensor& z_batch, const AuxiliaryHead& head,
                      const std::vector<int>& labels) {
    Tensor w = head.normalize_rows ? ops::l2_normalize(tape, head.weights) : head.weights;
    Tensor scores = ops::matmul_nt(tape, z_batch, w);
    return ops::scaled_cross_entropy(tape, scores, head.temperature, labels);
}

}  // namespace dtn
