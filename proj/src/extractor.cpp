#include "dtn/extractor.hpp"

#include <cmath>

namespace dtn {

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, SeededRng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * bound;
    return Tensor::matrix(std::move(w), fan_in, fan_out, /*requires_grad=*/true);
}

ExtractorParams init_extractor(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                               std::size_t feature_dim, SeededRng& rng) {
    ExtractorParams params;
    params.input_dim = input_dim;
    params.feature_dim = feature_dim;

    std::size_t prev = input_dim;
    for (std::size_t width : hidden_dims) {
        params.layers.push_back(
            {glorot_uniform(prev, width, rng), Tensor::zeros(Shape{width}, true)});
        prev = width;
    }
    params.layers.push_back(
        {glorot_uniform(prev, feature_dim, rng), Tensor::zeros(Shape{feature_dim}, true)});
    return params;
}

Tensor extract(Tape& tape, const ExtractorParams& params, const Tensor& x, bool /*training*/) {
    if (!x.all_finite()) {
        throw DataError("extract: input contains non-finite values");
    }
    if (x.cols() != params.input_dim) {
        throw DimensionError("extract: input axis " + std::to_string(x.cols()) +
                             " does not match extractor input_dim " +
                             std::to_string(params.input_dim));
    }
    Tensor h = x;
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        h = ops::affine(tape, h, params.layers[i].weight, params.layers[i].bias);
        if (i + 1 < params.layers.size()) {
            h = ops::leaky_relu(tape, h, params.leaky_slope);
        }
    }
    return ops::l2_normalize(tape, h);
}

}  // namespace dtn
