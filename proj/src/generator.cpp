#include "dtn/generator.hpp"

#include "dtn/extractor.hpp"

namespace dtn {

GeneratorParams init_generator(std::size_t feature_dim, std::size_t latent_dim,
                               double dropout_rate, double leaky_slope, SeededRng& rng) {
    GeneratorParams params;
    params.feature_dim = feature_dim;
    params.latent_dim = latent_dim;
    params.dropout_rate = dropout_rate;
    params.leaky_slope = leaky_slope;
    params.phi1_weight = glorot_uniform(feature_dim, latent_dim, rng);
    params.phi1_bias = Tensor::zeros(Shape{latent_dim}, true);
    params.phi2_weight = glorot_uniform(latent_dim, feature_dim, rng);
    params.phi2_bias = Tensor::zeros(Shape{feature_dim}, true);
    return params;
}

Tensor phi1_map(Tape& tape, const GeneratorParams& params, const Tensor& z, bool training,
                SeededRng& rng) {
    Tensor h = ops::affine(tape, z, params.phi1_weight, params.phi1_bias);
    h = ops::leaky_relu(tape, h, params.leaky_slope);
    return ops::dropout(tape, h, params.dropout_rate, training, rng);
}

Tensor phi2_map(Tape& tape, const GeneratorParams& params, const Tensor& latent, bool training,
                SeededRng& rng) {
    Tensor h = ops::affine(tape, latent, params.phi2_weight, params.phi2_bias);
    h = ops::leaky_relu(tape, h, params.leaky_slope);
    h = ops::dropout(tape, h, params.dropout_rate, training, rng);
    return ops::l2_normalize(tape, h);
}

Tensor generate_batch(Tape& tape, const GeneratorParams& params, const Tensor& z_support,
                      const Tensor& z_ref1, const Tensor& z_ref2, bool training, SeededRng& rng) {
    if (z_ref1.shape() != z_ref2.shape()) {
        throw DimensionError("generate_batch: reference pair shapes differ, " +
                             shape_str(z_ref1.shape()) + " vs " + shape_str(z_ref2.shape()));
    }
    const std::size_t n_support = z_support.rows();
    const std::size_t n_pairs = z_ref1.rows();
    if (n_pairs == 0) {
        // no diversity to transfer; proxies fall back to the supports alone
        return Tensor::zeros(Shape{0, params.feature_dim});
    }

    Tensor latent_s = phi1_map(tape, params, z_support, training, rng);
    Tensor latent_r1 = phi1_map(tape, params, z_ref1, training, rng);
    Tensor latent_r2 = phi1_map(tape, params, z_ref2, training, rng);

    // Composite as s + (r1 - r2): the pair offset cancels exactly when the
    // two references coincide, making the zero-diversity case bit-stable.
    Tensor offset = ops::sub(tape, latent_r1, latent_r2);
    Tensor composite = ops::add(tape, ops::repeat_rows(tape, latent_s, n_pairs),
                                ops::tile_rows(tape, offset, n_support));
    return phi2_map(tape, params, composite, training, rng);
}

Tensor generate(Tape& tape, const GeneratorParams& params, const Tensor& z_support,
                const Tensor& z_ref1, const Tensor& z_ref2, bool training, SeededRng& rng) {
    if (z_support.rows() != 1 || z_ref1.rows() != 1 || z_ref2.rows() != 1) {
        throw DimensionError("generate: expects single-row inputs, got " +
                             shape_str(z_support.shape()));
    }
    return generate_batch(tape, params, z_support, z_ref1, z_ref2, training, rng);
}

}  // namespace dtn
