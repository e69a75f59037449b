#include "dtn/model.hpp"

namespace dtn {

ModelState init_model(const ModelConfig& config, SeededRng& rng) {
    ModelState state;
    state.config = config;
    state.extractor =
        init_extractor(config.input_dim, config.hidden_dims, config.feature_dim, rng);
    state.extractor.leaky_slope = config.leaky_slope;
    state.generator = init_generator(config.feature_dim, config.latent_dim, config.dropout_rate,
                                     config.leaky_slope, rng);
    state.aux_head =
        init_auxiliary_head(config.n_aux_classes, config.feature_dim, config.alpha_init, rng);
    state.aux_head.normalize_rows = config.aux_normalize_rows;
    state.meta_alpha.alpha = Tensor::scalar(config.alpha_init, /*requires_grad=*/true);
    return state;
}

std::vector<std::pair<std::string, Tensor>> ModelState::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t i = 0; i < extractor.layers.size(); ++i) {
        out.emplace_back("extractor.l" + std::to_string(i) + ".weight", extractor.layers[i].weight);
        out.emplace_back("extractor.l" + std::to_string(i) + ".bias", extractor.layers[i].bias);
    }
    out.emplace_back("generator.phi1.weight", generator.phi1_weight);
    out.emplace_back("generator.phi1.bias", generator.phi1_bias);
    out.emplace_back("generator.phi2.weight", generator.phi2_weight);
    out.emplace_back("generator.phi2.bias", generator.phi2_bias);
    out.emplace_back("aux.weights", aux_head.weights);
    out.emplace_back("aux.temperature", aux_head.temperature);
    out.emplace_back("meta.alpha", meta_alpha.alpha);
    return out;
}

bool ModelState::all_finite() const {
    for (const auto& [name, tensor] : named_parameters()) {
        (void)name;
        if (!tensor.all_finite()) return false;
    }
    return true;
}

}  // namespace dtn
