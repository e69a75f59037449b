#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "dtn/api.hpp"
#include "dtn/checkpoint.hpp"
#include "dtn/data.hpp"

using namespace dtn;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("gen_synthetic: seeded draws are bit-reproducible with distinct class means") {
    SyntheticSpec spec;
    spec.class_count = 6;
    spec.samples_per_class = 4;
    const Dataset a = gen_synthetic(spec);
    const Dataset b = gen_synthetic(spec);
    REQUIRE(a.items.size() == 24);
    for (std::size_t i = 0; i < a.items.size(); ++i) CHECK(a.items[i].x == b.items[i].x);

    // class means pairwise distinct
    std::set<std::vector<double>> firsts;
    for (int c = 0; c < 6; ++c) {
        firsts.insert(a.items[a.class_items[static_cast<std::size_t>(c)][0]].x);
    }
    CHECK(firsts.size() == 6);
}

TEST_CASE("gen_synthetic: zero scales collapse every sample onto the class mean") {
    SyntheticSpec spec;
    spec.class_count = 3;
    spec.samples_per_class = 5;
    spec.variation_scale = 0.0;
    spec.noise_scale = 0.0;
    const Dataset ds = gen_synthetic(spec);
    for (int c = 0; c < 3; ++c) {
        const auto& members = ds.class_items[static_cast<std::size_t>(c)];
        for (std::size_t idx : members) CHECK(ds.items[idx].x == ds.items[members[0]].x);
    }
}

TEST_CASE("gen_synthetic: within-class covariance matches vs^2 VV^T + ns^2 I") {
    SyntheticSpec spec;
    spec.class_count = 1;
    spec.samples_per_class = 10000;
    spec.dim = 8;
    spec.variation_dims = 3;
    spec.variation_scale = 0.9;
    spec.noise_scale = 0.4;
    spec.seed = 19;
    const Dataset ds = gen_synthetic(spec);
    const auto basis = synthetic_variation_basis(spec);

    const std::size_t d = spec.dim;
    std::vector<double> mean(d, 0.0);
    for (const auto& item : ds.items) {
        for (std::size_t i = 0; i < d; ++i) mean[i] += item.x[i];
    }
    for (double& m : mean) m /= static_cast<double>(ds.items.size());

    std::vector<double> cov(d * d, 0.0);
    for (const auto& item : ds.items) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                cov[i * d + j] += (item.x[i] - mean[i]) * (item.x[j] - mean[j]);
            }
        }
    }
    for (double& c : cov) c /= static_cast<double>(ds.items.size() - 1);

    std::vector<double> expected(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) expected[i * d + i] = spec.noise_scale * spec.noise_scale;
    for (const auto& col : basis) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                expected[i * d + j] += spec.variation_scale * spec.variation_scale * col[i] * col[j];
            }
        }
    }

    double diff_sq = 0.0, ref_sq = 0.0;
    for (std::size_t i = 0; i < d * d; ++i) {
        diff_sq += (cov[i] - expected[i]) * (cov[i] - expected[i]);
        ref_sq += expected[i] * expected[i];
    }
    CHECK(std::sqrt(diff_sq / ref_sq) < 0.05);
}

TEST_CASE("gen_synthetic: variation_dims > dim is a configuration error") {
    SyntheticSpec spec;
    spec.dim = 4;
    spec.variation_dims = 5;
    CHECK_THROWS_AS(gen_synthetic(spec), ConfigError);
}

TEST_CASE("embeddings: a 3-row file parses into 3 items") {
    const std::string path = temp_path("dtn_test_3row.embed");
    std::ofstream(path) << "dtn-embed v1 dim=4\n"
                        << "a,1,2,3,4\n"
                        << "b,0.5,-0.5,0.25,-0.25\n"
                        << "a,1,2,3,4\n";  // duplicate content, distinct item
    const Dataset ds = load_embeddings(path);
    CHECK(ds.items.size() == 3);
    CHECK(ds.dim == 4);
    CHECK(ds.num_classes() == 2);
    CHECK(ds.items[0].x == std::vector<double>{1, 2, 3, 4});
    CHECK(ds.items[2].class_id == ds.items[0].class_id);
    std::remove(path.c_str());
}

TEST_CASE("embeddings: malformed rows fail with the line number") {
    const std::string path = temp_path("dtn_test_bad.embed");

    std::ofstream(path) << "dtn-embed v1 dim=3\nok,1,2,3\nshort,1,2\n";
    CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains(":3:"), ParseError);

    std::ofstream(path) << "dtn-embed v1 dim=2\nx,1,nan\n";
    CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("non-finite"), ParseError);

    std::ofstream(path) << "dtn-embed v1 dim=2\nx,1,zzz\n";
    CHECK_THROWS_AS(load_embeddings(path), ParseError);

    std::ofstream(path) << "wrong header\n";
    CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains(":1:"), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("embeddings: write -> read preserves every value exactly") {
    SyntheticSpec spec;
    spec.class_count = 4;
    spec.samples_per_class = 6;
    spec.dim = 5;
    spec.variation_dims = 2;
    const Dataset ds = gen_synthetic(spec);

    const std::string path = temp_path("dtn_test_roundtrip.embed");
    save_embeddings(ds, path);
    const Dataset loaded = load_embeddings(path);
    REQUIRE(loaded.items.size() == ds.items.size());
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        CHECK(loaded.items[i].x == ds.items[i].x);  // %.17g round-trips doubles bit-exactly
        CHECK(loaded.class_names[static_cast<std::size_t>(loaded.items[i].class_id)] ==
              ds.class_names[static_cast<std::size_t>(ds.items[i].class_id)]);
    }
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
    SeededRng init(55);
    ModelConfig mc;
    mc.input_dim = 6;
    mc.hidden_dims = {8};
    mc.feature_dim = 4;
    mc.latent_dim = 5;
    mc.n_aux_classes = 3;
    ModelState state = init_model(mc, init);
    state.step_count = 17;

    Checkpoint ckpt = checkpoint_from_model(state);
    ckpt.schedule_string = "AAM";
    ckpt.next_epoch = 2;
    ckpt.rng_states.emplace_back("episodes", SeededRng(1).state());

    const std::string p1 = temp_path("dtn_test_ck1.dtnc");
    const std::string p2 = temp_path("dtn_test_ck2.dtnc");
    save_checkpoint(ckpt, p1);
    const Checkpoint loaded = load_checkpoint(p1);
    save_checkpoint(loaded, p2);
    CHECK(read_file(p1) == read_file(p2));

    // restored model matches the original bit-exactly
    SeededRng init2(99);
    ModelState other = init_model(mc, init2);
    restore_model(other, loaded);
    const auto a = state.named_parameters();
    const auto b = other.named_parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].second.values() == b[i].second.values());
    CHECK(other.step_count == 17);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("checkpoint: truncation and version bumps are structured errors") {
    SeededRng init(56);
    ModelConfig mc;
    mc.input_dim = 4;
    mc.hidden_dims = {};
    mc.feature_dim = 3;
    mc.latent_dim = 3;
    mc.n_aux_classes = 2;
    const ModelState state = init_model(mc, init);
    const std::string path = temp_path("dtn_test_ck3.dtnc");
    save_checkpoint(checkpoint_from_model(state), path);

    std::string bytes = read_file(path);

    const std::string truncated_path = temp_path("dtn_test_ck4.dtnc");
    std::ofstream(truncated_path, std::ios::binary)
        << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_WITH_AS(load_checkpoint(truncated_path), doctest::Contains("truncated"),
                         CheckpointError);

    bytes[4] = 2;  // version field
    const std::string version_path = temp_path("dtn_test_ck5.dtnc");
    std::ofstream(version_path, std::ios::binary) << bytes;
    CHECK_THROWS_WITH_AS(load_checkpoint(version_path), doctest::Contains("version"),
                         CheckpointError);

    const std::string garbage_path = temp_path("dtn_test_ck6.dtnc");
    std::ofstream(garbage_path, std::ios::binary) << "not a checkpoint at all";
    CHECK_THROWS_AS(load_checkpoint(garbage_path), CheckpointError);

    for (const auto& p : {path, truncated_path, version_path, garbage_path}) {
        std::remove(p.c_str());
    }
}

TEST_CASE("run config text round-trips through apply_config_text") {
    RunConfig cfg;
    cfg.seed = 42;
    cfg.episode.n_way = 3;
    cfg.episode.n_pairs = 7;
    cfg.schedule.kind = ScheduleKind::At;
    cfg.schedule.at_decay = 0.85;
    cfg.train.lr_meta = 0.0025;
    cfg.model.feature_dim = 32;
    cfg.synthetic.noise_scale = 0.17;
    cfg.merge_val = false;

    RunConfig parsed;
    apply_config_text(parsed, run_config_text(cfg));
    CHECK(parsed.seed == 42);
    CHECK(parsed.episode.n_way == 3);
    CHECK(parsed.episode.n_pairs == 7);
    CHECK(parsed.schedule.kind == ScheduleKind::At);
    CHECK(parsed.schedule.at_decay == 0.85);
    CHECK(parsed.train.lr_meta == 0.0025);
    CHECK(parsed.model.feature_dim == 32);
    CHECK(parsed.synthetic.noise_scale == 0.17);
    CHECK(parsed.merge_val == false);

    CHECK_THROWS_AS(apply_key_value(parsed, "no_such_key", "1"), ConfigError);
}
