#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "dtn/data.hpp"
#include "dtn/episodes.hpp"

using namespace dtn;

namespace {

Dataset small_synthetic(std::size_t classes = 20, std::size_t per_class = 20) {
    SyntheticSpec spec;
    spec.class_count = classes;
    spec.samples_per_class = per_class;
    spec.dim = 8;
    spec.variation_dims = 3;
    spec.seed = 5;
    return gen_synthetic(spec);
}

}  // namespace

TEST_CASE("split_dataset: 12/4/4 assignment stays disjoint") {
    Dataset ds = small_synthetic();
    std::vector<std::string> names = ds.class_names;
    std::sort(names.begin(), names.end());
    const std::vector<std::string> train(names.begin(), names.begin() + 12);
    const std::vector<std::string> val(names.begin() + 12, names.begin() + 16);
    const std::vector<std::string> test(names.begin() + 16, names.begin() + 20);

    ds = split_dataset(std::move(ds), train, val, test);
    CHECK(ds.classes_in(Split::Train).size() == 12);
    CHECK(ds.classes_in(Split::Val).size() == 4);
    CHECK(ds.classes_in(Split::Test).size() == 4);

    std::set<int> seen;
    for (Split s : {Split::Train, Split::Val, Split::Test}) {
        for (int cid : ds.classes_in(s)) CHECK(seen.insert(cid).second);
    }
}

TEST_CASE("split_dataset: overlapping lists are a configuration error") {
    Dataset ds = small_synthetic(4, 4);
    const std::string a = ds.class_names[0];
    CHECK_THROWS_AS(split_dataset(std::move(ds), {a}, {a}, {}), ConfigError);
}

TEST_CASE("split_dataset: unknown class label is a configuration error") {
    Dataset ds = small_synthetic(4, 4);
    CHECK_THROWS_AS(split_dataset(std::move(ds), {"nope"}, {}, {}), ConfigError);
}

TEST_CASE("split_dataset: merge flag folds validation into train") {
    Dataset ds = split_by_counts(small_synthetic(), 12, 4, 4, /*merge_val=*/true);
    CHECK(ds.classes_in(Split::Train).size() == 16);
    CHECK(ds.classes_in(Split::Val).empty());
    CHECK(ds.classes_in(Split::Test).size() == 4);
}

TEST_CASE("sample_episode: counts follow N, K, Q, H") {
    Dataset ds = split_by_counts(small_synthetic(), 12, 4, 4);
    EpisodeConfig cfg{5, 1, 15, 3};
    SeededRng rng(7);
    const Episode ep = sample_episode(ds, cfg, Phase::MetaTrain, rng);
    CHECK(ep.support_x.size() == 5);
    CHECK(ep.query_x.size() == 75);
    CHECK(ep.references.size() == 3);
    CHECK(ep.episode_classes.size() == 5);
}

TEST_CASE("sample_episode: test-phase references always come from train classes") {
    Dataset ds = split_by_counts(small_synthetic(), 11, 4, 5);
    EpisodeConfig cfg{5, 1, 3, 4};
    SeededRng rng(8);

    // collect the raw vectors of every train item for membership checking
    std::set<std::vector<double>> train_vectors;
    for (std::size_t idx : ds.items_in(Split::Train)) train_vectors.insert(ds.items[idx].x);

    for (int trial = 0; trial < 200; ++trial) {
        const Episode ep = sample_episode(ds, cfg, Phase::MetaTest, rng);
        for (const auto& [a, b] : ep.references) {
            CHECK(train_vectors.count(a) == 1);
            CHECK(train_vectors.count(b) == 1);
            CHECK(a != b);  // two distinct samples
        }
        for (int cid : ep.episode_classes) {
            CHECK(ds.class_split[static_cast<std::size_t>(cid)] == Split::Test);
        }
    }
}

TEST_CASE("sample_episode: identical seeds give identical episodes") {
    Dataset ds = split_by_counts(small_synthetic(), 12, 4, 4);
    EpisodeConfig cfg{4, 2, 5, 6};
    SeededRng rng_a(123), rng_b(123);
    const Episode a = sample_episode(ds, cfg, Phase::MetaTrain, rng_a);
    const Episode b = sample_episode(ds, cfg, Phase::MetaTrain, rng_b);
    CHECK(a.episode_classes == b.episode_classes);
    CHECK(a.support_x == b.support_x);
    CHECK(a.query_x == b.query_x);
    CHECK(a.references == b.references);
}

TEST_CASE("sample_episode: support and query sets are disjoint") {
    Dataset ds = split_by_counts(small_synthetic(), 12, 4, 4);
    EpisodeConfig cfg{5, 3, 8, 2};
    SeededRng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Episode ep = sample_episode(ds, cfg, Phase::MetaTrain, rng);
        std::set<std::vector<double>> support(ep.support_x.begin(), ep.support_x.end());
        for (const auto& q : ep.query_x) CHECK(support.count(q) == 0);
    }
}

TEST_CASE("sample_episode: class too small for K+Q names the class") {
    Dataset ds = split_by_counts(small_synthetic(6, 10), 4, 1, 1);
    EpisodeConfig cfg{3, 4, 8, 0};  // K+Q = 12 > 10
    SeededRng rng(10);
    CHECK_THROWS_WITH_AS(sample_episode(ds, cfg, Phase::MetaTrain, rng),
                         doctest::Contains("need K+Q"), SamplingError);
}

TEST_CASE("sample_episode: reference classes cover the train split uniformly") {
    Dataset ds = split_by_counts(small_synthetic(16, 8), 12, 2, 2);
    EpisodeConfig cfg{2, 1, 1, 4};
    SeededRng rng(11);

    // map raw vectors back to class ids for counting
    std::map<std::vector<double>, int> vec_class;
    for (const auto& item : ds.items) vec_class[item.x] = item.class_id;

    std::map<int, std::size_t> counts;
    const std::size_t episodes = 10000;
    for (std::size_t i = 0; i < episodes; ++i) {
        const Episode ep = sample_episode(ds, cfg, Phase::MetaTrain, rng);
        for (const auto& [a, b] : ep.references) counts[vec_class.at(a)] += 1;
    }

    // multinomial: each of the 12 train classes within 3 sigma of uniform
    const double total = static_cast<double>(episodes * cfg.n_pairs);
    const double p = 1.0 / 12.0;
    const double sigma = std::sqrt(total * p * (1.0 - p));
    for (int cid : ds.classes_in(Split::Train)) {
        const double observed = static_cast<double>(counts[cid]);
        CHECK(std::abs(observed - total * p) <= 3.0 * sigma);
    }
}

TEST_CASE("sample_aux_batch: labels re-indexed into [0, N')") {
    Dataset ds = split_by_counts(small_synthetic(), 12, 4, 4);
    SeededRng rng(12);
    const auto [xs, labels] = sample_aux_batch(ds, 64, rng);
    CHECK(xs.size() == 64);
    CHECK(labels.size() == 64);
    for (int label : labels) {
        CHECK(label >= 0);
        CHECK(label < 12);
    }
}

TEST_CASE("sample_aux_batch: label re-indexing is a bijection over train classes") {
    Dataset ds = split_by_counts(small_synthetic(), 12, 4, 4);
    const std::vector<int> map = ds.train_label_map();
    std::set<int> images;
    for (int cid : ds.classes_in(Split::Train)) {
        const int label = map[static_cast<std::size_t>(cid)];
        CHECK(label >= 0);
        CHECK(images.insert(label).second);
    }
    CHECK(images.size() == 12);
    CHECK(*images.rbegin() == 11);
    for (int cid : ds.classes_in(Split::Val)) CHECK(map[static_cast<std::size_t>(cid)] == -1);
}

TEST_CASE("sample_aux_batch: deterministic under a fixed seed, errors when empty") {
    Dataset ds = split_by_counts(small_synthetic(), 12, 4, 4);
    SeededRng a(77), b(77);
    CHECK(sample_aux_batch(ds, 16, a) == sample_aux_batch(ds, 16, b));

    Dataset no_train = split_by_counts(small_synthetic(), 0, 10, 10);
    SeededRng rng(1);
    CHECK_THROWS_AS(sample_aux_batch(no_train, 4, rng), ConfigError);
}
