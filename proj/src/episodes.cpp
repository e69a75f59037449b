#include "dtn/episodes.hpp"

#include <algorithm>
#include <cassert>
#include <set>

namespace dtn {

int Dataset::class_id_of(const std::string& name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        if (class_names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<int> Dataset::classes_in(Split split) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < class_split.size(); ++i) {
        if (class_split[i] == split) out.push_back(static_cast<int>(i));
    }
    return out;
}

std::vector<std::size_t> Dataset::items_in(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (class_split[static_cast<std::size_t>(items[i].class_id)] == split) out.push_back(i);
    }
    return out;
}

std::vector<int> Dataset::train_label_map() const {
    std::vector<int> map(num_classes(), -1);
    int next = 0;
    for (int cid : classes_in(Split::Train)) {
        map[static_cast<std::size_t>(cid)] = next++;
    }
    return map;
}

void Dataset::rebuild_index() {
    class_items.assign(num_classes(), {});
    for (std::size_t i = 0; i < items.size(); ++i) {
        class_items[static_cast<std::size_t>(items[i].class_id)].push_back(i);
    }
}

namespace {

void assign_split(Dataset& ds, const std::vector<std::string>& names, Split split,
                  std::set<std::string>& seen) {
    for (const auto& name : names) {
        if (!seen.insert(name).second) {
            throw ConfigError("split_dataset: class '" + name +
                              "' appears in more than one split list");
        }
        const int cid = ds.class_id_of(name);
        if (cid < 0) {
            throw ConfigError("split_dataset: class '" + name + "' not present in dataset");
        }
        ds.class_split[static_cast<std::size_t>(cid)] = split;
    }
}

}  // namespace

Dataset split_dataset(Dataset raw, const std::vector<std::string>& train_classes,
                      const std::vector<std::string>& val_classes,
                      const std::vector<std::string>& test_classes, bool merge_val) {
    raw.class_split.assign(raw.num_classes(), Split::None);
    std::set<std::string> seen;
    assign_split(raw, train_classes, Split::Train, seen);
    assign_split(raw, val_classes, merge_val ? Split::Train : Split::Val, seen);
    assign_split(raw, test_classes, Split::Test, seen);
    return raw;
}

Dataset split_by_counts(Dataset raw, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                        bool merge_val) {
    if (n_train + n_val + n_test > raw.num_classes()) {
        throw ConfigError("split_by_counts: " + std::to_string(n_train + n_val + n_test) +
                          " classes requested from " + std::to_string(raw.num_classes()));
    }
    std::vector<std::string> ordered = raw.class_names;
    std::sort(ordered.begin(), ordered.end());
    const auto take = [&](std::size_t from, std::size_t count) {
        return std::vector<std::string>(ordered.begin() + static_cast<std::ptrdiff_t>(from),
                                        ordered.begin() + static_cast<std::ptrdiff_t>(from + count));
    };
    return split_dataset(std::move(raw), take(0, n_train), take(n_train, n_val),
                         take(n_train + n_val, n_test), merge_val);
}

Episode sample_episode(const Dataset& ds, const EpisodeConfig& cfg, Phase phase, SeededRng& rng) {
    return sample_episode_from_split(
        ds, cfg, phase == Phase::MetaTrain ? Split::Train : Split::Test, rng);
}

Episode sample_episode_from_split(const Dataset& ds, const EpisodeConfig& cfg, Split episode_split,
                                  SeededRng& rng) {
    if (cfg.n_way < 2) throw ConfigError("sample_episode: N must be >= 2");
    if (cfg.k_shot < 1 || cfg.queries < 1) {
        throw ConfigError("sample_episode: K and Q must be >= 1");
    }

    const std::vector<int> pool = ds.classes_in(episode_split);
    if (pool.size() < cfg.n_way) {
        throw SamplingError("sample_episode: split has " + std::to_string(pool.size()) +
                            " classes, need N = " + std::to_string(cfg.n_way));
    }

    Episode ep;
    for (std::size_t idx : rng.sample_without_replacement(pool.size(), cfg.n_way)) {
        ep.episode_classes.push_back(pool[idx]);
    }

    const std::size_t per_class = cfg.k_shot + cfg.queries;
    std::vector<std::vector<std::size_t>> query_rows(cfg.n_way);
    for (std::size_t n = 0; n < cfg.n_way; ++n) {
        const auto& members = ds.class_items[static_cast<std::size_t>(ep.episode_classes[n])];
        if (members.size() < per_class) {
            throw SamplingError("sample_episode: class '" +
                                ds.class_names[static_cast<std::size_t>(ep.episode_classes[n])] +
                                "' has " + std::to_string(members.size()) + " items, need K+Q = " +
                                std::to_string(per_class));
        }
        // support and query drawn without replacement -> disjoint
        const auto picks = rng.sample_without_replacement(members.size(), per_class);
        for (std::size_t k = 0; k < cfg.k_shot; ++k) {
            ep.support_x.push_back(ds.items[members[picks[k]]].x);
            ep.support_label.push_back(static_cast<int>(n));
        }
        for (std::size_t q = cfg.k_shot; q < per_class; ++q) {
            ep.query_x.push_back(ds.items[members[picks[q]]].x);
            ep.query_label.push_back(static_cast<int>(n));
        }
    }

    // Reference pairs always come from seen classes, with replacement over the
    // class pool, two distinct items per chosen class.
    const std::vector<int> train_pool = ds.classes_in(Split::Train);
    if (cfg.n_pairs > 0 && train_pool.empty()) {
        throw SamplingError("sample_episode: no train classes to draw reference pairs from");
    }
    for (std::size_t h = 0; h < cfg.n_pairs; ++h) {
        const int cid = train_pool[rng.uniform_int(train_pool.size())];
        assert(ds.class_split[static_cast<std::size_t>(cid)] == Split::Train);
        const auto& members = ds.class_items[static_cast<std::size_t>(cid)];
        if (members.size() < 2) {
            throw SamplingError("sample_episode: reference class '" +
                                ds.class_names[static_cast<std::size_t>(cid)] +
                                "' has fewer than 2 items");
        }
        const auto pair = rng.sample_without_replacement(members.size(), 2);
        ep.references.emplace_back(ds.items[members[pair[0]]].x, ds.items[members[pair[1]]].x);
    }
    return ep;
}

std::pair<std::vector<std::vector<double>>, std::vector<int>> sample_aux_batch(
    const Dataset& ds, std::size_t batch_size, SeededRng& rng) {
    if (batch_size < 1) throw ConfigError("sample_aux_batch: batch size must be >= 1");
    const std::vector<std::size_t> train_items = ds.items_in(Split::Train);
    if (train_items.empty()) {
        throw ConfigError("sample_aux_batch: train split is empty");
    }
    const std::vector<int> label_map = ds.train_label_map();

    std::vector<std::vector<double>> xs;
    std::vector<int> labels;
    xs.reserve(batch_size);
    labels.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const auto& item = ds.items[train_items[rng.uniform_int(train_items.size())]];
        xs.push_back(item.x);
        labels.push_back(label_map[static_cast<std::size_t>(item.class_id)]);
    }
    return {std::move(xs), std::move(labels)};
}

}  // namespace dtn
