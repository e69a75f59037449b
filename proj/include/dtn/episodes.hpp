#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dtn/errors.hpp"
#include "dtn/rng.hpp"

namespace dtn {

enum class Split { None, Train, Val, Test };

struct DataItem {
    std::vector<double> x;
    int class_id = -1;
};

// Labeled feature-vector collection with a class-level train/val/test split.
// Train (seen) and test (unseen) class sets are disjoint by construction.
struct Dataset {
    std::vector<DataItem> items;
    std::vector<std::string> class_names;           // class_id -> label
    std::vector<std::vector<std::size_t>> class_items;  // class_id -> item indices
    std::vector<Split> class_split;                 // class_id -> split
    std::size_t dim = 0;

    std::size_t num_classes() const { return class_names.size(); }
    int class_id_of(const std::string& name) const;  // -1 when absent

    std::vector<int> classes_in(Split split) const;       // sorted class ids
    std::vector<std::size_t> items_in(Split split) const; // item indices

    // Train class id -> contiguous auxiliary label in [0, N'); sorted order.
    std::vector<int> train_label_map() const;  // class_id -> aux label, -1 if not train

    void rebuild_index();  // recompute class_items from items
};

struct EpisodeConfig {
    std::size_t n_way = 5;     // N
    std::size_t k_shot = 1;    // K
    std::size_t queries = 15;  // Q per class
    std::size_t n_pairs = 64;  // H reference pairs
};

enum class Phase { MetaTrain, MetaTest };

// One N-way K-shot task. Support/query labels are episode-local (0..N-1);
// reference pairs hold two distinct samples of one seen class each and are
// shared across all N supports.
struct Episode {
    std::vector<std::vector<double>> support_x;  // N*K rows, class-major
    std::vector<int> support_label;
    std::vector<std::vector<double>> query_x;    // N*Q rows, class-major
    std::vector<int> query_label;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> references;  // H pairs
    std::vector<int> episode_classes;            // the N dataset class ids
};

// Assigns splits by class label. Lists must be pairwise disjoint and name only
// labels present in the dataset; unlisted classes are excluded (Split::None).
// merge_val folds the validation classes into the train split.
Dataset split_dataset(Dataset raw, const std::vector<std::string>& train_classes,
                      const std::vector<std::string>& val_classes,
                      const std::vector<std::string>& test_classes, bool merge_val = false);

// Split by position in sorted label order: first n_train labels -> train, etc.
Dataset split_by_counts(Dataset raw, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                        bool merge_val = false);

// Episode classes come from the phase's split; reference pairs always come
// from train classes (sampled with replacement), in both phases.
Episode sample_episode(const Dataset& ds, const EpisodeConfig& cfg, Phase phase, SeededRng& rng);

// Same protocol over an explicit split (validation episodes use the test-phase
// protocol on Split::Val); references still come from train classes.
Episode sample_episode_from_split(const Dataset& ds, const EpisodeConfig& cfg,
                                  Split episode_split, SeededRng& rng);

// B items uniform over the train split; labels re-indexed into [0, N').
std::pair<std::vector<std::vector<double>>, std::vector<int>> sample_aux_batch(
    const Dataset& ds, std::size_t batch_size, SeededRng& rng);

}  // namespace dtn
