#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtn/data.hpp"
#include "dtn/model.hpp"
#include "dtn/schedule.hpp"
#include "dtn/trainer.hpp"

namespace dtn {

// Everything one run needs. A config file plus flag overrides fully determines
// a run; every field has a documented default.
struct RunConfig {
    // dataset: a dtn-embed file, or synthetic when data_path is empty
    std::string data_path;
    SyntheticSpec synthetic;
    std::size_t train_class_count = 11;
    std::size_t val_class_count = 4;
    std::size_t test_class_count = 5;  // >= n_way so 5-way test episodes exist
    bool merge_val = true;
    std::optional<std::uint64_t> data_seed;  // default: the run seed

    ModelConfig model;       // n_aux_classes is filled from the split
    EpisodeConfig episode;
    ScheduleSpec schedule;
    TrainOptions train;

    std::size_t eval_episodes = 600;
    std::uint64_t eval_seed_offset = 0;  // eval stream index, distinct per purpose
    std::size_t workers = 1;
    std::string eval_split = "test";

    std::uint64_t seed = 1;
    std::string out_dir;
    std::string checkpoint_path;  // input for eval / export
    std::string resume_path;      // input for resumed training
    std::string phase = "test";   // export: which split the episode comes from
};

// key=value application used by config files and checkpoint snapshots.
// Unknown keys raise ConfigError naming the key.
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::string& path);
RunConfig load_config_file(const std::string& path);
std::string run_config_text(const RunConfig& cfg);

// The run config stored in a checkpoint, applied over defaults. Lets eval and
// export default to the settings the model was trained with.
RunConfig config_from_checkpoint(const std::string& path);

// Dataset per config: loaded or generated, then split by sorted-label counts.
Dataset build_dataset(const RunConfig& cfg);

struct TrainResult {
    std::vector<EpochMetrics> metrics;
    std::string schedule_string;
    std::string checkpoint_path;  // written when out_dir is set
    ModelState state;             // final parameters
};

// Builds dataset + model, runs the schedule (optionally resuming), writes
// metrics.csv, schedule.txt and checkpoint.dtnc into out_dir when set.
TrainResult run_training(const RunConfig& cfg);

struct LoadedModel {
    ModelState state;
    std::string schedule_string;
    RunConfig config;  // snapshot stored in the checkpoint
};
LoadedModel load_model_checkpoint(const std::string& path);

// Loads the checkpoint named by cfg.checkpoint_path and evaluates it over
// cfg.eval_episodes episodes; writes per-episode accuracies when out_dir set.
EvalReport run_eval(const RunConfig& cfg);

struct AblateRow {
    std::string arm;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double ci95 = 0.0;
};
struct AblateSummary {
    std::string arm;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // across seeds
};
struct AblateResult {
    std::vector<AblateRow> rows;
    std::vector<AblateSummary> summary;
};

// sweep = "strategy" (naive / two-stage / at / oat) or "h" (0,2,4,16,32,64).
// All arms share one dataset; per-seed streams differ only where intended.
AblateResult run_ablate(const RunConfig& base, const std::string& sweep,
                        const std::vector<std::uint64_t>& seeds);

// Feature export for one episode: role in {real, support, generated} rows.
std::string export_embeddings_csv(const RunConfig& cfg);

}  // namespace dtn
