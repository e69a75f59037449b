#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtn/checkpoint.hpp"
#include "dtn/episodes.hpp"
#include "dtn/model.hpp"
#include "dtn/schedule.hpp"

namespace dtn {

// SGD with momentum over the model's named parameters. Velocity buffers
// mirror every trainable tensor and persist across epochs and checkpoints.
class Optimizer {
public:
    Optimizer(const ModelState& state, double momentum);

    // v = momentum * v + grad; p -= lr * v, for the named subset only.
    void step(const std::vector<std::string>& param_names, double lr);

    double momentum() const { return momentum_; }
    const std::vector<std::pair<std::string, std::vector<double>>>& velocities() const {
        return velocities_;
    }
    void set_velocity(const std::string& name, const std::vector<double>& values);

private:
    double momentum_;
    std::vector<std::pair<std::string, Tensor>> params_;
    std::vector<std::pair<std::string, std::vector<double>>> velocities_;
};

// Parameter groups of the two task branches. Auxiliary epochs update the
// extractor and auxiliary head; meta epochs update the extractor, generator
// and meta temperature.
std::vector<std::string> auxiliary_param_names(const ModelState& state);
std::vector<std::string> meta_param_names(const ModelState& state);

struct TrainOptions {
    std::size_t batch_size = 64;
    std::size_t aux_steps_per_epoch = 200;
    std::size_t episodes_per_epoch = 200;
    double lr_aux = 0.05;
    double lr_meta = 0.01;
    double momentum = 0.9;
    double max_skip_fraction = 0.01;  // tolerated degenerate-proxy episodes
    std::size_t eval_every = 0;       // validation eval period; 0 = never
    std::size_t eval_episodes = 200;
};

// Named random streams of one training run; all derive from the run seed.
struct TrainerRngs {
    SeededRng episodes;
    SeededRng dropout;
    std::uint64_t eval_seed = 0;

    static TrainerRngs from_root(std::uint64_t root_seed);
};

struct EpochMetrics {
    std::size_t epoch_index = 0;
    EpochKind kind = EpochKind::Auxiliary;
    std::optional<double> mean_loss;
    std::optional<double> val_accuracy;
    std::optional<double> val_ci95;
};

struct EvalReport {
    double mean_accuracy = 0.0;
    std::optional<double> ci95;  // 1.96 * sample std / sqrt(E); absent for E = 1
    std::size_t episode_count = 0;
    std::vector<double> per_episode;
};

// Learning-rate decay: x0.5 at floor(total/2) and again at floor(2*total/3)
// (epochs 15 and 20 of the default 30-epoch sequence).
double lr_scale_at(std::size_t epoch_index, std::size_t total_epochs);

// One pass of Eq.-5-style minibatch training. Returns the mean loss over the
// steps (absent when steps == 0). Touches extractor + aux head only.
std::optional<double> run_auxiliary_epoch(ModelState& state, const Dataset& ds,
                                          const TrainOptions& opts, double lr, Optimizer& opt,
                                          TrainerRngs& rngs);

// One episodic epoch: sample episodes, generate features, build proxies and
// minimize the meta loss. Touches extractor + generator + meta alpha only.
// Degenerate-proxy episodes are skipped and counted, up to max_skip_fraction.
std::optional<double> run_meta_epoch(ModelState& state, const Dataset& ds,
                                     const EpisodeConfig& cfg, const TrainOptions& opts, double lr,
                                     Optimizer& opt, TrainerRngs& rngs);

// Dispatches each epoch kind in order over [start_epoch, end_epoch), appending
// one metrics row per epoch. end_epoch = npos runs to the end.
std::vector<EpochMetrics> run_schedule(ModelState& state, const std::vector<EpochKind>& schedule,
                                       const Dataset& ds, const EpisodeConfig& cfg,
                                       const TrainOptions& opts, Optimizer& opt, TrainerRngs& rngs,
                                       std::size_t start_epoch = 0,
                                       std::size_t end_epoch = static_cast<std::size_t>(-1));

// Frozen-parameter episodic evaluation on a split (test by default). Results
// are a function of (state, ds, cfg, episode_count, seed) regardless of the
// worker count: episode i always draws from its own derived stream.
EvalReport evaluate(const ModelState& state, const Dataset& ds, const EpisodeConfig& cfg,
                    std::size_t episode_count, std::uint64_t seed, std::size_t workers = 1,
                    Split split = Split::Test);

// Accuracy of one already-sampled episode under the frozen model.
double evaluate_episode(const ModelState& state, const Episode& ep, const EpisodeConfig& cfg);

// mean and 1.96 * sample_std / sqrt(E) over per-episode accuracies.
EvalReport make_eval_report(std::vector<double> per_episode);

// Whole-run persistence: parameters, velocities, rng streams and the epoch
// cursor, so a resumed run continues the uninterrupted trajectory exactly.
Checkpoint make_training_checkpoint(const ModelState& state, const Optimizer& opt,
                                    const TrainerRngs& rngs, const std::string& schedule_string,
                                    std::size_t next_epoch, const std::string& run_config_text);
void restore_training(ModelState& state, Optimizer& opt, TrainerRngs& rngs,
                      const Checkpoint& ckpt);

// Metrics CSV: epoch_index,kind,mean_loss,val_accuracy,val_ci95.
std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics);

}  // namespace dtn
