#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dtn/errors.hpp"
#include "dtn/rng.hpp"

namespace dtn {

enum class EpochKind { Auxiliary, Meta };

enum class ScheduleKind { Oat, At, Naive, TwoStage };

// Training-sequence recipe. Fields are used per kind:
//   oat:       unit_epochs (T), gamma (meta epochs per unit)
//   at:        total_epochs, at_decay, seed
//   naive:     total_epochs (all meta)
//   two_stage: aux_epochs then meta_epochs
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Oat;
    std::size_t unit_epochs = 5;                     // T
    std::vector<std::size_t> gamma = {0, 0, 1, 1, 2, 2};
    double at_decay = 0.9;
    std::size_t total_epochs = 30;
    std::size_t aux_epochs = 0;
    std::size_t meta_epochs = 0;
    std::uint64_t seed = 0;

    std::size_t length() const;
};

// Deterministic organized co-training: unit i emits (T - gamma_i) auxiliary
// epochs followed by gamma_i meta epochs.
std::vector<EpochKind> build_oat(const ScheduleSpec& spec);

// Stochastic baseline: epoch e is auxiliary with probability
// 1 - kappa * (1 - decay^(e*30/total)), an exponentially annealed curve whose
// kappa is fixed so that the default (decay 0.9, 30 epochs) yields 6 expected
// meta epochs. The sequence is a deterministic function of spec.seed.
std::vector<EpochKind> build_at(const ScheduleSpec& spec);

std::vector<EpochKind> build_naive(std::size_t total_epochs);
std::vector<EpochKind> build_two_stage(std::size_t aux_epochs, std::size_t meta_epochs);

std::vector<EpochKind> build_schedule(const ScheduleSpec& spec);

// Meta-epoch probability at epoch e of the AT anneal, and its closed-form
// expected meta count (the oracle the stochastic draws are checked against).
double at_meta_probability(std::size_t epoch, std::size_t total_epochs, double decay);
double at_expected_meta_count(const ScheduleSpec& spec);

// One character per epoch: 'A' or 'M'.
std::string schedule_to_string(const std::vector<EpochKind>& schedule);
std::vector<EpochKind> schedule_from_string(const std::string& text);

ScheduleKind schedule_kind_from_name(const std::string& name);
std::string schedule_kind_name(ScheduleKind kind);

}  // namespace dtn
