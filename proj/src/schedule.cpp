#include "dtn/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace dtn {

std::size_t ScheduleSpec::length() const {
    switch (kind) {
        case ScheduleKind::Oat:
            return unit_epochs * gamma.size();
        case ScheduleKind::At:
        case ScheduleKind::Naive:
            return total_epochs;
        case ScheduleKind::TwoStage:
            return aux_epochs + meta_epochs;
    }
    return 0;
}

std::vector<EpochKind> build_oat(const ScheduleSpec& spec) {
    std::vector<EpochKind> out;
    out.reserve(spec.unit_epochs * spec.gamma.size());
    for (std::size_t i = 0; i < spec.gamma.size(); ++i) {
        if (spec.gamma[i] > spec.unit_epochs) {
            throw ConfigError("build_oat: gamma[" + std::to_string(i) + "] = " +
                              std::to_string(spec.gamma[i]) + " exceeds unit length T = " +
                              std::to_string(spec.unit_epochs));
        }
        // auxiliary first within a unit, meta epochs close it out
        out.insert(out.end(), spec.unit_epochs - spec.gamma[i], EpochKind::Auxiliary);
        out.insert(out.end(), spec.gamma[i], EpochKind::Meta);
    }
    return out;
}

namespace {

// Calibration constant: expected meta count equals 6 for the default
// 30-epoch, decay-0.9 anneal (24 auxiliary : 6 meta).
double at_kappa() {
    const double geometric = (1.0 - std::pow(0.9, 30.0)) / (1.0 - 0.9);
    return 6.0 / (30.0 - geometric);
}

}  // namespace

double at_meta_probability(std::size_t epoch, std::size_t total_epochs, double decay) {
    if (total_epochs == 0) return 0.0;
    const double exponent =
        static_cast<double>(epoch) * 30.0 / static_cast<double>(total_epochs);
    const double p = at_kappa() * (1.0 - std::pow(decay, exponent));
    return std::clamp(p, 0.0, 1.0);
}

double at_expected_meta_count(const ScheduleSpec& spec) {
    double expected = 0.0;
    for (std::size_t e = 0; e < spec.total_epochs; ++e) {
        expected += at_meta_probability(e, spec.total_epochs, spec.at_decay);
    }
    return expected;
}

std::vector<EpochKind> build_at(const ScheduleSpec& spec) {
    if (spec.total_epochs < 1) throw ConfigError("build_at: total_epochs must be >= 1");
    if (!(spec.at_decay > 0.0 && spec.at_decay < 1.0)) {
        throw ConfigError("build_at: decay must lie in (0,1), got " +
                          std::to_string(spec.at_decay));
    }
    SeededRng rng = SeededRng::stream(spec.seed, "schedule");
    std::vector<EpochKind> out;
    out.reserve(spec.total_epochs);
    for (std::size_t e = 0; e < spec.total_epochs; ++e) {
        const double p_meta = at_meta_probability(e, spec.total_epochs, spec.at_decay);
        out.push_back(rng.uniform() < p_meta ? EpochKind::Meta : EpochKind::Auxiliary);
    }
    return out;
}

std::vector<EpochKind> build_naive(std::size_t total_epochs) {
    return std::vector<EpochKind>(total_epochs, EpochKind::Meta);
}

std::vector<EpochKind> build_two_stage(std::size_t aux_epochs, std::size_t meta_epochs) {
    std::vector<EpochKind> out(aux_epochs, EpochKind::Auxiliary);
    out.insert(out.end(), meta_epochs, EpochKind::Meta);
    return out;
}

std::vector<EpochKind> build_schedule(const ScheduleSpec& spec) {
    switch (spec.kind) {
        case ScheduleKind::Oat:
            return build_oat(spec);
        case ScheduleKind::At:
            return build_at(spec);
        case ScheduleKind::Naive:
            return build_naive(spec.total_epochs);
        case ScheduleKind::TwoStage:
            return build_two_stage(spec.aux_epochs, spec.meta_epochs);
    }
    throw ConfigError("build_schedule: unknown schedule kind");
}

std::string schedule_to_string(const std::vector<EpochKind>& schedule) {
    std::string out;
    out.reserve(schedule.size());
    for (EpochKind kind : schedule) {
        out.push_back(kind == EpochKind::Auxiliary ? 'A' : 'M');
    }
    return out;
}

std::vector<EpochKind> schedule_from_string(const std::string& text) {
    std::vector<EpochKind> out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == 'A') {
            out.push_back(EpochKind::Auxiliary);
        } else if (text[i] == 'M') {
            out.push_back(EpochKind::Meta);
        } else {
            throw ParseError("schedule string: unexpected character '" + std::string(1, text[i]) +
                             "' at position " + std::to_string(i));
        }
    }
    return out;
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "oat") return ScheduleKind::Oat;
    if (name == "at") return ScheduleKind::At;
    if (name == "naive") return ScheduleKind::Naive;
    if (name == "two-stage" || name == "two_stage") return ScheduleKind::TwoStage;
    throw ConfigError("unknown schedule kind '" + name + "'");
}

std::string schedule_kind_name(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::Oat:
            return "oat";
        case ScheduleKind::At:
            return "at";
        case ScheduleKind::Naive:
            return "naive";
        case ScheduleKind::TwoStage:
            return "two-stage";
    }
    return "?";
}

}  // namespace dtn
