#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dtn {

// Deterministic random source. One root seed is split into named streams
// (data, init, episodes, dropout, schedule, ...) so that two runs differing
// only in, say, the schedule draws share every other random decision.
//
// All distributions are implemented on top of the raw mt19937_64 output;
// std::*_distribution is avoided because its draw sequence is not pinned by
// the standard and the checkpoint format stores the engine state alone.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    // Child stream: deterministic function of (seed, name[, index]).
    static SeededRng stream(std::uint64_t root_seed, const std::string& name);
    static SeededRng stream(std::uint64_t root_seed, const std::string& name, std::uint64_t index);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller (two uniforms per draw, no cached spare,
    // so the engine state fully describes the stream).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    // k distinct values from [0, n), in draw order. k <= n.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    // Engine state as text, and its inverse; used by checkpoints.
    std::string state() const;
    void restore(const std::string& state_text);

private:
    std::mt19937_64 engine_;
};

// SplitMix64 step; also used to derive stream seeds from (seed, name).
std::uint64_t splitmix64(std::uint64_t& x);

}  // namespace dtn
