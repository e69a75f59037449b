#include "dtn/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dtn {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

std::uint64_t mix_name(std::uint64_t seed, const std::string& name) {
    std::uint64_t x = seed ^ 0xd6e8feb86659fd93ULL;
    (void)splitmix64(x);
    for (unsigned char c : name) {
        x ^= static_cast<std::uint64_t>(c);
        (void)splitmix64(x);
    }
    return splitmix64(x);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : engine_(seed) {}

SeededRng SeededRng::stream(std::uint64_t root_seed, const std::string& name) {
    return SeededRng(mix_name(root_seed, name));
}

SeededRng SeededRng::stream(std::uint64_t root_seed, const std::string& name, std::uint64_t index) {
    std::uint64_t x = mix_name(root_seed, name) ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return SeededRng(splitmix64(x));
}

std::uint64_t SeededRng::next_u64() {
    return engine_();
}

double SeededRng::uniform() {
    // 53 random bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be > 0");
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

double SeededRng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> SeededRng::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    // partial Fisher-Yates: first k entries become the sample
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

std::string SeededRng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void SeededRng::restore(const std::string& state_text) {
    std::istringstream is(state_text);
    is >> engine_;
    if (is.fail()) throw std::invalid_argument("SeededRng::restore: bad state string");
}

}  // namespace dtn
