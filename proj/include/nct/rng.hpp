#pragma once

#include <cstdint>
#include <random>

namespace nct {

// SplitMix64 finalizer; full-avalanche mix of a 64-bit word.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Stream-splitting rule: the seed of substream `index` under `master` is the
// SplitMix64 mix of the two words.  Documented so datasets can be regenerated
// by other implementations.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index * 0xD1342543DE82EF95ull + 1));
}

// mt19937_64 wrapped with an explicit 53-bit mapping to [0,1).  Avoids
// std::uniform_real_distribution, whose output is implementation-defined,
// so sampled datasets are byte-identical across standard libraries.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace nct
