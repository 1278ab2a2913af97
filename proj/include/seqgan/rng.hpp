#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqgan/common.hpp"

namespace seqgan {

// Counter-based deterministic generator (splitmix64 core). A stream is
// identified by a 64-bit key; each draw hashes (key, counter) so streams
// derived from the same seed with distinct labels never overlap in practice
// and results are independent of platform and of call interleaving across
// streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kKeyTag)) {}

    // Independent child stream derived from a label. The same (seed, label)
    // pair always yields the same stream.
    Rng child(const std::string& label) const;
    Rng child(const std::string& label, std::uint64_t index) const;

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    real_t uniform();
    // Uniform integer in [0, n).
    int uniform_int(int n);
    // Standard normal via Box-Muller (both variates used).
    real_t normal();
    void fill_normal(std::span<real_t> out);
    // Index draw from an unnormalised or normalised nonnegative weight vector.
    int categorical(std::span<const real_t> probs);

private:
    Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

    static std::uint64_t mix(std::uint64_t x);

    static constexpr std::uint64_t kKeyTag = 0x9e3779b97f4a7c15ULL;

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    real_t spare_ = 0;
};

}  // namespace seqgan
