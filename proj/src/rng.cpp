#include "seqgan/rng.hpp"

#include <cmath>

namespace seqgan {

std::uint64_t Rng::mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::child(const std::string& label) const {
    std::uint64_t h = key_;
    for (unsigned char c : label) h = mix(h ^ c);
    return Rng(mix(h), 0);
}

Rng Rng::child(const std::string& label, std::uint64_t index) const {
    Rng base = child(label);
    return Rng(mix(base.key_ ^ mix(index)), 0);
}

std::uint64_t Rng::next_u64() { return mix(key_ ^ mix(counter_++)); }

real_t Rng::uniform() {
    // Top 53 bits give a double in [0, 1).
    return static_cast<real_t>(next_u64() >> 11) *
           static_cast<real_t>(1.0 / 9007199254740992.0);
}

int Rng::uniform_int(int n) {
    require(n > 0, "uniform_int: n must be positive");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % un);
}

real_t Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    real_t u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= real_t{0});
    u2 = uniform();
    constexpr real_t kPi = real_t{3.14159265358979323846};
    const real_t r = std::sqrt(real_t{-2} * std::log(u1));
    const real_t theta = real_t{2} * kPi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

void Rng::fill_normal(std::span<real_t> out) {
    for (real_t& v : out) v = normal();
}

int Rng::categorical(std::span<const real_t> probs) {
    require(!probs.empty(), "categorical: empty weights");
    real_t total = 0;
    for (real_t p : probs) {
        require(p >= real_t{0}, "categorical: negative weight");
        total += p;
    }
    require(total > real_t{0}, "categorical: weights sum to zero");
    const real_t u = uniform() * total;
    real_t acc = 0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
        acc += probs[static_cast<std::size_t>(i)];
        if (u < acc) return i;
    }
    return n - 1;
}

}  // namespace seqgan
