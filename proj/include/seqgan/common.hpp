#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqgan {

#ifdef SEQGAN_REAL32
using real_t = float;
#else
using real_t = double;
#endif

using Token = std::int32_t;
using Sequence = std::vector<Token>;

// Error categories the CLI maps to distinct exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace seqgan
