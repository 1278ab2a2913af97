#include "seqgan/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace seqgan {
namespace {

constexpr const char* kHeader = "seqgan-ckpt v1";

std::string format_real(real_t v) {
    char buf[64];
#ifdef SEQGAN_REAL32
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
#else
    std::snprintf(buf, sizeof buf, "%.17g", v);
#endif
    return buf;
}

std::vector<int> parse_dims(const std::string& token) {
    std::vector<int> dims;
    std::size_t pos = 0;
    while (pos <= token.size()) {
        const std::size_t x = token.find('x', pos);
        const std::string part =
            token.substr(pos, x == std::string::npos ? std::string::npos : x - pos);
        if (part.empty()) throw DataError("checkpoint: bad dims '" + token + "'");
        char* end = nullptr;
        const long d = std::strtol(part.c_str(), &end, 10);
        if (*end != '\0' || d <= 0) {
            throw DataError("checkpoint: bad dims '" + token + "'");
        }
        dims.push_back(static_cast<int>(d));
        if (x == std::string::npos) break;
        pos = x + 1;
    }
    if (dims.empty() || dims.size() > 2) {
        throw DataError("checkpoint: bad dims '" + token + "'");
    }
    return dims;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("checkpoint: cannot open " + path + " for writing");
    out << kHeader << '\n';
    for (int i = 0; i < params.size(); ++i) {
        const auto& e = params.entry(i);
        out << e.name << ' ' << e.value.dim(0);
        if (e.value.ndim() == 2) out << 'x' << e.value.dim(1);
        for (real_t v : e.value.flat()) out << ' ' << format_real(v);
        out << '\n';
    }
    if (!out) throw DataError("checkpoint: write failed for " + path);
}

void load_checkpoint(ParamStore& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
        throw DataError("checkpoint: missing header in " + path);
    }
    std::vector<bool> seen(static_cast<std::size_t>(params.size()), false);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string name, dims_token;
        if (!(ss >> name >> dims_token)) {
            throw DataError("checkpoint: malformed line in " + path);
        }
        if (!params.contains(name)) {
            throw DataError("checkpoint: unknown parameter " + name + " in " + path);
        }
        const int idx = params.index_of(name);
        Tensor& value = params.value(idx);
        const std::vector<int> dims = parse_dims(dims_token);
        if (dims != value.shape()) {
            throw DataError("checkpoint: shape mismatch for " + name + " in " + path);
        }
        std::string tok;
        for (real_t& v : value.flat()) {
            if (!(ss >> tok)) {
                throw DataError("checkpoint: too few values for " + name + " in " + path);
            }
            char* end = nullptr;
            const double d = std::strtod(tok.c_str(), &end);
            if (*end != '\0') {
                throw DataError("checkpoint: bad value for " + name + " in " + path);
            }
            v = static_cast<real_t>(d);
        }
        if (ss >> tok) {
            throw DataError("checkpoint: too many values for " + name + " in " + path);
        }
        seen[static_cast<std::size_t>(idx)] = true;
    }
    for (int i = 0; i < params.size(); ++i) {
        if (!seen[static_cast<std::size_t>(i)]) {
            throw DataError("checkpoint: parameter " + params.entry(i).name +
                            " missing from " + path);
        }
    }
}

}  // namespace seqgan
