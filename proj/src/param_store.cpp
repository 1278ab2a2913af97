#include "seqgan/param_store.hpp"

#include <cmath>

namespace seqgan {

int ParamStore::add(const std::string& name, std::vector<int> shape) {
    require(!contains(name), "ParamStore: duplicate parameter " + name);
    Entry e;
    e.name = name;
    e.value = Tensor(shape);
    e.grad = Tensor(shape);
    e.adam_m = Tensor(shape);
    e.adam_v = Tensor(std::move(shape));
    const int idx = size();
    entries_.push_back(std::move(e));
    by_name_[name] = idx;
    return idx;
}

bool ParamStore::contains(const std::string& name) const {
    return by_name_.count(name) != 0;
}

int ParamStore::index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    require(it != by_name_.end(), "ParamStore: unknown parameter " + name);
    return it->second;
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (Entry& e : entries_) e.grad.fill(0);
}

void ParamStore::reset_optimizer_state() {
    for (Entry& e : entries_) {
        e.adam_m.fill(0);
        e.adam_v.fill(0);
    }
}

void ParamStore::init_normal(Rng& rng, real_t stddev) {
    for (Entry& e : entries_) {
        for (real_t& v : e.value.flat()) v = rng.normal() * stddev;
    }
}

std::vector<real_t> ParamStore::flatten_values() const {
    std::vector<real_t> out;
    out.reserve(total_size());
    for (const Entry& e : entries_) {
        auto f = e.value.flat();
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

std::vector<real_t> ParamStore::flatten_grads() const {
    std::vector<real_t> out;
    out.reserve(total_size());
    for (const Entry& e : entries_) {
        auto f = e.grad.flat();
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

void ParamStore::load_values(std::span<const real_t> flat) {
    require(flat.size() == total_size(), "ParamStore: flat size mismatch");
    std::size_t off = 0;
    for (Entry& e : entries_) {
        auto f = e.value.flat();
        for (real_t& v : f) v = flat[off++];
    }
}

void ParamStore::require_finite(const std::string& what) const {
    for (const Entry& e : entries_) {
        if (!e.value.all_finite()) {
            throw DivergenceError("non-finite parameter " + e.name + " in " + what);
        }
    }
}

real_t grad_norm(const ParamStore& params) {
    real_t ss = 0;
    for (int i = 0; i < params.size(); ++i) {
        for (real_t g : params.entry(i).grad.flat()) ss += g * g;
    }
    return std::sqrt(ss);
}

void optimizer_step(ParamStore& params, const OptimizerConfig& cfg,
                    std::int64_t step_index) {
    require(step_index >= 1, "optimizer_step: step_index starts at 1");

    real_t scale = 1;
    if (cfg.grad_clip > real_t{0}) {
        const real_t norm = grad_norm(params);
        if (!std::isfinite(norm)) {
            throw DivergenceError("non-finite gradient norm");
        }
        if (norm > cfg.grad_clip) scale = cfg.grad_clip / norm;
    }

    if (cfg.kind == OptimizerConfig::Kind::sgd) {
        for (int i = 0; i < params.size(); ++i) {
            auto& e = params.entry(i);
            auto v = e.value.flat();
            auto g = e.grad.flat();
            for (std::size_t j = 0; j < v.size(); ++j) {
                v[j] -= cfg.lr * scale * g[j];
            }
        }
        return;
    }

    const real_t b1 = cfg.beta1, b2 = cfg.beta2;
    const real_t bc1 = real_t{1} - std::pow(b1, static_cast<real_t>(step_index));
    const real_t bc2 = real_t{1} - std::pow(b2, static_cast<real_t>(step_index));
    for (int i = 0; i < params.size(); ++i) {
        auto& e = params.entry(i);
        auto v = e.value.flat();
        auto g = e.grad.flat();
        auto m = e.adam_m.flat();
        auto s = e.adam_v.flat();
        for (std::size_t j = 0; j < v.size(); ++j) {
            const real_t gj = scale * g[j];
            m[j] = b1 * m[j] + (real_t{1} - b1) * gj;
            s[j] = b2 * s[j] + (real_t{1} - b2) * gj * gj;
            const real_t mh = m[j] / bc1;
            const real_t sh = s[j] / bc2;
            v[j] -= cfg.lr * mh / (std::sqrt(sh) + cfg.eps);
        }
    }
}

}  // namespace seqgan
