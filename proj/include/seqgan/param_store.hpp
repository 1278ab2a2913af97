#pragma once

#include <map>
#include <string>
#include <vector>

#include "seqgan/rng.hpp"
#include "seqgan/tensor.hpp"

namespace seqgan {

// Named parameters with matching gradient and optimizer-state slots.
// Iteration order is the insertion order, which fixes the checkpoint layout
// and the flattened-vector layout used by gradient checking.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
        Tensor adam_m;
        Tensor adam_v;
    };

    // Registers a parameter initialised to zeros; returns its index.
    int add(const std::string& name, std::vector<int> shape);

    int size() const { return static_cast<int>(entries_.size()); }
    bool contains(const std::string& name) const;
    int index_of(const std::string& name) const;

    Entry& entry(int i) { return entries_[static_cast<std::size_t>(i)]; }
    const Entry& entry(int i) const { return entries_[static_cast<std::size_t>(i)]; }

    Tensor& value(int i) { return entries_[static_cast<std::size_t>(i)].value; }
    const Tensor& value(int i) const { return entries_[static_cast<std::size_t>(i)].value; }
    Tensor& grad(int i) { return entries_[static_cast<std::size_t>(i)].grad; }

    Tensor& value(const std::string& name) { return value(index_of(name)); }
    const Tensor& value(const std::string& name) const { return value(index_of(name)); }
    Tensor& grad(const std::string& name) { return grad(index_of(name)); }

    std::size_t total_size() const;

    void zero_grad();
    // Clears Adam moments; call when a new optimisation phase restarts its
    // step count, so bias correction sees the zero state it assumes.
    void reset_optimizer_state();
    void init_normal(Rng& rng, real_t stddev);

    std::vector<real_t> flatten_values() const;
    std::vector<real_t> flatten_grads() const;
    void load_values(std::span<const real_t> flat);

    // Throws DivergenceError if any parameter is non-finite.
    void require_finite(const std::string& what) const;

private:
    std::vector<Entry> entries_;
    std::map<std::string, int> by_name_;
};

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    real_t lr = real_t{1e-2};
    real_t beta1 = real_t{0.9};
    real_t beta2 = real_t{0.999};
    real_t eps = real_t{1e-8};
    real_t grad_clip = real_t{5};  // max L2 norm over all grads; <=0 disables
};

// Applies one update from the accumulated gradients. `step_index` starts at 1
// and drives the Adam bias correction. Gradients are left untouched; call
// zero_grad() before the next accumulation.
void optimizer_step(ParamStore& params, const OptimizerConfig& cfg,
                    std::int64_t step_index);

// Global L2 norm of all gradients.
real_t grad_norm(const ParamStore& params);

}  // namespace seqgan
