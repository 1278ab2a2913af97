#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqgan/param_store.hpp"
#include "seqgan/rng.hpp"
#include "seqgan/tensor.hpp"

namespace seqgan {

struct KernelSpec {
    int window = 0;
    int count = 0;
};
using KernelPreset = std::vector<KernelSpec>;

// Shipped kernel configurations. The full presets pair window widths with
// kernel counts for horizons 20 and 32; the desk preset (windows 1..5, 25
// kernels each) keeps tests fast.
KernelPreset preset_desk();
KernelPreset preset_t20();
KernelPreset preset_t32();

// Parses a preset file with one `window,count` pair per line. Blank lines and
// lines starting with '#' are ignored.
KernelPreset load_kernel_preset(const std::string& path);

struct LabeledBatch {
    std::vector<Sequence> sequences;
    std::vector<int> labels;  // 1 = real data, 0 = generated
};

// Per-sequence activations cached by the training forward pass.
struct DiscCache {
    std::vector<real_t> pooled;   // pre-dropout max-pooled features
    std::vector<int> argmax;      // winning window position per feature
    std::vector<real_t> drop;     // dropout multipliers (empty = off)
    std::vector<real_t> cd;       // highway input (post-dropout)
    std::vector<real_t> tau, hh, ah, ct;
    real_t logit = 0;
    real_t prob = 0;
};

// CNN sequence classifier: embedding concatenation, multi-width convolutions
// with ReLU, max-over-time pooling, one highway layer, sigmoid output.
class DiscriminatorModel {
public:
    DiscriminatorModel(int vocab, int emb, int horizon, KernelPreset kernels,
                       real_t dropout_keep = real_t{0.75});

    int vocab() const { return vocab_; }
    int emb() const { return emb_; }
    int horizon() const { return horizon_; }
    int feature_dim() const { return feature_dim_; }
    const KernelPreset& kernels() const { return kernels_; }
    real_t dropout_keep() const { return dropout_keep_; }

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    void init_trainable(Rng& rng);
    void copy_params_from(const DiscriminatorModel& other);

    // Row t of the result is the embedding of token seq[t].
    Tensor embed_concat(const Sequence& seq) const;

    // Probability the sequence is real. Deterministic when dropout_rng is
    // null; with a generator, inverted dropout is applied to the pooled
    // features before the highway layer.
    real_t forward(const Sequence& seq, Rng* dropout_rng = nullptr) const;
    real_t forward_cached(const Sequence& seq, Rng* dropout_rng,
                          DiscCache& cache) const;

    std::vector<real_t> score_batch(const std::vector<Sequence>& seqs) const;

    void check_sequence(const Sequence& seq) const;

private:
    int vocab_;
    int emb_;
    int horizon_;
    KernelPreset kernels_;
    int feature_dim_;
    real_t dropout_keep_;
    ParamStore params_;
};

// Mean binary cross-entropy over the batch; accumulates analytic gradients
// into the model's store. Dropout is used when dropout_rng is non-null.
real_t disc_loss_and_grad(DiscriminatorModel& model, const LabeledBatch& batch,
                          Rng* dropout_rng = nullptr);

struct DiscEval {
    real_t loss = 0;
    real_t accuracy = 0;
};

// Loss and 0/1 accuracy without gradients or dropout.
DiscEval disc_evaluate(const DiscriminatorModel& model, const LabeledBatch& batch);

// k shuffled passes over the balanced positive/negative set with minibatch
// updates. Returns the final epoch's mean loss. opt_step carries the
// optimizer step count across calls.
real_t disc_train_epochs(DiscriminatorModel& model,
                         const std::vector<Sequence>& positives,
                         const std::vector<Sequence>& negatives, int k,
                         const OptimizerConfig& opt, int batch_size, Rng rng,
                         std::int64_t& opt_step, bool use_dropout = true);

}  // namespace seqgan
