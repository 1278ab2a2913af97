#pragma once

#include <vector>

#include "seqgan/param_store.hpp"
#include "seqgan/rng.hpp"
#include "seqgan/tensor.hpp"

namespace seqgan {

struct GenDims {
    int vocab = 0;    // |Y|, includes the reserved start id 0
    int emb = 0;      // embedding width k
    int hidden = 0;   // LSTM state width
    int horizon = 0;  // sequence length T
};

// Recurrent state. h and s are zero at episode start; t counts emitted tokens.
struct GenState {
    std::vector<real_t> h;
    std::vector<real_t> s;
    int t = 0;
};

// Caller-owned scratch buffers so forward stepping allocates nothing.
struct StepWorkspace {
    std::vector<real_t> z, f, i, o, g, ts;
};

struct SampleResult {
    Sequence tokens;
    std::vector<std::vector<real_t>> dists;  // distribution used at each step
};

// LSTM policy over token sequences: embedding -> single LSTM layer -> softmax.
// Gates use sigma(W [h, x] + b); cell s_t = f.s + i.tanh(W_s [h,x] + b_s);
// h_t = o.tanh(s_t); output distribution softmax(out_b + out_w h_t).
//
// When mask_start is set, token 0 is input-only: its logit is forced to a
// large negative value so it never appears in samples. Synthetic-oracle
// experiments leave it off so the policy ranges over the whole vocabulary.
class GeneratorModel {
public:
    GeneratorModel(const GenDims& dims, bool mask_start = false);

    const GenDims& dims() const { return dims_; }
    bool mask_start() const { return mask_start_; }

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Trainable init: uniform(-0.05, 0.05) everywhere, forget bias 1.
    void init_trainable(Rng& rng);
    // Oracle init: every parameter i.i.d. standard normal.
    void init_oracle(Rng& rng);

    void copy_params_from(const GeneratorModel& other);

    GenState initial_state() const;

    // One recurrence step. Pure in (state, input); writes the successor state
    // and the output distribution. state.t must be < horizon.
    void step_into(const GenState& state, Token input, GenState& next,
                   std::vector<real_t>& dist, StepWorkspace& ws) const;
    // Convenience wrapper that allocates its own buffers.
    std::pair<GenState, std::vector<real_t>> step(const GenState& state,
                                                  Token input) const;

    // Ancestral sampling from the start state; returns tokens and the
    // per-step distributions they were drawn from.
    SampleResult sample_sequence(Rng& rng) const;
    // Same draw sequence, tokens only.
    Sequence sample_tokens(Rng& rng) const;

    // Teacher-forced log G(seq) = sum_t log G(y_t | y_1..y_{t-1}).
    real_t log_likelihood(const Sequence& seq) const;
    // The T addends of log_likelihood (probabilities floored at 1e-300).
    std::vector<real_t> per_token_log_probs(const Sequence& seq) const;

    void check_token(Token tok) const;

private:
    GenDims dims_;
    bool mask_start_;
    ParamStore params_;
};

// Teacher-forced pass over `targets` feeding inputs [start, y_1..y_{T-1}].
// Adds to the model's gradients d/dtheta of sum_t weights[t] * (-log G(y_t |
// prefix)) via backpropagation through time. Returns the unweighted NLL
// sum_t -log p_t. Uniform weights 1/B give the mean-NLL gradient of a batch;
// per-step action values give the policy-gradient update.
real_t accumulate_teacher_forced_grad(GeneratorModel& model,
                                      const Sequence& targets,
                                      std::span<const real_t> weights);

// One shuffled pass of minibatch MLE. Returns the mean per-token NLL measured
// before each update. opt_step carries the optimizer step count across epochs.
real_t mle_train_epoch(GeneratorModel& model, const std::vector<Sequence>& data,
                       const OptimizerConfig& opt, int batch_size, Rng rng,
                       std::int64_t& opt_step);

// As mle_train_epoch, but each non-initial input is the ground-truth token
// with probability omega and otherwise a token drawn from the model's own
// distribution at that position. Targets stay ground truth.
real_t scheduled_sampling_epoch(GeneratorModel& model,
                                const std::vector<Sequence>& data,
                                const OptimizerConfig& opt, real_t omega,
                                int batch_size, Rng rng, std::int64_t& opt_step);

}  // namespace seqgan
