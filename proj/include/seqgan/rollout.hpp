#pragma once

#include <functional>
#include <vector>

#include "seqgan/discriminator.hpp"
#include "seqgan/generator.hpp"

namespace seqgan {

// Frozen snapshot of the generator used to complete partial sequences during
// Monte Carlo search. Rollouts never mutate it; sync() re-copies the live
// generator's parameters at designated points of the training loop.
class RolloutPolicy {
public:
    explicit RolloutPolicy(const GeneratorModel& gen);

    void sync(const GeneratorModel& gen);
    const GeneratorModel& model() const { return snapshot_; }

private:
    GeneratorModel snapshot_;
};

struct QEstimate {
    std::vector<real_t> q;  // q[t-1] is the action value of token y_t
    int rollouts = 0;       // N used for t < T
};

// Completes the prefix y_1..y_t to N full sequences by sampling the remaining
// T-t tokens from the rollout policy (the LSTM state is rebuilt by replaying
// the prefix). t == T returns N copies of the prefix.
std::vector<Sequence> mc_search(const Sequence& prefix,
                                const RolloutPolicy& policy, int N, Rng& rng);

// Per-timestep action values for one complete sequence: for t < T the mean
// reward of N Monte Carlo completions, for t = T the reward of the sequence
// itself. reward() must be pure; discriminator rewards run with dropout off.
QEstimate estimate_q_reward(const Sequence& seq, const RolloutPolicy& rollout,
                            const std::function<real_t(const Sequence&)>& reward,
                            int N, Rng& rng);

QEstimate estimate_q(const Sequence& seq, const RolloutPolicy& rollout,
                     const DiscriminatorModel& disc, int N, Rng& rng);

// Action-value centering applied before the REINFORCE weighting. The score
// function has zero mean, so any baseline leaves the update unbiased; the
// batch-mean variant subtracts the per-timestep batch average.
struct Baseline {
    enum class Mode { none, constant, batch_mean };
    Mode mode = Mode::none;
    real_t value = 0;  // used by Mode::constant
};

// One REINFORCE update: samples batch_size episodes from the generator,
// estimates per-step action values with N rollouts scored by reward(), and
// ascends sum_t q_t log G(y_t | prefix) (implemented as one descent step on
// the negated objective, mean over the batch). Returns the mean action value
// over batch and timesteps, before baseline subtraction.
real_t policy_gradient_step_reward(
    GeneratorModel& gen, const RolloutPolicy& rollout,
    const std::function<real_t(const Sequence&)>& reward, int batch_size, int N,
    const OptimizerConfig& opt, Rng& rng, std::int64_t& opt_step,
    const Baseline& baseline = {});

real_t policy_gradient_step(GeneratorModel& gen, const RolloutPolicy& rollout,
                            const DiscriminatorModel& disc, int batch_size,
                            int N, const OptimizerConfig& opt, Rng& rng,
                            std::int64_t& opt_step, const Baseline& baseline = {});

}  // namespace seqgan
