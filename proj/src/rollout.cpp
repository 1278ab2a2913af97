#include "seqgan/rollout.hpp"

#include <algorithm>

namespace seqgan {
namespace {

// Returns the state after consuming `count` inputs: the start token followed
// by prefix[0..count-2]. The caller feeds prefix[count-1] next.
GenState replay_prefix(const GeneratorModel& model, const Sequence& prefix,
                       int count, StepWorkspace& ws) {
    GenState cur = model.initial_state(), next;
    std::vector<real_t> dist;
    Token input = 0;
    for (int i = 0; i < count; ++i) {
        model.step_into(cur, input, next, dist, ws);
        std::swap(cur, next);
        input = prefix[static_cast<std::size_t>(i)];
    }
    return cur;
}

}  // namespace

RolloutPolicy::RolloutPolicy(const GeneratorModel& gen) : snapshot_(gen) {}

void RolloutPolicy::sync(const GeneratorModel& gen) {
    snapshot_.copy_params_from(gen);
}

std::vector<Sequence> mc_search(const Sequence& prefix,
                                const RolloutPolicy& policy, int N, Rng& rng) {
    const GeneratorModel& model = policy.model();
    const int T = model.dims().horizon;
    const int t = static_cast<int>(prefix.size());
    require(t >= 1 && t <= T, "mc_search: prefix length must lie in [1, T]");
    require(N >= 1, "mc_search: N must be >= 1");
    for (Token tok : prefix) model.check_token(tok);

    std::vector<Sequence> out(static_cast<std::size_t>(N));
    if (t == T) {
        std::fill(out.begin(), out.end(), prefix);
        return out;
    }

    StepWorkspace ws;
    // State after inputs [start, y_1 .. y_{t-1}]; the next input is y_t.
    const GenState base = replay_prefix(model, prefix, t, ws);
    GenState cur, next;
    std::vector<real_t> dist;
    for (int n = 0; n < N; ++n) {
        Sequence& seq = out[static_cast<std::size_t>(n)];
        seq = prefix;
        seq.resize(static_cast<std::size_t>(T));
        cur = base;
        Token input = prefix[static_cast<std::size_t>(t - 1)];
        for (int step = t; step < T; ++step) {
            model.step_into(cur, input, next, dist, ws);
            const Token tok = static_cast<Token>(rng.categorical(dist));
            seq[static_cast<std::size_t>(step)] = tok;
            std::swap(cur, next);
            input = tok;
        }
    }
    return out;
}

QEstimate estimate_q_reward(const Sequence& seq, const RolloutPolicy& rollout,
                            const std::function<real_t(const Sequence&)>& reward,
                            int N, Rng& rng) {
    const GeneratorModel& model = rollout.model();
    const int T = model.dims().horizon;
    require(static_cast<int>(seq.size()) == T,
            "estimate_q: sequence length must equal the horizon");
    require(N >= 1, "estimate_q: N must be >= 1");
    for (Token tok : seq) model.check_token(tok);

    QEstimate est;
    est.q.assign(static_cast<std::size_t>(T), 0);
    est.rollouts = N;

    StepWorkspace ws;
    GenState cur = model.initial_state(), next, roll, roll_next;
    std::vector<real_t> dist;
    Sequence completion(seq);
    Token state_input = 0;  // next token to feed when advancing the prefix
    for (int t = 1; t < T; ++t) {
        // Advance so cur has consumed [start, y_1 .. y_{t-1}]; the rollouts
        // for prefix Y_{1:t} fork from here with first input y_t. Earlier
        // iterations overwrote completion[t-1] with sampled tokens, so the
        // prefix entry must be put back before this round's rewards.
        model.step_into(cur, state_input, next, dist, ws);
        std::swap(cur, next);
        state_input = seq[static_cast<std::size_t>(t - 1)];
        completion[static_cast<std::size_t>(t - 1)] = state_input;

        real_t acc = 0;
        for (int n = 0; n < N; ++n) {
            roll = cur;
            Token input = state_input;
            for (int step = t; step < T; ++step) {
                model.step_into(roll, input, roll_next, dist, ws);
                const Token tok = static_cast<Token>(rng.categorical(dist));
                completion[static_cast<std::size_t>(step)] = tok;
                std::swap(roll, roll_next);
                input = tok;
            }
            acc += reward(completion);
        }
        est.q[static_cast<std::size_t>(t - 1)] = acc / static_cast<real_t>(N);
    }
    est.q[static_cast<std::size_t>(T - 1)] = reward(seq);
    return est;
}

QEstimate estimate_q(const Sequence& seq, const RolloutPolicy& rollout,
                     const DiscriminatorModel& disc, int N, Rng& rng) {
    return estimate_q_reward(
        seq, rollout, [&disc](const Sequence& y) { return disc.forward(y); }, N,
        rng);
}

real_t policy_gradient_step_reward(
    GeneratorModel& gen, const RolloutPolicy& rollout,
    const std::function<real_t(const Sequence&)>& reward, int batch_size, int N,
    const OptimizerConfig& opt, Rng& rng, std::int64_t& opt_step,
    const Baseline& baseline) {
    require(batch_size >= 1, "policy_gradient_step: batch_size must be >= 1");
    const int T = gen.dims().horizon;
    const std::size_t horizon = static_cast<std::size_t>(T);

    std::vector<Sequence> episodes;
    episodes.reserve(static_cast<std::size_t>(batch_size));
    std::vector<real_t> q_values;  // batch-major, T per episode
    q_values.reserve(static_cast<std::size_t>(batch_size) * horizon);
    real_t mean_q = 0;
    for (int b = 0; b < batch_size; ++b) {
        episodes.push_back(gen.sample_tokens(rng));
        const QEstimate est =
            estimate_q_reward(episodes.back(), rollout, reward, N, rng);
        for (int t = 0; t < T; ++t) {
            mean_q += est.q[static_cast<std::size_t>(t)];
            q_values.push_back(est.q[static_cast<std::size_t>(t)]);
        }
    }

    std::vector<real_t> offsets(horizon, baseline.value);
    if (baseline.mode == Baseline::Mode::none) {
        std::fill(offsets.begin(), offsets.end(), real_t{0});
    } else if (baseline.mode == Baseline::Mode::batch_mean) {
        std::fill(offsets.begin(), offsets.end(), real_t{0});
        for (int b = 0; b < batch_size; ++b) {
            for (std::size_t t = 0; t < horizon; ++t) {
                offsets[t] += q_values[static_cast<std::size_t>(b) * horizon + t];
            }
        }
        for (real_t& o : offsets) o /= static_cast<real_t>(batch_size);
    }

    gen.params().zero_grad();
    const real_t scale = real_t{1} / static_cast<real_t>(batch_size);
    std::vector<real_t> weights(horizon);
    for (int b = 0; b < batch_size; ++b) {
        for (std::size_t t = 0; t < horizon; ++t) {
            const real_t q = q_values[static_cast<std::size_t>(b) * horizon + t];
            weights[t] = scale * (q - offsets[t]);
        }
        accumulate_teacher_forced_grad(gen, episodes[static_cast<std::size_t>(b)],
                                       weights);
    }
    ++opt_step;
    optimizer_step(gen.params(), opt, opt_step);
    return mean_q / (static_cast<real_t>(batch_size) * static_cast<real_t>(T));
}

real_t policy_gradient_step(GeneratorModel& gen, const RolloutPolicy& rollout,
                            const DiscriminatorModel& disc, int batch_size,
                            int N, const OptimizerConfig& opt, Rng& rng,
                            std::int64_t& opt_step, const Baseline& baseline) {
    return policy_gradient_step_reward(
        gen, rollout, [&disc](const Sequence& y) { return disc.forward(y); },
        batch_size, N, opt, rng, opt_step, baseline);
}

}  // namespace seqgan
