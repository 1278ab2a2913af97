#include "seqgan/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace seqgan {
namespace {

constexpr real_t kMaskLogit = real_t{-1e30};
constexpr real_t kProbFloor = real_t{1e-300};

struct GenRefs {
    const Tensor& emb;
    const Tensor& wf;
    const Tensor& wi;
    const Tensor& wo;
    const Tensor& ws;
    const Tensor& bf;
    const Tensor& bi;
    const Tensor& bo;
    const Tensor& bs;
    const Tensor& out_w;
    const Tensor& out_b;
};

GenRefs refs(const ParamStore& p) {
    return {p.value("emb"),   p.value("w_f"),   p.value("w_i"), p.value("w_o"),
            p.value("w_s"),   p.value("b_f"),   p.value("b_i"), p.value("b_o"),
            p.value("b_s"),   p.value("out_w"), p.value("out_b")};
}

void gate_preact(const Tensor& w, const Tensor& b, std::span<const real_t> z,
                 std::span<real_t> out) {
    matvec(w, z, out);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += b[j];
}

// One LSTM cell evaluation. Writes gate activations, the new cell/hidden
// state, tanh of the new cell, and the output distribution.
void cell_forward(const GenRefs& r, const GenDims& d, bool mask_start,
                  std::span<const real_t> h_prev, std::span<const real_t> s_prev,
                  Token input, std::span<real_t> z, std::span<real_t> f,
                  std::span<real_t> i, std::span<real_t> o, std::span<real_t> g,
                  std::span<real_t> s_new, std::span<real_t> ts,
                  std::span<real_t> h_new, std::span<real_t> dist) {
    const int hdim = d.hidden;
    std::copy(h_prev.begin(), h_prev.end(), z.begin());
    auto x = r.emb.row(input);
    std::copy(x.begin(), x.end(), z.begin() + hdim);

    gate_preact(r.wf, r.bf, z, f);
    gate_preact(r.wi, r.bi, z, i);
    gate_preact(r.wo, r.bo, z, o);
    gate_preact(r.ws, r.bs, z, g);
    for (int j = 0; j < hdim; ++j) {
        f[j] = sigmoid(f[j]);
        i[j] = sigmoid(i[j]);
        o[j] = sigmoid(o[j]);
        g[j] = std::tanh(g[j]);
        s_new[j] = f[j] * s_prev[j] + i[j] * g[j];
        ts[j] = std::tanh(s_new[j]);
        h_new[j] = o[j] * ts[j];
    }

    matvec(r.out_w, h_new, dist);
    for (int v = 0; v < d.vocab; ++v) dist[v] += r.out_b[static_cast<std::size_t>(v)];
    if (mask_start) dist[0] = kMaskLogit;
    softmax_inplace(dist);
}

// Reusable forward/backward buffers for one sequence of BPTT.
struct Tape {
    GenDims d{};
    bool mask_start = false;

    std::vector<Token> inputs;
    std::vector<real_t> hs, ss;          // (T+1) x h, row 0 = zeros
    std::vector<real_t> f, i, o, g, ts;  // T x h
    std::vector<real_t> dists;           // T x V

    std::vector<real_t> z, dz;                       // h + k
    std::vector<real_t> dl;                          // V
    std::vector<real_t> daf, dai, dao, dag;          // h
    std::vector<real_t> dh, ds;                      // h

    void resize(const GeneratorModel& m) {
        const GenDims& md = m.dims();
        if (d.vocab == md.vocab && d.emb == md.emb && d.hidden == md.hidden &&
            d.horizon == md.horizon && mask_start == m.mask_start()) {
            return;
        }
        d = md;
        mask_start = m.mask_start();
        const std::size_t T = static_cast<std::size_t>(d.horizon);
        const std::size_t H = static_cast<std::size_t>(d.hidden);
        const std::size_t V = static_cast<std::size_t>(d.vocab);
        inputs.assign(T, 0);
        hs.assign((T + 1) * H, 0);
        ss.assign((T + 1) * H, 0);
        f.assign(T * H, 0);
        i.assign(T * H, 0);
        o.assign(T * H, 0);
        g.assign(T * H, 0);
        ts.assign(T * H, 0);
        dists.assign(T * V, 0);
        z.assign(H + static_cast<std::size_t>(d.emb), 0);
        dz.assign(H + static_cast<std::size_t>(d.emb), 0);
        dl.assign(V, 0);
        daf.assign(H, 0);
        dai.assign(H, 0);
        dao.assign(H, 0);
        dag.assign(H, 0);
        dh.assign(H, 0);
        ds.assign(H, 0);
    }

    std::span<real_t> row(std::vector<real_t>& buf, int t, int width) {
        return {buf.data() + static_cast<std::size_t>(t) * width,
                static_cast<std::size_t>(width)};
    }
    std::span<const real_t> row(const std::vector<real_t>& buf, int t,
                                int width) const {
        return {buf.data() + static_cast<std::size_t>(t) * width,
                static_cast<std::size_t>(width)};
    }

    // Runs the forward recurrence; pick_input chooses the input token for
    // step t given the previous step's distribution (t >= 1).
    template <typename PickInput>
    void forward(const GeneratorModel& m, PickInput&& pick_input) {
        resize(m);
        const GenRefs r = refs(m.params());
        const int T = d.horizon, H = d.hidden, V = d.vocab;
        std::fill_n(hs.begin(), H, real_t{0});
        std::fill_n(ss.begin(), H, real_t{0});
        for (int t = 0; t < T; ++t) {
            const Token in =
                t == 0 ? Token{0}
                       : pick_input(t, row(dists, t - 1, V));
            m.check_token(in);
            inputs[static_cast<std::size_t>(t)] = in;
            cell_forward(r, d, mask_start, row(hs, t, H), row(ss, t, H), in, z,
                         row(f, t, H), row(i, t, H), row(o, t, H), row(g, t, H),
                         row(ss, t + 1, H), row(ts, t, H), row(hs, t + 1, H),
                         row(dists, t, V));
        }
    }

    real_t nll(const Sequence& targets) const {
        const int T = d.horizon, V = d.vocab;
        real_t total = 0;
        for (int t = 0; t < T; ++t) {
            const real_t p = row(dists, t, V)[static_cast<std::size_t>(
                targets[static_cast<std::size_t>(t)])];
            total -= std::log(std::max(p, kProbFloor));
        }
        return total;
    }

    // Accumulates d/dtheta of sum_t weights[t] * (-log p(targets[t])) into
    // the model's gradient slots.
    void backward(GeneratorModel& m, const Sequence& targets,
                  std::span<const real_t> weights) {
        ParamStore& p = m.params();
        Tensor& g_emb = p.grad("emb");
        Tensor& g_wf = p.grad("w_f");
        Tensor& g_wi = p.grad("w_i");
        Tensor& g_wo = p.grad("w_o");
        Tensor& g_ws = p.grad("w_s");
        Tensor& g_bf = p.grad("b_f");
        Tensor& g_bi = p.grad("b_i");
        Tensor& g_bo = p.grad("b_o");
        Tensor& g_bs = p.grad("b_s");
        Tensor& g_vw = p.grad("out_w");
        Tensor& g_vb = p.grad("out_b");
        const GenRefs r = refs(p);
        const int T = d.horizon, H = d.hidden, V = d.vocab, K = d.emb;

        std::fill(dh.begin(), dh.end(), real_t{0});
        std::fill(ds.begin(), ds.end(), real_t{0});
        for (int t = T - 1; t >= 0; --t) {
            const real_t w = weights[static_cast<std::size_t>(t)];
            auto dist = row(dists, t, V);
            for (int v = 0; v < V; ++v) dl[static_cast<std::size_t>(v)] = w * dist[static_cast<std::size_t>(v)];
            dl[static_cast<std::size_t>(targets[static_cast<std::size_t>(t)])] -= w;
            if (mask_start) dl[0] = 0;

            auto h_new = row(hs, t + 1, H);
            for (int v = 0; v < V; ++v) g_vb(v) += dl[static_cast<std::size_t>(v)];
            outer_add(g_vw, dl, h_new);
            matvec_transposed_add(r.out_w, dl, dh);

            auto ft = row(f, t, H);
            auto it = row(i, t, H);
            auto ot = row(o, t, H);
            auto gt = row(g, t, H);
            auto tst = row(ts, t, H);
            auto s_prev = row(ss, t, H);
            for (int j = 0; j < H; ++j) {
                const real_t dhj = dh[static_cast<std::size_t>(j)];
                ds[static_cast<std::size_t>(j)] +=
                    dhj * ot[static_cast<std::size_t>(j)] *
                    (real_t{1} - tst[static_cast<std::size_t>(j)] * tst[static_cast<std::size_t>(j)]);
                const real_t dsj = ds[static_cast<std::size_t>(j)];
                const real_t fj = ft[static_cast<std::size_t>(j)];
                const real_t ij = it[static_cast<std::size_t>(j)];
                const real_t oj = ot[static_cast<std::size_t>(j)];
                const real_t gj = gt[static_cast<std::size_t>(j)];
                daf[static_cast<std::size_t>(j)] =
                    dsj * s_prev[static_cast<std::size_t>(j)] * fj * (real_t{1} - fj);
                dai[static_cast<std::size_t>(j)] = dsj * gj * ij * (real_t{1} - ij);
                dao[static_cast<std::size_t>(j)] =
                    dhj * tst[static_cast<std::size_t>(j)] * oj * (real_t{1} - oj);
                dag[static_cast<std::size_t>(j)] = dsj * ij * (real_t{1} - gj * gj);
                ds[static_cast<std::size_t>(j)] = dsj * fj;
            }

            auto h_prev = row(hs, t, H);
            std::copy(h_prev.begin(), h_prev.end(), z.begin());
            const Token in = inputs[static_cast<std::size_t>(t)];
            auto x = r.emb.row(in);
            std::copy(x.begin(), x.end(), z.begin() + H);

            outer_add(g_wf, daf, z);
            outer_add(g_wi, dai, z);
            outer_add(g_wo, dao, z);
            outer_add(g_ws, dag, z);
            for (int j = 0; j < H; ++j) {
                g_bf(j) += daf[static_cast<std::size_t>(j)];
                g_bi(j) += dai[static_cast<std::size_t>(j)];
                g_bo(j) += dao[static_cast<std::size_t>(j)];
                g_bs(j) += dag[static_cast<std::size_t>(j)];
            }

            std::fill(dz.begin(), dz.end(), real_t{0});
            matvec_transposed_add(r.wf, daf, dz);
            matvec_transposed_add(r.wi, dai, dz);
            matvec_transposed_add(r.wo, dao, dz);
            matvec_transposed_add(r.ws, dag, dz);
            std::copy_n(dz.begin(), H, dh.begin());
            auto erow = g_emb.row(in);
            for (int j = 0; j < K; ++j) {
                erow[static_cast<std::size_t>(j)] += dz[static_cast<std::size_t>(H + j)];
            }
        }
    }
};

thread_local Tape t_tape;

void validate_sequence(const GeneratorModel& m, const Sequence& seq) {
    require(static_cast<int>(seq.size()) == m.dims().horizon,
            "sequence length must equal the horizon");
    for (Token tok : seq) m.check_token(tok);
}

}  // namespace

GeneratorModel::GeneratorModel(const GenDims& dims, bool mask_start)
    : dims_(dims), mask_start_(mask_start) {
    require(dims.vocab >= 2, "generator: vocab must be >= 2");
    require(dims.emb >= 1 && dims.hidden >= 1 && dims.horizon >= 1,
            "generator: dims must be positive");
    const int hk = dims.hidden + dims.emb;
    params_.add("emb", {dims.vocab, dims.emb});
    params_.add("w_f", {dims.hidden, hk});
    params_.add("w_i", {dims.hidden, hk});
    params_.add("w_o", {dims.hidden, hk});
    params_.add("w_s", {dims.hidden, hk});
    params_.add("b_f", {dims.hidden});
    params_.add("b_i", {dims.hidden});
    params_.add("b_o", {dims.hidden});
    params_.add("b_s", {dims.hidden});
    params_.add("out_w", {dims.vocab, dims.hidden});
    params_.add("out_b", {dims.vocab});
}

void GeneratorModel::init_trainable(Rng& rng) {
    constexpr real_t kScale = real_t{0.05};
    for (int i = 0; i < params_.size(); ++i) {
        for (real_t& v : params_.value(i).flat()) {
            v = (rng.uniform() * real_t{2} - real_t{1}) * kScale;
        }
    }
    params_.value("b_f").fill(real_t{1});
}

void GeneratorModel::init_oracle(Rng& rng) { params_.init_normal(rng, real_t{1}); }

void GeneratorModel::copy_params_from(const GeneratorModel& other) {
    require(dims_.vocab == other.dims_.vocab && dims_.emb == other.dims_.emb &&
                dims_.hidden == other.dims_.hidden &&
                dims_.horizon == other.dims_.horizon,
            "copy_params_from: dimension mismatch");
    params_.load_values(other.params_.flatten_values());
}

GenState GeneratorModel::initial_state() const {
    GenState s;
    s.h.assign(static_cast<std::size_t>(dims_.hidden), 0);
    s.s.assign(static_cast<std::size_t>(dims_.hidden), 0);
    s.t = 0;
    return s;
}

void GeneratorModel::check_token(Token tok) const {
    require(tok >= 0 && tok < dims_.vocab, "token id out of vocabulary range");
}

void GeneratorModel::step_into(const GenState& state, Token input, GenState& next,
                               std::vector<real_t>& dist, StepWorkspace& ws) const {
    require(state.t < dims_.horizon, "step: horizon exhausted");
    check_token(input);
    const std::size_t H = static_cast<std::size_t>(dims_.hidden);
    ws.z.resize(H + static_cast<std::size_t>(dims_.emb));
    ws.f.resize(H);
    ws.i.resize(H);
    ws.o.resize(H);
    ws.g.resize(H);
    ws.ts.resize(H);
    next.h.resize(H);
    next.s.resize(H);
    dist.resize(static_cast<std::size_t>(dims_.vocab));

    cell_forward(refs(params_), dims_, mask_start_, state.h, state.s, input, ws.z,
                 ws.f, ws.i, ws.o, ws.g, next.s, ws.ts, next.h, dist);
    next.t = state.t + 1;
}

std::pair<GenState, std::vector<real_t>> GeneratorModel::step(
    const GenState& state, Token input) const {
    GenState next;
    std::vector<real_t> dist;
    StepWorkspace ws;
    step_into(state, input, next, dist, ws);
    return {std::move(next), std::move(dist)};
}

SampleResult GeneratorModel::sample_sequence(Rng& rng) const {
    SampleResult out;
    out.tokens.reserve(static_cast<std::size_t>(dims_.horizon));
    out.dists.reserve(static_cast<std::size_t>(dims_.horizon));
    GenState cur = initial_state(), next;
    std::vector<real_t> dist;
    StepWorkspace ws;
    Token input = 0;
    for (int t = 0; t < dims_.horizon; ++t) {
        step_into(cur, input, next, dist, ws);
        const Token tok = static_cast<Token>(rng.categorical(dist));
        out.tokens.push_back(tok);
        out.dists.push_back(dist);
        std::swap(cur, next);
        input = tok;
    }
    return out;
}

Sequence GeneratorModel::sample_tokens(Rng& rng) const {
    Sequence tokens;
    tokens.reserve(static_cast<std::size_t>(dims_.horizon));
    GenState cur = initial_state(), next;
    std::vector<real_t> dist;
    StepWorkspace ws;
    Token input = 0;
    for (int t = 0; t < dims_.horizon; ++t) {
        step_into(cur, input, next, dist, ws);
        const Token tok = static_cast<Token>(rng.categorical(dist));
        tokens.push_back(tok);
        std::swap(cur, next);
        input = tok;
    }
    return tokens;
}

std::vector<real_t> GeneratorModel::per_token_log_probs(const Sequence& seq) const {
    validate_sequence(*this, seq);
    std::vector<real_t> out;
    out.reserve(seq.size());
    GenState cur = initial_state(), next;
    std::vector<real_t> dist;
    StepWorkspace ws;
    Token input = 0;
    for (int t = 0; t < dims_.horizon; ++t) {
        step_into(cur, input, next, dist, ws);
        const Token target = seq[static_cast<std::size_t>(t)];
        out.push_back(std::log(std::max(dist[static_cast<std::size_t>(target)],
                                        kProbFloor)));
        std::swap(cur, next);
        input = target;
    }
    return out;
}

real_t GeneratorModel::log_likelihood(const Sequence& seq) const {
    const std::vector<real_t> lps = per_token_log_probs(seq);
    return std::accumulate(lps.begin(), lps.end(), real_t{0});
}

real_t accumulate_teacher_forced_grad(GeneratorModel& model,
                                      const Sequence& targets,
                                      std::span<const real_t> weights) {
    validate_sequence(model, targets);
    require(weights.size() == targets.size(),
            "accumulate_teacher_forced_grad: weights size mismatch");
    Tape& tape = t_tape;
    tape.forward(model, [&](int t, std::span<const real_t>) {
        return targets[static_cast<std::size_t>(t - 1)];
    });
    const real_t nll = tape.nll(targets);
    tape.backward(model, targets, weights);
    return nll;
}

namespace {

template <typename AccumulateSeq>
real_t run_epoch(GeneratorModel& model, const std::vector<Sequence>& data,
                 const OptimizerConfig& opt, int batch_size, Rng& rng,
                 std::int64_t& opt_step, AccumulateSeq&& accumulate) {
    require(!data.empty(), "train epoch: empty dataset");
    require(batch_size >= 1, "train epoch: batch size must be >= 1");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = rng.child("shuffle");
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1],
                  order[static_cast<std::size_t>(shuffle_rng.uniform_int(
                      static_cast<int>(i)))]);
    }

    real_t total_nll = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
        const std::size_t take =
            std::min(static_cast<std::size_t>(batch_size), order.size() - pos);
        model.params().zero_grad();
        const real_t w = real_t{1} / static_cast<real_t>(take);
        for (std::size_t b = 0; b < take; ++b) {
            total_nll += accumulate(data[order[pos + b]], w);
        }
        ++opt_step;
        optimizer_step(model.params(), opt, opt_step);
        pos += take;
    }
    const real_t tokens =
        static_cast<real_t>(data.size()) * static_cast<real_t>(model.dims().horizon);
    return total_nll / tokens;
}

}  // namespace

real_t mle_train_epoch(GeneratorModel& model, const std::vector<Sequence>& data,
                       const OptimizerConfig& opt, int batch_size, Rng rng,
                       std::int64_t& opt_step) {
    std::vector<real_t> weights(static_cast<std::size_t>(model.dims().horizon));
    return run_epoch(model, data, opt, batch_size, rng, opt_step,
                     [&](const Sequence& seq, real_t w) {
                         std::fill(weights.begin(), weights.end(), w);
                         return accumulate_teacher_forced_grad(model, seq, weights);
                     });
}

real_t scheduled_sampling_epoch(GeneratorModel& model,
                                const std::vector<Sequence>& data,
                                const OptimizerConfig& opt, real_t omega,
                                int batch_size, Rng rng, std::int64_t& opt_step) {
    require(omega >= real_t{0} && omega <= real_t{1},
            "scheduled_sampling_epoch: omega must lie in [0,1]");
    Rng coin_rng = rng.child("ss-coin");
    Rng sample_rng = rng.child("ss-sample");
    std::vector<real_t> weights(static_cast<std::size_t>(model.dims().horizon));
    return run_epoch(
        model, data, opt, batch_size, rng, opt_step,
        [&](const Sequence& seq, real_t w) {
            validate_sequence(model, seq);
            Tape& tape = t_tape;
            tape.forward(model, [&](int t, std::span<const real_t> prev_dist) {
                if (coin_rng.uniform() < omega) {
                    return seq[static_cast<std::size_t>(t - 1)];
                }
                return static_cast<Token>(sample_rng.categorical(prev_dist));
            });
            const real_t nll = tape.nll(seq);
            std::fill(weights.begin(), weights.end(), w);
            tape.backward(model, seq, weights);
            return nll;
        });
}

}  // namespace seqgan
