#include "seqgan/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace seqgan {
namespace {

std::string conv_w_name(int window) { return "conv" + std::to_string(window) + "_w"; }
std::string conv_b_name(int window) { return "conv" + std::to_string(window) + "_b"; }

// Stable binary cross-entropy from the logit: -y log s(u) - (1-y) log(1-s(u)).
real_t bce_from_logit(real_t logit, int label) {
    const real_t yu = static_cast<real_t>(label) * logit;
    return std::max(logit, real_t{0}) - yu + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace

KernelPreset preset_desk() {
    KernelPreset p;
    for (int w = 1; w <= 5; ++w) p.push_back({w, 25});
    return p;
}

KernelPreset preset_t20() {
    return {{1, 100}, {2, 200}, {3, 200}, {4, 200}, {5, 200},  {6, 100},
            {7, 100}, {8, 100}, {9, 100}, {10, 100}, {15, 160}, {20, 160}};
}

KernelPreset preset_t32() {
    return {{1, 100}, {2, 200}, {3, 200}, {4, 200},  {5, 200},  {6, 100}, {7, 100},
            {8, 100}, {9, 100}, {10, 100}, {16, 160}, {24, 160}, {32, 160}};
}

KernelPreset load_kernel_preset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("kernel preset: cannot open " + path);
    KernelPreset preset;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        int window = 0, count = 0;
        char comma = 0;
        std::istringstream ss(line);
        if (!(ss >> window >> comma >> count) || comma != ',' || window < 1 ||
            count < 1) {
            throw DataError("kernel preset: bad line " + std::to_string(lineno) +
                            " in " + path);
        }
        preset.push_back({window, count});
    }
    if (preset.empty()) throw DataError("kernel preset: no kernels in " + path);
    return preset;
}

DiscriminatorModel::DiscriminatorModel(int vocab, int emb, int horizon,
                                       KernelPreset kernels, real_t dropout_keep)
    : vocab_(vocab),
      emb_(emb),
      horizon_(horizon),
      kernels_(std::move(kernels)),
      dropout_keep_(dropout_keep) {
    require(vocab_ >= 2, "discriminator: vocab must be >= 2");
    require(emb_ >= 1 && horizon_ >= 1, "discriminator: dims must be positive");
    require(!kernels_.empty(), "discriminator: kernel set is empty");
    require(dropout_keep_ > real_t{0} && dropout_keep_ <= real_t{1},
            "discriminator: dropout keep-probability must lie in (0,1]");
    feature_dim_ = 0;
    for (const KernelSpec& ks : kernels_) {
        require(ks.window >= 1 && ks.window <= horizon_,
                "discriminator: kernel window must lie in [1, horizon]");
        require(ks.count >= 1, "discriminator: kernel count must be positive");
        feature_dim_ += ks.count;
    }
    params_.add("emb", {vocab_, emb_});
    for (const KernelSpec& ks : kernels_) {
        params_.add(conv_w_name(ks.window), {ks.count, ks.window * emb_});
        params_.add(conv_b_name(ks.window), {ks.count});
    }
    params_.add("hw_t_w", {feature_dim_, feature_dim_});
    params_.add("hw_t_b", {feature_dim_});
    params_.add("hw_h_w", {feature_dim_, feature_dim_});
    params_.add("out_w", {feature_dim_});
    params_.add("out_b", {1});
}

void DiscriminatorModel::init_trainable(Rng& rng) {
    constexpr real_t kScale = real_t{0.05};
    for (int i = 0; i < params_.size(); ++i) {
        for (real_t& v : params_.value(i).flat()) {
            v = (rng.uniform() * real_t{2} - real_t{1}) * kScale;
        }
    }
}

void DiscriminatorModel::copy_params_from(const DiscriminatorModel& other) {
    require(vocab_ == other.vocab_ && emb_ == other.emb_ &&
                horizon_ == other.horizon_ && feature_dim_ == other.feature_dim_,
            "copy_params_from: dimension mismatch");
    params_.load_values(other.params_.flatten_values());
}

void DiscriminatorModel::check_sequence(const Sequence& seq) const {
    require(static_cast<int>(seq.size()) == horizon_,
            "sequence length must equal the horizon");
    for (Token tok : seq) {
        require(tok >= 0 && tok < vocab_, "token id out of vocabulary range");
    }
}

Tensor DiscriminatorModel::embed_concat(const Sequence& seq) const {
    check_sequence(seq);
    const Tensor& emb = params_.value("emb");
    Tensor out({horizon_, emb_});
    for (int t = 0; t < horizon_; ++t) {
        auto src = emb.row(seq[static_cast<std::size_t>(t)]);
        auto dst = out.row(t);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

real_t DiscriminatorModel::forward_cached(const Sequence& seq, Rng* dropout_rng,
                                          DiscCache& cache) const {
    check_sequence(seq);
    const std::size_t F = static_cast<std::size_t>(feature_dim_);
    cache.pooled.assign(F, 0);
    cache.argmax.assign(F, 0);
    cache.cd.assign(F, 0);
    cache.tau.assign(F, 0);
    cache.hh.assign(F, 0);
    cache.ah.assign(F, 0);
    cache.ct.assign(F, 0);
    cache.drop.clear();

    const Tensor emb_mat = embed_concat(seq);
    const real_t* e = emb_mat.data();

    std::size_t fbase = 0;
    for (const KernelSpec& ks : kernels_) {
        const Tensor& w = params_.value(conv_w_name(ks.window));
        const Tensor& b = params_.value(conv_b_name(ks.window));
        const int span = ks.window * emb_;
        const int positions = horizon_ - ks.window + 1;
        for (int j = 0; j < ks.count; ++j) {
            const real_t* wj = w.data() + static_cast<std::size_t>(j) * span;
            real_t best = 0;
            int best_pos = 0;
            for (int pos = 0; pos < positions; ++pos) {
                const real_t* win = e + static_cast<std::size_t>(pos) * emb_;
                real_t acc = b(j);
                for (int q = 0; q < span; ++q) acc += wj[q] * win[q];
                const real_t act = std::max(acc, real_t{0});
                if (pos == 0 || act > best) {
                    best = act;
                    best_pos = pos;
                }
            }
            cache.pooled[fbase + static_cast<std::size_t>(j)] = best;
            cache.argmax[fbase + static_cast<std::size_t>(j)] = best_pos;
        }
        fbase += static_cast<std::size_t>(ks.count);
    }

    if (dropout_rng != nullptr && dropout_keep_ < real_t{1}) {
        cache.drop.assign(F, 0);
        for (std::size_t j = 0; j < F; ++j) {
            const bool keep = dropout_rng->uniform() < dropout_keep_;
            cache.drop[j] = keep ? real_t{1} / dropout_keep_ : real_t{0};
            cache.cd[j] = cache.pooled[j] * cache.drop[j];
        }
    } else {
        cache.cd = cache.pooled;
    }

    const Tensor& hw_t_w = params_.value("hw_t_w");
    const Tensor& hw_t_b = params_.value("hw_t_b");
    const Tensor& hw_h_w = params_.value("hw_h_w");
    std::vector<real_t> at(F);
    matvec(hw_t_w, cache.cd, at);
    matvec(hw_h_w, cache.cd, cache.ah);
    for (std::size_t j = 0; j < F; ++j) {
        cache.tau[j] = sigmoid(at[j] + hw_t_b(static_cast<int>(j)));
        cache.hh[j] = std::max(cache.ah[j], real_t{0});
        cache.ct[j] = cache.tau[j] * cache.hh[j] +
                      (real_t{1} - cache.tau[j]) * cache.cd[j];
    }

    const Tensor& out_w = params_.value("out_w");
    real_t logit = params_.value("out_b")(0);
    for (std::size_t j = 0; j < F; ++j) logit += out_w(static_cast<int>(j)) * cache.ct[j];
    cache.logit = logit;
    cache.prob = sigmoid(logit);
    return cache.prob;
}

real_t DiscriminatorModel::forward(const Sequence& seq, Rng* dropout_rng) const {
    thread_local DiscCache cache;
    return forward_cached(seq, dropout_rng, cache);
}

std::vector<real_t> DiscriminatorModel::score_batch(
    const std::vector<Sequence>& seqs) const {
    std::vector<real_t> out;
    out.reserve(seqs.size());
    thread_local DiscCache cache;
    for (const Sequence& seq : seqs) out.push_back(forward_cached(seq, nullptr, cache));
    return out;
}

namespace {

// Backpropagates one sequence's weighted cross-entropy through the cached
// activations.
void disc_backward(DiscriminatorModel& model, const Sequence& seq,
                   const DiscCache& cache, int label, real_t weight) {
    ParamStore& p = model.params();
    const std::size_t F = static_cast<std::size_t>(model.feature_dim());

    const real_t dlogit = weight * (cache.prob - static_cast<real_t>(label));

    const Tensor& out_w = p.value("out_w");
    Tensor& g_out_w = p.grad("out_w");
    Tensor& g_out_b = p.grad("out_b");
    g_out_b(0) += dlogit;
    std::vector<real_t> dct(F);
    for (std::size_t j = 0; j < F; ++j) {
        g_out_w(static_cast<int>(j)) += dlogit * cache.ct[j];
        dct[j] = dlogit * out_w(static_cast<int>(j));
    }

    const Tensor& hw_t_w = p.value("hw_t_w");
    const Tensor& hw_h_w = p.value("hw_h_w");
    Tensor& g_hw_t_w = p.grad("hw_t_w");
    Tensor& g_hw_t_b = p.grad("hw_t_b");
    Tensor& g_hw_h_w = p.grad("hw_h_w");

    std::vector<real_t> dat(F), dah(F), dcd(F);
    for (std::size_t j = 0; j < F; ++j) {
        const real_t tau = cache.tau[j];
        const real_t dtau = dct[j] * (cache.hh[j] - cache.cd[j]);
        dat[j] = dtau * tau * (real_t{1} - tau);
        dah[j] = cache.ah[j] > real_t{0} ? dct[j] * tau : real_t{0};
        dcd[j] = dct[j] * (real_t{1} - tau);
        g_hw_t_b(static_cast<int>(j)) += dat[j];
    }
    outer_add(g_hw_t_w, dat, cache.cd);
    outer_add(g_hw_h_w, dah, cache.cd);
    matvec_transposed_add(hw_t_w, dat, dcd);
    matvec_transposed_add(hw_h_w, dah, dcd);

    std::vector<real_t> dpooled(F);
    if (!cache.drop.empty()) {
        for (std::size_t j = 0; j < F; ++j) dpooled[j] = dcd[j] * cache.drop[j];
    } else {
        dpooled = dcd;
    }

    const Tensor emb_mat = model.embed_concat(seq);
    Tensor& g_emb = p.grad("emb");
    const int k_d = model.emb();
    std::size_t fbase = 0;
    for (const KernelSpec& ks : model.kernels()) {
        const Tensor& w = p.value(conv_w_name(ks.window));
        Tensor& g_w = p.grad(conv_w_name(ks.window));
        Tensor& g_b = p.grad(conv_b_name(ks.window));
        const int span = ks.window * k_d;
        for (int j = 0; j < ks.count; ++j) {
            const std::size_t fj = fbase + static_cast<std::size_t>(j);
            const real_t da =
                cache.pooled[fj] > real_t{0} ? dpooled[fj] : real_t{0};
            if (da == real_t{0}) continue;
            const int pos = cache.argmax[fj];
            const real_t* win = emb_mat.data() + static_cast<std::size_t>(pos) * k_d;
            const real_t* wj = w.data() + static_cast<std::size_t>(j) * span;
            real_t* gwj = g_w.data() + static_cast<std::size_t>(j) * span;
            g_b(j) += da;
            for (int q = 0; q < span; ++q) gwj[q] += da * win[q];
            for (int r = 0; r < ks.window; ++r) {
                const Token tok = seq[static_cast<std::size_t>(pos + r)];
                auto grow = g_emb.row(tok);
                for (int c = 0; c < k_d; ++c) {
                    grow[static_cast<std::size_t>(c)] += da * wj[r * k_d + c];
                }
            }
        }
        fbase += static_cast<std::size_t>(ks.count);
    }
}

}  // namespace

real_t disc_loss_and_grad(DiscriminatorModel& model, const LabeledBatch& batch,
                          Rng* dropout_rng) {
    require(!batch.sequences.empty(), "disc_loss_and_grad: empty batch");
    require(batch.sequences.size() == batch.labels.size(),
            "disc_loss_and_grad: sequence/label count mismatch");
    const real_t w = real_t{1} / static_cast<real_t>(batch.sequences.size());
    real_t loss = 0;
    DiscCache cache;
    for (std::size_t i = 0; i < batch.sequences.size(); ++i) {
        const int label = batch.labels[i];
        require(label == 0 || label == 1, "disc_loss_and_grad: labels must be 0/1");
        model.forward_cached(batch.sequences[i], dropout_rng, cache);
        loss += w * bce_from_logit(cache.logit, label);
        disc_backward(model, batch.sequences[i], cache, label, w);
    }
    return loss;
}

DiscEval disc_evaluate(const DiscriminatorModel& model, const LabeledBatch& batch) {
    require(!batch.sequences.empty(), "disc_evaluate: empty batch");
    require(batch.sequences.size() == batch.labels.size(),
            "disc_evaluate: sequence/label count mismatch");
    DiscEval ev;
    DiscCache cache;
    for (std::size_t i = 0; i < batch.sequences.size(); ++i) {
        model.forward_cached(batch.sequences[i], nullptr, cache);
        ev.loss += bce_from_logit(cache.logit, batch.labels[i]);
        const int pred = cache.prob > real_t{0.5} ? 1 : 0;
        if (pred == batch.labels[i]) ev.accuracy += 1;
    }
    const real_t n = static_cast<real_t>(batch.sequences.size());
    ev.loss /= n;
    ev.accuracy /= n;
    return ev;
}

real_t disc_train_epochs(DiscriminatorModel& model,
                         const std::vector<Sequence>& positives,
                         const std::vector<Sequence>& negatives, int k,
                         const OptimizerConfig& opt, int batch_size, Rng rng,
                         std::int64_t& opt_step, bool use_dropout) {
    require(!positives.empty() && !negatives.empty(),
            "disc_train_epochs: both classes must be nonempty");
    require(k >= 0, "disc_train_epochs: k must be >= 0");
    require(batch_size >= 1, "disc_train_epochs: batch size must be >= 1");

    const std::size_t total = positives.size() + negatives.size();
    std::vector<std::size_t> order(total);
    real_t last_loss = 0;
    DiscCache cache;
    for (int epoch = 0; epoch < k; ++epoch) {
        Rng shuffle_rng = rng.child("shuffle", static_cast<std::uint64_t>(epoch));
        Rng drop_rng = rng.child("dropout", static_cast<std::uint64_t>(epoch));
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = total; i > 1; --i) {
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(
                          shuffle_rng.uniform_int(static_cast<int>(i)))]);
        }
        real_t epoch_loss = 0;
        std::size_t pos = 0;
        while (pos < total) {
            const std::size_t take =
                std::min(static_cast<std::size_t>(batch_size), total - pos);
            model.params().zero_grad();
            const real_t w = real_t{1} / static_cast<real_t>(take);
            real_t batch_loss = 0;
            for (std::size_t b = 0; b < take; ++b) {
                const std::size_t idx = order[pos + b];
                const bool is_pos = idx < positives.size();
                const Sequence& seq =
                    is_pos ? positives[idx] : negatives[idx - positives.size()];
                const int label = is_pos ? 1 : 0;
                model.forward_cached(seq, use_dropout ? &drop_rng : nullptr, cache);
                batch_loss += w * bce_from_logit(cache.logit, label);
                disc_backward(model, seq, cache, label, w);
            }
            ++opt_step;
            optimizer_step(model.params(), opt, opt_step);
            epoch_loss += batch_loss * static_cast<real_t>(take);
            pos += take;
        }
        last_loss = epoch_loss / static_cast<real_t>(total);
    }
    return last_loss;
}

}  // namespace seqgan
