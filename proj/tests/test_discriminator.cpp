#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "seqgan/discriminator.hpp"
#include "seqgan/gradcheck.hpp"

using namespace seqgan;

namespace {

DiscriminatorModel tiny_disc(std::uint64_t seed = 17, real_t keep = real_t{0.75}) {
    DiscriminatorModel d(6, 4, 5, {{1, 3}, {2, 4}, {3, 2}}, keep);
    Rng rng(seed);
    d.params().init_normal(rng, real_t{0.3});
    return d;
}

Sequence random_seq(Rng& rng, int vocab, int horizon) {
    Sequence s;
    for (int t = 0; t < horizon; ++t) s.push_back(rng.uniform_int(vocab));
    return s;
}

}  // namespace

TEST_CASE("forward pass matches an independent scalar network") {
    const DiscriminatorModel disc = tiny_disc();
    Rng rng(70);
    for (int trial = 0; trial < 10; ++trial) {
        const Sequence seq = random_seq(rng, 6, 5);
        CHECK(disc.forward(seq) ==
              doctest::Approx(refimpl::scalar_disc_prob(disc, seq)).epsilon(1e-10));
    }
}

TEST_CASE("embedding rows line up with the token ids") {
    const DiscriminatorModel disc = tiny_disc();
    const Sequence seq{3, 3, 0, 5, 1};
    const Tensor e = disc.embed_concat(seq);
    REQUIRE(e.rows() == 5);
    REQUIRE(e.cols() == 4);
    const auto& emb = disc.params().value("emb");
    for (int t = 0; t < 5; ++t) {
        for (int j = 0; j < 4; ++j) {
            CHECK(e(t, j) == emb(seq[static_cast<std::size_t>(t)], j));
        }
    }
}

TEST_CASE("batch scoring equals per-sequence forwards") {
    const DiscriminatorModel disc = tiny_disc();
    Rng rng(71);
    std::vector<Sequence> seqs;
    for (int i = 0; i < 4; ++i) seqs.push_back(random_seq(rng, 6, 5));
    const auto scores = disc.score_batch(seqs);
    REQUIRE(scores.size() == seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        CHECK(scores[i] == disc.forward(seqs[i]));
    }
}

TEST_CASE("bce loss is exact and stable at confident outputs") {
    DiscriminatorModel disc = tiny_disc();
    Rng rng(72);
    LabeledBatch batch;
    for (int i = 0; i < 6; ++i) {
        batch.sequences.push_back(random_seq(rng, 6, 5));
        batch.labels.push_back(i % 2);
    }
    disc.params().zero_grad();
    const real_t loss = disc_loss_and_grad(disc, batch);
    long double want = 0;
    for (std::size_t i = 0; i < batch.sequences.size(); ++i) {
        const double p = refimpl::scalar_disc_prob(disc, batch.sequences[i]);
        want += batch.labels[i] ? -std::log(p) : -std::log1p(-p);
    }
    want /= static_cast<long double>(batch.sequences.size());
    CHECK(loss == doctest::Approx(static_cast<double>(want)).epsilon(1e-10));

    // Saturated logits must not produce inf/nan loss.
    DiscriminatorModel hot = tiny_disc();
    hot.params().value("out_w").fill(real_t{50});
    hot.params().value("out_b").fill(real_t{50});
    LabeledBatch one;
    one.sequences.push_back(batch.sequences[0]);
    one.labels.push_back(0);
    hot.params().zero_grad();
    CHECK(std::isfinite(disc_loss_and_grad(hot, one)));
}

TEST_CASE("discriminator gradients pass finite-difference checks") {
    DiscriminatorModel disc = tiny_disc(29, real_t{1});
    Rng rng(73);
    LabeledBatch batch;
    for (int i = 0; i < 4; ++i) {
        batch.sequences.push_back(random_seq(rng, 6, 5));
        batch.labels.push_back(1 - i % 2);
    }
    disc.params().zero_grad();
    disc_loss_and_grad(disc, batch);
    const auto analytic = disc.params().flatten_grads();
    auto loss = [&]() {
        real_t acc = 0;
        for (std::size_t i = 0; i < batch.sequences.size(); ++i) {
            const real_t p = disc.forward(batch.sequences[i]);
            acc += batch.labels[i] ? -std::log(p) : -std::log1p(-p);
        }
        return acc / static_cast<real_t>(batch.sequences.size());
    };
    const auto numeric = finite_diff_grad(loss, disc.params(), real_t{1e-5});
    const auto report =
        compare_gradients(analytic, numeric, disc.params(), real_t{1e-7});
    INFO(report.worst_name << "[" << report.worst_offset << "]");
    // Max pooling and ReLU kink under perturbation: tolerate slightly more
    // noise than smooth models but stay well below a real sign-off bug.
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("dropout with keep probability one is a no-op") {
    const DiscriminatorModel disc = tiny_disc(33, real_t{1});
    Rng rng(74);
    const Sequence seq = random_seq(rng, 6, 5);
    Rng drop(5);
    CHECK(disc.forward(seq, &drop) == disc.forward(seq));
}

TEST_CASE("dropout keeps features at the configured rate and rescales") {
    const DiscriminatorModel disc = tiny_disc(34, real_t{0.5});
    Rng rng(75);
    const Sequence seq = random_seq(rng, 6, 5);
    // Inverted dropout: the average over many masks approximates the
    // deterministic forward features, so probabilities stay in range and vary.
    Rng drop(6);
    int distinct = 0;
    real_t first = disc.forward(seq, &drop);
    for (int i = 0; i < 20; ++i) {
        const real_t p = disc.forward(seq, &drop);
        CHECK(p > 0);
        CHECK(p < 1);
        if (p != first) ++distinct;
    }
    CHECK(distinct > 0);
}

TEST_CASE("training separates an easy real/fake distinction") {
    DiscriminatorModel disc(6, 4, 5, {{1, 8}, {2, 8}}, real_t{0.9});
    Rng init(41);
    disc.init_trainable(init);

    // Real sequences use only tokens {1,2}; fakes use {4,5}.
    std::vector<Sequence> pos, neg;
    Rng rng(76);
    for (int i = 0; i < 48; ++i) {
        Sequence p, n;
        for (int t = 0; t < 5; ++t) {
            p.push_back(1 + rng.uniform_int(2));
            n.push_back(4 + rng.uniform_int(2));
        }
        pos.push_back(std::move(p));
        neg.push_back(std::move(n));
    }
    LabeledBatch eval;
    for (int i = 0; i < 16; ++i) {
        eval.sequences.push_back(pos[static_cast<std::size_t>(i)]);
        eval.labels.push_back(1);
        eval.sequences.push_back(neg[static_cast<std::size_t>(i)]);
        eval.labels.push_back(0);
    }

    const DiscEval before = disc_evaluate(disc, eval);
    OptimizerConfig opt;
    opt.kind = OptimizerConfig::Kind::adam;
    opt.lr = real_t{0.01};
    std::int64_t step = 0;
    const real_t final_loss =
        disc_train_epochs(disc, pos, neg, 12, opt, 16, Rng(77), step, true);
    const DiscEval after = disc_evaluate(disc, eval);
    CHECK(after.loss < before.loss);
    CHECK(after.accuracy > real_t{0.95});
    CHECK(final_loss < before.loss);
    CHECK(step > 0);

    std::int64_t step2 = 0;
    DiscriminatorModel copy(6, 4, 5, {{1, 8}, {2, 8}}, real_t{0.9});
    copy.copy_params_from(disc);
    disc_train_epochs(copy, pos, neg, 0, opt, 16, Rng(78), step2);
    CHECK(step2 == 0);
    const auto a = copy.params().flatten_values();
    const auto b = disc.params().flatten_values();
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("training with a fixed seed is reproducible") {
    auto run = [] {
        DiscriminatorModel disc = tiny_disc(52, real_t{0.8});
        std::vector<Sequence> pos, neg;
        Rng rng(79);
        for (int i = 0; i < 10; ++i) {
            pos.push_back(random_seq(rng, 6, 5));
            neg.push_back(random_seq(rng, 6, 5));
        }
        OptimizerConfig opt;
        std::int64_t step = 0;
        disc_train_epochs(disc, pos, neg, 3, opt, 4, Rng(80), step);
        return disc.params().flatten_values();
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("kernel presets are well-formed and loadable from disk") {
    for (const KernelPreset& preset :
         {preset_desk(), preset_t20(), preset_t32()}) {
        CHECK(!preset.empty());
        for (const auto& [window, count] : preset) {
            CHECK(window >= 1);
            CHECK(count >= 1);
        }
    }
    CHECK(preset_desk().size() == 5);
    CHECK(preset_t20().back().window == 20);
    CHECK(preset_t32().back().window == 32);

    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "sg_kernels.txt").string();
    {
        std::ofstream out(path);
        out << "# window,count\n\n1,4\n3,2\n";
    }
    const KernelPreset loaded = load_kernel_preset(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].window == 1);
    CHECK(loaded[0].count == 4);
    CHECK(loaded[1].window == 3);
    CHECK(loaded[1].count == 2);
    {
        std::ofstream out(path);
        out << "1,nope\n";
    }
    CHECK_THROWS_AS(load_kernel_preset(path), DataError);
    fs::remove(path);

    // Kernels wider than the horizon cannot be instantiated.
    CHECK_THROWS_AS(DiscriminatorModel(6, 4, 5, {{6, 2}}, real_t{0.75}),
                    std::invalid_argument);
}

TEST_CASE("sequence validation rejects bad input") {
    const DiscriminatorModel disc = tiny_disc();
    CHECK_THROWS_AS((void)disc.forward({1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS((void)disc.forward({1, 2, 3, 4, 9}), std::invalid_argument);
}
