#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "seqgan/eval.hpp"
#include "seqgan/training.hpp"

using namespace seqgan;

namespace {

struct Fixture {
    GenDims dims{6, 4, 6, 5};
    GeneratorModel oracle;
    std::vector<Sequence> data;
    EvalFn eval;

    Fixture()
        : oracle(make_oracle(99, dims)) {
        Rng rng = Rng(99).child("oracle-data");
        data = generate_training_set(oracle, 48, rng);
        eval = make_synthetic_evaluator(oracle, 64);
    }

    TrainingConfig small_cfg() const {
        TrainingConfig cfg;
        cfg.seed = 5;
        cfg.pretrain_gen_epochs = 6;
        cfg.pretrain_converged = false;
        cfg.pretrain_eval_every = 2;
        cfg.pretrain_disc_epochs = 2;
        cfg.adversarial_rounds = 2;
        cfg.rollout_count = 2;
        cfg.gen_batch = 8;
        cfg.pg_batch = 8;
        cfg.disc_batch = 8;
        return cfg;
    }

    DiscSpec small_disc() const {
        DiscSpec spec;
        spec.emb = 4;
        spec.kernels = {{1, 3}, {2, 3}};
        return spec;
    }
};

bool same_metrics(const std::vector<MetricRecord>& a,
                  const std::vector<MetricRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].round != b[i].round || a[i].epoch != b[i].epoch) return false;
        if (a[i].nll_oracle_mean != b[i].nll_oracle_mean) return false;
        if (a[i].nll_oracle_std != b[i].nll_oracle_std) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("config validation flags each bad field") {
    TrainingConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.g_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.pretrain_gen_epochs = 0;  // explicit zero is the ablation case
    cfg.pretrain_disc_epochs = 0;
    cfg.adversarial_rounds = 0;
    CHECK_NOTHROW(cfg.validate());
    cfg.d_steps = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.rollout_count = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.ss_decay = real_t{1.5};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.eval_every = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("negative sets are balanced, fresh and reproducible") {
    const Fixture fx;
    GeneratorModel gen(fx.dims);
    Rng init(4);
    gen.params().init_normal(init, real_t{0.4});

    Rng r1(11);
    const auto sets = make_negative_sets(gen, 10, 3, r1);
    REQUIRE(sets.size() == 3);
    for (const auto& set : sets) {
        REQUIRE(set.size() == 10);
        for (const Sequence& seq : set) REQUIRE(seq.size() == 5);
    }
    CHECK(sets[0] != sets[1]);
    CHECK(sets[1] != sets[2]);

    Rng r2(11);
    CHECK(make_negative_sets(gen, 10, 3, r2) == sets);
}

TEST_CASE("mle runs are deterministic and fill the metric log") {
    const Fixture fx;
    const TrainingConfig cfg = fx.small_cfg();
    const RunArtifacts a = run_mle(cfg, fx.dims, fx.data, fx.eval);
    const RunArtifacts b = run_mle(cfg, fx.dims, fx.data, fx.eval);

    CHECK(a.algorithm == "mle");
    CHECK(a.seed == cfg.seed);
    CHECK(!a.diverged);
    REQUIRE(a.generator.has_value());
    CHECK(!a.discriminator.has_value());
    CHECK(same_metrics(a.metrics, b.metrics));
    const auto va = a.generator->params().flatten_values();
    const auto vb = b.generator->params().flatten_values();
    for (std::size_t i = 0; i < va.size(); ++i) REQUIRE(va[i] == vb[i]);

    // Cadence: epochs 2, 4, 6 with strictly increasing epoch indices.
    REQUIRE(a.metrics.size() == 3);
    CHECK(a.metrics[0].epoch == 2);
    CHECK(a.metrics[1].epoch == 4);
    CHECK(a.metrics[2].epoch == 6);
    for (const MetricRecord& m : a.metrics) {
        CHECK(m.algorithm == "mle");
        CHECK(m.round == 0);
        REQUIRE(m.nll_oracle_mean.has_value());
        REQUIRE(m.nll_oracle_std.has_value());
        CHECK(std::isfinite(*m.nll_oracle_mean));
        CHECK(!m.bleu.has_value());
    }
    // finalize() rescores on its own evaluation stream, so the final report
    // is a fresh draw rather than a copy of the last cadence record.
    REQUIRE(a.final_eval.per_sample.size() == 64);
    CHECK(std::isfinite(a.final_eval.mean));
    CHECK(a.final_eval.mean == b.final_eval.mean);
    CHECK(std::abs(a.final_eval.mean - *a.metrics.back().nll_oracle_mean) <
          real_t{1});

    // Training helped relative to where the first evaluation started.
    CHECK(*a.metrics.back().nll_oracle_mean < *a.metrics.front().nll_oracle_mean);
}

TEST_CASE("seqgan with zero adversarial rounds degenerates to mle") {
    const Fixture fx;
    TrainingConfig cfg = fx.small_cfg();
    cfg.adversarial_rounds = 0;
    cfg.pretrain_disc_epochs = 0;

    const RunArtifacts mle = run_mle(cfg, fx.dims, fx.data, fx.eval);
    const RunArtifacts gan =
        run_seqgan(cfg, fx.dims, fx.small_disc(), fx.data, fx.eval);
    CHECK(gan.algorithm == "seqgan");
    CHECK(same_metrics(mle.metrics, gan.metrics));
    const auto va = mle.generator->params().flatten_values();
    const auto vb = gan.generator->params().flatten_values();
    REQUIRE(va.size() == vb.size());
    for (std::size_t i = 0; i < va.size(); ++i) REQUIRE(va[i] == vb[i]);
}

TEST_CASE("scheduled sampling with zero decay matches mle exactly") {
    const Fixture fx;
    TrainingConfig cfg = fx.small_cfg();
    cfg.ss_decay = 0;
    const RunArtifacts mle = run_mle(cfg, fx.dims, fx.data, fx.eval);
    const RunArtifacts ss =
        run_scheduled_sampling(cfg, fx.dims, fx.data, fx.eval);
    CHECK(ss.algorithm == "ss");
    CHECK(same_metrics(mle.metrics, ss.metrics));
    const auto va = mle.generator->params().flatten_values();
    const auto vb = ss.generator->params().flatten_values();
    for (std::size_t i = 0; i < va.size(); ++i) REQUIRE(va[i] == vb[i]);

    // A real decay changes the trajectory.
    cfg.ss_decay = real_t{0.25};
    const RunArtifacts ss2 =
        run_scheduled_sampling(cfg, fx.dims, fx.data, fx.eval);
    bool moved = false;
    const auto vc = ss2.generator->params().flatten_values();
    for (std::size_t i = 0; i < va.size(); ++i) moved |= vc[i] != va[i];
    CHECK(moved);
}

TEST_CASE("random baseline evaluates a uniform policy without training") {
    const Fixture fx;
    TrainingConfig cfg = fx.small_cfg();
    const RunArtifacts art = run_random_baseline(cfg, fx.dims, fx.eval);
    CHECK(art.algorithm == "random");
    REQUIRE(art.metrics.size() == 1);
    CHECK(art.metrics[0].round == 0);
    CHECK(art.metrics[0].epoch == 0);
    REQUIRE(art.generator.has_value());

    // Uniform policy: every sequence has probability V^-T.
    const real_t want = -5 * std::log(real_t{1} / 6);
    CHECK(-art.generator->log_likelihood({0, 1, 2, 3, 4}) ==
          doctest::Approx(want).epsilon(1e-12));

    // The uniform sampler scores worse than a trained model.
    const RunArtifacts mle = run_mle(cfg, fx.dims, fx.data, fx.eval);
    CHECK(art.final_eval.mean > mle.final_eval.mean);
}

TEST_CASE("adversarial rounds extend the metric log past pretraining") {
    const Fixture fx;
    TrainingConfig cfg = fx.small_cfg();
    const RunArtifacts art =
        run_seqgan(cfg, fx.dims, fx.small_disc(), fx.data, fx.eval);
    REQUIRE(art.discriminator.has_value());
    REQUIRE(art.metrics.size() == 5);  // 3 pretrain evals + 2 rounds
    const MetricRecord& r1 = art.metrics[3];
    const MetricRecord& r2 = art.metrics[4];
    CHECK(r1.round == 1);
    CHECK(r2.round == 2);
    CHECK(r1.epoch == 7);
    CHECK(r2.epoch == 8);
    for (const MetricRecord* m : {&r1, &r2}) {
        REQUIRE(m->disc_loss.has_value());
        REQUIRE(m->disc_acc.has_value());
        CHECK(*m->disc_loss > real_t{0});
        CHECK(*m->disc_acc >= real_t{0});
        CHECK(*m->disc_acc <= real_t{1});
    }
    int last_epoch = -1;
    for (const MetricRecord& m : art.metrics) {
        CHECK(m.epoch > last_epoch);
        last_epoch = m.epoch;
    }

    const RunArtifacts again =
        run_seqgan(cfg, fx.dims, fx.small_disc(), fx.data, fx.eval);
    CHECK(same_metrics(art.metrics, again.metrics));
}

TEST_CASE("pg-bleu trains without a discriminator") {
    const Fixture fx;
    TrainingConfig cfg = fx.small_cfg();
    cfg.adversarial_rounds = 1;
    const RunArtifacts art = run_pg_bleu(cfg, fx.dims, fx.data, 3, fx.eval);
    CHECK(art.algorithm == "pg_bleu");
    CHECK(!art.discriminator.has_value());
    REQUIRE(art.metrics.size() == 4);
    CHECK(art.metrics.back().round == 1);
    CHECK(!art.metrics.back().disc_loss.has_value());
}

TEST_CASE("constant self-referenced bleu reward leaves only sampling noise") {
    // BLEU of any candidate against itself is exactly 1, so the REINFORCE
    // weights are a constant and the score-function identity makes the
    // expected update zero. Estimate the expected parameter step over many
    // fresh batches and bound it by its own standard error.
    GeneratorModel gen({4, 3, 4, 3});
    Rng init(6);
    gen.params().init_normal(init, real_t{0.5});
    const RolloutPolicy rollout(gen);
    const auto theta0 = gen.params().flatten_values();

    auto self_bleu = [](const Sequence& seq) {
        const real_t b = bleu(seq, {seq}, 3);
        REQUIRE(b == 1.0);
        return b;
    };

    OptimizerConfig opt;
    opt.kind = OptimizerConfig::Kind::sgd;
    opt.lr = 1;
    opt.grad_clip = 0;

    const int trials = 200;
    std::vector<double> sum(theta0.size(), 0), sumsq(theta0.size(), 0);
    Rng root(77);
    for (int k = 0; k < trials; ++k) {
        gen.params().load_values(theta0);
        std::int64_t step = 0;
        Rng rng = root.child("trial", static_cast<std::uint64_t>(k));
        policy_gradient_step_reward(gen, rollout, self_bleu, 16, 2, opt, rng,
                                    step, {});
        const auto theta1 = gen.params().flatten_values();
        for (std::size_t i = 0; i < theta0.size(); ++i) {
            const double d = theta1[i] - theta0[i];
            sum[i] += d;
            sumsq[i] += d * d;
        }
    }
    int outside = 0, informative = 0;
    for (std::size_t i = 0; i < theta0.size(); ++i) {
        const double mean = sum[i] / trials;
        const double var = (sumsq[i] - sum[i] * sum[i] / trials) / (trials - 1);
        const double se = std::sqrt(var / trials);
        if (se < 1e-12) continue;  // parameters the episodes never touched
        ++informative;
        if (std::abs(mean) > 4 * se) ++outside;
    }
    REQUIRE(informative > 50);
    // With a 4 SE bound, even 1% outliers would be unusual.
    CHECK(outside <= informative / 50);
}

TEST_CASE("a diverging adversarial phase restores the last good parameters") {
    const Fixture fx;
    TrainingConfig cfg = fx.small_cfg();
    cfg.adversarial_rounds = 3;
    // Two generator steps per round: the first update overflows the weights,
    // the second blows up while sampling, still inside round 1.
    cfg.g_steps = 2;
    cfg.gen_adv_opt.kind = OptimizerConfig::Kind::sgd;
    cfg.gen_adv_opt.lr = real_t{1e308};
    cfg.gen_adv_opt.grad_clip = 0;

    const RunArtifacts art = run_pg_bleu(cfg, fx.dims, fx.data, 3, fx.eval);
    CHECK(art.diverged);
    CHECK(art.divergence_note.find("round 1") != std::string::npos);
    REQUIRE(art.generator.has_value());
    for (const real_t v : art.generator->params().flatten_values()) {
        REQUIRE(std::isfinite(v));
    }
    // The run still reports its pretraining metrics.
    CHECK(art.metrics.size() >= 3);
}

TEST_CASE("metric csv emits the exact column layout") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "sg_metrics.csv").string();
    MetricRecord a;
    a.algorithm = "mle";
    a.round = 0;
    a.epoch = 5;
    a.nll_oracle_mean = real_t{9.5};
    a.nll_oracle_std = real_t{0.25};
    a.seed = 7;
    MetricRecord b;
    b.algorithm = "seqgan";
    b.round = 2;
    b.epoch = 12;
    b.nll_oracle_mean = real_t{8.125};
    b.nll_oracle_std = real_t{0.5};
    b.disc_loss = real_t{0.625};
    b.disc_acc = real_t{0.75};
    b.seed = 7;
    write_metrics_csv({a, b}, path);

    std::ifstream in(path);
    std::stringstream got;
    got << in.rdbuf();
    const std::string want =
        "algorithm,round,epoch,nll_oracle_mean,nll_oracle_std,bleu,"
        "disc_loss,disc_acc,wallclock_s,seed\n"
        "mle,0,5,9.5,0.25,,,,0.000,7\n"
        "seqgan,2,12,8.125,0.5,,0.625,0.75,0.000,7\n";
    CHECK(got.str() == want);
    fs::remove(path);
}

TEST_CASE("early stopping halts a stagnant adversarial phase") {
    const Fixture fx;
    TrainingConfig cfg = fx.small_cfg();
    cfg.adversarial_rounds = 12;
    cfg.early_stop = true;
    cfg.early_stop_patience = 3;
    // A zero learning rate freezes the generator, so no round improves.
    cfg.gen_adv_opt.lr = 0;
    const RunArtifacts art =
        run_seqgan(cfg, fx.dims, fx.small_disc(), fx.data, fx.eval);
    int adversarial_records = 0;
    for (const MetricRecord& m : art.metrics) {
        adversarial_records += m.round > 0;
    }
    CHECK(adversarial_records < 12);
    CHECK(adversarial_records >= 3);
}
