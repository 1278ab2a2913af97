#include "seqgan/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace seqgan {
namespace {

using Clock = std::chrono::steady_clock;

struct RunTimer {
    Clock::time_point start = Clock::now();
    bool enabled = false;
    real_t seconds() const {
        if (!enabled) return 0;
        return std::chrono::duration<real_t>(Clock::now() - start).count();
    }
};

void apply_eval(MetricRecord& rec, const EvalOutcome& outcome) {
    if (outcome.is_nll) {
        rec.nll_oracle_mean = outcome.report.mean;
        rec.nll_oracle_std = outcome.report.stddev;
    } else {
        rec.bleu = outcome.report.mean;
    }
}

// Shared MLE/scheduled-sampling pretraining. Returns the number of epochs
// actually run; records evaluations on the configured cadence.
int pretrain_generator(GeneratorModel& gen, const TrainingConfig& cfg,
                       const std::vector<Sequence>& data, const EvalFn& eval,
                       Rng& root, RunArtifacts& art, const RunTimer& timer,
                       std::int64_t& opt_step, bool scheduled_sampling) {
    std::vector<real_t> epoch_nll;
    int ran = 0;
    for (int e = 1; e <= cfg.pretrain_gen_epochs; ++e) {
        Rng epoch_rng = root.child("pretrain-epoch", static_cast<std::uint64_t>(e));
        real_t nll;
        if (scheduled_sampling) {
            const real_t omega = std::max(
                real_t{0}, real_t{1} - cfg.ss_decay * static_cast<real_t>(e - 1));
            nll = scheduled_sampling_epoch(gen, data, cfg.gen_pretrain_opt, omega,
                                           cfg.gen_batch, epoch_rng, opt_step);
        } else {
            nll = mle_train_epoch(gen, data, cfg.gen_pretrain_opt, cfg.gen_batch,
                                  epoch_rng, opt_step);
        }
        gen.params().require_finite("generator pretraining");
        epoch_nll.push_back(nll);
        ran = e;

        if (e % cfg.pretrain_eval_every == 0) {
            MetricRecord rec;
            rec.algorithm = art.algorithm;
            rec.round = 0;
            rec.epoch = e;
            rec.seed = cfg.seed;
            apply_eval(rec, eval(gen, root.child("eval-pretrain",
                                                 static_cast<std::uint64_t>(e))));
            rec.wallclock_s = timer.seconds();
            art.metrics.push_back(std::move(rec));
        }

        if (cfg.pretrain_converged &&
            static_cast<int>(epoch_nll.size()) > cfg.plateau_window) {
            const real_t old_nll =
                epoch_nll[epoch_nll.size() - 1 -
                          static_cast<std::size_t>(cfg.plateau_window)];
            const real_t gain = (old_nll - nll) / std::max(std::abs(old_nll),
                                                           real_t{1e-12});
            if (gain < cfg.plateau_tol) break;
        }
    }

    if (ran > 0 && (art.metrics.empty() || art.metrics.back().epoch != ran ||
                    art.metrics.back().round != 0)) {
        MetricRecord rec;
        rec.algorithm = art.algorithm;
        rec.round = 0;
        rec.epoch = ran;
        rec.seed = cfg.seed;
        apply_eval(rec, eval(gen, root.child("eval-pretrain",
                                             static_cast<std::uint64_t>(ran))));
        rec.wallclock_s = timer.seconds();
        art.metrics.push_back(std::move(rec));
    }
    return ran;
}

void finalize(RunArtifacts& art, const GeneratorModel& gen, const EvalFn& eval,
              Rng& root) {
    const EvalOutcome outcome = eval(gen, root.child("eval-final"));
    art.final_eval = outcome.report;
    art.generator = gen;
}

// Generic adversarial phase: policy-gradient g-steps with a pluggable reward,
// optional discriminator d-steps, rollout re-sync at round boundaries.
struct AdversarialHooks {
    std::function<real_t(const Sequence&)> reward;
    DiscriminatorModel* disc = nullptr;  // null for PG-BLEU
};

void adversarial_phase(GeneratorModel& gen, const TrainingConfig& cfg,
                       const std::vector<Sequence>& data, const EvalFn& eval,
                       Rng& root, RunArtifacts& art, const RunTimer& timer,
                       int pretrain_epochs, const AdversarialHooks& hooks,
                       const SnapshotHook& snapshot) {
    RolloutPolicy rollout(gen);
    gen.params().reset_optimizer_state();  // new phase, new step count
    std::int64_t pg_opt_step = 0;
    std::int64_t disc_opt_step = 0;
    std::uint64_t pg_counter = 0;

    std::vector<real_t> last_good_gen = gen.params().flatten_values();
    std::vector<real_t> last_good_disc;
    if (hooks.disc != nullptr) {
        hooks.disc->params().reset_optimizer_state();
        last_good_disc = hooks.disc->params().flatten_values();
    }

    const int held_out = static_cast<int>(
        std::min<std::size_t>(256, data.size()));
    LabeledBatch monitor;
    int improved_rounds = 0;
    int monitored_rounds = 0;

    real_t best_eval = 0;
    bool have_best = false;
    int stale_evals = 0;

    for (int r = 1; r <= cfg.adversarial_rounds; ++r) {
        try {
            for (int g = 0; g < cfg.g_steps; ++g) {
                Rng pg_rng = root.child("pg", pg_counter++);
                policy_gradient_step_reward(gen, rollout, hooks.reward,
                                            cfg.pg_batch, cfg.rollout_count,
                                            cfg.gen_adv_opt, pg_rng, pg_opt_step,
                                            cfg.pg_baseline);
            }
            gen.params().require_finite("generator after policy gradient");

            if (hooks.disc != nullptr) {
                // Balanced held-out batch for the before/after loss monitor.
                monitor.sequences.clear();
                monitor.labels.clear();
                Rng mon_rng = root.child("disc-eval", static_cast<std::uint64_t>(r));
                for (int i = 0; i < held_out; ++i) {
                    monitor.sequences.push_back(data[static_cast<std::size_t>(i)]);
                    monitor.labels.push_back(1);
                }
                for (int i = 0; i < held_out; ++i) {
                    monitor.sequences.push_back(gen.sample_tokens(mon_rng));
                    monitor.labels.push_back(0);
                }
                const real_t loss_before = disc_evaluate(*hooks.disc, monitor).loss;

                Rng neg_rng = root.child("negatives", static_cast<std::uint64_t>(r));
                const auto neg_sets = make_negative_sets(
                    gen, static_cast<int>(data.size()), cfg.d_steps, neg_rng);
                for (int d = 0; d < cfg.d_steps; ++d) {
                    disc_train_epochs(
                        *hooks.disc, data, neg_sets[static_cast<std::size_t>(d)],
                        cfg.disc_epochs_per_d_step, cfg.disc_opt, cfg.disc_batch,
                        root.child("disc-round",
                                   static_cast<std::uint64_t>(r) * 1000 +
                                       static_cast<std::uint64_t>(d)),
                        disc_opt_step);
                }
                hooks.disc->params().require_finite("discriminator");
                const real_t loss_after = disc_evaluate(*hooks.disc, monitor).loss;
                ++monitored_rounds;
                if (loss_after <= loss_before) ++improved_rounds;
            }

            rollout.sync(gen);
            last_good_gen = gen.params().flatten_values();
            if (hooks.disc != nullptr) {
                last_good_disc = hooks.disc->params().flatten_values();
            }
        } catch (const DivergenceError& err) {
            gen.params().load_values(last_good_gen);
            if (hooks.disc != nullptr) {
                hooks.disc->params().load_values(last_good_disc);
            }
            art.diverged = true;
            art.divergence_note =
                "round " + std::to_string(r) + ": " + err.what();
            break;
        }

        if (r % cfg.eval_every == 0) {
            MetricRecord rec;
            rec.algorithm = art.algorithm;
            rec.round = r;
            rec.epoch = pretrain_epochs + r;
            rec.seed = cfg.seed;
            const EvalOutcome outcome =
                eval(gen, root.child("eval-round", static_cast<std::uint64_t>(r)));
            apply_eval(rec, outcome);
            if (hooks.disc != nullptr) {
                const DiscEval de = disc_evaluate(*hooks.disc, monitor);
                rec.disc_loss = de.loss;
                rec.disc_acc = de.accuracy;
            }
            rec.wallclock_s = timer.seconds();
            art.metrics.push_back(rec);
            if (snapshot) snapshot(art, gen, hooks.disc);

            if (cfg.early_stop) {
                const real_t score = outcome.report.mean;
                const bool better =
                    !have_best || (outcome.is_nll ? score < best_eval
                                                  : score > best_eval);
                if (better) {
                    best_eval = score;
                    have_best = true;
                    stale_evals = 0;
                } else if (++stale_evals >= cfg.early_stop_patience) {
                    break;
                }
            }
        }
    }

    if (monitored_rounds > 0 &&
        improved_rounds * 10 < monitored_rounds * 9) {
        std::fprintf(stderr,
                     "[%s] discriminator loss improved in only %d of %d rounds\n",
                     art.algorithm.c_str(), improved_rounds, monitored_rounds);
    }
}

}  // namespace

void TrainingConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("training config: ") + what);
    };
    check(g_steps >= 1, "g_steps must be >= 1");
    check(d_steps >= 1, "d_steps must be >= 1");
    check(disc_epochs_per_d_step >= 1, "k must be >= 1");
    check(rollout_count >= 1, "rollout count must be >= 1");
    check(pretrain_gen_epochs >= 0, "pretrain_gen_epochs must be >= 0");
    check(pretrain_disc_epochs >= 0, "pretrain_disc_epochs must be >= 0");
    check(adversarial_rounds >= 0, "adversarial_rounds must be >= 0");
    check(gen_batch >= 1 && pg_batch >= 1 && disc_batch >= 1,
          "batch sizes must be >= 1");
    check(eval_every >= 1, "eval_every must be >= 1");
    check(pretrain_eval_every >= 1, "pretrain_eval_every must be >= 1");
    check(ss_decay >= real_t{0} && ss_decay <= real_t{1},
          "ss_decay must lie in [0,1]");
    check(early_stop_patience >= 1, "early_stop_patience must be >= 1");
    check(plateau_window >= 1, "plateau_window must be >= 1");
    check(plateau_tol >= real_t{0}, "plateau_tol must be >= 0");
}

EvalFn make_synthetic_evaluator(const GeneratorModel& oracle, int sample_count) {
    require(sample_count >= 1, "evaluator: sample_count must be >= 1");
    return [&oracle, sample_count](const GeneratorModel& gen, Rng rng) {
        EvalOutcome out;
        out.is_nll = true;
        out.report = nll_oracle(oracle, gen, sample_count, rng);
        return out;
    };
}

EvalFn make_corpus_evaluator(std::vector<Sequence> test_refs, int bleu_n,
                             int sample_count) {
    require(sample_count >= 1, "evaluator: sample_count must be >= 1");
    auto scorer = std::make_shared<BleuScorer>(test_refs, bleu_n);
    return [scorer, sample_count](const GeneratorModel& gen, Rng rng) {
        std::vector<real_t> scores;
        scores.reserve(static_cast<std::size_t>(sample_count));
        for (int i = 0; i < sample_count; ++i) {
            scores.push_back(scorer->score(gen.sample_tokens(rng)));
        }
        EvalOutcome out;
        out.is_nll = false;
        out.report = summarize(std::move(scores));
        return out;
    };
}

std::vector<std::vector<Sequence>> make_negative_sets(const GeneratorModel& gen,
                                                      int positive_count,
                                                      int d_steps, Rng& rng) {
    require(positive_count >= 1, "make_negative_sets: positive_count must be >= 1");
    require(d_steps >= 1, "make_negative_sets: d_steps must be >= 1");
    std::vector<std::vector<Sequence>> sets(static_cast<std::size_t>(d_steps));
    for (auto& set : sets) {
        set.reserve(static_cast<std::size_t>(positive_count));
        for (int i = 0; i < positive_count; ++i) {
            set.push_back(gen.sample_tokens(rng));
        }
    }
    return sets;
}

RunArtifacts run_mle(const TrainingConfig& cfg, const GenDims& dims,
                     const std::vector<Sequence>& train_data, const EvalFn& eval,
                     const SnapshotHook& snapshot) {
    cfg.validate();
    require(!train_data.empty(), "run_mle: empty training data");
    RunTimer timer;
    timer.enabled = cfg.record_wallclock;
    RunArtifacts art;
    art.algorithm = "mle";
    art.seed = cfg.seed;
    Rng root(cfg.seed);

    GeneratorModel gen(dims, cfg.mask_start);
    Rng init_rng = root.child("gen-init");
    gen.init_trainable(init_rng);
    std::int64_t opt_step = 0;
    pretrain_generator(gen, cfg, train_data, eval, root, art, timer, opt_step,
                       /*scheduled_sampling=*/false);
    finalize(art, gen, eval, root);
    if (snapshot) snapshot(art, gen, nullptr);
    return art;
}

RunArtifacts run_scheduled_sampling(const TrainingConfig& cfg, const GenDims& dims,
                                    const std::vector<Sequence>& train_data,
                                    const EvalFn& eval,
                                    const SnapshotHook& snapshot) {
    cfg.validate();
    require(!train_data.empty(), "run_scheduled_sampling: empty training data");
    RunTimer timer;
    timer.enabled = cfg.record_wallclock;
    RunArtifacts art;
    art.algorithm = "ss";
    art.seed = cfg.seed;
    Rng root(cfg.seed);

    GeneratorModel gen(dims, cfg.mask_start);
    Rng init_rng = root.child("gen-init");
    gen.init_trainable(init_rng);
    std::int64_t opt_step = 0;
    pretrain_generator(gen, cfg, train_data, eval, root, art, timer, opt_step,
                       /*scheduled_sampling=*/true);
    finalize(art, gen, eval, root);
    if (snapshot) snapshot(art, gen, nullptr);
    return art;
}

RunArtifacts run_random_baseline(const TrainingConfig& cfg, const GenDims& dims,
                                 const EvalFn& eval, const SnapshotHook& snapshot) {
    cfg.validate();
    RunTimer timer;
    timer.enabled = cfg.record_wallclock;
    RunArtifacts art;
    art.algorithm = "random";
    art.seed = cfg.seed;
    Rng root(cfg.seed);

    // Zero parameters give exactly uniform per-step distributions.
    GeneratorModel gen(dims, cfg.mask_start);
    MetricRecord rec;
    rec.algorithm = art.algorithm;
    rec.round = 0;
    rec.epoch = 0;
    rec.seed = cfg.seed;
    apply_eval(rec, eval(gen, root.child("eval-pretrain", 0)));
    rec.wallclock_s = timer.seconds();
    art.metrics.push_back(std::move(rec));
    finalize(art, gen, eval, root);
    if (snapshot) snapshot(art, gen, nullptr);
    return art;
}

RunArtifacts run_seqgan(const TrainingConfig& cfg, const GenDims& dims,
                        const DiscSpec& disc_spec,
                        const std::vector<Sequence>& train_data,
                        const EvalFn& eval, const SnapshotHook& snapshot) {
    cfg.validate();
    require(!train_data.empty(), "run_seqgan: empty training data");
    RunTimer timer;
    timer.enabled = cfg.record_wallclock;
    RunArtifacts art;
    art.algorithm = "seqgan";
    art.seed = cfg.seed;
    Rng root(cfg.seed);

    GeneratorModel gen(dims, cfg.mask_start);
    Rng init_rng = root.child("gen-init");
    gen.init_trainable(init_rng);
    std::int64_t gen_opt_step = 0;
    const int pretrain_epochs =
        pretrain_generator(gen, cfg, train_data, eval, root, art, timer,
                           gen_opt_step, /*scheduled_sampling=*/false);

    DiscriminatorModel disc(dims.vocab, disc_spec.emb, dims.horizon,
                            disc_spec.kernels, disc_spec.dropout_keep);
    Rng disc_init_rng = root.child("disc-init");
    disc.init_trainable(disc_init_rng);
    if (cfg.pretrain_disc_epochs > 0) {
        Rng neg_rng = root.child("pretrain-negatives");
        std::vector<Sequence> negatives;
        negatives.reserve(train_data.size());
        for (std::size_t i = 0; i < train_data.size(); ++i) {
            negatives.push_back(gen.sample_tokens(neg_rng));
        }
        std::int64_t disc_opt_step = 0;
        disc_train_epochs(disc, train_data, negatives, cfg.pretrain_disc_epochs,
                          cfg.disc_opt, cfg.disc_batch,
                          root.child("disc-pretrain"), disc_opt_step);
        disc.params().require_finite("discriminator pretraining");
    }

    AdversarialHooks hooks;
    hooks.disc = &disc;
    hooks.reward = [&disc](const Sequence& y) { return disc.forward(y); };
    adversarial_phase(gen, cfg, train_data, eval, root, art, timer,
                      pretrain_epochs, hooks, snapshot);

    finalize(art, gen, eval, root);
    art.discriminator = disc;
    if (snapshot) snapshot(art, gen, &disc);
    return art;
}

RunArtifacts run_pg_bleu(const TrainingConfig& cfg, const GenDims& dims,
                         const std::vector<Sequence>& train_data, int bleu_n,
                         const EvalFn& eval, const SnapshotHook& snapshot) {
    cfg.validate();
    require(!train_data.empty(), "run_pg_bleu: empty training data");
    RunTimer timer;
    timer.enabled = cfg.record_wallclock;
    RunArtifacts art;
    art.algorithm = "pg_bleu";
    art.seed = cfg.seed;
    Rng root(cfg.seed);

    GeneratorModel gen(dims, cfg.mask_start);
    Rng init_rng = root.child("gen-init");
    gen.init_trainable(init_rng);
    std::int64_t gen_opt_step = 0;
    const int pretrain_epochs =
        pretrain_generator(gen, cfg, train_data, eval, root, art, timer,
                           gen_opt_step, /*scheduled_sampling=*/false);

    const BleuScorer scorer(train_data, bleu_n);
    AdversarialHooks hooks;
    hooks.disc = nullptr;
    hooks.reward = [&scorer](const Sequence& y) { return scorer.score(y); };
    adversarial_phase(gen, cfg, train_data, eval, root, art, timer,
                      pretrain_epochs, hooks, snapshot);

    finalize(art, gen, eval, root);
    if (snapshot) snapshot(art, gen, nullptr);
    return art;
}

std::vector<RunArtifacts> pretrain_ablation(const TrainingConfig& cfg,
                                            const GenDims& dims,
                                            const DiscSpec& disc_spec,
                                            const std::vector<Sequence>& train_data,
                                            const EvalFn& eval,
                                            const std::vector<int>& budgets) {
    require(!budgets.empty(), "pretrain_ablation: empty budget list");
    std::vector<RunArtifacts> out;
    out.reserve(budgets.size());
    for (int budget : budgets) {
        TrainingConfig local = cfg;
        if (budget < 0) {
            local.pretrain_converged = true;
        } else {
            local.pretrain_converged = false;
            local.pretrain_gen_epochs = budget;
        }
        out.push_back(run_seqgan(local, dims, disc_spec, train_data, eval));
    }
    return out;
}

void write_metrics_csv(const std::vector<MetricRecord>& records,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("metrics: cannot open " + path + " for writing");
    out << "algorithm,round,epoch,nll_oracle_mean,nll_oracle_std,bleu,"
           "disc_loss,disc_acc,wallclock_s,seed\n";
    char buf[64];
    auto put = [&](const std::optional<real_t>& v) {
        if (v.has_value()) {
            std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(*v));
            out << buf;
        }
        out << ',';
    };
    for (const MetricRecord& rec : records) {
        out << rec.algorithm << ',' << rec.round << ',' << rec.epoch << ',';
        put(rec.nll_oracle_mean);
        put(rec.nll_oracle_std);
        put(rec.bleu);
        put(rec.disc_loss);
        put(rec.disc_acc);
        std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(rec.wallclock_s));
        out << buf << ',' << rec.seed << '\n';
    }
    if (!out) throw DataError("metrics: write failed for " + path);
}

}  // namespace seqgan
