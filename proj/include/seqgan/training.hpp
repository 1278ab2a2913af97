#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seqgan/discriminator.hpp"
#include "seqgan/eval.hpp"
#include "seqgan/generator.hpp"
#include "seqgan/rollout.hpp"

namespace seqgan {

struct TrainingConfig {
    int g_steps = 1;
    int d_steps = 1;
    int disc_epochs_per_d_step = 10;  // k of the adversarial loop
    int rollout_count = 16;           // N
    int pretrain_gen_epochs = 120;    // budget (cap when converging)
    bool pretrain_converged = true;   // stop at training-NLL plateau
    int pretrain_disc_epochs = 50;
    int adversarial_rounds = 30;
    int gen_batch = 64;
    int pg_batch = 64;
    int disc_batch = 64;
    int eval_every = 1;           // adversarial rounds between evaluations
    int pretrain_eval_every = 5;  // pretrain epochs between evaluations
    std::uint64_t seed = 1;
    OptimizerConfig gen_pretrain_opt{OptimizerConfig::Kind::adam, real_t{1e-2}};
    OptimizerConfig gen_adv_opt{OptimizerConfig::Kind::adam, real_t{1e-3}};
    OptimizerConfig disc_opt{OptimizerConfig::Kind::adam, real_t{1e-4}};
    real_t ss_decay = real_t{0.002};  // per-epoch decrement of omega
    bool early_stop = false;
    int early_stop_patience = 10;
    Baseline pg_baseline;
    int plateau_window = 5;
    real_t plateau_tol = real_t{1e-4};
    bool mask_start = false;        // exclude the start token from outputs
    bool record_wallclock = false;  // off by default so reruns are identical

    void validate() const;
};

// Discriminator shape for the adversarial runs.
struct DiscSpec {
    int emb = 16;
    KernelPreset kernels;
    real_t dropout_keep = real_t{0.75};
};

struct MetricRecord {
    std::string algorithm;
    int round = 0;
    int epoch = 0;
    std::optional<real_t> nll_oracle_mean;
    std::optional<real_t> nll_oracle_std;
    std::optional<real_t> bleu;
    std::optional<real_t> disc_loss;
    std::optional<real_t> disc_acc;
    real_t wallclock_s = 0;
    std::uint64_t seed = 0;
};

struct RunArtifacts {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::vector<MetricRecord> metrics;
    EvalReport final_eval;
    std::optional<GeneratorModel> generator;
    std::optional<DiscriminatorModel> discriminator;
    bool diverged = false;
    std::string divergence_note;
};

// Evaluation of a generator snapshot: draws samples and scores them, either
// by oracle NLL (synthetic) or BLEU against held-out references (corpus).
struct EvalOutcome {
    EvalReport report;
    bool is_nll = true;
};
using EvalFn = std::function<EvalOutcome(const GeneratorModel&, Rng)>;

EvalFn make_synthetic_evaluator(const GeneratorModel& oracle, int sample_count);
EvalFn make_corpus_evaluator(std::vector<Sequence> test_refs, int bleu_n,
                             int sample_count);

// Hook invoked after every evaluation point (checkpoint retention etc).
using SnapshotHook = std::function<void(
    const RunArtifacts&, const GeneratorModel&, const DiscriminatorModel*)>;

// d_steps independent negative sets, each matching positive_count, sampled
// fresh from the generator.
std::vector<std::vector<Sequence>> make_negative_sets(const GeneratorModel& gen,
                                                      int positive_count,
                                                      int d_steps, Rng& rng);

// Full adversarial training: MLE pretraining, discriminator pretraining, then
// alternating policy-gradient and discriminator rounds with the rollout
// snapshot refreshed at each round boundary.
RunArtifacts run_seqgan(const TrainingConfig& cfg, const GenDims& dims,
                        const DiscSpec& disc_spec,
                        const std::vector<Sequence>& train_data,
                        const EvalFn& eval,
                        const SnapshotHook& snapshot = nullptr);

RunArtifacts run_mle(const TrainingConfig& cfg, const GenDims& dims,
                     const std::vector<Sequence>& train_data, const EvalFn& eval,
                     const SnapshotHook& snapshot = nullptr);

// MLE with scheduled sampling: omega starts at 1 and decreases by ss_decay
// per epoch (floor 0); inputs are ground truth with probability omega.
RunArtifacts run_scheduled_sampling(const TrainingConfig& cfg, const GenDims& dims,
                                    const std::vector<Sequence>& train_data,
                                    const EvalFn& eval,
                                    const SnapshotHook& snapshot = nullptr);

// Uniform-token sampler, no training: one evaluation of the zero-parameter
// generator.
RunArtifacts run_random_baseline(const TrainingConfig& cfg, const GenDims& dims,
                                 const EvalFn& eval,
                                 const SnapshotHook& snapshot = nullptr);

// Same loop shape as run_seqgan but the rollout reward is BLEU against the
// training references and no discriminator exists.
RunArtifacts run_pg_bleu(const TrainingConfig& cfg, const GenDims& dims,
                         const std::vector<Sequence>& train_data, int bleu_n,
                         const EvalFn& eval,
                         const SnapshotHook& snapshot = nullptr);

// One SeqGAN run per pretraining budget (epoch count, or -1 for the
// converged default), sharing data and seed.
std::vector<RunArtifacts> pretrain_ablation(const TrainingConfig& cfg,
                                            const GenDims& dims,
                                            const DiscSpec& disc_spec,
                                            const std::vector<Sequence>& train_data,
                                            const EvalFn& eval,
                                            const std::vector<int>& budgets);

// Serializes records with the fixed column set; floats use %.17g so reruns
// are byte-identical.
void write_metrics_csv(const std::vector<MetricRecord>& records,
                       const std::string& path);

}  // namespace seqgan
