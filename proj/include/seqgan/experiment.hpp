#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seqgan/training.hpp"

namespace seqgan {

struct IngestReport {
    int kept = 0;
    int dropped = 0;    // lines shorter than the horizon
    int truncated = 0;  // lines cut down to the horizon
    std::int64_t unk_tokens = 0;
};

struct Corpus {
    std::vector<Sequence> train;
    std::vector<Sequence> test;
    std::vector<std::string> id_to_token;  // [0] is the start marker, last is UNK
    std::map<std::string, Token> token_ids;
    IngestReport train_report;
    IngestReport test_report;

    int vocab_size() const { return static_cast<int>(id_to_token.size()); }
    Token unk_id() const { return static_cast<Token>(id_to_token.size()) - 1; }
};

// Whitespace-tokenized text, one sequence per line. The vocabulary is built
// from the kept training lines, ids ordered by descending frequency with ties
// broken lexicographically; id 0 is the start marker and the last id is UNK.
// Lines shorter than horizon are dropped, longer ones truncated.
Corpus ingest_corpus(const std::string& train_path, const std::string& test_path,
                     int horizon);

// One `id token` line per vocabulary entry.
void write_vocab(const Corpus& corpus, const std::string& path);

struct ExperimentConfig {
    std::string mode = "synthetic";
    std::uint64_t seed = 1;
    std::vector<std::string> algorithms{"seqgan"};
    std::string out = "runs/exp";
    std::string checkpoints = "final";  // none | final | all

    GenDims dims{100, 32, 32, 16};
    DiscSpec disc{16, {}, real_t{0.75}};
    std::string disc_kernels = "desk";  // preset name or file path

    TrainingConfig train;

    std::uint64_t oracle_seed = 42;
    int train_sequences = 2000;
    int eval_samples = 5000;
    int bleu_n = 4;

    std::string corpus_train;
    std::string corpus_test;
    std::string corpus_vocab;

    void validate() const;  // throws ConfigError naming the offending key
};

// Flat `key = value` text with [section] headers; dotted keys are accepted
// anywhere. Unknown keys, type errors and constraint violations raise
// ConfigError with the key name and line.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>");
ExperimentConfig parse_config_file(const std::string& path);

// Canonical echo; parsing it reproduces the config exactly.
std::string emit_config(const ExperimentConfig& cfg);

// Applies one dotted `key=value` override (CLI flags, grid lines).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value, const std::string& origin);

// Resolves the kernel preset name or file into concrete kernel specs.
KernelPreset resolve_kernels(const std::string& name_or_path);

// Executes the configured algorithms and writes metrics.csv, summary.txt,
// config.resolved and checkpoints/ under cfg.out. Returns 0 on success or 4
// if any run diverged (artifacts are still written).
int run_experiment(const ExperimentConfig& cfg);

// One independent run per grid line (whitespace-separated key=value
// overrides); runs that do not override the seed get a distinct child seed.
// Returns the worst exit code.
int run_grid(const ExperimentConfig& base, const std::string& grid_path);

}  // namespace seqgan
