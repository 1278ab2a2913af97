#pragma once

#include <map>
#include <string>
#include <vector>

#include "seqgan/generator.hpp"

namespace seqgan {

// Frozen ground-truth model for synthetic experiments: a generator whose
// parameters are drawn i.i.d. standard normal from the seed's oracle-init
// stream, then never changed.
GeneratorModel make_oracle(std::uint64_t seed, const GenDims& dims);

// count i.i.d. samples from the oracle policy.
std::vector<Sequence> generate_training_set(const GeneratorModel& oracle,
                                            int count, Rng& rng);

struct EvalReport {
    std::vector<real_t> per_sample;  // one score per generated sequence
    real_t mean = 0;
    real_t stddev = 0;  // sample standard deviation
};

EvalReport summarize(std::vector<real_t> per_sample);

// Draws sample_count sequences from the generator and scores each by
// -sum_t log G_oracle(y_t | y_1..y_{t-1}).
EvalReport nll_oracle(const GeneratorModel& oracle, const GeneratorModel& gen,
                      int sample_count, Rng& rng);

// Same metric on already-generated sequences.
EvalReport nll_oracle_of_samples(const GeneratorModel& oracle,
                                 const std::vector<Sequence>& samples);

// One row per sample plus a trailing summary row.
void write_eval_report(const EvalReport& report, const std::string& path);

// Corpus-BLEU style scorer against a fixed reference set: modified n-gram
// precision clipped by the maximum per-reference count, geometric mean over
// orders 1..max_n, brevity penalty from the closest reference length.
// Zero-match orders above 1 fall back to 1/(possible+1); a zero unigram
// precision yields 0.
class BleuScorer {
public:
    BleuScorer(const std::vector<Sequence>& references, int max_n);

    real_t score(const Sequence& candidate) const;
    int max_n() const { return max_n_; }

private:
    int max_n_;
    std::vector<int> ref_lengths_;
    // per order (1-based index max_n entries): n-gram -> max count in any ref
    std::vector<std::map<std::vector<Token>, int>> ref_counts_;
};

real_t bleu(const Sequence& candidate, const std::vector<Sequence>& references,
            int max_n);

struct WelchResult {
    real_t t = 0;
    real_t df = 0;
    real_t p = 1;
};

// Two-sided Welch's t-test. Requires both samples to have size >= 2 and a
// nonzero pooled standard error.
WelchResult welch_t_test(std::span<const real_t> a, std::span<const real_t> b);

// Regularized incomplete beta function I_x(a, b) via continued fractions.
real_t reg_incomplete_beta(real_t a, real_t b, real_t x);

}  // namespace seqgan
