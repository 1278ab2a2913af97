#include "seqgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace seqgan {

GeneratorModel make_oracle(std::uint64_t seed, const GenDims& dims) {
    GeneratorModel oracle(dims, /*mask_start=*/false);
    Rng rng = Rng(seed).child("oracle-init");
    oracle.init_oracle(rng);
    return oracle;
}

std::vector<Sequence> generate_training_set(const GeneratorModel& oracle,
                                            int count, Rng& rng) {
    require(count >= 1, "generate_training_set: count must be >= 1");
    std::vector<Sequence> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(oracle.sample_tokens(rng));
    return out;
}

EvalReport summarize(std::vector<real_t> per_sample) {
    require(!per_sample.empty(), "summarize: empty sample list");
    EvalReport rep;
    rep.per_sample = std::move(per_sample);
    real_t sum = 0;
    for (real_t v : rep.per_sample) sum += v;
    rep.mean = sum / static_cast<real_t>(rep.per_sample.size());
    if (rep.per_sample.size() > 1) {
        real_t ss = 0;
        for (real_t v : rep.per_sample) {
            const real_t d = v - rep.mean;
            ss += d * d;
        }
        rep.stddev = std::sqrt(ss / static_cast<real_t>(rep.per_sample.size() - 1));
    }
    return rep;
}

EvalReport nll_oracle_of_samples(const GeneratorModel& oracle,
                                 const std::vector<Sequence>& samples) {
    require(!samples.empty(), "nll_oracle: no samples");
    std::vector<real_t> scores;
    scores.reserve(samples.size());
    for (const Sequence& seq : samples) {
        scores.push_back(-oracle.log_likelihood(seq));
    }
    return summarize(std::move(scores));
}

EvalReport nll_oracle(const GeneratorModel& oracle, const GeneratorModel& gen,
                      int sample_count, Rng& rng) {
    require(sample_count >= 1, "nll_oracle: sample_count must be >= 1");
    std::vector<real_t> scores;
    scores.reserve(static_cast<std::size_t>(sample_count));
    for (int i = 0; i < sample_count; ++i) {
        scores.push_back(-oracle.log_likelihood(gen.sample_tokens(rng)));
    }
    return summarize(std::move(scores));
}

void write_eval_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("eval report: cannot open " + path + " for writing");
    char buf[64];
    out << "kind,index,value,std\n";
    for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(report.per_sample[i]));
        out << "sample," << i << ',' << buf << ",\n";
    }
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(report.mean));
    out << "summary," << report.per_sample.size() << ',' << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(report.stddev));
    out << buf << '\n';
    if (!out) throw DataError("eval report: write failed for " + path);
}

BleuScorer::BleuScorer(const std::vector<Sequence>& references, int max_n)
    : max_n_(max_n) {
    require(max_n_ >= 1, "bleu: n must be >= 1");
    require(!references.empty(), "bleu: reference set is empty");
    ref_counts_.resize(static_cast<std::size_t>(max_n_));
    ref_lengths_.reserve(references.size());
    std::vector<Token> gram;
    for (const Sequence& ref : references) {
        ref_lengths_.push_back(static_cast<int>(ref.size()));
        for (int n = 1; n <= max_n_; ++n) {
            auto& table = ref_counts_[static_cast<std::size_t>(n - 1)];
            std::map<std::vector<Token>, int> local;
            const int limit = static_cast<int>(ref.size()) - n + 1;
            for (int i = 0; i < limit; ++i) {
                gram.assign(ref.begin() + i, ref.begin() + i + n);
                ++local[gram];
            }
            for (const auto& [key, cnt] : local) {
                auto it = table.find(key);
                if (it == table.end()) {
                    table.emplace(key, cnt);
                } else {
                    it->second = std::max(it->second, cnt);
                }
            }
        }
    }
}

real_t BleuScorer::score(const Sequence& candidate) const {
    const int len = static_cast<int>(candidate.size());
    require(len >= 1, "bleu: empty candidate");

    real_t log_sum = 0;
    std::vector<Token> gram;
    for (int n = 1; n <= max_n_; ++n) {
        const auto& table = ref_counts_[static_cast<std::size_t>(n - 1)];
        std::map<std::vector<Token>, int> counts;
        const int possible = std::max(len - n + 1, 0);
        for (int i = 0; i < possible; ++i) {
            gram.assign(candidate.begin() + i, candidate.begin() + i + n);
            ++counts[gram];
        }
        long matches = 0;
        for (const auto& [key, cnt] : counts) {
            auto it = table.find(key);
            if (it != table.end()) matches += std::min(cnt, it->second);
        }
        real_t precision;
        if (matches > 0) {
            precision = static_cast<real_t>(matches) / static_cast<real_t>(possible);
        } else if (n == 1) {
            return real_t{0};
        } else {
            precision = real_t{1} / static_cast<real_t>(possible + 1);
        }
        log_sum += std::log(precision);
    }

    int best_ref = ref_lengths_[0];
    for (int rl : ref_lengths_) {
        const int cur_gap = std::abs(rl - len);
        const int best_gap = std::abs(best_ref - len);
        if (cur_gap < best_gap || (cur_gap == best_gap && rl < best_ref)) {
            best_ref = rl;
        }
    }
    real_t bp = 1;
    if (len < best_ref) {
        bp = std::exp(real_t{1} - static_cast<real_t>(best_ref) / static_cast<real_t>(len));
    }
    return bp * std::exp(log_sum / static_cast<real_t>(max_n_));
}

real_t bleu(const Sequence& candidate, const std::vector<Sequence>& references,
            int max_n) {
    return BleuScorer(references, max_n).score(candidate);
}

namespace {

// Continued-fraction core of the regularized incomplete beta (Lentz's method).
real_t betacf(real_t a, real_t b, real_t x) {
    constexpr int kMaxIter = 300;
    const real_t eps = std::numeric_limits<real_t>::epsilon();
    const real_t fpmin = std::numeric_limits<real_t>::min() / eps;
    const real_t qab = a + b;
    const real_t qap = a + 1;
    const real_t qam = a - 1;
    real_t c = 1;
    real_t d = 1 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1 / d;
    real_t h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const real_t m2 = static_cast<real_t>(2 * m);
        real_t aa = static_cast<real_t>(m) * (b - static_cast<real_t>(m)) * x /
                    ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1 / d;
        h *= d * c;
        aa = -(a + static_cast<real_t>(m)) * (qab + static_cast<real_t>(m)) * x /
             ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1 / d;
        const real_t del = d * c;
        h *= del;
        if (std::abs(del - 1) <= eps) break;
    }
    return h;
}

}  // namespace

real_t reg_incomplete_beta(real_t a, real_t b, real_t x) {
    require(a > 0 && b > 0, "reg_incomplete_beta: a,b must be positive");
    require(x >= 0 && x <= 1, "reg_incomplete_beta: x must lie in [0,1]");
    if (x == real_t{0}) return 0;
    if (x == real_t{1}) return 1;
    const real_t front = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                                  std::lgamma(b) + a * std::log(x) +
                                  b * std::log1p(-x));
    if (x < (a + 1) / (a + b + 2)) {
        return front * betacf(a, b, x) / a;
    }
    return 1 - front * betacf(b, a, 1 - x) / b;
}

WelchResult welch_t_test(std::span<const real_t> a, std::span<const real_t> b) {
    require(a.size() >= 2 && b.size() >= 2,
            "welch_t_test: both samples need size >= 2");
    const real_t na = static_cast<real_t>(a.size());
    const real_t nb = static_cast<real_t>(b.size());
    real_t ma = 0, mb = 0;
    for (real_t v : a) ma += v;
    for (real_t v : b) mb += v;
    ma /= na;
    mb /= nb;
    real_t va = 0, vb = 0;
    for (real_t v : a) va += (v - ma) * (v - ma);
    for (real_t v : b) vb += (v - mb) * (v - mb);
    va /= na - 1;
    vb /= nb - 1;
    const real_t sa = va / na;
    const real_t sb = vb / nb;
    const real_t se2 = sa + sb;
    require(se2 > real_t{0}, "welch_t_test: degenerate variance");

    WelchResult res;
    res.t = (ma - mb) / std::sqrt(se2);
    res.df = se2 * se2 /
             (sa * sa / (na - 1) + sb * sb / (nb - 1));
    const real_t x = res.df / (res.df + res.t * res.t);
    res.p = reg_incomplete_beta(res.df / 2, real_t{0.5}, x);
    return res;
}

}  // namespace seqgan
