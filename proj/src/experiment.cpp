#include "seqgan/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "seqgan/checkpoint.hpp"

namespace seqgan {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_key(const std::string& where, const std::string& key,
                          const std::string& msg) {
    throw ConfigError(where + ": key '" + key + "' " + msg);
}

long long parse_ll(const std::string& v, const std::string& where,
                   const std::string& key) {
    if (v.empty()) bad_key(where, key, "expects an integer, got empty value");
    errno = 0;
    char* end = nullptr;
    const long long out = std::strtoll(v.c_str(), &end, 10);
    if (errno != 0 || end != v.c_str() + v.size()) {
        bad_key(where, key, "expects an integer, got '" + v + "'");
    }
    return out;
}

int parse_int(const std::string& v, const std::string& where,
              const std::string& key) {
    const long long out = parse_ll(v, where, key);
    if (out < -2147483648LL || out > 2147483647LL) {
        bad_key(where, key, "is out of range: '" + v + "'");
    }
    return static_cast<int>(out);
}

std::uint64_t parse_u64(const std::string& v, const std::string& where,
                        const std::string& key) {
    if (v.empty() || v[0] == '-') {
        bad_key(where, key, "expects a non-negative integer, got '" + v + "'");
    }
    errno = 0;
    char* end = nullptr;
    const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
    if (errno != 0 || end != v.c_str() + v.size()) {
        bad_key(where, key, "expects a non-negative integer, got '" + v + "'");
    }
    return static_cast<std::uint64_t>(out);
}

real_t parse_real(const std::string& v, const std::string& where,
                  const std::string& key) {
    if (v.empty()) bad_key(where, key, "expects a number, got empty value");
    errno = 0;
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (errno != 0 || end != v.c_str() + v.size()) {
        bad_key(where, key, "expects a number, got '" + v + "'");
    }
    return static_cast<real_t>(out);
}

bool parse_bool(const std::string& v, const std::string& where,
                const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_key(where, key, "expects true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ',';
        out += items[i];
    }
    return out;
}

std::string fmt_real(real_t v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, static_cast<double>(v));
    return std::string(buf, res.ptr);
}

using Setter = std::function<void(ExperimentConfig&, const std::string& value,
                                  const std::string& where,
                                  const std::string& key)>;

const std::map<std::string, Setter>& setter_table() {
    auto int_field = [](int ExperimentConfig::* field) {
        return [field](ExperimentConfig& c, const std::string& v,
                       const std::string& w, const std::string& k) {
            c.*field = parse_int(v, w, k);
        };
    };
    auto str_field = [](std::string ExperimentConfig::* field) {
        return [field](ExperimentConfig& c, const std::string& v,
                       const std::string& w, const std::string& k) {
            (void)w;
            (void)k;
            c.*field = v;
        };
    };
    static const std::map<std::string, Setter> table = {
        {"mode", str_field(&ExperimentConfig::mode)},
        {"seed",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.seed = parse_u64(v, w, k); }},
        {"algorithms",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.algorithms = split_list(v);
             for (const std::string& a : c.algorithms) {
                 if (a.empty()) bad_key(w, k, "contains an empty entry");
             }
         }},
        {"out", str_field(&ExperimentConfig::out)},
        {"checkpoints", str_field(&ExperimentConfig::checkpoints)},

        {"generator.vocab",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.dims.vocab = parse_int(v, w, k); }},
        {"generator.emb",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.dims.emb = parse_int(v, w, k); }},
        {"generator.hidden",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.dims.hidden = parse_int(v, w, k); }},
        {"generator.horizon",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.dims.horizon = parse_int(v, w, k); }},

        {"discriminator.emb",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.disc.emb = parse_int(v, w, k); }},
        {"discriminator.kernels", str_field(&ExperimentConfig::disc_kernels)},
        {"discriminator.dropout_keep",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.disc.dropout_keep = parse_real(v, w, k); }},

        {"training.g_steps",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.g_steps = parse_int(v, w, k); }},
        {"training.d_steps",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.d_steps = parse_int(v, w, k); }},
        {"training.k",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.disc_epochs_per_d_step = parse_int(v, w, k);
         }},
        {"training.rollouts",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.rollout_count = parse_int(v, w, k); }},
        {"training.rounds",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.adversarial_rounds = parse_int(v, w, k);
         }},
        {"training.pretrain_gen_epochs",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.pretrain_gen_epochs = parse_int(v, w, k);
         }},
        {"training.pretrain_converged",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.pretrain_converged = parse_bool(v, w, k);
         }},
        {"training.pretrain_disc_epochs",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.pretrain_disc_epochs = parse_int(v, w, k);
         }},
        {"training.gen_batch",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.gen_batch = parse_int(v, w, k); }},
        {"training.pg_batch",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.pg_batch = parse_int(v, w, k); }},
        {"training.disc_batch",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.disc_batch = parse_int(v, w, k); }},
        {"training.eval_every",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.eval_every = parse_int(v, w, k); }},
        {"training.pretrain_eval_every",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.pretrain_eval_every = parse_int(v, w, k);
         }},
        {"training.optimizer",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             OptimizerConfig::Kind kind;
             if (v == "adam") {
                 kind = OptimizerConfig::Kind::adam;
             } else if (v == "sgd") {
                 kind = OptimizerConfig::Kind::sgd;
             } else {
                 bad_key(w, k, "expects adam or sgd, got '" + v + "'");
             }
             c.train.gen_pretrain_opt.kind = kind;
             c.train.gen_adv_opt.kind = kind;
             c.train.disc_opt.kind = kind;
         }},
        {"training.gen_pretrain_lr",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.gen_pretrain_opt.lr = parse_real(v, w, k);
         }},
        {"training.gen_adv_lr",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.gen_adv_opt.lr = parse_real(v, w, k); }},
        {"training.disc_lr",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.disc_opt.lr = parse_real(v, w, k); }},
        {"training.grad_clip",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             const real_t clip = parse_real(v, w, k);
             c.train.gen_pretrain_opt.grad_clip = clip;
             c.train.gen_adv_opt.grad_clip = clip;
             c.train.disc_opt.grad_clip = clip;
         }},
        {"training.baseline",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             if (v == "none") {
                 c.train.pg_baseline.mode = Baseline::Mode::none;
             } else if (v == "constant") {
                 c.train.pg_baseline.mode = Baseline::Mode::constant;
             } else if (v == "batch_mean") {
                 c.train.pg_baseline.mode = Baseline::Mode::batch_mean;
             } else {
                 bad_key(w, k, "expects none, constant or batch_mean, got '" + v +
                                   "'");
             }
         }},
        {"training.baseline_value",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.pg_baseline.value = parse_real(v, w, k);
         }},
        {"training.ss_decay",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.ss_decay = parse_real(v, w, k); }},
        {"training.early_stop",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.early_stop = parse_bool(v, w, k); }},
        {"training.early_stop_patience",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.early_stop_patience = parse_int(v, w, k);
         }},
        {"training.plateau_window",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.plateau_window = parse_int(v, w, k); }},
        {"training.plateau_tol",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.train.plateau_tol = parse_real(v, w, k); }},
        {"training.record_wallclock",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) {
             c.train.record_wallclock = parse_bool(v, w, k);
         }},

        {"eval.samples", int_field(&ExperimentConfig::eval_samples)},
        {"eval.bleu_n", int_field(&ExperimentConfig::bleu_n)},

        {"synthetic.oracle_seed",
         [](ExperimentConfig& c, const std::string& v, const std::string& w,
            const std::string& k) { c.oracle_seed = parse_u64(v, w, k); }},
        {"synthetic.train_sequences",
         int_field(&ExperimentConfig::train_sequences)},

        {"corpus.train", str_field(&ExperimentConfig::corpus_train)},
        {"corpus.test", str_field(&ExperimentConfig::corpus_test)},
        {"corpus.vocab", str_field(&ExperimentConfig::corpus_vocab)},
    };
    return table;
}

void set_key(ExperimentConfig& cfg, const std::string& key,
             const std::string& value, const std::string& where) {
    const auto& table = setter_table();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    it->second(cfg, value, where, key);
}

}  // namespace

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (mode != "synthetic" && mode != "corpus") {
        fail("mode must be synthetic or corpus, got '" + mode + "'");
    }
    if (algorithms.empty()) fail("algorithms is empty");
    static const std::set<std::string> known{"random", "mle", "ss", "pg_bleu",
                                             "seqgan"};
    std::set<std::string> seen;
    for (const std::string& a : algorithms) {
        if (!known.count(a)) fail("algorithms: unknown algorithm '" + a + "'");
        if (!seen.insert(a).second) fail("algorithms: duplicate '" + a + "'");
    }
    if (checkpoints != "none" && checkpoints != "final" && checkpoints != "all") {
        fail("checkpoints must be none, final or all, got '" + checkpoints + "'");
    }
    if (out.empty()) fail("out must not be empty");
    if (dims.vocab < 2) fail("generator.vocab must be >= 2");
    if (dims.emb < 1) fail("generator.emb must be >= 1");
    if (dims.hidden < 1) fail("generator.hidden must be >= 1");
    if (dims.horizon < 1) fail("generator.horizon must be >= 1");
    if (disc.emb < 1) fail("discriminator.emb must be >= 1");
    if (!(disc.dropout_keep > real_t{0} && disc.dropout_keep <= real_t{1})) {
        fail("discriminator.dropout_keep must lie in (0,1]");
    }
    if (eval_samples < 2) fail("eval.samples must be >= 2");
    if (bleu_n < 1) fail("eval.bleu_n must be >= 1");
    if (train_sequences < 1) fail("synthetic.train_sequences must be >= 1");
    if (mode == "corpus") {
        if (corpus_train.empty()) fail("corpus.train is required in corpus mode");
        if (corpus_test.empty()) fail("corpus.test is required in corpus mode");
        if (corpus_vocab.empty()) fail("corpus.vocab is required in corpus mode");
    }
    train.validate();
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::string section;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        const std::string where = origin + ":" + std::to_string(line_no);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + ": malformed section header '" + line +
                                  "'");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError(where + ": empty section name");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'key = value', got '" + line +
                              "'");
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!section.empty() && key.find('.') == std::string::npos) {
            key = section + "." + key;
        }
        set_key(cfg, key, value, where);
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value, const std::string& origin) {
    set_key(cfg, trim(key), trim(value), origin);
}

std::string emit_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "# resolved experiment configuration\n";
    out << "mode = " << cfg.mode << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "algorithms = " << join_list(cfg.algorithms) << "\n";
    out << "out = " << cfg.out << "\n";
    out << "checkpoints = " << cfg.checkpoints << "\n";
    out << "\n[generator]\n";
    out << "vocab = " << cfg.dims.vocab << "\n";
    out << "emb = " << cfg.dims.emb << "\n";
    out << "hidden = " << cfg.dims.hidden << "\n";
    out << "horizon = " << cfg.dims.horizon << "\n";
    out << "\n[discriminator]\n";
    out << "emb = " << cfg.disc.emb << "\n";
    out << "kernels = " << cfg.disc_kernels << "\n";
    out << "dropout_keep = " << fmt_real(cfg.disc.dropout_keep) << "\n";
    out << "\n[training]\n";
    const TrainingConfig& t = cfg.train;
    out << "g_steps = " << t.g_steps << "\n";
    out << "d_steps = " << t.d_steps << "\n";
    out << "k = " << t.disc_epochs_per_d_step << "\n";
    out << "rollouts = " << t.rollout_count << "\n";
    out << "rounds = " << t.adversarial_rounds << "\n";
    out << "pretrain_gen_epochs = " << t.pretrain_gen_epochs << "\n";
    out << "pretrain_converged = " << (t.pretrain_converged ? "true" : "false")
        << "\n";
    out << "pretrain_disc_epochs = " << t.pretrain_disc_epochs << "\n";
    out << "gen_batch = " << t.gen_batch << "\n";
    out << "pg_batch = " << t.pg_batch << "\n";
    out << "disc_batch = " << t.disc_batch << "\n";
    out << "eval_every = " << t.eval_every << "\n";
    out << "pretrain_eval_every = " << t.pretrain_eval_every << "\n";
    out << "optimizer = "
        << (t.gen_pretrain_opt.kind == OptimizerConfig::Kind::adam ? "adam"
                                                                   : "sgd")
        << "\n";
    out << "gen_pretrain_lr = " << fmt_real(t.gen_pretrain_opt.lr) << "\n";
    out << "gen_adv_lr = " << fmt_real(t.gen_adv_opt.lr) << "\n";
    out << "disc_lr = " << fmt_real(t.disc_opt.lr) << "\n";
    out << "grad_clip = " << fmt_real(t.gen_pretrain_opt.grad_clip) << "\n";
    out << "baseline = "
        << (t.pg_baseline.mode == Baseline::Mode::none        ? "none"
            : t.pg_baseline.mode == Baseline::Mode::constant ? "constant"
                                                             : "batch_mean")
        << "\n";
    out << "baseline_value = " << fmt_real(t.pg_baseline.value) << "\n";
    out << "ss_decay = " << fmt_real(t.ss_decay) << "\n";
    out << "early_stop = " << (t.early_stop ? "true" : "false") << "\n";
    out << "early_stop_patience = " << t.early_stop_patience << "\n";
    out << "plateau_window = " << t.plateau_window << "\n";
    out << "plateau_tol = " << fmt_real(t.plateau_tol) << "\n";
    out << "record_wallclock = " << (t.record_wallclock ? "true" : "false")
        << "\n";
    out << "\n[eval]\n";
    out << "samples = " << cfg.eval_samples << "\n";
    out << "bleu_n = " << cfg.bleu_n << "\n";
    out << "\n[synthetic]\n";
    out << "oracle_seed = " << cfg.oracle_seed << "\n";
    out << "train_sequences = " << cfg.train_sequences << "\n";
    out << "\n[corpus]\n";
    out << "train = " << cfg.corpus_train << "\n";
    out << "test = " << cfg.corpus_test << "\n";
    out << "vocab = " << cfg.corpus_vocab << "\n";
    return out.str();
}

KernelPreset resolve_kernels(const std::string& name_or_path) {
    if (name_or_path == "desk") return preset_desk();
    if (name_or_path == "t20") return preset_t20();
    if (name_or_path == "t32") return preset_t32();
    if (std::filesystem::exists(name_or_path)) {
        return load_kernel_preset(name_or_path);
    }
    throw ConfigError("discriminator.kernels: '" + name_or_path +
                      "' is neither a preset (desk, t20, t32) nor a file");
}

namespace {

std::vector<std::vector<std::string>> read_token_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("corpus: cannot open " + path);
    std::vector<std::vector<std::string>> lines;
    std::string raw;
    while (std::getline(in, raw)) {
        std::istringstream ls(raw);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        lines.push_back(std::move(tokens));
    }
    return lines;
}

std::vector<std::vector<std::string>> keep_lines(
    std::vector<std::vector<std::string>> lines, int horizon,
    IngestReport& report) {
    std::vector<std::vector<std::string>> kept;
    for (auto& line : lines) {
        if (static_cast<int>(line.size()) < horizon) {
            ++report.dropped;
            continue;
        }
        if (static_cast<int>(line.size()) > horizon) {
            ++report.truncated;
            line.resize(static_cast<std::size_t>(horizon));
        }
        ++report.kept;
        kept.push_back(std::move(line));
    }
    return kept;
}

}  // namespace

Corpus ingest_corpus(const std::string& train_path, const std::string& test_path,
                     int horizon) {
    require(horizon >= 1, "ingest_corpus: horizon must be >= 1");
    auto train_lines = read_token_lines(train_path);
    if (train_lines.empty()) {
        throw DataError("corpus: empty training file " + train_path);
    }

    Corpus corpus;
    const auto kept_train =
        keep_lines(std::move(train_lines), horizon, corpus.train_report);
    if (kept_train.empty()) {
        throw DataError("corpus: no training lines with at least " +
                        std::to_string(horizon) + " tokens in " + train_path);
    }

    std::map<std::string, std::int64_t> freq;
    for (const auto& line : kept_train) {
        for (const std::string& tok : line) ++freq[tok];
    }
    std::vector<std::pair<std::string, std::int64_t>> types(freq.begin(),
                                                            freq.end());
    std::sort(types.begin(), types.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    corpus.id_to_token.push_back("<s>");
    for (const auto& [tok, count] : types) {
        (void)count;
        corpus.token_ids[tok] = static_cast<Token>(corpus.id_to_token.size());
        corpus.id_to_token.push_back(tok);
    }
    corpus.id_to_token.push_back("<unk>");

    auto map_line = [&](const std::vector<std::string>& line,
                        IngestReport& report) {
        Sequence seq;
        seq.reserve(line.size());
        for (const std::string& tok : line) {
            const auto it = corpus.token_ids.find(tok);
            if (it == corpus.token_ids.end()) {
                seq.push_back(corpus.unk_id());
                ++report.unk_tokens;
            } else {
                seq.push_back(it->second);
            }
        }
        return seq;
    };

    for (const auto& line : kept_train) {
        corpus.train.push_back(map_line(line, corpus.train_report));
    }

    const auto kept_test = keep_lines(read_token_lines(test_path), horizon,
                                      corpus.test_report);
    for (const auto& line : kept_test) {
        corpus.test.push_back(map_line(line, corpus.test_report));
    }
    return corpus;
}

void write_vocab(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("vocab: cannot open " + path + " for writing");
    for (std::size_t i = 0; i < corpus.id_to_token.size(); ++i) {
        out << i << ' ' << corpus.id_to_token[i] << '\n';
    }
    if (!out) throw DataError("vocab: write failed for " + path);
}

namespace {

struct AlgOutcome {
    std::string name;
    EvalReport final_eval;
    bool diverged = false;
    std::string note;
};

void write_summary(const ExperimentConfig& cfg, const Corpus* corpus,
                   const std::vector<AlgOutcome>& outcomes,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("summary: cannot open " + path + " for writing");
    char buf[160];
    out << "experiment summary\n";
    out << "mode: " << cfg.mode << "\n";
    out << "seed: " << cfg.seed << "\n";
    if (cfg.mode == "synthetic") {
        out << "oracle seed: " << cfg.oracle_seed << ", training sequences: "
            << cfg.train_sequences << "\n";
        out << "metric: nll_oracle over " << cfg.eval_samples
            << " samples (lower is better)\n";
    } else {
        out << "metric: bleu-" << cfg.bleu_n << " over " << cfg.eval_samples
            << " samples (higher is better)\n";
    }
    if (corpus != nullptr) {
        out << "vocab: " << corpus->vocab_size()
            << " ids (train kept " << corpus->train_report.kept << ", dropped "
            << corpus->train_report.dropped << ", truncated "
            << corpus->train_report.truncated << "; test kept "
            << corpus->test_report.kept << ", dropped "
            << corpus->test_report.dropped << ", truncated "
            << corpus->test_report.truncated << ", unk tokens "
            << corpus->test_report.unk_tokens << ")\n";
    }
    out << "\n";
    std::snprintf(buf, sizeof buf, "%-10s %14s %14s  %s\n", "algorithm", "mean",
                  "std", "status");
    out << buf;
    for (const AlgOutcome& o : outcomes) {
        std::snprintf(buf, sizeof buf, "%-10s %14.6f %14.6f  %s\n",
                      o.name.c_str(), static_cast<double>(o.final_eval.mean),
                      static_cast<double>(o.final_eval.stddev),
                      o.diverged ? "diverged" : "ok");
        out << buf;
    }

    if (outcomes.size() > 1) {
        out << "\npairwise welch t-tests on per-sample final scores\n";
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            for (std::size_t j = i + 1; j < outcomes.size(); ++j) {
                out << "  " << outcomes[i].name << " vs " << outcomes[j].name
                    << ": ";
                try {
                    const WelchResult r =
                        welch_t_test(outcomes[i].final_eval.per_sample,
                                     outcomes[j].final_eval.per_sample);
                    std::snprintf(buf, sizeof buf, "t=%.4f df=%.2f p=%.6g\n",
                                  static_cast<double>(r.t),
                                  static_cast<double>(r.df),
                                  static_cast<double>(r.p));
                    out << buf;
                } catch (const std::invalid_argument& e) {
                    out << "unavailable (" << e.what() << ")\n";
                }
            }
        }
    }

    for (const AlgOutcome& o : outcomes) {
        if (o.diverged) {
            out << "\n" << o.name << " diverged: " << o.note
                << " (parameters rolled back to the last finite round)\n";
        }
    }
    if (!out) throw DataError("summary: write failed for " + path);
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const KernelPreset kernels = resolve_kernels(cfg.disc_kernels);
    for (const KernelSpec& spec : kernels) {
        if (spec.window > cfg.dims.horizon) {
            throw ConfigError("discriminator.kernels: window " +
                              std::to_string(spec.window) +
                              " exceeds generator.horizon " +
                              std::to_string(cfg.dims.horizon));
        }
    }

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw DataError("cannot create output directory " + cfg.out);
    const std::string ckdir = cfg.out + "/checkpoints";
    fs::create_directories(ckdir, ec);
    if (ec) throw DataError("cannot create " + ckdir);

    {
        std::ofstream echo(cfg.out + "/config.resolved");
        if (!echo) throw DataError("cannot write " + cfg.out + "/config.resolved");
        echo << emit_config(cfg);
    }

    GenDims dims = cfg.dims;
    TrainingConfig tcfg = cfg.train;
    tcfg.seed = cfg.seed;

    std::optional<GeneratorModel> oracle;
    std::optional<Corpus> corpus;
    std::vector<Sequence> data;
    EvalFn eval;

    if (cfg.mode == "synthetic") {
        oracle.emplace(make_oracle(cfg.oracle_seed, dims));
        Rng data_rng = Rng(cfg.oracle_seed).child("oracle-data");
        data = generate_training_set(*oracle, cfg.train_sequences, data_rng);
        eval = make_synthetic_evaluator(*oracle, cfg.eval_samples);
    } else {
        corpus = ingest_corpus(cfg.corpus_train, cfg.corpus_test, dims.horizon);
        if (corpus->test.empty()) {
            throw DataError("corpus: no test lines with at least " +
                            std::to_string(dims.horizon) + " tokens in " +
                            cfg.corpus_test);
        }
        write_vocab(*corpus, cfg.corpus_vocab);
        dims.vocab = corpus->vocab_size();
        tcfg.mask_start = true;
        data = corpus->train;
        eval = make_corpus_evaluator(corpus->test, cfg.bleu_n, cfg.eval_samples);
    }

    DiscSpec dspec = cfg.disc;
    dspec.kernels = kernels;

    SnapshotHook hook;
    if (cfg.checkpoints == "all") {
        hook = [ckdir](const RunArtifacts& art, const GeneratorModel& gen,
                       const DiscriminatorModel* disc) {
            const int epoch = art.metrics.empty() ? 0 : art.metrics.back().epoch;
            const std::string stem =
                ckdir + "/" + art.algorithm + "-e" + std::to_string(epoch);
            save_checkpoint(gen.params(), stem + "-generator.ckpt");
            if (disc != nullptr) {
                save_checkpoint(disc->params(), stem + "-discriminator.ckpt");
            }
        };
    }

    std::vector<AlgOutcome> outcomes;
    std::vector<MetricRecord> all_records;
    bool any_diverged = false;

    for (const std::string& alg : cfg.algorithms) {
        RunArtifacts art;
        if (alg == "random") {
            art = run_random_baseline(tcfg, dims, eval, hook);
        } else if (alg == "mle") {
            art = run_mle(tcfg, dims, data, eval, hook);
        } else if (alg == "ss") {
            art = run_scheduled_sampling(tcfg, dims, data, eval, hook);
        } else if (alg == "pg_bleu") {
            art = run_pg_bleu(tcfg, dims, data, cfg.bleu_n, eval, hook);
        } else {
            art = run_seqgan(tcfg, dims, dspec, data, eval, hook);
        }

        if (cfg.checkpoints != "none" && art.generator.has_value()) {
            save_checkpoint(art.generator->params(),
                            ckdir + "/" + alg + "-generator.ckpt");
            if (art.discriminator.has_value()) {
                save_checkpoint(art.discriminator->params(),
                                ckdir + "/" + alg + "-discriminator.ckpt");
            }
        }

        for (MetricRecord& rec : art.metrics) {
            all_records.push_back(std::move(rec));
        }
        outcomes.push_back(
            {alg, std::move(art.final_eval), art.diverged, art.divergence_note});
        any_diverged = any_diverged || art.diverged;
    }

    write_metrics_csv(all_records, cfg.out + "/metrics.csv");
    write_summary(cfg, corpus ? &*corpus : nullptr, outcomes,
                  cfg.out + "/summary.txt");
    return any_diverged ? 4 : 0;
}

int run_grid(const ExperimentConfig& base, const std::string& grid_path) {
    std::ifstream in(grid_path);
    if (!in) throw DataError("grid: cannot open " + grid_path);

    Rng grid_rng(base.seed);
    int worst = 0;
    int run_index = 0;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        ++run_index;

        ExperimentConfig cfg = base;
        bool seed_set = false;
        std::istringstream ls(line);
        std::string tok;
        const std::string where =
            grid_path + ":" + std::to_string(line_no);
        while (ls >> tok) {
            const std::size_t eq = tok.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(where + ": expected key=value, got '" + tok +
                                  "'");
            }
            const std::string key = tok.substr(0, eq);
            apply_override(cfg, key, tok.substr(eq + 1), where);
            if (key == "seed") seed_set = true;
        }
        if (!seed_set) {
            Rng child = grid_rng.child("grid", static_cast<std::uint64_t>(run_index));
            cfg.seed = child.next_u64();
        }
        char dirname[32];
        std::snprintf(dirname, sizeof dirname, "grid-%03d", run_index);
        cfg.out = base.out + "/" + dirname;

        std::printf("%s: seed=%llu %s\n", dirname,
                    static_cast<unsigned long long>(cfg.seed), line.c_str());
        const int rc = run_experiment(cfg);
        worst = std::max(worst, rc);
    }
    if (run_index == 0) throw ConfigError("grid: no runs in " + grid_path);
    return worst;
}

}  // namespace seqgan
