#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seqgan/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"seqgan: adversarial sequence-generation experiments"};

    std::string config_path;
    std::string mode;
    std::string algorithms;
    std::string out_dir;
    std::string grid_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::vector<std::string> overrides;
    bool print_config = false;

    app.add_option("--config", config_path, "experiment config file");
    app.add_option("--mode", mode, "synthetic or corpus");
    app.add_option("--algorithms", algorithms,
                   "comma-separated subset of random,mle,ss,pg_bleu,seqgan");
    app.add_option("--seed", seed, "run seed")->each([&](const std::string&) {
        seed_given = true;
    });
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--grid", grid_path,
                   "grid file: one run per line of key=value overrides");
    app.add_option("--set", overrides, "extra key=value override (repeatable)");
    app.add_flag("--print-config", print_config,
                 "print the resolved config and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        seqgan::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = seqgan::parse_config_file(config_path);
        if (!mode.empty()) seqgan::apply_override(cfg, "mode", mode, "--mode");
        if (!algorithms.empty()) {
            seqgan::apply_override(cfg, "algorithms", algorithms, "--algorithms");
        }
        if (seed_given) {
            seqgan::apply_override(cfg, "seed", std::to_string(seed), "--seed");
        }
        if (!out_dir.empty()) seqgan::apply_override(cfg, "out", out_dir, "--out");
        for (const std::string& kv : overrides) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos) {
                throw seqgan::ConfigError("--set: expected key=value, got '" +
                                          kv + "'");
            }
            seqgan::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1),
                                   "--set");
        }

        if (print_config) {
            std::fputs(seqgan::emit_config(cfg).c_str(), stdout);
            return 0;
        }
        if (!grid_path.empty()) return seqgan::run_grid(cfg, grid_path);
        return seqgan::run_experiment(cfg);
    } catch (const seqgan::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const seqgan::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const seqgan::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
