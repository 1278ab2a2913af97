"""Adversarial sequence generation with policy-gradient training.

Thin wrapper over the C++ core: oracle construction, generator sampling and
scoring, BLEU and Welch tests, and the experiment driver.
"""

from seqgan._core import (
    ConfigError,
    DataError,
    DivergenceError,
    EvalReport,
    ExperimentConfig,
    GenDims,
    Generator,
    Rng,
    bleu,
    generate_training_set,
    make_oracle,
    nll_oracle,
    parse_config,
    parse_config_file,
    run_experiment,
    welch_t_test,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DivergenceError",
    "EvalReport",
    "ExperimentConfig",
    "GenDims",
    "Generator",
    "Rng",
    "bleu",
    "generate_training_set",
    "make_oracle",
    "nll_oracle",
    "parse_config",
    "parse_config_file",
    "run_experiment",
    "welch_t_test",
]
