#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqgan/checkpoint.hpp"
#include "seqgan/experiment.hpp"

namespace py = pybind11;
using namespace seqgan;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adversarial sequence generation: generator, discriminator, "
              "rollout rewards and the experiment driver.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError",
                                            PyExc_RuntimeError);

    py::class_<GenDims>(m, "GenDims")
        .def(py::init([](int vocab, int emb, int hidden, int horizon) {
                 return GenDims{vocab, emb, hidden, horizon};
             }),
             py::arg("vocab"), py::arg("emb"), py::arg("hidden"),
             py::arg("horizon"))
        .def_readwrite("vocab", &GenDims::vocab)
        .def_readwrite("emb", &GenDims::emb)
        .def_readwrite("hidden", &GenDims::hidden)
        .def_readwrite("horizon", &GenDims::horizon);

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("child",
             py::overload_cast<const std::string&, std::uint64_t>(
                 &Rng::child, py::const_),
             py::arg("label"), py::arg("index") = 0);

    py::class_<GeneratorModel>(m, "Generator")
        .def(py::init<const GenDims&, bool>(), py::arg("dims"),
             py::arg("mask_start") = false)
        .def_property_readonly("dims", &GeneratorModel::dims)
        .def("init_trainable",
             [](GeneratorModel& g, std::uint64_t seed) {
                 Rng rng(seed);
                 g.init_trainable(rng);
             },
             py::arg("seed"))
        .def("sample",
             [](const GeneratorModel& g, Rng& rng, int count) {
                 std::vector<Sequence> out;
                 out.reserve(static_cast<std::size_t>(count));
                 for (int i = 0; i < count; ++i) {
                     out.push_back(g.sample_tokens(rng));
                 }
                 return out;
             },
             py::arg("rng"), py::arg("count") = 1)
        .def("log_likelihood", &GeneratorModel::log_likelihood, py::arg("seq"))
        .def("save",
             [](const GeneratorModel& g, const std::string& path) {
                 save_checkpoint(g.params(), path);
             },
             py::arg("path"))
        .def("load",
             [](GeneratorModel& g, const std::string& path) {
                 load_checkpoint(g.params(), path);
             },
             py::arg("path"));

    m.def("make_oracle",
          [](std::uint64_t seed, const GenDims& dims) {
              return make_oracle(seed, dims);
          },
          py::arg("seed"), py::arg("dims"));
    m.def("generate_training_set",
          [](const GeneratorModel& oracle, int count, std::uint64_t seed) {
              Rng rng = Rng(seed).child("oracle-data");
              return generate_training_set(oracle, count, rng);
          },
          py::arg("oracle"), py::arg("count"), py::arg("seed"));

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("per_sample", &EvalReport::per_sample)
        .def_readonly("mean", &EvalReport::mean)
        .def_readonly("stddev", &EvalReport::stddev);

    m.def("nll_oracle",
          [](const GeneratorModel& oracle, const GeneratorModel& gen,
             int samples, std::uint64_t seed) {
              Rng rng(seed);
              return nll_oracle(oracle, gen, samples, rng);
          },
          py::arg("oracle"), py::arg("generator"), py::arg("samples"),
          py::arg("seed"));

    m.def("bleu", &bleu, py::arg("candidate"), py::arg("references"),
          py::arg("n"));
    m.def("welch_t_test",
          [](const std::vector<real_t>& a, const std::vector<real_t>& b) {
              const WelchResult r = welch_t_test(a, b);
              return py::make_tuple(r.t, r.df, r.p);
          },
          py::arg("a"), py::arg("b"),
          "Two-sided Welch test; returns (t, df, p).");

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def("set", &apply_override, py::arg("key"), py::arg("value"),
             py::arg("origin") = std::string("python"))
        .def("validate", &ExperimentConfig::validate)
        .def("emit", [](const ExperimentConfig& c) { return emit_config(c); });

    m.def("parse_config", &parse_config_text, py::arg("text"),
          py::arg("origin") = std::string("<config>"));
    m.def("parse_config_file", &parse_config_file, py::arg("path"));
    m.def("run_experiment", &run_experiment, py::arg("config"),
          "Runs the configured algorithms; writes metrics.csv, summary.txt, "
          "config.resolved and checkpoints under config.out.");
}
