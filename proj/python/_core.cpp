#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "neuroboot/bootstrap.hpp"
#include "neuroboot/decode.hpp"
#include "neuroboot/epoch_io.hpp"
#include "neuroboot/experiment.hpp"
#include "neuroboot/metrics.hpp"
#include "neuroboot/stats.hpp"
#include "neuroboot/synthgen.hpp"

namespace py = pybind11;
using namespace neuroboot;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

nlohmann::json parse_json(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return nlohmann::json::parse(obj.cast<std::string>());
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

TimeWindow window(const std::pair<double, double>& w) { return TimeWindow(w.first, w.second); }

Array tensor_array(const Tensor3& t) {
  Array out({t.n(), t.rows(), t.cols()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

EpochSet make_epochs(const std::string& subject_id, double fs, double t0,
                     const std::vector<std::uint8_t>& codes, const Array& data) {
  if (data.ndim() != 3) throw InvalidArgument("data must be trials x channels x samples");
  std::vector<TrialLabel> labels;
  for (auto c : codes) labels.push_back(label_from_code(c));
  std::vector<double> values(data.data(), data.data() + data.size());
  return EpochSet(subject_id, fs, t0, std::move(labels),
                  Tensor3(static_cast<std::size_t>(data.shape(0)), static_cast<std::size_t>(data.shape(1)),
                          static_cast<std::size_t>(data.shape(2)), std::move(values)));
}

SubjectTimeMatrix matrix(const Array& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a subjects x time array");
  return {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
          std::vector<double>(a.data(), a.data() + a.size())};
}

py::list report_rows(const DecodingReport& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["subject"] = row.subject;
    d["condition"] = row.condition;
    d["scheme"] = row.scheme;
    d["source"] = row.source;
    d["k"] = row.k;
    d["fold"] = row.fold;
    d["t_or_window"] = row.t_or_window;
    d["accuracy"] = row.accuracy;
    rows.append(d);
  }
  return rows;
}

DecodeConfig decode_config(const std::string& condition, const std::string& scheme, std::size_t k,
                           std::size_t L, std::size_t source_trials, std::size_t folds,
                           const std::vector<std::uint64_t>& seeds, double c,
                           std::pair<double, double> weights) {
  DecodeConfig cfg;
  cfg.condition = condition;
  cfg.scheme = parse_scheme(scheme);
  cfg.k = k;
  cfg.L = L;
  cfg.source_trials = source_trials;
  cfg.n_folds = folds;
  cfg.seeds = seeds;
  cfg.svm.hyper_c = c;
  cfg.weights = {weights.first, weights.second};
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weighted bootstrap sub-averaging for ERP decoding";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  py::class_<EpochSet>(m, "EpochSet")
      .def(py::init(&make_epochs), py::arg("subject_id"), py::arg("fs"), py::arg("t0"),
           py::arg("label_codes"), py::arg("data"))
      .def_property_readonly("subject_id", &EpochSet::subject_id)
      .def_property_readonly("fs", &EpochSet::fs)
      .def_property_readonly("t0", &EpochSet::t0)
      .def_property_readonly("n_trials", &EpochSet::n_trials)
      .def_property_readonly("n_channels", &EpochSet::n_channels)
      .def_property_readonly("n_samples", &EpochSet::n_samples)
      .def_property_readonly("label_codes",
                             [](const EpochSet& e) {
                               std::vector<std::uint8_t> codes;
                               for (const auto& l : e.labels()) codes.push_back(label_code(l));
                               return codes;
                             })
      .def_property_readonly("data", [](const EpochSet& e) { return tensor_array(e.data()); })
      .def("save", [](const EpochSet& e, const std::filesystem::path& p) { save_epochs(e, p); })
      .def_static("load", &load_epochs)
      .def("__eq__", [](const EpochSet& a, const EpochSet& b) { return a == b; })
      .def("__repr__", [](const EpochSet& e) {
        return "<EpochSet " + e.subject_id() + " " + std::to_string(e.n_trials()) + "x" +
               std::to_string(e.n_channels()) + "x" + std::to_string(e.n_samples()) + ">";
      });

  m.def(
      "generate_subject",
      [](const py::object& config, std::size_t index) {
        SynthConfig cfg;
        from_json(parse_json(config), cfg);
        return generate_subject(cfg, index);
      },
      py::arg("config"), py::arg("subject_index"),
      "Synthesises one subject from a SynthConfig mapping (missing keys keep defaults).");

  m.def(
      "preprocess",
      [](const EpochSet& e, std::pair<double, double> baseline, double lowpass_hz, int order,
         std::size_t downsample) {
        PreprocessOptions opt;
        opt.baseline = window(baseline);
        opt.lowpass_hz = lowpass_hz;
        opt.order = order;
        opt.downsample = downsample;
        return preprocess(e, opt);
      },
      py::arg("epochs"), py::arg("baseline") = std::pair{-0.2, 0.0}, py::arg("lowpass_hz") = 20.0,
      py::arg("order") = 4, py::arg("downsample") = 1);

  m.def(
      "quality",
      [](const EpochSet& e, std::pair<double, double> signal, std::pair<double, double> baseline) {
        const auto q = quality(e, window(signal), window(baseline));
        return py::dict(py::arg("snr_db") = q.snr_db, py::arg("delta_erp") = q.delta_erp);
      },
      py::arg("epochs"), py::arg("signal") = std::pair{0.3, 0.6},
      py::arg("baseline") = std::pair{-0.2, 0.0});

  m.def(
      "topic_weights",
      [](const std::vector<EpochSet>& others, std::pair<double, double> signal) {
        const auto w = estimate_weights(others, window(signal));
        return std::pair{w.bio, w.intent};
      },
      py::arg("subjects"), py::arg("signal") = std::pair{0.3, 0.6},
      "(w_bio, w_int) estimated from the given subjects.");

  m.def(
      "weight_vector",
      [](const EpochSet& e, const std::string& scheme, std::pair<double, double> weights,
         std::uint64_t seed) {
        return build_weight_vector(e.labels(), {weights.first, weights.second}, parse_scheme(scheme),
                                   RngSeed{seed})
            .probs();
      },
      py::arg("epochs"), py::arg("scheme"), py::arg("weights") = std::pair{1.0, 1.0},
      py::arg("seed") = 0, "Normalised sampling probabilities per trial.");

  m.def(
      "draw_counts",
      [](const std::vector<double>& weights, std::size_t k, std::uint64_t seed) {
        return draw_counts(WeightVector(weights, Scheme::Weighted), k, RngSeed{seed});
      },
      py::arg("weights"), py::arg("k"), py::arg("seed"));

  m.def(
      "sub_average",
      [](const Array& trials, const std::vector<std::uint32_t>& counts, std::size_t k) {
        if (trials.ndim() != 3) throw InvalidArgument("trials must be a 3-d array");
        const Tensor3 t(static_cast<std::size_t>(trials.shape(0)), static_cast<std::size_t>(trials.shape(1)),
                        static_cast<std::size_t>(trials.shape(2)),
                        std::vector<double>(trials.data(), trials.data() + trials.size()));
        const auto avg = sub_average(t, counts, k);
        Array out({trials.shape(1), trials.shape(2)});
        std::copy(avg.begin(), avg.end(), out.mutable_data());
        return out;
      },
      py::arg("trials"), py::arg("counts"), py::arg("k"));

  m.def(
      "augment",
      [](const EpochSet& e, const std::string& scheme, std::size_t k, std::size_t L,
         std::pair<double, double> weights, std::uint64_t seed, bool per_class) {
        const auto wv = build_weight_vector(e.labels(), {weights.first, weights.second},
                                            parse_scheme(scheme), derive_seed(RngSeed{seed}, 0));
        return augment(e, wv, BootstrapPlan{k, L, derive_seed(RngSeed{seed}, 1), per_class});
      },
      py::arg("epochs"), py::arg("scheme") = "uniform", py::arg("k") = 8, py::arg("L") = 250,
      py::arg("weights") = std::pair{1.0, 1.0}, py::arg("seed") = 42, py::arg("per_class") = true);

  m.def(
      "decode_window",
      [](const EpochSet& e, std::pair<double, double> win, const std::string& condition,
         const std::string& scheme, std::size_t k, std::size_t L, std::size_t source_trials,
         std::size_t folds, const std::vector<std::uint64_t>& seeds, double c,
         std::pair<double, double> weights) {
        const auto cfg = decode_config(condition, scheme, k, L, source_trials, folds, seeds, c, weights);
        DecodingReport report;
        {
          py::gil_scoped_release release;
          report = decode_window(condition_trials(e, condition), window(win), cfg);
        }
        return report_rows(report);
      },
      py::arg("epochs"), py::arg("window") = std::pair{0.3, 0.6}, py::arg("condition") = "BI",
      py::arg("scheme") = "uniform", py::arg("k") = 8, py::arg("L") = 250,
      py::arg("source_trials") = 0, py::arg("folds") = 5,
      py::arg("seeds") = std::vector<std::uint64_t>{1}, py::arg("C") = 1.0,
      py::arg("weights") = std::pair{1.0, 1.0}, "Per-fold window accuracies as a list of rows.");

  m.def(
      "paired_t",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = paired_t(a, b);
        return py::dict(py::arg("t") = r.t, py::arg("df") = r.df, py::arg("p") = r.p);
      },
      py::arg("a"), py::arg("b"));

  m.def("fdr_bh", [](const std::vector<double>& p, double q) { return fdr_bh(p, q); },
        py::arg("p_values"), py::arg("q") = 0.05);

  m.def(
      "cluster_permutation",
      [](const Array& a, const Array& b, double alpha_cluster, std::size_t n_permutations,
         std::uint64_t seed) {
        const auto r = cluster_permutation(matrix(a), matrix(b),
                                           ClusterOptions{alpha_cluster, n_permutations, RngSeed{seed}});
        py::list clusters;
        for (const auto& c : r.clusters) {
          clusters.append(py::dict(py::arg("start") = c.start, py::arg("end") = c.end,
                                   py::arg("mass") = c.mass, py::arg("p") = c.p));
        }
        return py::dict(py::arg("threshold") = r.threshold, py::arg("exhaustive") = r.exhaustive,
                        py::arg("n_permutations") = r.n_permutations, py::arg("clusters") = clusters);
      },
      py::arg("a"), py::arg("b"), py::arg("alpha_cluster") = 0.05, py::arg("n_permutations") = 1024,
      py::arg("seed") = 0, "Cluster-mass sign-flip test of a - b (subjects x time arrays).");

  m.def("standard_config", [] { return to_python(ExperimentConfig::standard()); });

  m.def(
      "run_experiment",
      [](const py::object& config, const std::filesystem::path& out_dir, std::size_t threads) {
        ExperimentConfig cfg = ExperimentConfig::standard();
        if (!config.is_none()) from_json(parse_json(config), cfg);
        {
          py::gil_scoped_release release;
          run_experiment(cfg, out_dir, threads);
        }
        std::ifstream in(out_dir / "manifest.json");
        return to_python(nlohmann::json::parse(in));
      },
      py::arg("config") = py::none(), py::arg("out_dir"), py::arg("threads") = 1,
      "Runs the full pipeline and returns the manifest.");
}
