#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stance/evaluation.hpp"
#include "stance/pipeline.hpp"

namespace py = pybind11;
using namespace stance;

namespace {

Stance to_stance(long long v) {
  auto s = stance_from_int(v);
  if (!s) throw ParameterError("stance must be -1, 0 or 1, got " + std::to_string(v));
  return *s;
}

std::vector<Stance> to_stances(const std::vector<long long>& values) {
  std::vector<Stance> out;
  out.reserve(values.size());
  for (long long v : values) out.push_back(to_stance(v));
  return out;
}

std::vector<int> to_ints(const std::vector<Stance>& values) {
  std::vector<int> out;
  out.reserve(values.size());
  for (Stance s : values) out.push_back(value_of(s));
  return out;
}

py::dict metrics_dict(const MetricSet& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["weighted_accuracy"] = m.weighted_accuracy;
  d["f1_macro"] = m.f1_macro;
  d["log_loss"] = m.log_loss;
  return d;
}

py::dict propagate(const DenseMatrix& w, const std::vector<std::pair<Index, long long>>& seeds,
                   const std::string& algorithm, double alpha, double tol, int max_iter) {
  std::vector<std::pair<Index, Stance>> s;
  for (auto [row, v] : seeds) s.emplace_back(row, to_stance(v));
  const auto affinity = AffinityMatrix::from_weights(GraphMatrix(w), KernelKind::rbf, 0.0);
  PropagationResult res;
  {
    py::gil_scoped_release release;
    res = run_propagation(affinity, LabelDistribution::from_seeds(w.rows(), s),
                          {parse_algorithm(algorithm), alpha, tol, max_iter});
  }
  const ClassAssignment assigned = assign_classes(res.distribution);
  py::dict d;
  d["probs"] = DenseMatrix(res.distribution.probs);
  d["classes"] = to_ints(assigned.classes);
  d["iterations"] = res.iterations;
  d["converged"] = res.converged;
  d["isolated"] = res.isolated;
  d["unresolvable"] = assigned.unresolvable;
  return d;
}

struct Loaded {
  std::vector<Rumour> rumours;
  BrownClusterMap clusters;
  Lexicons lexicons;
  FeatureResources view;
};

std::unique_ptr<Loaded> load(const std::filesystem::path& data,
                             const std::optional<std::filesystem::path>& clusters,
                             const std::optional<std::filesystem::path>& lexicons,
                             bool stem_and_drop_stop_words) {
  auto l = std::make_unique<Loaded>();
  l->rumours = load_jsonl(data);
  if (clusters) {
    l->clusters = BrownClusterMap::load(*clusters);
    l->view.clusters = &l->clusters;
  }
  if (lexicons) {
    l->lexicons = Lexicons::load_directory(*lexicons);
    l->view.lexicons = &l->lexicons;
  }
  l->view.stem_and_drop_stop_words = stem_and_drop_stop_words;
  return l;
}

std::string classify(const std::filesystem::path& data,
                     const std::map<std::string, long long>& seeds,
                     const std::optional<std::string>& rumour_id,
                     const std::optional<std::filesystem::path>& clusters,
                     const std::optional<std::filesystem::path>& lexicons,
                     const std::string& feature_space, const std::string& kernel, double sigma,
                     int k, bool heuristic, const std::string& algorithm, double alpha,
                     double tol, int max_iter, bool stem_and_drop_stop_words) {
  ClassifierConfig cfg;
  cfg.space = parse_feature_space(feature_space);
  cfg.kernel = parse_kernel(kernel);
  cfg.sigma = sigma;
  cfg.k = k;
  cfg.heuristic_sigma = heuristic;
  cfg.propagation = {parse_algorithm(algorithm), alpha, tol, max_iter};
  cfg.validate();
  const auto l = load(data, clusters, lexicons, stem_and_drop_stop_words);
  const Rumour* rumour = nullptr;
  for (const auto& r : l->rumours) {
    if (!rumour_id || r.rumour_id == *rumour_id) {
      rumour = &r;
      break;
    }
  }
  if (!rumour) throw DataError(rumour_id ? "rumour not found: " + *rumour_id : "no rumours");
  std::vector<std::pair<std::size_t, Stance>> s;
  for (std::size_t i = 0; i < rumour->messages.size(); ++i) {
    auto it = seeds.find(rumour->messages[i].id);
    if (it != seeds.end()) s.emplace_back(i, to_stance(it->second));
  }
  if (s.size() != seeds.size()) throw SeedingError("some seed ids are not in the rumour");
  py::gil_scoped_release release;
  const PreparedRumour p = prepare_rumour(*rumour, cfg.space, l->view);
  return prediction_json(*rumour, classify_prepared(p, s, cfg)).dump();
}

std::string experiment(const std::filesystem::path& data,
                       const std::optional<std::filesystem::path>& clusters,
                       const std::optional<std::filesystem::path>& lexicons,
                       const std::vector<int>& n_values, const std::vector<double>& sigma_grid,
                       const std::vector<int>& k_grid, const std::string& feature_space,
                       const std::string& algorithm, const std::string& kernel,
                       const std::string& sigma_mode, double sigma, int k, double alpha,
                       std::size_t min_rumour_size, int jobs) {
  ExperimentConfig cfg;
  cfg.n_values = n_values;
  cfg.sigma_grid = sigma_grid;
  cfg.k_grid = k_grid;
  cfg.feature_space = parse_feature_space(feature_space);
  cfg.algorithm = parse_algorithm(algorithm);
  cfg.kernel = parse_kernel(kernel);
  cfg.sigma_mode = parse_sigma_mode(sigma_mode);
  cfg.sigma = sigma;
  cfg.k = k;
  cfg.alpha = alpha;
  cfg.min_rumour_size = min_rumour_size;
  cfg.jobs = jobs;
  cfg.validate();
  const auto l = load(data, clusters, lexicons, false);
  py::gil_scoped_release release;
  FilterResult f = filter_rumours(std::move(l->rumours), cfg.min_rumour_size);
  return report_json(run_experiment(f.rumours, cfg, l->view));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  m.def(
      "preprocess",
      [](const std::string& text, bool stem) {
        PreprocessOptions opt;
        opt.stem = stem;
        return preprocess(text, opt).tokens;
      },
      py::arg("text"), py::arg("stem") = false);
  m.def("porter_stem", &porter_stem, py::arg("word"));

  m.def(
      "rbf_affinity",
      [](const DenseMatrix& x, double sigma) {
        return build_rbf_affinity(FeatureMatrix::from_dense(x), sigma).weights().to_dense();
      },
      py::arg("x"), py::arg("sigma"));
  m.def(
      "knn_affinity",
      [](const DenseMatrix& x, int k) {
        return build_knn_affinity(FeatureMatrix::from_dense(x), k).weights().to_dense();
      },
      py::arg("x"), py::arg("k"));
  m.def("propagate", &propagate, py::arg("weights"), py::arg("seeds"),
        py::arg("algorithm") = "ls", py::arg("alpha") = 1.0, py::arg("tol") = 1e-3,
        py::arg("max_iter") = 1000);

  m.def(
      "heuristic_sigma",
      [](const DenseMatrix& x, const std::vector<long long>& classes) {
        const SigmaEstimate e =
            heuristic_sigma({FeatureMatrix::from_dense(x), to_stances(classes)});
        py::dict d;
        d["sigma"] = e.sigma;
        d["boundary_distance"] = e.boundary_distance;
        d["fallback"] = e.fallback;
        return d;
      },
      py::arg("x"), py::arg("classes"));

  m.def(
      "compute_metrics",
      [](const std::vector<long long>& truth, const std::vector<long long>& pred,
         const DenseMatrix& probs) {
        if (probs.cols() != kNumClasses) throw ParameterError("probs must have 3 columns");
        return metrics_dict(compute_metrics(to_stances(truth), to_stances(pred), probs));
      },
      py::arg("truth"), py::arg("pred"), py::arg("probs"));
  m.def(
      "benchmark_scores",
      [](const std::vector<long long>& truth, const std::string& kind) {
        BenchmarkKind k;
        if (kind == "random") {
          k = BenchmarkKind::random;
        } else if (kind == "weighted_random") {
          k = BenchmarkKind::weighted_random;
        } else if (kind == "majority") {
          k = BenchmarkKind::majority;
        } else {
          throw ParameterError("unknown benchmark " + kind);
        }
        return metrics_dict(benchmark_scores(to_stances(truth), k));
      },
      py::arg("truth"), py::arg("kind"));

  m.def("_classify", &classify, py::arg("data"), py::arg("seeds"), py::arg("rumour_id"),
        py::arg("clusters"), py::arg("lexicons"), py::arg("feature_space"), py::arg("kernel"),
        py::arg("sigma"), py::arg("k"), py::arg("heuristic_sigma"), py::arg("algorithm"),
        py::arg("alpha"), py::arg("tol"), py::arg("max_iter"),
        py::arg("stem_and_drop_stop_words"));
  m.def("_experiment", &experiment, py::arg("data"), py::arg("clusters"), py::arg("lexicons"),
        py::arg("n_values"), py::arg("sigma_grid"), py::arg("k_grid"), py::arg("feature_space"),
        py::arg("algorithm"), py::arg("kernel"), py::arg("sigma_mode"), py::arg("sigma"),
        py::arg("k"), py::arg("alpha"), py::arg("min_rumour_size"), py::arg("jobs"));
  m.attr("DEFAULT_SIGMA_GRID") = default_sigma_grid();
  m.attr("DEFAULT_K_GRID") = default_k_grid();
  m.attr("RESOURCE_DIR") = STANCE_RESOURCE_DIR;
}
