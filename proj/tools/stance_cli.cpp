// stance: batch entry point (ingest, featurize, classify, experiment, serve).

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stance/evaluation.hpp"
#include "stance/ingest.hpp"
#include "stance/pipeline.hpp"
#include "stance/service.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace stance;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Options {
  fs::path out = "out";
  fs::path data;
  fs::path clusters;
  fs::path lexicons = fs::path(STANCE_RESOURCE_DIR) / "lexicons";

  // ExperimentConfig / classifier fields
  std::string feature_space = "brown";
  std::string algorithm = "ls";
  std::string kernel = "rbf";
  std::string sigma_mode;  // default depends on the subcommand
  double sigma = kDefaultSigma;
  int k = 10;
  double alpha = 1.0;
  double tol = 1e-3;
  int max_iter = 1000;
  std::vector<int> n_values{10, 20, 30, 40, 50};
  std::vector<double> sigma_grid = default_sigma_grid();
  std::vector<int> k_grid = default_k_grid();
  std::size_t min_rumour_size = 50;
  bool stem_and_drop_stop_words = false;
  int jobs = 1;

  // ingest
  fs::path pheme;
  fs::path jsonl_in;
  bool no_filter = false;
  std::string thread_language = "en";

  // featurize / classify
  std::string rumour;
  fs::path seeds;

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path state_dir;
};

struct Resources {
  BrownClusterMap clusters;
  Lexicons lexicons;
  FeatureResources view;
};

// Rumour ids may contain path separators.
std::string file_stem(const std::string& id) {
  std::string out = id;
  for (char& c : out)
    if (c == '/' || c == '\\') c = '_';
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

// Throws when a resource needed by the feature space is not present.
std::unique_ptr<Resources> load_resources(const Options& o, FeatureSpace space) {
  auto r = std::make_unique<Resources>();
  const bool brown = space == FeatureSpace::brown || space == FeatureSpace::brown_ling;
  const bool ling = space == FeatureSpace::ling || space == FeatureSpace::brown_ling;
  if (brown) {
    if (o.clusters.empty())
      throw ParameterError("--clusters (or STANCE_BROWN_CLUSTERS) is required for the " +
                           std::string(to_string(space)) + " feature space");
    if (!fs::is_regular_file(o.clusters))
      throw DataError("Brown cluster file not found: " + o.clusters.string());
    r->clusters = BrownClusterMap::load(o.clusters);
    r->view.clusters = &r->clusters;
  }
  if (ling || o.stem_and_drop_stop_words) {
    if (!fs::is_directory(o.lexicons))
      throw DataError("lexicon directory not found: " + o.lexicons.string());
    r->lexicons = Lexicons::load_directory(o.lexicons);
    r->view.lexicons = &r->lexicons;
  }
  r->view.stem_and_drop_stop_words = o.stem_and_drop_stop_words;
  return r;
}

std::vector<Rumour> load_data(const Options& o) {
  if (o.data.empty()) throw ParameterError("--data (or STANCE_DATA) is required");
  if (!fs::is_regular_file(o.data)) throw DataError("data file not found: " + o.data.string());
  return load_jsonl(o.data);
}

ClassifierConfig classifier_config(const Options& o) {
  ClassifierConfig c;
  c.space = parse_feature_space(o.feature_space);
  c.kernel = parse_kernel(o.kernel);
  c.sigma = o.sigma;
  c.k = o.k;
  const SigmaMode mode = parse_sigma_mode(o.sigma_mode.empty() ? "fixed" : o.sigma_mode);
  if (mode == SigmaMode::grid)
    throw ParameterError("--sigma-mode grid is only available for the experiment subcommand");
  c.heuristic_sigma = mode == SigmaMode::heuristic;
  c.propagation = {parse_algorithm(o.algorithm), o.alpha, o.tol, o.max_iter};
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o) {
  if (o.pheme.empty() == o.jsonl_in.empty())
    throw ParameterError("give exactly one of --pheme or --jsonl");
  std::vector<Rumour> rumours;
  ordered_json summary;
  if (!o.pheme.empty()) {
    if (!fs::is_directory(o.pheme)) throw DataError("not a directory: " + o.pheme.string());
    PhemeDataset ds = load_pheme(o.pheme, {o.thread_language});
    for (const auto& w : ds.summary.warnings) std::cerr << "warning: " << w << "\n";
    summary["threads"] = ds.summary.threads;
    summary["tweets"] = ds.summary.tweets;
    summary["rumours"] = ds.summary.rumours;
    summary["stories"] = ds.summary.stories;
    summary["skipped_threads"] = ds.summary.skipped_threads;
    summary["warnings"] = ds.summary.warnings.size();
    rumours = std::move(ds.rumours);
  } else {
    if (!fs::is_regular_file(o.jsonl_in)) throw DataError("file not found: " + o.jsonl_in.string());
    rumours = load_jsonl(o.jsonl_in);
    std::size_t messages = 0;
    for (const auto& r : rumours) messages += r.messages.size();
    summary["rumours"] = rumours.size();
    summary["messages"] = messages;
  }

  if (!o.no_filter) {
    FilterResult f = filter_rumours(std::move(rumours), o.min_rumour_size);
    ordered_json fj;
    fj["min_original_english"] = o.min_rumour_size;
    fj["rumours_in"] = f.summary.rumours_in;
    fj["rumours_kept"] = f.summary.rumours_kept;
    fj["messages_in"] = f.summary.messages_in;
    fj["dropped_small_rumour"] = f.summary.dropped_small_rumour;
    fj["dropped_non_english"] = f.summary.dropped_non_english;
    fj["retweets_inheriting"] = f.summary.retweets_inheriting;
    fj["participating"] = f.summary.participating;
    fj["original_english"] = f.summary.original_english;
    summary["filter"] = fj;
    rumours = std::move(f.rumours);
  }

  fs::create_directories(o.out);
  write_jsonl(o.out / "rumours.jsonl", rumours);
  write_file(o.out / "ingest_summary.json", summary.dump(2) + "\n");
  std::cerr << "wrote " << rumours.size() << " rumours to " << (o.out / "rumours.jsonl").string()
            << "\n";
  return 0;
}

int cmd_featurize(const Options& o) {
  const FeatureSpace space = parse_feature_space(o.feature_space);
  const auto res = load_resources(o, space);
  const std::vector<Rumour> rumours = load_data(o);
  std::size_t written = 0;
  for (const auto& r : rumours) {
    if (!o.rumour.empty() && r.rumour_id != o.rumour) continue;
    const PreparedRumour p = prepare_rumour(r, space, res->view);
    const FeatureMatrix& x = p.features.matrix;
    ordered_json j;
    j["rumour_id"] = r.rumour_id;
    j["feature_space"] = to_string(space);
    j["rows"] = x.rows();
    j["cols"] = x.cols();
    j["message_ids"] = ordered_json::array();
    for (std::size_t m : p.plan.participants) j["message_ids"].push_back(r.messages[m].id);
    j["featureless"] = ordered_json::array();
    for (bool b : p.features.featureless) j["featureless"].push_back(b);
    if (!x.vocabulary().empty()) j["vocabulary"] = x.vocabulary();
    ordered_json entries = ordered_json::array();
    const SparseMatrix& v = x.values();
    for (Index row = 0; row < v.outerSize(); ++row) {
      for (SparseMatrix::InnerIterator it(v, row); it; ++it)
        entries.push_back({it.row(), it.col(), it.value()});
    }
    j["entries"] = std::move(entries);
    write_file(o.out / "features" / (file_stem(r.rumour_id) + ".json"), j.dump() + "\n");
    ++written;
  }
  if (!o.rumour.empty() && written == 0) throw DataError("rumour not found: " + o.rumour);
  std::cerr << "wrote features for " << written << " rumours\n";
  return 0;
}

struct SeedEntry {
  std::string rumour_id;
  std::string id;
  Stance stance;
};

std::vector<SeedEntry> load_seeds(const fs::path& path) {
  if (path.empty()) throw SeedingError("--seeds is required");
  std::ifstream in(path);
  if (!in) throw DataError("seed file not found: " + path.string());
  std::vector<SeedEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("stance"))
      throw DataError(where + ": seed lines need 'id' and 'stance'");
    SeedEntry s;
    s.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    if (j.contains("rumour_id") && j["rumour_id"].is_string())
      s.rumour_id = j["rumour_id"].get<std::string>();
    std::optional<Stance> st;
    if (j["stance"].is_number_integer()) st = stance_from_int(j["stance"].get<long long>());
    if (j["stance"].is_string()) st = parse_stance(j["stance"].get<std::string>());
    if (!st) throw DataError(where + ": stance must be -1, 0, 1 or a class name");
    s.stance = *st;
    out.push_back(std::move(s));
  }
  return out;
}

int cmd_classify(const Options& o) {
  const ClassifierConfig cfg = classifier_config(o);
  const auto res = load_resources(o, cfg.space);
  const std::vector<Rumour> rumours = load_data(o);
  if (rumours.empty()) throw DataError("no rumours in " + o.data.string());
  const std::vector<SeedEntry> seeds = load_seeds(o.seeds);
  if (seeds.empty()) throw SeedingError("seed file has no annotations");

  ordered_json out = ordered_json::array();
  std::size_t classified = 0;
  for (const auto& r : rumours) {
    if (!o.rumour.empty() && r.rumour_id != o.rumour) continue;
    std::map<std::size_t, Stance> chosen;  // message index -> stance, last wins
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < r.messages.size(); ++i) index.emplace(r.messages[i].id, i);
    for (const auto& s : seeds) {
      if (!s.rumour_id.empty() && s.rumour_id != r.rumour_id) continue;
      auto it = index.find(s.id);
      if (it == index.end()) {
        if (!s.rumour_id.empty())
          throw SeedingError("seed message " + s.id + " not found in rumour " + r.rumour_id);
        continue;
      }
      chosen[it->second] = s.stance;
    }
    if (chosen.empty()) {
      if (!o.rumour.empty() || rumours.size() == 1)
        throw SeedingError("no seeds for rumour " + r.rumour_id);
      continue;
    }
    const std::vector<std::pair<std::size_t, Stance>> seed_list(chosen.begin(), chosen.end());
    const PreparedRumour p = prepare_rumour(r, cfg.space, res->view);
    const RumourPrediction pred = classify_prepared(p, seed_list, cfg);
    if (pred.warning) std::cerr << "warning: rumour " << r.rumour_id << ": " << *pred.warning << "\n";
    if (!pred.converged)
      std::cerr << "warning: rumour " << r.rumour_id << ": no convergence after "
                << pred.iterations << " iterations\n";
    ordered_json j;
    j["rumour_id"] = r.rumour_id;
    j["seeds"] = seed_list.size();
    if (cfg.kernel == KernelKind::rbf) j["sigma_used"] = pred.sigma_used;
    j["iterations"] = pred.iterations;
    j["converged"] = pred.converged;
    j["warning"] = pred.warning ? ordered_json(*pred.warning) : ordered_json(nullptr);
    j["predictions"] = prediction_json(r, pred);
    out.push_back(std::move(j));
    ++classified;
  }
  if (classified == 0) throw SeedingError("no rumour had seed annotations");
  write_file(o.out / "predictions.json", out.dump(2) + "\n");
  std::cerr << "classified " << classified << " rumours\n";
  return 0;
}

int cmd_experiment(const Options& o) {
  ExperimentConfig cfg;
  cfg.n_values = o.n_values;
  cfg.sigma_grid = o.sigma_grid;
  cfg.k_grid = o.k_grid;
  cfg.feature_space = parse_feature_space(o.feature_space);
  cfg.algorithm = parse_algorithm(o.algorithm);
  cfg.kernel = parse_kernel(o.kernel);
  cfg.alpha = o.alpha;
  cfg.tol = o.tol;
  cfg.max_iter = o.max_iter;
  cfg.sigma_mode = parse_sigma_mode(o.sigma_mode.empty() ? "grid" : o.sigma_mode);
  cfg.sigma = o.sigma;
  cfg.k = o.k;
  cfg.min_rumour_size = o.min_rumour_size;
  cfg.stem_and_drop_stop_words = o.stem_and_drop_stop_words;
  cfg.jobs = o.jobs;
  cfg.validate();

  const auto res = load_resources(o, cfg.feature_space);
  FilterResult f = filter_rumours(load_data(o), cfg.min_rumour_size);
  if (f.rumours.empty())
    throw DataError("no rumour has at least " + std::to_string(cfg.min_rumour_size) +
                    " original English messages");
  std::cerr << "running " << f.rumours.size() << " rumours with " << cfg.parameters().size()
            << " parameter values and " << cfg.n_values.size() << " values of N\n";
  const ExperimentReport report = run_experiment(f.rumours, cfg, res->view);
  write_report(report, o.out);
  for (const auto& [n, p] : report.optimal_param)
    std::cerr << "N=" << n << ": best parameter " << p << "\n";
  return 0;
}

HttpFrontend* g_frontend = nullptr;

void handle_signal(int) {
  if (g_frontend) g_frontend->stop();
}

int cmd_serve(const Options& o) {
  const ClassifierConfig cfg = classifier_config(o);
  const auto res = load_resources(o, cfg.space);
  ServiceConfig sc;
  sc.classifier = cfg;
  sc.state_dir = o.state_dir.empty() ? o.out / "state" : o.state_dir;
  AnnotationService service(load_data(o), res->view, sc);
  HttpFrontend frontend(service);
  const int port = frontend.bind(o.host, o.port);
  if (port < 0) throw DataError("cannot bind " + o.host + ":" + std::to_string(o.port));
  g_frontend = &frontend;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << "serving " << service.rumour_count() << " rumours on http://" << o.host << ":"
            << port << "\n";
  frontend.listen_after_bind();
  g_frontend = nullptr;
  return 0;
}

void add_model_options(CLI::App& app, Options& o) {
  app.add_option("--feature-space", o.feature_space, "brown, ling, ngrams or brown_ling")
      ->capture_default_str();
  app.add_option("--algorithm", o.algorithm, "lp or ls")->capture_default_str();
  app.add_option("--kernel", o.kernel, "rbf or knn")->capture_default_str();
  app.add_option("--sigma-mode", o.sigma_mode,
                 "fixed, grid (experiment only) or heuristic");
  app.add_option("--sigma", o.sigma, "RBF width for fixed mode")->capture_default_str();
  app.add_option("--k", o.k, "neighbours for the knn kernel")->capture_default_str();
  app.add_option("--alpha", o.alpha, "clamping factor in [0, 1]")->capture_default_str();
  app.add_option("--tol", o.tol, "convergence tolerance")->capture_default_str();
  app.add_option("--max-iter", o.max_iter, "iteration cap")->capture_default_str();
  app.add_option("--clusters", o.clusters, "Brown cluster file")
      ->envname("STANCE_BROWN_CLUSTERS");
  app.add_option("--lexicons", o.lexicons, "lexicon directory")->capture_default_str();
  app.add_flag("--stem-and-drop-stop-words", o.stem_and_drop_stop_words,
               "Porter-stem tokens and drop stop words before featurizing");
  app.add_option("--data", o.data, "canonical rumour JSONL")->envname("STANCE_DATA");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Graph-based semi-supervised stance classification for rumours"};
  app.set_config("--config", "", "key=value configuration file; flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--jobs", o.jobs, "worker threads")->capture_default_str();
  add_model_options(app, o);

  auto* ingest = app.add_subcommand("ingest", "convert PHEME or JSONL input to canonical JSONL");
  ingest->add_option("--pheme", o.pheme, "PHEME dataset root");
  ingest->add_option("--jsonl", o.jsonl_in, "rumour JSONL to re-filter");
  ingest->add_option("--min-rumour-size", o.min_rumour_size,
                     "minimum original English messages per rumour")
      ->capture_default_str();
  ingest->add_flag("--no-filter", o.no_filter, "keep every rumour and message");
  ingest->add_option("--thread-language", o.thread_language,
                     "language folder to read under threads/<lang>")
      ->capture_default_str();

  auto* featurize = app.add_subcommand("featurize", "write feature matrices as JSON");
  featurize->add_option("--rumour", o.rumour, "only this rumour id");

  auto* classify = app.add_subcommand("classify", "propagate seed annotations");
  classify->add_option("--seeds", o.seeds, "JSONL of {rumour_id?, id, stance}");
  classify->add_option("--rumour", o.rumour, "only this rumour id");

  auto* experiment = app.add_subcommand("experiment", "run the annotate-first-N protocol");
  experiment->add_option("--n-values", o.n_values, "numbers of seed messages")
      ->delimiter(',')
      ->capture_default_str();
  experiment->add_option("--sigma-grid", o.sigma_grid, "RBF widths for grid mode")
      ->delimiter(',');
  experiment->add_option("--k-grid", o.k_grid, "neighbour counts for grid mode")
      ->delimiter(',');
  experiment->add_option("--min-rumour-size", o.min_rumour_size,
                         "minimum original English messages per rumour")
      ->capture_default_str();

  auto* serve = app.add_subcommand("serve", "run the annotation HTTP service");
  serve->add_option("--host", o.host, "listen address")->capture_default_str();
  serve->add_option("--port", o.port, "listen port")
      ->envname("STANCE_PORT")
      ->capture_default_str();
  serve->add_option("--state-dir", o.state_dir, "annotation logs (default <out>/state)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return kExitData;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*featurize) return cmd_featurize(o);
    if (*classify) return cmd_classify(o);
    if (*experiment) return cmd_experiment(o);
    if (*serve) return cmd_serve(o);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
