#include "stance/evaluation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

namespace stance {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Metrics

MetricSet compute_metrics(const std::vector<Stance>& truth,
                          const std::vector<Stance>& pred,
                          const LabelMatrix& probs) {
  const std::size_t n = truth.size();
  if (pred.size() != n || static_cast<std::size_t>(probs.rows()) != n)
    throw ParameterError("metric inputs differ in length (truth " +
                         std::to_string(n) + ", pred " + std::to_string(pred.size()) +
                         ", probs " + std::to_string(probs.rows()) + ")");
  if (n == 0) throw ParameterError("cannot score an empty evaluation set");

  std::array<std::size_t, kNumClasses> true_count{};
  std::array<std::size_t, kNumClasses> pred_count{};
  std::array<std::size_t, kNumClasses> hits{};
  std::size_t correct = 0;
  double nll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int t = column_of(truth[i]);
    const int p = column_of(pred[i]);
    ++true_count[t];
    ++pred_count[p];
    if (t == p) {
      ++hits[t];
      ++correct;
    }
    const double prob = std::clamp(probs(static_cast<Index>(i), t), kLogLossClip, 1.0);
    nll -= std::log(prob);
  }

  MetricSet m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  int present = 0;
  double recall_sum = 0.0;
  double f1_sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    if (true_count[c] == 0) continue;
    ++present;
    recall_sum += static_cast<double>(hits[c]) / static_cast<double>(true_count[c]);
    f1_sum += 2.0 * static_cast<double>(hits[c]) /
              static_cast<double>(true_count[c] + pred_count[c]);
  }
  m.weighted_accuracy = recall_sum / present;
  m.f1_macro = f1_sum / present;
  m.log_loss = nll / static_cast<double>(n);
  return m;
}

std::string_view to_string(BenchmarkKind kind) noexcept {
  switch (kind) {
    case BenchmarkKind::random: return "random";
    case BenchmarkKind::weighted_random: return "weighted_random";
    case BenchmarkKind::majority: return "majority";
  }
  return "random";
}

MetricSet benchmark_scores(const std::vector<Stance>& truth, BenchmarkKind kind) {
  if (truth.empty()) throw ParameterError("benchmark needs a non-empty truth vector");
  Eigen::RowVector3d p = Eigen::RowVector3d::Zero();
  for (Stance s : truth) p[column_of(s)] += 1.0;
  p /= static_cast<double>(truth.size());

  // Distribution of predicted classes.
  Eigen::RowVector3d q = Eigen::RowVector3d::Zero();
  switch (kind) {
    case BenchmarkKind::random:
      q.setConstant(1.0 / 3.0);
      break;
    case BenchmarkKind::weighted_random:
      q = p;
      break;
    case BenchmarkKind::majority:
      q[column_of(argmax_stance(p))] = 1.0;
      break;
  }

  MetricSet m;
  int present = 0;
  double recall_sum = 0.0;
  double f1_sum = 0.0;
  double nll = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    m.accuracy += p[c] * q[c];
    if (p[c] == 0.0) continue;
    ++present;
    recall_sum += q[c];
    f1_sum += 2.0 * p[c] * q[c] / (p[c] + q[c]);
    nll -= p[c] * std::log(std::clamp(q[c], kLogLossClip, 1.0));
  }
  m.weighted_accuracy = recall_sum / present;
  m.f1_macro = f1_sum / present;
  m.log_loss = nll;
  return m;
}

// ---------------------------------------------------------------------------
// Configuration

std::string_view to_string(SigmaMode mode) noexcept {
  switch (mode) {
    case SigmaMode::fixed: return "fixed";
    case SigmaMode::grid: return "grid";
    case SigmaMode::heuristic: return "heuristic";
  }
  return "grid";
}

SigmaMode parse_sigma_mode(std::string_view name) {
  if (name == "fixed") return SigmaMode::fixed;
  if (name == "grid") return SigmaMode::grid;
  if (name == "heuristic") return SigmaMode::heuristic;
  throw ParameterError("unknown sigma mode '" + std::string(name) +
                       "' (expected fixed, grid or heuristic)");
}

std::vector<double> default_sigma_grid() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.85, 1.0, 1.5, 2.0,
          3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0};
}

std::vector<int> default_k_grid() {
  std::vector<int> k;
  for (int v = 5; v <= 50; v += 5) k.push_back(v);
  return k;
}

void ExperimentConfig::validate() const {
  if (n_values.empty()) throw ParameterError("N values must not be empty");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 1) throw ParameterError("N values must be positive");
    if (i && n_values[i] <= n_values[i - 1])
      throw ParameterError("N values must be strictly ascending");
  }
  if (sigma_mode == SigmaMode::grid) {
    if (kernel == KernelKind::rbf && sigma_grid.empty())
      throw ParameterError("sigma grid must not be empty");
    if (kernel == KernelKind::knn && k_grid.empty())
      throw ParameterError("k grid must not be empty");
  }
  for (double s : sigma_grid) {
    if (!(s > 0.0) || !std::isfinite(s))
      throw ParameterError("sigma grid values must be positive");
  }
  for (int v : k_grid) {
    if (v < 1) throw ParameterError("k grid values must be positive");
  }
  if (kernel == KernelKind::knn && sigma_mode == SigmaMode::heuristic)
    throw ParameterError("the sigma heuristic only applies to the rbf kernel");
  if (jobs < 1) throw ParameterError("jobs must be at least 1");
  PropagationConfig{algorithm, alpha, tol, max_iter}.validate();
}

std::vector<double> ExperimentConfig::parameters() const {
  if (sigma_mode == SigmaMode::heuristic) return {std::nan("")};
  if (kernel == KernelKind::rbf) {
    if (sigma_mode == SigmaMode::fixed) return {sigma};
    return sigma_grid;
  }
  if (sigma_mode == SigmaMode::fixed) return {static_cast<double>(k)};
  return {k_grid.begin(), k_grid.end()};
}

std::string format_param(double value) {
  if (std::isnan(value)) return "heuristic";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

const AggregateResult* ExperimentReport::aggregate(const std::string& param,
                                                   int n) const {
  for (const auto& a : aggregates) {
    if (a.param == param && a.n == n) return &a;
  }
  return nullptr;
}

const BenchmarkAggregate* ExperimentReport::benchmark(BenchmarkKind kind, int n) const {
  for (const auto& b : benchmark_aggregates) {
    if (b.kind == kind && b.n == n) return &b;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Protocol

namespace {

struct RumourOutcome {
  std::vector<CellResult> cells;
  std::vector<BenchmarkResult> benchmarks;
  RumourTiming timing;
};

RumourOutcome evaluate_rumour(const Rumour& rumour, const ExperimentConfig& cfg,
                              const FeatureResources& resources) {
  const auto start = std::chrono::steady_clock::now();
  RumourOutcome out;
  const PreparedRumour prepared = prepare_rumour(rumour, cfg.feature_space, resources);

  std::vector<std::size_t> gold;  // chronological participants with gold labels
  for (std::size_t idx : prepared.plan.participants) {
    if (rumour.messages[idx].gold_stance) gold.push_back(idx);
  }

  AffinityCache cache;
  ClassifierConfig cc;
  cc.space = cfg.feature_space;
  cc.kernel = cfg.kernel;
  cc.heuristic_sigma = cfg.sigma_mode == SigmaMode::heuristic;
  cc.propagation = {cfg.algorithm, cfg.alpha, cfg.tol, cfg.max_iter};
  const Index rows = prepared.features.matrix.rows();

  for (double param : cfg.parameters()) {
    if (cfg.kernel == KernelKind::rbf) {
      cc.sigma = cc.heuristic_sigma ? kDefaultSigma : param;
    } else {
      cc.k = static_cast<int>(param);
    }
    for (int n : cfg.n_values) {
      CellResult cell;
      cell.rumour_id = rumour.rumour_id;
      cell.param = format_param(param);
      cell.n = n;
      if (gold.size() <= static_cast<std::size_t>(n)) {
        cell.skipped = true;
        cell.note = "fewer than N+1 annotated messages";
        out.cells.push_back(std::move(cell));
        continue;
      }
      if (cfg.kernel == KernelKind::knn && cc.k >= rows) {
        cell.skipped = true;
        cell.note = "k is not smaller than the number of messages";
        out.cells.push_back(std::move(cell));
        continue;
      }
      std::vector<std::pair<std::size_t, Stance>> seeds;
      for (int i = 0; i < n; ++i) seeds.emplace_back(gold[i], *rumour.messages[gold[i]].gold_stance);
      const RumourPrediction pred = classify_prepared(prepared, seeds, cc, &cache);

      std::vector<Stance> truth;
      std::vector<Stance> guess;
      LabelMatrix probs(static_cast<Index>(gold.size() - n), kNumClasses);
      for (std::size_t i = n; i < gold.size(); ++i) {
        const std::size_t m = gold[i];
        truth.push_back(*rumour.messages[m].gold_stance);
        guess.push_back(*pred.stance[m]);
        probs.row(static_cast<Index>(i - n)) = pred.probs.row(static_cast<Index>(m));
      }
      cell.metrics = compute_metrics(truth, guess, probs);
      cell.evaluated = truth.size();
      cell.sigma_used = pred.sigma_used;
      cell.iterations = pred.iterations;
      cell.converged = pred.converged;
      cell.single_class_seeds = pred.single_class_seeds;
      if (pred.warning) cell.note = *pred.warning;
      out.cells.push_back(std::move(cell));
    }
  }

  for (int n : cfg.n_values) {
    if (gold.size() <= static_cast<std::size_t>(n)) continue;
    std::vector<Stance> truth;
    for (std::size_t i = n; i < gold.size(); ++i)
      truth.push_back(*rumour.messages[gold[i]].gold_stance);
    for (BenchmarkKind kind : {BenchmarkKind::random, BenchmarkKind::weighted_random,
                               BenchmarkKind::majority}) {
      out.benchmarks.push_back({rumour.rumour_id, n, kind, benchmark_scores(truth, kind)});
    }
  }

  out.timing.rumour_id = rumour.rumour_id;
  out.timing.messages = prepared.plan.participants.size();
  out.timing.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

MetricSet& accumulate(MetricSet& acc, const MetricSet& m) {
  acc.accuracy += m.accuracy;
  acc.weighted_accuracy += m.weighted_accuracy;
  acc.f1_macro += m.f1_macro;
  acc.log_loss += m.log_loss;
  return acc;
}

MetricSet divided(MetricSet m, std::size_t count) {
  const double c = static_cast<double>(count);
  return {m.accuracy / c, m.weighted_accuracy / c, m.f1_macro / c, m.log_loss / c};
}

}  // namespace

ExperimentReport run_experiment(const std::vector<Rumour>& rumours,
                                const ExperimentConfig& cfg,
                                const FeatureResources& resources) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;

  std::vector<RumourOutcome> outcomes(rumours.size());
  std::vector<std::exception_ptr> errors(rumours.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= rumours.size()) return;
      try {
        outcomes[i] = evaluate_rumour(rumours[i], cfg, resources);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      const std::size_t finished = ++done;
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "[" << finished << "/" << rumours.size() << "] rumour "
                << rumours[i].rumour_id << " (" << outcomes[i].timing.messages
                << " messages, " << outcomes[i].timing.seconds << " s)\n";
    }
  };
  const int threads =
      std::max(1, std::min<int>(cfg.jobs, static_cast<int>(rumours.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& o : outcomes) {
    report.timings.push_back(o.timing);
    for (auto& c : o.cells) report.cells.push_back(std::move(c));
    for (auto& b : o.benchmarks) report.benchmarks.push_back(std::move(b));
  }

  for (double param : cfg.parameters()) {
    const std::string label = format_param(param);
    for (int n : cfg.n_values) {
      AggregateResult agg{label, n, 0, {}};
      for (const auto& c : report.cells) {
        if (c.skipped || c.param != label || c.n != n) continue;
        accumulate(agg.mean, c.metrics);
        ++agg.rumours;
      }
      if (agg.rumours) agg.mean = divided(agg.mean, agg.rumours);
      report.aggregates.push_back(agg);
    }
  }
  for (int n : cfg.n_values) {
    for (BenchmarkKind kind : {BenchmarkKind::random, BenchmarkKind::weighted_random,
                               BenchmarkKind::majority}) {
      BenchmarkAggregate agg{kind, n, 0, {}};
      for (const auto& b : report.benchmarks) {
        if (b.kind != kind || b.n != n) continue;
        accumulate(agg.mean, b.metrics);
        ++agg.rumours;
      }
      if (agg.rumours) agg.mean = divided(agg.mean, agg.rumours);
      report.benchmark_aggregates.push_back(agg);
    }
    const AggregateResult* best = nullptr;
    for (const auto& a : report.aggregates) {
      if (a.n != n || a.rumours == 0) continue;
      if (!best || a.mean.weighted_accuracy > best->mean.weighted_accuracy) best = &a;
    }
    if (best) report.optimal_param[n] = best->param;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json metrics_json(const MetricSet& m) {
  ordered_json j;
  j["accuracy"] = m.accuracy;
  j["weighted_accuracy"] = m.weighted_accuracy;
  j["f1_macro"] = m.f1_macro;
  j["log_loss"] = m.log_loss;
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string report_json(const ExperimentReport& report) {
  const ExperimentConfig& c = report.config;
  ordered_json j;
  ordered_json cfg;
  cfg["feature_space"] = to_string(c.feature_space);
  cfg["algorithm"] = to_string(c.algorithm);
  cfg["kernel"] = to_string(c.kernel);
  cfg["sigma_mode"] = to_string(c.sigma_mode);
  cfg["alpha"] = c.alpha;
  cfg["tol"] = c.tol;
  cfg["max_iter"] = c.max_iter;
  cfg["n_values"] = c.n_values;
  cfg["parameters"] = ordered_json::array();
  for (double p : c.parameters()) cfg["parameters"].push_back(format_param(p));
  cfg["min_rumour_size"] = c.min_rumour_size;
  cfg["stem_and_drop_stop_words"] = c.stem_and_drop_stop_words;
  j["config"] = cfg;

  j["aggregates"] = ordered_json::array();
  for (const auto& a : report.aggregates) {
    ordered_json e;
    e["param"] = a.param;
    e["N"] = a.n;
    e["rumours"] = a.rumours;
    e["mean"] = metrics_json(a.mean);
    j["aggregates"].push_back(e);
  }
  j["benchmark_aggregates"] = ordered_json::array();
  for (const auto& b : report.benchmark_aggregates) {
    ordered_json e;
    e["model"] = to_string(b.kind);
    e["N"] = b.n;
    e["rumours"] = b.rumours;
    e["mean"] = metrics_json(b.mean);
    j["benchmark_aggregates"].push_back(e);
  }
  ordered_json opt = ordered_json::object();
  for (const auto& [n, p] : report.optimal_param) opt[std::to_string(n)] = p;
  j["optimal_param"] = opt;

  j["cells"] = ordered_json::array();
  for (const auto& cell : report.cells) {
    ordered_json e;
    e["rumour"] = cell.rumour_id;
    e["param"] = cell.param;
    e["N"] = cell.n;
    e["skipped"] = cell.skipped;
    if (!cell.skipped) {
      e["metrics"] = metrics_json(cell.metrics);
      e["evaluated"] = cell.evaluated;
      if (c.kernel == KernelKind::rbf) e["sigma_used"] = cell.sigma_used;
      e["iterations"] = cell.iterations;
      e["converged"] = cell.converged;
      e["single_class_seeds"] = cell.single_class_seeds;
    }
    if (!cell.note.empty()) e["note"] = cell.note;
    j["cells"].push_back(e);
  }
  j["benchmarks"] = ordered_json::array();
  for (const auto& b : report.benchmarks) {
    ordered_json e;
    e["rumour"] = b.rumour_id;
    e["N"] = b.n;
    e["model"] = to_string(b.kind);
    e["metrics"] = metrics_json(b.metrics);
    j["benchmarks"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::string report_csv(const ExperimentReport& report) {
  const std::string space(to_string(report.config.feature_space));
  const std::string algo(to_string(report.config.algorithm));
  std::string out = "rumour,feature_space,algorithm,param,N,metric,value\n";
  auto emit = [&](const std::string& rumour, const std::string& algorithm,
                  const std::string& param, int n, const MetricSet& m) {
    const std::pair<const char*, double> rows[] = {
        {"accuracy", m.accuracy},
        {"weighted_accuracy", m.weighted_accuracy},
        {"f1_macro", m.f1_macro},
        {"log_loss", m.log_loss}};
    for (const auto& [name, value] : rows) {
      out += csv_field(rumour) + "," + space + "," + algorithm + "," + param + "," +
             std::to_string(n) + "," + name + "," + number(value) + "\n";
    }
  };
  for (const auto& c : report.cells) {
    if (!c.skipped) emit(c.rumour_id, algo, c.param, c.n, c.metrics);
  }
  for (const auto& b : report.benchmarks)
    emit(b.rumour_id, std::string(to_string(b.kind)), "", b.n, b.metrics);
  for (const auto& a : report.aggregates) {
    if (a.rumours) emit("__mean__", algo, a.param, a.n, a.mean);
  }
  for (const auto& b : report.benchmark_aggregates) {
    if (b.rumours) emit("__mean__", std::string(to_string(b.kind)), "", b.n, b.mean);
  }
  return out;
}

std::string timings_json(const ExperimentReport& report) {
  ordered_json j = ordered_json::array();
  for (const auto& t : report.timings) {
    ordered_json e;
    e["rumour"] = t.rumour_id;
    e["messages"] = t.messages;
    e["seconds"] = t.seconds;
    j.push_back(e);
  }
  return j.dump(2) + "\n";
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    out << content;
  };
  write("report.json", report_json(report));
  write("report.csv", report_csv(report));
  write("timings.json", timings_json(report));
}

}  // namespace stance
