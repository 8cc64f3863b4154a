#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stance/features.hpp"
#include "stance/ingest.hpp"
#include "stance/pipeline.hpp"
#include "stance/propagation.hpp"

namespace stance {

struct MetricSet {
  double accuracy = 0.0;
  double weighted_accuracy = 0.0;  // balanced accuracy
  double f1_macro = 0.0;
  double log_loss = 0.0;
};

inline constexpr double kLogLossClip = 1e-15;

// weighted_accuracy: mean recall over classes present in `truth`.
// f1_macro: mean per-class F1 over classes present in `truth`.
// log_loss: -mean ln p(true class), p clipped to [1e-15, 1].
MetricSet compute_metrics(const std::vector<Stance>& truth,
                          const std::vector<Stance>& pred,
                          const LabelMatrix& probs);

enum class BenchmarkKind { random, weighted_random, majority };
std::string_view to_string(BenchmarkKind kind) noexcept;

// Expected scores of the benchmark classifiers, computed analytically from
// the class frequencies of `truth`. F1 is the F1 of the expected confusion
// matrix.
MetricSet benchmark_scores(const std::vector<Stance>& truth, BenchmarkKind kind);

enum class SigmaMode { fixed, grid, heuristic };
std::string_view to_string(SigmaMode mode) noexcept;
SigmaMode parse_sigma_mode(std::string_view name);

std::vector<double> default_sigma_grid();
std::vector<int> default_k_grid();

struct ExperimentConfig {
  std::vector<int> n_values{10, 20, 30, 40, 50};
  std::vector<double> sigma_grid = default_sigma_grid();
  std::vector<int> k_grid = default_k_grid();
  FeatureSpace feature_space = FeatureSpace::brown;
  Algorithm algorithm = Algorithm::label_spreading;
  KernelKind kernel = KernelKind::rbf;
  double alpha = 1.0;
  double tol = 1e-3;
  int max_iter = 1000;
  SigmaMode sigma_mode = SigmaMode::grid;
  double sigma = kDefaultSigma;  // sigma_mode == fixed
  int k = 10;                    // knn with sigma_mode == fixed
  std::size_t min_rumour_size = 50;
  bool stem_and_drop_stop_words = false;
  int jobs = 1;

  void validate() const;
  // Parameter values swept for this configuration ("heuristic" yields one
  // placeholder entry).
  std::vector<double> parameters() const;
};

struct CellResult {
  std::string rumour_id;
  std::string param;  // formatted parameter, or "heuristic"
  int n = 0;
  MetricSet metrics;
  std::size_t evaluated = 0;
  double sigma_used = 0.0;  // rbf only
  int iterations = 0;
  bool converged = true;
  bool single_class_seeds = false;
  bool skipped = false;
  std::string note;
};

struct BenchmarkResult {
  std::string rumour_id;
  int n = 0;
  BenchmarkKind kind = BenchmarkKind::random;
  MetricSet metrics;
};

struct AggregateResult {
  std::string param;
  int n = 0;
  std::size_t rumours = 0;
  MetricSet mean;
};

struct BenchmarkAggregate {
  BenchmarkKind kind = BenchmarkKind::random;
  int n = 0;
  std::size_t rumours = 0;
  MetricSet mean;
};

struct RumourTiming {
  std::string rumour_id;
  std::size_t messages = 0;
  double seconds = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  std::vector<BenchmarkResult> benchmarks;
  std::vector<AggregateResult> aggregates;
  std::vector<BenchmarkAggregate> benchmark_aggregates;
  std::map<int, std::string> optimal_param;  // N -> argmax weighted accuracy
  std::vector<RumourTiming> timings;

  const AggregateResult* aggregate(const std::string& param, int n) const;
  const BenchmarkAggregate* benchmark(BenchmarkKind kind, int n) const;
};

std::string format_param(double value);

ExperimentReport run_experiment(const std::vector<Rumour>& rumours,
                                const ExperimentConfig& cfg,
                                const FeatureResources& resources);

// Deterministic serializations: identical reports give identical bytes.
// Timings are kept out of these and written by write_timings.
std::string report_json(const ExperimentReport& report);
std::string report_csv(const ExperimentReport& report);
std::string timings_json(const ExperimentReport& report);

void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace stance
