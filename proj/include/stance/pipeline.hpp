#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stance/features.hpp"
#include "stance/ingest.hpp"
#include "stance/propagation.hpp"
#include "stance/sigma_heuristic.hpp"

namespace stance {

// Everything needed to classify one rumour, shared by the CLI, the
// experiment harness and the annotation service so that all three produce
// identical numbers for identical inputs.
struct ClassifierConfig {
  FeatureSpace space = FeatureSpace::brown;
  KernelKind kernel = KernelKind::rbf;
  double sigma = kDefaultSigma;
  int k = 10;
  // Derive sigma from the seeds with the MST heuristic (rbf only).
  bool heuristic_sigma = false;
  PropagationConfig propagation;

  void validate() const;
};

// A rumour reduced to the rows that enter the graph.
struct PreparedRumour {
  const Rumour* rumour = nullptr;
  ClassificationPlan plan;
  FeaturizedRumour features;  // row r <-> message plan.participants[r]
  // message index -> graph row, -1 when the message is not a participant
  std::vector<Index> row_of_message;
};

PreparedRumour prepare_rumour(const Rumour& rumour, FeatureSpace space,
                              const FeatureResources& resources);

// Affinity graphs of one rumour keyed by (kernel, parameter). Not
// thread-safe; owners serialize access.
class AffinityCache {
 public:
  std::shared_ptr<const AffinityMatrix> get(const FeatureMatrix& x,
                                            KernelKind kind, double parameter);
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::pair<int, double>, std::shared_ptr<const AffinityMatrix>> entries_;
};

struct RumourPrediction {
  // Per message of the rumour (excluded messages have no stance).
  std::vector<std::optional<Stance>> stance;
  LabelMatrix probs;
  std::vector<bool> seed;
  std::vector<bool> inherited;
  std::vector<bool> isolated;
  std::vector<bool> unresolvable;

  int iterations = 0;
  bool converged = false;
  double sigma_used = 0.0;
  std::optional<std::string> warning;
  bool single_class_seeds = false;
};

// Seeds are (message index, stance) pairs; seeds must be participants.
RumourPrediction classify_prepared(
    const PreparedRumour& prepared,
    const std::vector<std::pair<std::size_t, Stance>>& seeds,
    const ClassifierConfig& cfg, AffinityCache* cache = nullptr);

// One object per message: id, stance, probs, seed, inherited, isolated,
// unresolvable. Excluded messages carry null stance and probs. Shared by
// `stance classify` and the annotation service.
nlohmann::ordered_json prediction_json(const Rumour& rumour,
                                       const RumourPrediction& prediction);

}  // namespace stance
