#include "stance/pipeline.hpp"

#include <cmath>
#include <set>

namespace stance {

void ClassifierConfig::validate() const {
  propagation.validate();
  if (kernel == KernelKind::rbf && !heuristic_sigma &&
      !(sigma > 0.0 && std::isfinite(sigma)))
    throw ParameterError("sigma must be a positive finite number");
  if (kernel == KernelKind::knn && k < 1) throw ParameterError("k must be >= 1");
  if (kernel == KernelKind::knn && heuristic_sigma)
    throw ParameterError("the sigma heuristic only applies to the rbf kernel");
}

PreparedRumour prepare_rumour(const Rumour& rumour, FeatureSpace space,
                              const FeatureResources& resources) {
  PreparedRumour p;
  p.rumour = &rumour;
  p.plan = plan_classification(rumour);
  std::vector<std::string> texts;
  texts.reserve(p.plan.participants.size());
  for (std::size_t idx : p.plan.participants) texts.push_back(rumour.messages[idx].text);
  p.features = featurize(preprocess_all(texts, resources), space, resources);
  p.row_of_message.assign(rumour.messages.size(), -1);
  for (std::size_t r = 0; r < p.plan.participants.size(); ++r)
    p.row_of_message[p.plan.participants[r]] = static_cast<Index>(r);
  return p;
}

std::shared_ptr<const AffinityMatrix> AffinityCache::get(const FeatureMatrix& x,
                                                         KernelKind kind,
                                                         double parameter) {
  const auto key = std::make_pair(static_cast<int>(kind), parameter);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  auto w = std::make_shared<const AffinityMatrix>(
      kind == KernelKind::rbf ? build_rbf_affinity(x, parameter)
                              : build_knn_affinity(x, static_cast<int>(parameter)));
  entries_.emplace(key, w);
  return w;
}

RumourPrediction classify_prepared(
    const PreparedRumour& prepared,
    const std::vector<std::pair<std::size_t, Stance>>& seeds,
    const ClassifierConfig& cfg, AffinityCache* cache) {
  cfg.validate();
  const Rumour& rumour = *prepared.rumour;
  const std::size_t n_msgs = rumour.messages.size();
  const Index n_rows = prepared.features.matrix.rows();
  if (n_rows == 0) throw DataError("rumour " + rumour.rumour_id + " has no classifiable messages");
  if (seeds.empty()) throw SeedingError("no seed annotations for rumour " + rumour.rumour_id);

  std::vector<std::pair<Index, Stance>> row_seeds;
  std::set<Stance> seed_classes;
  for (const auto& [msg, stance] : seeds) {
    if (msg >= n_msgs) throw SeedingError("seed message index out of range");
    const Index row = prepared.row_of_message[msg];
    if (row < 0)
      throw SeedingError("message " + rumour.messages[msg].id +
                         " is not classified directly (retweet or non-English)");
    row_seeds.emplace_back(row, stance);
    seed_classes.insert(stance);
  }

  RumourPrediction out;
  out.single_class_seeds = seed_classes.size() == 1;
  if (out.single_class_seeds)
    out.warning = "all seeds are '" + std::string(to_string(*seed_classes.begin())) +
                  "'; every connected message will receive that class";

  const LabelDistribution seed_dist = LabelDistribution::from_seeds(n_rows, row_seeds);

  double param = cfg.kernel == KernelKind::rbf ? cfg.sigma : static_cast<double>(cfg.k);
  if (cfg.kernel == KernelKind::rbf && cfg.heuristic_sigma) {
    std::vector<Index> rows;
    std::vector<Stance> classes;
    for (Index i = 0; i < n_rows; ++i) {
      if (seed_dist.labeled[static_cast<std::size_t>(i)]) {
        rows.push_back(i);
        classes.push_back(argmax_stance(seed_dist.probs.row(i)));
      }
    }
    if (rows.size() >= 2) {
      const SigmaEstimate est =
          heuristic_sigma({prepared.features.matrix.select_rows(rows), classes});
      param = est.sigma;
      if (est.fallback) out.warning = est.warning;
    } else {
      param = kDefaultSigma;
      out.warning = "fewer than two seeds; using sigma = 0.85";
    }
  }
  out.sigma_used = cfg.kernel == KernelKind::rbf ? param : 0.0;

  std::shared_ptr<const AffinityMatrix> w;
  if (cfg.kernel == KernelKind::knn && cfg.k >= n_rows)
    throw ParameterError("k=" + std::to_string(cfg.k) + " needs more than " +
                         std::to_string(n_rows) + " messages");
  if (cache) {
    w = cache->get(prepared.features.matrix, cfg.kernel, param);
  } else {
    w = std::make_shared<const AffinityMatrix>(
        cfg.kernel == KernelKind::rbf
            ? build_rbf_affinity(prepared.features.matrix, param)
            : build_knn_affinity(prepared.features.matrix, cfg.k));
  }

  const PropagationResult res = run_propagation(*w, seed_dist, cfg.propagation);
  const ClassAssignment assign = assign_classes(res.distribution);
  out.iterations = res.iterations;
  out.converged = res.converged;

  out.stance.assign(n_msgs, std::nullopt);
  out.probs = LabelMatrix::Zero(static_cast<Index>(n_msgs), kNumClasses);
  out.seed.assign(n_msgs, false);
  out.inherited.assign(n_msgs, false);
  out.isolated.assign(n_msgs, false);
  out.unresolvable.assign(n_msgs, false);
  for (std::size_t m = 0; m < n_msgs; ++m) {
    const Index row = prepared.row_of_message[m];
    if (row < 0) continue;
    const auto r = static_cast<std::size_t>(row);
    out.stance[m] = assign.classes[r];
    out.probs.row(static_cast<Index>(m)) = res.distribution.probs.row(row);
    out.seed[m] = res.distribution.labeled[r];
    out.isolated[m] = res.isolated[r];
    out.unresolvable[m] = assign.unresolvable[r];
  }
  for (std::size_t m = 0; m < n_msgs; ++m) {
    if (auto src = prepared.plan.inherit_from[m]) {
      out.stance[m] = out.stance[*src];
      out.probs.row(static_cast<Index>(m)) = out.probs.row(static_cast<Index>(*src));
      out.inherited[m] = true;
      out.unresolvable[m] = out.unresolvable[*src];
    }
  }
  return out;
}

nlohmann::ordered_json prediction_json(const Rumour& rumour,
                                       const RumourPrediction& prediction) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t m = 0; m < rumour.messages.size(); ++m) {
    nlohmann::ordered_json e;
    e["id"] = rumour.messages[m].id;
    if (const auto& s = prediction.stance[m]) {
      e["stance"] = value_of(*s);
      const auto row = prediction.probs.row(static_cast<Index>(m));
      e["probs"] = {row[0], row[1], row[2]};
    } else {
      e["stance"] = nullptr;
      e["probs"] = nullptr;
    }
    e["seed"] = static_cast<bool>(prediction.seed[m]);
    e["inherited"] = static_cast<bool>(prediction.inherited[m]);
    e["isolated"] = static_cast<bool>(prediction.isolated[m]);
    e["unresolvable"] = static_cast<bool>(prediction.unresolvable[m]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace stance
