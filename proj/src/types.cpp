#include "stance/types.hpp"

#include <string>

#include "stance/feature_matrix.hpp"
#include "stance/propagation.hpp"

namespace stance {

std::optional<Stance> stance_from_int(long long v) noexcept {
  switch (v) {
    case -1: return Stance::against;
    case 0: return Stance::neutral;
    case 1: return Stance::supporting;
    default: return std::nullopt;
  }
}

std::string_view to_string(Stance s) noexcept {
  switch (s) {
    case Stance::against: return "against";
    case Stance::neutral: return "neutral";
    case Stance::supporting: return "supporting";
  }
  return "neutral";
}

std::optional<Stance> parse_stance(std::string_view name) noexcept {
  if (name == "against" || name == "-1") return Stance::against;
  if (name == "neutral" || name == "0") return Stance::neutral;
  if (name == "supporting" || name == "1" || name == "+1") return Stance::supporting;
  return std::nullopt;
}

std::string_view to_string(FeatureSpace space) noexcept {
  switch (space) {
    case FeatureSpace::brown: return "brown";
    case FeatureSpace::ling: return "ling";
    case FeatureSpace::ngrams: return "ngrams";
    case FeatureSpace::brown_ling: return "brown_ling";
  }
  return "brown";
}

FeatureSpace parse_feature_space(std::string_view name) {
  if (name == "brown") return FeatureSpace::brown;
  if (name == "ling") return FeatureSpace::ling;
  if (name == "ngrams") return FeatureSpace::ngrams;
  if (name == "brown_ling") return FeatureSpace::brown_ling;
  throw ParameterError("unknown feature space '" + std::string(name) +
                       "' (expected brown, ling, ngrams or brown_ling)");
}

std::string_view to_string(KernelKind kind) noexcept {
  return kind == KernelKind::rbf ? "rbf" : "knn";
}

KernelKind parse_kernel(std::string_view name) {
  if (name == "rbf") return KernelKind::rbf;
  if (name == "knn") return KernelKind::knn;
  throw ParameterError("unknown kernel '" + std::string(name) +
                       "' (expected rbf or knn)");
}

std::string_view to_string(Algorithm algorithm) noexcept {
  return algorithm == Algorithm::label_propagation ? "lp" : "ls";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "lp" || name == "label_propagation")
    return Algorithm::label_propagation;
  if (name == "ls" || name == "label_spreading")
    return Algorithm::label_spreading;
  throw ParameterError("unknown algorithm '" + std::string(name) +
                       "' (expected lp or ls)");
}

}  // namespace stance
