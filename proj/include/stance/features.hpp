#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stance/feature_matrix.hpp"

namespace stance {

// Preprocessed message: lowercase word tokens plus the retained
// punctuation marks ",", ".", "!", "?" as standalone tokens.
struct TokenizedMessage {
  std::vector<std::string> tokens;

  bool operator==(const TokenizedMessage&) const = default;
};

bool is_retained_punctuation(std::string_view token) noexcept;

struct PreprocessOptions {
  // Porter-stem word tokens (BrownC* variant).
  bool stem = false;
  // Drop tokens found in this set (BrownC* variant). Not owned.
  const std::unordered_set<std::string>* stop_words = nullptr;
};

// (i) strip URLs, e-mails and @-mentions, (ii) lowercase, (iii) drop all
// punctuation except , . ! ?, (iv) squeeze character runs to length two,
// (v) squeeze whitespace; then split on whitespace with retained
// punctuation isolated into its own tokens.
TokenizedMessage preprocess(std::string_view raw_text,
                            const PreprocessOptions& options = {});

// Joins tokens with single spaces.
std::string render(const TokenizedMessage& msg);

// Lowercasing shared by preprocessing and lexicon lookups.
std::string lowercase(std::string_view text);

std::string porter_stem(std::string_view word);

inline constexpr int kBrownClusterCount = 1000;

// word -> cluster index, loaded from "bitstring<TAB>word<TAB>count" lines.
// The index of a cluster is the rank of its bitstring in file order.
class BrownClusterMap {
 public:
  BrownClusterMap() = default;

  static BrownClusterMap load(const std::filesystem::path& path);
  static BrownClusterMap from_entries(
      const std::vector<std::pair<std::string, std::string>>&
          bitstring_word_pairs);

  std::optional<int> cluster_of(std::string_view token) const;
  int cluster_count() const noexcept { return kBrownClusterCount; }
  int distinct_clusters() const noexcept {
    return static_cast<int>(bitstrings_.size());
  }
  std::size_t vocabulary_size() const noexcept { return words_.size(); }

 private:
  void add(const std::string& bitstring, const std::string& word);

  std::unordered_map<std::string, int> words_;
  std::unordered_map<std::string, int> bitstrings_;
};

struct Lexicons {
  std::unordered_set<std::string> tentative_words;
  std::unordered_set<std::string> swear_words;
  std::unordered_set<std::string> negation_words;
  std::unordered_map<std::string, double> sentiment;
  std::unordered_set<std::string> stop_words;

  // Reads tentative.txt, swear.txt, negation.txt, sentiment.tsv and
  // (optionally) stopwords.txt from a directory.
  static Lexicons load_directory(const std::filesystem::path& dir);
};

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);
std::unordered_map<std::string, double> load_sentiment_lexicon(
    const std::filesystem::path& path);

// Linguistic vector layout.
enum LingComponent : int {
  kLingTokenCount = 0,
  kLingMeanWordLength = 1,
  kLingTentative = 2,
  kLingSwear = 3,
  kLingNegation = 4,
  kLingSentiment = 5,
};
inline constexpr int kLingDims = 6;
inline constexpr int kBrownLingDims = kBrownClusterCount + 2;
inline constexpr int kBrownLingSentiment = kBrownClusterCount;
inline constexpr int kBrownLingNegation = kBrownClusterCount + 1;

Eigen::VectorXd brown_cluster_vector(const TokenizedMessage& msg,
                                     const BrownClusterMap& map);
// True when no token of the message is in the cluster vocabulary.
bool is_featureless(const TokenizedMessage& msg, const BrownClusterMap& map);

Eigen::VectorXd linguistic_vector(const TokenizedMessage& msg,
                                  const Lexicons& lex);

Eigen::VectorXd brown_ling_vector(const TokenizedMessage& msg,
                                  const BrownClusterMap& map,
                                  const Lexicons& lex);

// Contiguous word n-grams for n in [n_min, n_max]; columns in order of
// first occurrence, vocabulary entries are space-joined tokens.
FeatureMatrix ngram_features(const std::vector<TokenizedMessage>& messages,
                             int n_min = 2, int n_max = 6);

struct FeatureResources {
  const BrownClusterMap* clusters = nullptr;
  const Lexicons* lexicons = nullptr;
  // Stem and drop stop words before extraction (the BrownC* variant).
  bool stem_and_drop_stop_words = false;
};

struct FeaturizedRumour {
  FeatureMatrix matrix;
  // Rows whose feature vector is identically zero.
  std::vector<bool> featureless;
};

std::vector<TokenizedMessage> preprocess_all(
    const std::vector<std::string>& texts, const FeatureResources& res);

FeaturizedRumour featurize(const std::vector<TokenizedMessage>& messages,
                           FeatureSpace space, const FeatureResources& res);

}  // namespace stance
