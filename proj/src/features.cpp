#include "stance/features.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "utf8.hpp"

namespace stance {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------
// Brown clusters

void BrownClusterMap::add(const std::string& bitstring, const std::string& word) {
  auto [it, inserted] =
      bitstrings_.try_emplace(bitstring, static_cast<int>(bitstrings_.size()));
  if (inserted && it->second >= kBrownClusterCount)
    throw DataError("cluster file defines more than " +
                    std::to_string(kBrownClusterCount) + " clusters");
  words_.try_emplace(lowercase(word), it->second);
}

BrownClusterMap BrownClusterMap::load(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  BrownClusterMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t1 == 0 || t2 == t1 + 1)
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected bitstring<TAB>word<TAB>count");
    const std::string bits = line.substr(0, t1);
    const std::string word = line.substr(
        t1 + 1, t2 == std::string::npos ? std::string::npos : t2 - t1 - 1);
    map.add(bits, word);
  }
  return map;
}

BrownClusterMap BrownClusterMap::from_entries(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  BrownClusterMap map;
  for (const auto& [bits, word] : entries) map.add(bits, word);
  return map;
}

std::optional<int> BrownClusterMap::cluster_of(std::string_view token) const {
  auto it = words_.find(lowercase(token));
  if (it == words_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Lexicons

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string w = trim(line);
    if (!w.empty()) words.insert(lowercase(w));
  }
  return words;
}

std::unordered_map<std::string, double> load_sentiment_lexicon(
    const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  std::unordered_map<std::string, double> lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string word;
    double score = 0.0;
    if (!(fields >> word >> score) || score < -1.0 || score > 1.0)
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected word<TAB>score with score in [-1, 1]");
    lex[lowercase(word)] = score;
  }
  return lex;
}

Lexicons Lexicons::load_directory(const std::filesystem::path& dir) {
  Lexicons lex;
  lex.tentative_words = load_word_list(dir / "tentative.txt");
  lex.swear_words = load_word_list(dir / "swear.txt");
  lex.negation_words = load_word_list(dir / "negation.txt");
  lex.sentiment = load_sentiment_lexicon(dir / "sentiment.tsv");
  if (std::filesystem::exists(dir / "stopwords.txt"))
    lex.stop_words = load_word_list(dir / "stopwords.txt");
  return lex;
}

// ---------------------------------------------------------------------------
// Per-message vectors

Eigen::VectorXd brown_cluster_vector(const TokenizedMessage& msg,
                                     const BrownClusterMap& map) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kBrownClusterCount);
  for (const auto& tok : msg.tokens) {
    if (auto c = map.cluster_of(tok)) v[*c] += 1.0;
  }
  return v;
}

bool is_featureless(const TokenizedMessage& msg, const BrownClusterMap& map) {
  for (const auto& tok : msg.tokens) {
    if (map.cluster_of(tok)) return false;
  }
  return true;
}

Eigen::VectorXd linguistic_vector(const TokenizedMessage& msg,
                                  const Lexicons& lex) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kLingDims);
  v[kLingTokenCount] = static_cast<double>(msg.tokens.size());
  std::size_t words = 0;
  std::size_t chars = 0;
  double polarity = 0.0;
  std::size_t polar_hits = 0;
  for (const auto& tok : msg.tokens) {
    if (!is_retained_punctuation(tok)) {
      ++words;
      chars += utf8::length(tok);
    }
    if (lex.tentative_words.count(tok)) v[kLingTentative] += 1.0;
    if (lex.swear_words.count(tok)) v[kLingSwear] += 1.0;
    if (lex.negation_words.count(tok)) v[kLingNegation] += 1.0;
    if (auto it = lex.sentiment.find(tok); it != lex.sentiment.end()) {
      polarity += it->second;
      ++polar_hits;
    }
  }
  if (words) v[kLingMeanWordLength] = static_cast<double>(chars) / words;
  if (polar_hits) v[kLingSentiment] = polarity / polar_hits;
  return v;
}

Eigen::VectorXd brown_ling_vector(const TokenizedMessage& msg,
                                  const BrownClusterMap& map,
                                  const Lexicons& lex) {
  Eigen::VectorXd v(kBrownLingDims);
  v.head(kBrownClusterCount) = brown_cluster_vector(msg, map);
  const Eigen::VectorXd ling = linguistic_vector(msg, lex);
  v[kBrownLingSentiment] = ling[kLingSentiment];
  v[kBrownLingNegation] = ling[kLingNegation];
  return v;
}

FeatureMatrix ngram_features(const std::vector<TokenizedMessage>& messages,
                             int n_min, int n_max) {
  if (n_min < 1 || n_max < n_min)
    throw ParameterError("n-gram range must satisfy 1 <= n_min <= n_max");
  std::unordered_map<std::string, Index> index;
  std::vector<std::string> vocabulary;
  std::vector<Eigen::Triplet<double>> counts;
  for (std::size_t row = 0; row < messages.size(); ++row) {
    const auto& toks = messages[row].tokens;
    for (int n = n_min; n <= n_max; ++n) {
      if (toks.size() < static_cast<std::size_t>(n)) break;
      for (std::size_t start = 0; start + n <= toks.size(); ++start) {
        std::string gram = toks[start];
        for (int k = 1; k < n; ++k) {
          gram.push_back(' ');
          gram += toks[start + k];
        }
        auto [it, inserted] =
            index.try_emplace(gram, static_cast<Index>(vocabulary.size()));
        if (inserted) vocabulary.push_back(std::move(gram));
        counts.emplace_back(static_cast<Index>(row), it->second, 1.0);
      }
    }
  }
  SparseMatrix m(static_cast<Index>(messages.size()),
                 static_cast<Index>(vocabulary.size()));
  m.setFromTriplets(counts.begin(), counts.end());
  return FeatureMatrix(std::move(m), FeatureSpace::ngrams, std::move(vocabulary));
}

// ---------------------------------------------------------------------------
// Whole-rumour featurization

std::vector<TokenizedMessage> preprocess_all(
    const std::vector<std::string>& texts, const FeatureResources& res) {
  PreprocessOptions opts;
  if (res.stem_and_drop_stop_words) {
    if (!res.lexicons)
      throw ParameterError("stop-word removal needs a loaded lexicon set");
    opts.stem = true;
    opts.stop_words = &res.lexicons->stop_words;
  }
  std::vector<TokenizedMessage> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(preprocess(t, opts));
  return out;
}

namespace {

void append_dense_row(std::vector<Eigen::Triplet<double>>& triplets, Index row,
                      const Eigen::VectorXd& v, Index offset = 0) {
  for (Index c = 0; c < v.size(); ++c) {
    if (v[c] != 0.0) triplets.emplace_back(row, offset + c, v[c]);
  }
}

}  // namespace

FeaturizedRumour featurize(const std::vector<TokenizedMessage>& messages,
                           FeatureSpace space, const FeatureResources& res) {
  const bool needs_clusters =
      space == FeatureSpace::brown || space == FeatureSpace::brown_ling;
  const bool needs_lexicons =
      space == FeatureSpace::ling || space == FeatureSpace::brown_ling;
  if (needs_clusters && !res.clusters)
    throw ParameterError("feature space '" + std::string(to_string(space)) +
                         "' needs a Brown cluster map");
  if (needs_lexicons && !res.lexicons)
    throw ParameterError("feature space '" + std::string(to_string(space)) +
                         "' needs lexicons");

  FeaturizedRumour out;
  if (space == FeatureSpace::ngrams) {
    out.matrix = ngram_features(messages);
  } else {
    const Index n = static_cast<Index>(messages.size());
    const Index dims = space == FeatureSpace::brown   ? kBrownClusterCount
                       : space == FeatureSpace::ling  ? kLingDims
                                                      : kBrownLingDims;
    std::vector<Eigen::Triplet<double>> triplets;
    for (Index i = 0; i < n; ++i) {
      const auto& msg = messages[static_cast<std::size_t>(i)];
      switch (space) {
        case FeatureSpace::brown:
          append_dense_row(triplets, i, brown_cluster_vector(msg, *res.clusters));
          break;
        case FeatureSpace::ling:
          append_dense_row(triplets, i, linguistic_vector(msg, *res.lexicons));
          break;
        default:
          append_dense_row(triplets, i,
                           brown_ling_vector(msg, *res.clusters, *res.lexicons));
          break;
      }
    }
    SparseMatrix m(n, dims);
    m.setFromTriplets(triplets.begin(), triplets.end());
    out.matrix = FeatureMatrix(std::move(m), space);
  }
  out.featureless.resize(static_cast<std::size_t>(out.matrix.rows()));
  for (Index i = 0; i < out.matrix.rows(); ++i)
    out.featureless[static_cast<std::size_t>(i)] = out.matrix.row_is_zero(i);
  return out;
}

}  // namespace stance
