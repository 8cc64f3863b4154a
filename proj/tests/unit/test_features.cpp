#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "stance/features.hpp"

using namespace stance;

namespace {

using Tokens = std::vector<std::string>;

Tokens toks(std::string_view text) { return preprocess(text).tokens; }

TokenizedMessage msg(Tokens t) { return TokenizedMessage{std::move(t)}; }

Lexicons small_lexicons() {
  Lexicons lex;
  lex.tentative_words = {"suppose", "maybe"};
  lex.swear_words = {"damn"};
  lex.negation_words = {"not", "dont"};
  lex.sentiment = {{"great", 0.8}, {"bad", -0.5}};
  return lex;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::path(STANCE_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("worked examples") {
    CHECK(toks("Check http://t.co/ab @user LOOOOK!!!") == Tokens{"check", "look", "!", "!"});
    CHECK(toks("It's DONE.") == Tokens{"its", "done", "."});
    CHECK(toks("").empty());
    CHECK(toks("   \t\n ").empty());
  }

  TEST_CASE("urls, e-mails and mentions are removed") {
    CHECK(toks("see https://example.com/a?b=c now") == Tokens{"see", "now"});
    CHECK(toks("mail john.doe@example.org today") == Tokens{"mail", "today"});
    CHECK(toks("@bbc @cnn_news: breaking") == Tokens{"breaking"});
    CHECK(toks("www.example.com is down") == Tokens{"is", "down"});
  }

  TEST_CASE("kept punctuation becomes separate tokens") {
    CHECK(toks("wait,what?really.") == Tokens{"wait", ",", "what", "?", "really", "."});
    CHECK(toks("#breaking (news) \"quoted\" - yes; no:") ==
          Tokens{"breaking", "news", "quoted", "yes", "no"});
  }

  TEST_CASE("runs are squeezed to two") {
    CHECK(toks("sooooo goood") == Tokens{"soo", "good"});
    CHECK(toks("?!?!") == Tokens{"?", "!", "?", "!"});
    CHECK(toks("!!!!!!") == Tokens{"!", "!"});
    CHECK(toks("aaBBBcc") == Tokens{"aabbcc"});
  }

  TEST_CASE("non-ascii lowercasing") {
    CHECK(toks("ÉCOLE Straße ΑΘΗΝΑ МОСКВА") == Tokens{"école", "straße", "αθηνα", "москва"});
  }

  TEST_CASE("invariants on random input") {
    std::mt19937 rng(7);
    const std::string alphabet = "aAbB!!??..,,  @#:/'\"-xyzhttp://.com\t\n";
    for (int trial = 0; trial < 500; ++trial) {
      std::string s;
      const int len = static_cast<int>(rng() % 60);
      for (int i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
      const TokenizedMessage m = preprocess(s);
      for (const auto& t : m.tokens) {
        CHECK_FALSE(t.empty());
        CHECK(t.find_first_of(" \t\n") == std::string::npos);
        CHECK(t.find('@') == std::string::npos);
        for (std::size_t i = 2; i < t.size(); ++i)
          CHECK_FALSE((t[i] == t[i - 1] && t[i] == t[i - 2]));
        if (t.size() == 1 && std::string(",.!?").find(t[0]) != std::string::npos)
          CHECK(is_retained_punctuation(t));
      }
      // idempotence through the token-join renderer
      CHECK(preprocess(render(m)) == m);
    }
  }

  TEST_CASE("stemming and stop-word removal are opt-in") {
    const std::unordered_set<std::string> stop = {"the", "are"};
    PreprocessOptions opts;
    opts.stem = true;
    opts.stop_words = &stop;
    CHECK(preprocess("The ponies are running!", opts).tokens == Tokens{"poni", "run", "!"});
    CHECK(toks("The ponies are running!") == Tokens{"the", "ponies", "are", "running", "!"});
  }
}

TEST_SUITE("porter") {
  TEST_CASE("reference vocabulary") {
    const std::pair<const char*, const char*> cases[] = {
        {"caresses", "caress"}, {"ponies", "poni"},     {"ties", "ti"},
        {"caress", "caress"},   {"cats", "cat"},        {"feed", "feed"},
        {"agreed", "agre"},     {"plastered", "plaster"}, {"motoring", "motor"},
        {"sing", "sing"},       {"conflated", "conflat"}, {"troubled", "troubl"},
        {"sized", "size"},      {"hopping", "hop"},     {"tanned", "tan"},
        {"falling", "fall"},    {"hissing", "hiss"},    {"fizzed", "fizz"},
        {"failing", "fail"},    {"filing", "file"},     {"happy", "happi"},
        {"sky", "sky"},         {"relational", "relat"}, {"conditional", "condit"},
        {"rational", "ration"}, {"digitizer", "digit"}, {"hopeful", "hope"},
        {"goodness", "good"},   {"revival", "reviv"},   {"allowance", "allow"},
        {"adoption", "adopt"},  {"probate", "probat"},  {"rate", "rate"},
        {"cease", "ceas"},      {"controll", "control"}, {"roll", "roll"},
        {"generalizations", "gener"}, {"oscillators", "oscil"}, {"a", "a"},
    };
    for (const auto& [in, out] : cases) {
      CAPTURE(in);
      CHECK(porter_stem(in) == out);
    }
  }

  TEST_CASE("non-alphabetic tokens pass through") {
    CHECK(porter_stem("!") == "!");
    CHECK(porter_stem("école") == "école");
    CHECK(porter_stem("abc123") == "abc123");
  }
}

TEST_SUITE("brown clusters") {
  TEST_CASE("load assigns clusters by bitstring rank") {
    const auto dir = temp_dir("clusters");
    {
      std::ofstream out(dir / "paths");
      out << "0010\tthe\t100\n0010\tThe\t5\n0111\tnews\t7\n0010\ta\t3\n1100\tfake\t2\n";
    }
    const auto map = BrownClusterMap::load(dir / "paths");
    CHECK(map.distinct_clusters() == 3);
    CHECK(map.cluster_of("the") == 0);
    CHECK(map.cluster_of("THE") == 0);
    CHECK(map.cluster_of("news") == 1);
    CHECK(map.cluster_of("a") == 0);
    CHECK(map.cluster_of("fake") == 2);
    CHECK_FALSE(map.cluster_of("missing").has_value());
  }

  TEST_CASE("more than 1000 clusters is an error") {
    CHECK_NOTHROW(testing::synthetic_clusters(1000, 1000));
    CHECK_THROWS_AS(testing::synthetic_clusters(1001, 1001), DataError);
  }

  TEST_CASE("malformed cluster lines") {
    const auto dir = temp_dir("clusters_bad");
    {
      std::ofstream out(dir / "paths");
      out << "0010 the\n";
    }
    CHECK_THROWS_AS(BrownClusterMap::load(dir / "paths"), DataError);
    CHECK_THROWS_AS(BrownClusterMap::load(dir / "missing"), DataError);
  }

  TEST_CASE("count vectors") {
    const auto map = testing::synthetic_clusters(20, 10);
    CHECK(brown_cluster_vector(msg({}), map).isZero());
    CHECK(brown_cluster_vector(msg({}), map).size() == kBrownClusterCount);
    const Eigen::VectorXd v = brown_cluster_vector(msg({"w3", "w13", "zzz"}), map);
    CHECK(v[3] == 2.0);
    CHECK(v.sum() == 2.0);
    CHECK(brown_cluster_vector(msg({"zzz", "qq"}), map).isZero());
    CHECK(is_featureless(msg({"zzz", "qq"}), map));
    CHECK_FALSE(is_featureless(msg({"zzz", "w1"}), map));
  }
}

TEST_SUITE("linguistic") {
  TEST_CASE("empty message is all zero") {
    const auto lex = small_lexicons();
    CHECK(linguistic_vector(msg({}), lex).isZero());
    CHECK(linguistic_vector(msg({}), lex).size() == kLingDims);
  }

  TEST_CASE("lexicon counts") {
    const auto lex = small_lexicons();
    const Eigen::VectorXd v = linguistic_vector(msg({"i", "suppose", "not"}), lex);
    CHECK(v[kLingTentative] == 1.0);
    CHECK(v[kLingNegation] == 1.0);
    CHECK(v[kLingTokenCount] == 3.0);
    CHECK(v[kLingSwear] == 0.0);
    CHECK(v[kLingMeanWordLength] == doctest::Approx((1.0 + 7.0 + 3.0) / 3.0));
  }

  TEST_CASE("sentiment is the mean polarity of matched tokens") {
    const auto lex = small_lexicons();
    CHECK(linguistic_vector(msg({"great"}), lex)[kLingSentiment] == doctest::Approx(0.8));
    CHECK(linguistic_vector(msg({"great", "bad", "xyz"}), lex)[kLingSentiment] ==
          doctest::Approx(0.15));
    CHECK(linguistic_vector(msg({"xyz"}), lex)[kLingSentiment] == 0.0);
  }

  TEST_CASE("punctuation tokens do not count as words for length") {
    const auto lex = small_lexicons();
    const Eigen::VectorXd v = linguistic_vector(msg({"damn", "!", "!"}), lex);
    CHECK(v[kLingTokenCount] == 3.0);
    CHECK(v[kLingMeanWordLength] == 4.0);
    CHECK(v[kLingSwear] == 1.0);
  }

  TEST_CASE("word length counts code points") {
    const auto lex = small_lexicons();
    CHECK(linguistic_vector(msg({"école"}), lex)[kLingMeanWordLength] == 5.0);
  }

  TEST_CASE("shipped lexicons load") {
    const auto lex = Lexicons::load_directory(std::filesystem::path(STANCE_RESOURCE_DIR) / "lexicons");
    CHECK(lex.negation_words.count("not"));
    CHECK(lex.negation_words.count("dont"));
    CHECK(lex.tentative_words.count("suppose"));
    CHECK(lex.tentative_words.count("wonder"));
    CHECK_FALSE(lex.swear_words.empty());
    CHECK(lex.sentiment.at("good") > 0.0);
    CHECK(lex.sentiment.at("bad") < 0.0);
    CHECK(lex.stop_words.count("the"));
    for (const auto& [w, s] : lex.sentiment) {
      CHECK(s >= -1.0);
      CHECK(s <= 1.0);
    }
  }

  TEST_CASE("bad sentiment lines are rejected") {
    const auto dir = temp_dir("lex_bad");
    {
      std::ofstream out(dir / "sentiment.tsv");
      out << "# comment\ngood\t0.5\nawful\t-3\n";
    }
    CHECK_THROWS_AS(load_sentiment_lexicon(dir / "sentiment.tsv"), DataError);
  }
}

TEST_SUITE("brown_ling") {
  TEST_CASE("layout") {
    const auto map = testing::synthetic_clusters(20, 10);
    const auto lex = small_lexicons();
    CHECK(brown_ling_vector(msg({}), map, lex).isZero());
    CHECK(brown_ling_vector(msg({}), map, lex).size() == kBrownLingDims);

    const Eigen::VectorXd neg = brown_ling_vector(msg({"not"}), map, lex);
    CHECK(neg[kBrownLingNegation] == 1.0);
    CHECK(neg.sum() == 1.0);

    const Eigen::VectorXd v = brown_ling_vector(msg({"w2", "great", "dont"}), map, lex);
    CHECK(v.head(kBrownClusterCount) == brown_cluster_vector(msg({"w2", "great", "dont"}), map));
    CHECK(v[1000] == doctest::Approx(0.8));
    CHECK(v[1001] == 1.0);
  }
}

TEST_SUITE("ngrams") {
  TEST_CASE("single message") {
    const FeatureMatrix x = ngram_features({msg({"a", "b", "c"})});
    CHECK(x.vocabulary() == Tokens{"a b", "b c", "a b c"});
    CHECK(x.to_dense() == Eigen::RowVector3d(1, 1, 1));
    CHECK(x.space() == FeatureSpace::ngrams);
  }

  TEST_CASE("short messages give zero rows") {
    const FeatureMatrix x = ngram_features({msg({"a", "b"}), msg({"z"}), msg({})});
    CHECK(x.rows() == 3);
    CHECK(x.row_is_zero(1));
    CHECK(x.row_is_zero(2));
    CHECK_FALSE(x.row_is_zero(0));
  }

  TEST_CASE("identical messages, identical rows; repeated n-grams count") {
    const FeatureMatrix x =
        ngram_features({msg({"x", "y", "x", "y"}), msg({"x", "y", "x", "y"})});
    const DenseMatrix d = x.to_dense();
    CHECK(d.row(0) == d.row(1));
    // vocabulary: "x y", "y x", "x y x", "y x y", "x y x y"
    CHECK(x.cols() == 5);
    CHECK(d(0, 0) == 2.0);
  }

  TEST_CASE("n-grams never exceed six tokens") {
    const FeatureMatrix x = ngram_features({msg({"1", "2", "3", "4", "5", "6", "7", "8"})});
    for (const auto& v : x.vocabulary()) CHECK(std::count(v.begin(), v.end(), ' ') <= 5);
    // 7 + 6 + 5 + 4 + 3 bigrams..6-grams
    CHECK(x.cols() == 25);
  }
}

TEST_SUITE("featurize") {
  TEST_CASE("dimensions per space") {
    const auto map = testing::synthetic_clusters(30, 10);
    const auto lex = small_lexicons();
    FeatureResources res{&map, &lex, false};
    const auto msgs = preprocess_all({"w1 w2 great", "w3 not!", "unknown words only"}, res);
    CHECK(featurize(msgs, FeatureSpace::brown, res).matrix.cols() == 1000);
    CHECK(featurize(msgs, FeatureSpace::ling, res).matrix.cols() == kLingDims);
    CHECK(featurize(msgs, FeatureSpace::brown_ling, res).matrix.cols() == 1002);
    CHECK(featurize(msgs, FeatureSpace::ngrams, res).matrix.cols() == 3 + 3 + 3);
    const auto brown = featurize(msgs, FeatureSpace::brown, res);
    CHECK(brown.featureless == std::vector<bool>{false, false, true});
  }

  TEST_CASE("counts are non-negative and only sentiment may be negative") {
    const auto map = testing::synthetic_clusters(30, 10);
    const auto lex = small_lexicons();
    FeatureResources res{&map, &lex, false};
    const auto msgs = preprocess_all({"bad bad w1", "not bad", "damn w4 w5"}, res);
    for (FeatureSpace s : {FeatureSpace::brown, FeatureSpace::ling, FeatureSpace::brown_ling,
                           FeatureSpace::ngrams}) {
      const DenseMatrix d = featurize(msgs, s, res).matrix.to_dense();
      for (Index i = 0; i < d.rows(); ++i) {
        for (Index j = 0; j < d.cols(); ++j) {
          const bool sentiment = (s == FeatureSpace::ling && j == kLingSentiment) ||
                                 (s == FeatureSpace::brown_ling && j == kBrownLingSentiment);
          if (!sentiment) CHECK(d(i, j) >= 0.0);
        }
      }
    }
  }

  TEST_CASE("row order does not change fixed-space rows") {
    const auto map = testing::synthetic_clusters(30, 10);
    const auto lex = small_lexicons();
    FeatureResources res{&map, &lex, false};
    const auto a = preprocess_all({"w1 w2 great", "w3 not!", "maybe w9"}, res);
    const std::vector<TokenizedMessage> b = {a[2], a[0], a[1]};
    for (FeatureSpace s : {FeatureSpace::brown, FeatureSpace::ling, FeatureSpace::brown_ling}) {
      const DenseMatrix da = featurize(a, s, res).matrix.to_dense();
      const DenseMatrix db = featurize(b, s, res).matrix.to_dense();
      CHECK(da.row(0) == db.row(1));
      CHECK(da.row(2) == db.row(0));
    }
  }

  TEST_CASE("missing resources are reported") {
    FeatureResources none;
    const std::vector<TokenizedMessage> msgs = {msg({"a"})};
    CHECK_THROWS_AS(featurize(msgs, FeatureSpace::brown, none), ParameterError);
    CHECK_THROWS_AS(featurize(msgs, FeatureSpace::ling, none), ParameterError);
    CHECK_NOTHROW(featurize(msgs, FeatureSpace::ngrams, none));
  }
}

TEST_SUITE("feature matrix") {
  TEST_CASE("sparse squared distance matches dense") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> u(0, 4);
    DenseMatrix x = DenseMatrix::Zero(15, 40);
    for (Index i = 0; i < x.size(); ++i)
      if (rng() % 5 == 0) x.data()[i] = u(rng);
    const FeatureMatrix f = FeatureMatrix::from_dense(x);
    const DenseMatrix d = pairwise_squared_distances(f);
    for (Index i = 0; i < 15; ++i)
      for (Index j = 0; j < 15; ++j) CHECK(d(i, j) == (x.row(i) - x.row(j)).squaredNorm());
  }
}
