#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "stance/ingest.hpp"

using namespace stance;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

json tweet(const std::string& id, const std::string& created, const std::string& text,
           const std::string& lang = "en") {
  json t = {{"id_str", id}, {"created_at", created}, {"text", text}};
  if (!lang.empty()) t["lang"] = lang;
  return t;
}

std::string line(const json& j) { return j.dump() + "\n"; }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(STANCE_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("timestamps") {
  TEST_CASE("iso-8601 forms") {
    const auto t = parse_iso8601("2014-08-09T22:31:02Z");
    CHECK(format_iso8601(t) == "2014-08-09T22:31:02Z");
    CHECK(parse_iso8601("2014-08-10T00:31:02+02:00") == t);
    CHECK(format_iso8601(parse_iso8601("2014-08-09T22:31:02.250Z")) ==
          "2014-08-09T22:31:02.250Z");
    CHECK_THROWS_AS(parse_iso8601("2014-13-09T22:31:02Z"), DataError);
    CHECK_THROWS_AS(parse_iso8601("yesterday"), DataError);
  }

  TEST_CASE("twitter form") {
    CHECK(parse_twitter_time("Sat Aug 09 22:31:02 +0000 2014") ==
          parse_iso8601("2014-08-09T22:31:02Z"));
    CHECK(parse_twitter_time("Sat Aug 09 23:31:02 +0100 2014") ==
          parse_iso8601("2014-08-09T22:31:02Z"));
    CHECK_THROWS_AS(parse_twitter_time("Sat Foo 09 22:31:02 +0000 2014"), DataError);
  }
}

TEST_SUITE("stance resolution") {
  TEST_CASE("source tweets") {
    ThreadAnnotation a;
    a.source_support = SourceSupport::supporting;
    CHECK(resolve_stance(a, true, SourceSupport::supporting) == Stance::supporting);
    a.source_support = SourceSupport::denying;
    CHECK(resolve_stance(a, true, SourceSupport::denying) == Stance::against);
    a.source_support = SourceSupport::underspecified;
    CHECK(resolve_stance(a, true, SourceSupport::underspecified) == Stance::neutral);
  }

  TEST_CASE("every reply combination") {
    const SourceSupport sources[] = {SourceSupport::supporting, SourceSupport::denying,
                                     SourceSupport::underspecified};
    const ReplyResponse replies[] = {ReplyResponse::agreed, ReplyResponse::disagreed,
                                     ReplyResponse::appeal_for_more_info,
                                     ReplyResponse::comment};
    const Certainty certainties[] = {Certainty::certain, Certainty::somewhat_certain,
                                     Certainty::uncertain, Certainty::not_applicable};
    for (SourceSupport src : sources) {
      const int base = src == SourceSupport::supporting ? 1
                       : src == SourceSupport::denying  ? -1
                                                        : 0;
      for (ReplyResponse rep : replies) {
        for (Certainty cert : certainties) {
          ThreadAnnotation a;
          a.reply_response = rep;
          a.certainty = cert;
          int expected = 0;
          if (rep == ReplyResponse::agreed) expected = base;
          if (rep == ReplyResponse::disagreed &&
              (cert == Certainty::certain || cert == Certainty::somewhat_certain))
            expected = -base;
          CHECK(value_of(resolve_stance(a, false, src)) == expected);
        }
      }
    }
    CHECK(resolve_stance(ThreadAnnotation{}, false, SourceSupport::supporting) ==
          Stance::neutral);
  }

  TEST_CASE("enum spellings and unknown values") {
    CHECK(parse_source_support("Supporting", "t") == SourceSupport::supporting);
    CHECK(parse_source_support("denying", "t") == SourceSupport::denying);
    CHECK(parse_reply_response("appeal-for-more-information", "t") ==
          ReplyResponse::appeal_for_more_info);
    CHECK(parse_reply_response("agreed", "t") == ReplyResponse::agreed);
    CHECK(parse_certainty("somewhat-certain", "t") == Certainty::somewhat_certain);
    CHECK(parse_certainty("n/a", "t") == Certainty::not_applicable);
    CHECK_THROWS_WITH_AS(parse_source_support("maybe", "thread 42"),
                         doctest::Contains("thread 42"), IngestError);
    CHECK_THROWS_AS(parse_reply_response("shrug", "t"), IngestError);
    CHECK_THROWS_AS(parse_certainty("very", "t"), IngestError);
  }
}

TEST_SUITE("jsonl") {
  const std::string kRecord =
      R"({"rumour_id":"r1","claim":"c","id":"a","timestamp":"2014-08-09T22:31:02Z","text":"hello","gold_stance":1})";

  TEST_CASE("round trip") {
    const std::string content =
        kRecord + "\n\n" +
        R"({"rumour_id":"r1","id":"b","timestamp":1407623500,"text":"rt","is_retweet":true,"retweet_of":"a","language":"en","thread_id":"t1"})" +
        "\n" +
        R"({"rumour_id":"r2","claim":"d","id":"c","timestamp":"2014-08-09T20:00:00Z","text":"bonjour à tous","language":"fr"})" +
        "\n";
    const auto rumours = parse_jsonl(content);
    REQUIRE(rumours.size() == 2);
    CHECK(rumours[0].rumour_id == "r1");
    CHECK(rumours[0].claim == "c");
    REQUIRE(rumours[0].messages.size() == 2);
    CHECK(rumours[0].messages[0].gold_stance == Stance::supporting);
    CHECK(rumours[0].messages[0].language == "en");
    CHECK(rumours[0].messages[0].language_inferred);
    CHECK(rumours[0].messages[1].is_retweet);
    CHECK(rumours[0].messages[1].retweet_of == "a");
    CHECK(rumours[1].messages[0].language == "fr");

    const auto again = parse_jsonl(to_jsonl(rumours));
    CHECK(to_jsonl(again) == to_jsonl(rumours));
  }

  TEST_CASE("messages are sorted by time then id") {
    const auto rumours = parse_jsonl(
        R"({"rumour_id":"r","id":"z","timestamp":"2014-01-01T00:00:10Z","text":"x"})"
        "\n"
        R"({"rumour_id":"r","id":"b","timestamp":"2014-01-01T00:00:05Z","text":"x"})"
        "\n"
        R"({"rumour_id":"r","id":"a","timestamp":"2014-01-01T00:00:05Z","text":"x"})"
        "\n");
    const auto& m = rumours[0].messages;
    CHECK(m[0].id == "a");
    CHECK(m[1].id == "b");
    CHECK(m[2].id == "z");
  }

  TEST_CASE("errors name the offending line") {
    CHECK_THROWS_WITH_AS(parse_jsonl(kRecord + "\n{broken\n", "in.jsonl"),
                         doctest::Contains("in.jsonl:2"), IngestError);
    CHECK_THROWS_WITH_AS(
        parse_jsonl(R"({"rumour_id":"r","timestamp":"2014-01-01T00:00:00Z","text":"x"})", "f"),
        doctest::Contains("'id'"), IngestError);
    CHECK_THROWS_WITH_AS(parse_jsonl(kRecord + "\n" + kRecord + "\n", "f"),
                         doctest::Contains("duplicate message id 'a'"), IngestError);
    CHECK_THROWS_AS(
        parse_jsonl(R"({"rumour_id":"r","id":"a","timestamp":"2014-01-01T00:00:00Z","text":"x","gold_stance":2})"),
        IngestError);
    CHECK_THROWS_AS(
        parse_jsonl(R"({"rumour_id":"r","id":"a","timestamp":"soon","text":"x"})"),
        IngestError);
    CHECK_THROWS_AS(load_jsonl("/nonexistent/file.jsonl"), IngestError);
  }
}

TEST_SUITE("filtering") {
  TEST_CASE("language inference") {
    CHECK(infer_language("plain English text") == "en");
    CHECK(infer_language("the café was closed today") == "en");
    CHECK(infer_language("Привет, как дела") == "und");
    CHECK(infer_language("1234 !!") == "und");
  }

  TEST_CASE("plan detects inheritance, exclusion and cycles") {
    Rumour r;
    r.messages.push_back(testing::make_message("a", 1, "source", Stance::supporting));
    auto rt = testing::make_message("b", 2, "RT source", std::nullopt);
    rt.is_retweet = true;
    rt.retweet_of = "a";
    r.messages.push_back(rt);
    auto rt2 = rt;
    rt2.id = "c";
    rt2.retweet_of = "b";
    r.messages.push_back(rt2);
    auto orphan = rt;
    orphan.id = "d";
    orphan.retweet_of = "missing";
    r.messages.push_back(orphan);
    auto foreign = testing::make_message("e", 5, "hola", std::nullopt);
    foreign.language = "es";
    r.messages.push_back(foreign);
    auto loop1 = rt;
    loop1.id = "f";
    loop1.retweet_of = "g";
    auto loop2 = rt;
    loop2.id = "g";
    loop2.retweet_of = "f";
    r.messages.push_back(loop1);
    r.messages.push_back(loop2);

    const auto plan = plan_classification(r);
    CHECK(plan.participants == std::vector<std::size_t>{0, 3, 5, 6});
    CHECK(plan.inherit_from[1] == 0u);
    CHECK(plan.inherit_from[2] == 0u);
    CHECK(plan.excluded[4]);
    CHECK_FALSE(plan.inherit_from[4].has_value());
  }

  TEST_CASE("summary counts add up") {
    std::vector<Rumour> rumours(3);
    for (int r = 0; r < 3; ++r) {
      rumours[r].rumour_id = "r" + std::to_string(r);
      const int size = r == 1 ? 2 : 6;
      for (int i = 0; i < size; ++i)
        rumours[r].messages.push_back(
            testing::make_message(rumours[r].rumour_id + "-" + std::to_string(i), i, "t",
                                  std::nullopt));
      auto foreign = testing::make_message(rumours[r].rumour_id + "-x", 99, "t", std::nullopt);
      foreign.language = "de";
      rumours[r].messages.push_back(foreign);
      auto rt = testing::make_message(rumours[r].rumour_id + "-rt", 100, "RT t", std::nullopt);
      rt.is_retweet = true;
      rt.retweet_of = rumours[r].rumour_id + "-0";
      rumours[r].messages.push_back(rt);
    }
    const auto res = filter_rumours(rumours, 5);
    const auto& s = res.summary;
    CHECK(s.rumours_in == 3);
    CHECK(s.rumours_kept == 2);
    CHECK(s.messages_in == 8 + 4 + 8);
    CHECK(s.dropped_small_rumour == 4);
    CHECK(s.dropped_non_english == 2);
    CHECK(s.retweets_inheriting == 2);
    CHECK(s.participating == 12);
    CHECK(s.original_english == 12);
    CHECK(s.messages_in ==
          s.dropped_small_rumour + s.dropped_non_english + s.retweets_inheriting + s.participating);
    for (const auto& r : res.rumours)
      for (const auto& m : r.messages) CHECK(m.is_english());
  }
}

TEST_SUITE("pheme") {
  TEST_CASE("synthetic release tree") {
    const fs::path root = fresh_dir("pheme");
    const fs::path en = root / "threads" / "en" / "ferguson";
    write_file(en / "100" / "source-tweets" / "100.json",
               tweet("100", "Sat Aug 09 22:31:02 +0000 2014", "Police shot him").dump());
    write_file(en / "100" / "reactions" / "101.json",
               tweet("101", "Sat Aug 09 22:35:00 +0000 2014", "@x that is true").dump());
    write_file(en / "100" / "reactions" / "102.json",
               tweet("102", "Sat Aug 09 22:36:00 +0000 2014", "@x not true at all").dump());
    write_file(en / "100" / "reactions" / "103.json",
               tweet("103", "Sat Aug 09 22:37:00 +0000 2014", "@x source?", "").dump());
    write_file(en / "100" / "retweets.json",
               line(tweet("104", "Sat Aug 09 22:38:00 +0000 2014", "RT @x Police shot him")));
    write_file(en / "200" / "source-tweets" / "200.json",
               tweet("200", "Sun Aug 10 10:00:00 +0000 2014", "He was unarmed").dump());
    // thread 300 has no annotation
    write_file(en / "300" / "source-tweets" / "300.json",
               tweet("300", "Sun Aug 10 11:00:00 +0000 2014", "Unrelated").dump());
    // other languages are ignored
    write_file(root / "threads" / "de" / "ferguson" / "400" / "source-tweets" / "400.json",
               tweet("400", "Sun Aug 10 11:00:00 +0000 2014", "Polizei", "de").dump());

    write_file(root / "annotations" / "en-scheme-annotations.json",
               "# comment line\n" +
                   line({{"event", "ferguson"}, {"threadid", "100"}, {"tweetid", "100"},
                         {"category", "shooting"}, {"support", "supporting"},
                         {"certainty", "certain"}}) +
                   line({{"threadid", "100"}, {"tweetid", "101"},
                         {"responsetype-vs-source", "agreed"}}) +
                   line({{"threadid", "100"}, {"tweetid", "102"},
                         {"responsetype-vs-source", "disagreed"}, {"certainty", "certain"}}) +
                   line({{"threadid", "100"}, {"tweetid", "103"},
                         {"responsetype-vs-source", "appeal-for-more-information"}}) +
                   line({{"threadid", "200"}, {"tweetid", "200"}, {"category", "shooting"},
                         {"support", "denying"}}));

    const auto ds = load_pheme(root);
    CHECK(ds.summary.threads == 2);
    CHECK(ds.summary.skipped_threads == 1);
    CHECK(ds.summary.rumours == 1);
    CHECK(ds.summary.stories == 1);
    CHECK(ds.summary.tweets == 6);
    REQUIRE(ds.rumours.size() == 1);
    const Rumour& r = ds.rumours[0];
    CHECK(r.rumour_id == "shooting");
    CHECK(r.story == "ferguson");
    REQUIRE(r.messages.size() == 6);
    auto find = [&](const std::string& id) -> const Message& {
      for (const auto& m : r.messages)
        if (m.id == id) return m;
      FAIL("missing " << id);
      return r.messages[0];
    };
    CHECK(find("100").gold_stance == Stance::supporting);
    CHECK(find("101").gold_stance == Stance::supporting);
    CHECK(find("102").gold_stance == Stance::against);
    CHECK(find("103").gold_stance == Stance::neutral);
    CHECK(find("103").language_inferred);
    CHECK(find("104").is_retweet);
    CHECK(find("104").retweet_of == "100");
    CHECK_FALSE(find("104").gold_stance.has_value());
    CHECK(find("200").gold_stance == Stance::against);
    CHECK(r.messages.front().id == "100");
    CHECK(r.messages.back().id == "200");
  }

  TEST_CASE("malformed inputs") {
    CHECK_THROWS_AS(load_pheme("/nonexistent/root"), IngestError);
    const fs::path root = fresh_dir("pheme-bad");
    write_file(root / "ev" / "1" / "source-tweets" / "1.json", "{not json");
    write_file(root / "ev" / "1" / "annotation.json",
               line({{"threadid", "1"}, {"tweetid", "1"}, {"support", "supporting"}}));
    CHECK_THROWS_AS(load_pheme(root), IngestError);

    const fs::path root2 = fresh_dir("pheme-enum");
    write_file(root2 / "ev" / "1" / "source-tweets" / "1.json",
               tweet("1", "2014-08-09T22:31:02Z", "x").dump());
    write_file(root2 / "ev" / "1" / "annotation.json",
               line({{"threadid", "1"}, {"tweetid", "1"}, {"support", "sideways"}}));
    CHECK_THROWS_WITH_AS(load_pheme(root2), doctest::Contains("sideways"), IngestError);
  }

  TEST_CASE("empty tree") {
    const auto ds = load_pheme(fresh_dir("pheme-empty"));
    CHECK(ds.rumours.empty());
    CHECK(ds.summary.threads == 0);
  }
}
