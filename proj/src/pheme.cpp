// PHEME rumour-scheme thread ingestion.
//
// Expected layout (either directly under the root or below
// threads/<lang>/):
//
//   <story>/<thread_id>/source-tweets/<id>.json
//   <story>/<thread_id>/reactions/<id>.json
//   <story>/<thread_id>/retweets.json          (optional)
//   <story>/<thread_id>/annotation.json        (optional, see below)
//   annotations/*.json                          (optional, JSON lines)
//
// Annotation records carry "threadid", "tweetid", "support" (source
// tweets), "responsetype-vs-source" (replies), "certainty",
// "evidentiality" and optionally "event" plus a rumour grouping key
// ("rumour_id", "rumour", "rumourid" or "category").

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "stance/ingest.hpp"

namespace stance {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string normalize_enum(std::string_view v) {
  std::string s;
  for (char c : v) {
    if (c == '_' || c == ' ') c = '-';
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return s;
}

[[noreturn]] void unknown_value(std::string_view kind, std::string_view v,
                                std::string_view context) {
  throw IngestError("unknown " + std::string(kind) + " value '" +
                    std::string(v) + "' in " + std::string(context));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IngestError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw IngestError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

// JSON array, single object, or JSON lines with '#' comment lines.
std::vector<json> parse_records(const fs::path& p) {
  const std::string content = read_file(p);
  try {
    json whole = json::parse(content);
    if (whole.is_array()) return whole.get<std::vector<json>>();
    return {whole};
  } catch (const json::parse_error&) {
  }
  std::vector<json> out;
  std::istringstream lines(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw IngestError("malformed JSON in " + p.string() + ":" +
                        std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::optional<std::string> id_field(const json& obj,
                                    std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = obj.find(k);
    if (it == obj.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
  }
  return std::nullopt;
}

std::optional<std::string> text_field(const json& obj,
                                      std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = obj.find(k);
    if (it != obj.end() && it->is_string() && !it->get<std::string>().empty())
      return it->get<std::string>();
  }
  return std::nullopt;
}

Message parse_tweet(const json& t, const fs::path& where) {
  Message m;
  auto id = id_field(t, {"id_str", "id"});
  if (!id) throw IngestError("tweet without id in " + where.string());
  m.id = *id;
  auto created = text_field(t, {"created_at", "timestamp"});
  if (!created) throw IngestError("tweet " + m.id + " without created_at in " + where.string());
  try {
    m.timestamp = (created->size() == 30 && (*created)[3] == ' ')
                      ? parse_twitter_time(*created)
                      : parse_iso8601(*created);
  } catch (const DataError& e) {
    throw IngestError(where.string() + ": " + e.what());
  }
  m.text = text_field(t, {"full_text", "text"}).value_or("");
  if (auto rt = t.find("retweeted_status"); rt != t.end() && rt->is_object()) {
    m.is_retweet = true;
    m.retweet_of = id_field(*rt, {"id_str", "id"});
  } else if (m.text.rfind("RT @", 0) == 0) {
    m.is_retweet = true;
  }
  if (auto lang = text_field(t, {"lang"})) {
    m.language = *lang;
  } else {
    m.language = infer_language(m.text);
    m.language_inferred = true;
  }
  return m;
}

struct ThreadDir {
  fs::path path;
  std::string story;
  std::string thread_id;
};

void find_threads(const fs::path& dir, const PhemeOptions& opts,
                  std::vector<ThreadDir>& out) {
  std::vector<fs::path> children;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) children.push_back(e.path());
  }
  std::sort(children.begin(), children.end());
  for (const auto& child : children) {
    if (fs::is_directory(child / "source-tweets")) {
      out.push_back({child, child.parent_path().filename().string(),
                     child.filename().string()});
      continue;
    }
    if (dir.filename() == "threads" && child.filename() != opts.thread_language)
      continue;
    if (child.filename() == "annotations") continue;
    find_threads(child, opts, out);
  }
}

struct TweetAnnotation {
  ThreadAnnotation ann;
  bool has_support = false;
  bool has_response = false;
};

struct ThreadMeta {
  std::optional<std::string> rumour_key;
  std::optional<std::string> claim;
  std::optional<std::string> event;
  std::map<std::string, TweetAnnotation> tweets;
  bool annotated = false;
};

void absorb_record(const json& rec, const std::string& thread_ctx,
                   ThreadMeta& meta) {
  if (!rec.is_object()) return;
  meta.annotated = true;
  if (!meta.rumour_key)
    meta.rumour_key = text_field(rec, {"rumour_id", "rumour", "rumourid", "category"});
  if (!meta.claim) meta.claim = text_field(rec, {"claim", "category"});
  if (!meta.event) meta.event = text_field(rec, {"event"});
  auto tweet_id = id_field(rec, {"tweetid", "tweet_id"});
  if (!tweet_id) return;
  TweetAnnotation& ta = meta.tweets[*tweet_id];
  const std::string ctx = "thread " + thread_ctx;
  if (auto v = text_field(rec, {"support"})) {
    ta.ann.source_support = parse_source_support(*v, ctx);
    ta.has_support = true;
  }
  if (auto v = text_field(rec, {"responsetype-vs-source", "responsetype_vs_source"})) {
    ta.ann.reply_response = parse_reply_response(*v, ctx);
    ta.has_response = true;
  }
  if (auto v = text_field(rec, {"certainty"})) ta.ann.certainty = parse_certainty(*v, ctx);
  if (auto v = text_field(rec, {"evidentiality"})) ta.ann.evidentiality = *v;
}

void warn(IngestSummary& s, std::string msg) {
  std::cerr << "warning: " << msg << '\n';
  s.warnings.push_back(std::move(msg));
}

}  // namespace

SourceSupport parse_source_support(std::string_view v, std::string_view context) {
  const std::string s = normalize_enum(v);
  if (s == "supporting" || s == "support" || s == "supports") return SourceSupport::supporting;
  if (s == "denying" || s == "deny" || s == "denies" || s == "refuting")
    return SourceSupport::denying;
  if (s == "underspecified" || s == "unspecified" || s == "neutral")
    return SourceSupport::underspecified;
  unknown_value("support", v, context);
}

ReplyResponse parse_reply_response(std::string_view v, std::string_view context) {
  const std::string s = normalize_enum(v);
  if (s == "agreed" || s == "agree" || s == "agreeing") return ReplyResponse::agreed;
  if (s == "disagreed" || s == "disagree" || s == "disagreeing")
    return ReplyResponse::disagreed;
  if (s == "appeal-for-more-information" || s == "appeal-for-more-info" ||
      s == "appeal" || s == "query")
    return ReplyResponse::appeal_for_more_info;
  if (s == "comment" || s == "commenting") return ReplyResponse::comment;
  unknown_value("response type", v, context);
}

Certainty parse_certainty(std::string_view v, std::string_view context) {
  const std::string s = normalize_enum(v);
  if (s == "certain") return Certainty::certain;
  if (s == "somewhat-certain") return Certainty::somewhat_certain;
  if (s == "uncertain") return Certainty::uncertain;
  if (s == "n/a" || s == "na" || s == "underspecified" || s == "unspecified" ||
      s == "null" || s.empty())
    return Certainty::not_applicable;
  unknown_value("certainty", v, context);
}

Stance resolve_stance(const ThreadAnnotation& ann, bool is_source,
                      SourceSupport source_support) {
  auto source_stance = [](SourceSupport s) {
    switch (s) {
      case SourceSupport::supporting: return Stance::supporting;
      case SourceSupport::denying: return Stance::against;
      case SourceSupport::underspecified: return Stance::neutral;
    }
    return Stance::neutral;
  };
  if (is_source) return source_stance(ann.source_support.value_or(source_support));
  const Stance base = source_stance(source_support);
  if (!ann.reply_response) return Stance::neutral;
  switch (*ann.reply_response) {
    case ReplyResponse::agreed:
      return base;
    case ReplyResponse::disagreed:
      if (ann.certainty == Certainty::certain ||
          ann.certainty == Certainty::somewhat_certain)
        return static_cast<Stance>(-value_of(base));
      return Stance::neutral;
    case ReplyResponse::appeal_for_more_info:
    case ReplyResponse::comment:
      return Stance::neutral;
  }
  return Stance::neutral;
}

PhemeDataset load_pheme(const fs::path& root, const PhemeOptions& options) {
  if (!fs::is_directory(root))
    throw IngestError("PHEME root " + root.string() + " is not a directory");
  PhemeDataset out;
  IngestSummary& summary = out.summary;

  std::vector<ThreadDir> threads;
  find_threads(root, options, threads);

  std::map<std::string, ThreadMeta> meta;
  if (fs::is_directory(root / "annotations")) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(root / "annotations")) {
      if (e.is_regular_file() && e.path().extension() == ".json")
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      for (const auto& rec : parse_records(f)) {
        if (auto tid = id_field(rec, {"threadid", "thread_id"}))
          absorb_record(rec, *tid, meta[*tid]);
      }
    }
  }

  // rumour key -> rumour index, in first-seen order.
  std::map<std::string, std::size_t> rumour_index;
  std::set<std::string> stories;
  for (const auto& td : threads) {
    ThreadMeta& tm = meta[td.thread_id];
    const fs::path local = td.path / "annotation.json";
    if (fs::exists(local)) {
      for (const auto& rec : parse_records(local)) absorb_record(rec, td.thread_id, tm);
    }
    if (!tm.annotated) {
      ++summary.skipped_threads;
      warn(summary, "thread " + td.thread_id + " has no annotation; skipped");
      continue;
    }

    std::vector<Message> msgs;
    std::vector<fs::path> sources;
    for (const auto& e : fs::directory_iterator(td.path / "source-tweets")) {
      if (e.path().extension() == ".json") sources.push_back(e.path());
    }
    if (sources.empty()) {
      ++summary.skipped_threads;
      warn(summary, "thread " + td.thread_id + " has no source tweet; skipped");
      continue;
    }
    std::sort(sources.begin(), sources.end());
    for (const auto& p : sources) msgs.push_back(parse_tweet(parse_json_file(p), p));
    const std::string source_id = msgs.front().id;
    const std::size_t n_sources = msgs.size();

    if (fs::is_directory(td.path / "reactions")) {
      std::vector<fs::path> reactions;
      for (const auto& e : fs::directory_iterator(td.path / "reactions")) {
        if (e.path().extension() == ".json") reactions.push_back(e.path());
      }
      std::sort(reactions.begin(), reactions.end());
      for (const auto& p : reactions) msgs.push_back(parse_tweet(parse_json_file(p), p));
    }
    if (fs::exists(td.path / "retweets.json")) {
      for (const auto& rec : parse_records(td.path / "retweets.json")) {
        Message m = parse_tweet(rec, td.path / "retweets.json");
        m.is_retweet = true;
        if (!m.retweet_of) m.retweet_of = source_id;
        msgs.push_back(std::move(m));
      }
    }

    std::optional<SourceSupport> source_support;
    if (auto it = tm.tweets.find(source_id); it != tm.tweets.end())
      source_support = it->second.ann.source_support;

    for (std::size_t i = 0; i < msgs.size(); ++i) {
      Message& m = msgs[i];
      m.thread_id = td.thread_id;
      if (m.is_retweet) continue;
      const bool is_source = i < n_sources;
      auto it = tm.tweets.find(m.id);
      if (is_source) {
        if (source_support)
          m.gold_stance = resolve_stance(ThreadAnnotation{source_support, {}, {}, {}},
                                         true, *source_support);
      } else if (it != tm.tweets.end() && it->second.has_response && source_support) {
        m.gold_stance = resolve_stance(it->second.ann, false, *source_support);
      }
    }

    const std::string key = tm.rumour_key.value_or(td.thread_id);
    const std::string story = tm.event.value_or(td.story);
    auto [pos, inserted] = rumour_index.try_emplace(key, out.rumours.size());
    if (inserted) {
      Rumour r;
      r.rumour_id = key;
      r.claim = tm.claim.value_or(msgs.front().text);
      r.story = story;
      out.rumours.push_back(std::move(r));
    }
    Rumour& r = out.rumours[pos->second];
    stories.insert(story);
    ++summary.threads;
    std::set<std::string> ids;
    for (const auto& m : r.messages) ids.insert(m.id);
    for (auto& m : msgs) {
      if (!ids.insert(m.id).second) continue;
      ++summary.tweets;
      r.messages.push_back(std::move(m));
    }
  }
  for (auto& r : out.rumours) r.sort_messages();
  summary.rumours = out.rumours.size();
  summary.stories = stories.size();
  return out;
}

}  // namespace stance
