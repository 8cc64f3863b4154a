#include "stance/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "utf8.hpp"

namespace stance {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace chr = std::chrono;

// ---------------------------------------------------------------------------
// Timestamps

namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t count,
                 std::string_view whole) {
  if (pos + count > s.size())
    throw DataError("truncated timestamp '" + std::string(whole) + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i])))
      throw DataError("malformed timestamp '" + std::string(whole) + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

Timestamp make_time(int y, int mo, int d, int h, int mi, int s, int ms,
                    int offset_minutes, std::string_view whole) {
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60)
    throw DataError("invalid date in timestamp '" + std::string(whole) + "'");
  return Timestamp{chr::sys_days{ymd}.time_since_epoch() + chr::hours{h} +
                   chr::minutes{mi} + chr::seconds{s} + chr::milliseconds{ms} -
                   chr::minutes{offset_minutes}};
}

}  // namespace

Timestamp parse_iso8601(std::string_view t) {
  const int y = parse_digits(t, 0, 4, t);
  if (t.size() < 19 || t[4] != '-' || t[7] != '-' ||
      (t[10] != 'T' && t[10] != ' ') || t[13] != ':' || t[16] != ':')
    throw DataError("malformed ISO-8601 timestamp '" + std::string(t) + "'");
  const int mo = parse_digits(t, 5, 2, t);
  const int d = parse_digits(t, 8, 2, t);
  const int h = parse_digits(t, 11, 2, t);
  const int mi = parse_digits(t, 14, 2, t);
  const int s = parse_digits(t, 17, 2, t);
  std::size_t pos = 19;
  int ms = 0;
  if (pos < t.size() && t[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < t.size() && std::isdigit(static_cast<unsigned char>(t[pos]))) {
      if (digits < 3) ms = ms * 10 + (t[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0)
      throw DataError("malformed fractional seconds in '" + std::string(t) + "'");
    for (; digits < 3; ++digits) ms *= 10;
  }
  int offset = 0;
  if (pos < t.size()) {
    if (t[pos] == 'Z' && pos + 1 == t.size()) {
      ++pos;
    } else if ((t[pos] == '+' || t[pos] == '-') && pos + 6 == t.size() &&
               t[pos + 3] == ':') {
      const int sign = t[pos] == '-' ? -1 : 1;
      offset = sign * (parse_digits(t, pos + 1, 2, t) * 60 +
                       parse_digits(t, pos + 4, 2, t));
      pos += 6;
    } else {
      throw DataError("malformed timezone in '" + std::string(t) + "'");
    }
  }
  return make_time(y, mo, d, h, mi, s, ms, offset, t);
}

Timestamp parse_twitter_time(std::string_view t) {
  // "Www Mmm dd hh:mm:ss +zzzz yyyy"
  static constexpr std::string_view months[] = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  if (t.size() != 30 || t[3] != ' ' || t[7] != ' ' || t[10] != ' ' ||
      t[19] != ' ' || t[25] != ' ')
    throw DataError("malformed Twitter timestamp '" + std::string(t) + "'");
  int mo = 0;
  for (int i = 0; i < 12; ++i) {
    if (t.substr(4, 3) == months[i]) mo = i + 1;
  }
  if (!mo) throw DataError("unknown month in '" + std::string(t) + "'");
  const int d = parse_digits(t, 8, 2, t);
  const int h = parse_digits(t, 11, 2, t);
  const int mi = parse_digits(t, 14, 2, t);
  const int s = parse_digits(t, 17, 2, t);
  const int sign = t[20] == '-' ? -1 : 1;
  const int offset =
      sign * (parse_digits(t, 21, 2, t) * 60 + parse_digits(t, 23, 2, t));
  const int y = parse_digits(t, 26, 4, t);
  return make_time(y, mo, d, h, mi, s, 0, offset, t);
}

std::string format_iso8601(Timestamp t) {
  const auto days = chr::floor<chr::days>(t);
  const chr::year_month_day ymd{days};
  const auto rest = t - days;
  const auto h = chr::duration_cast<chr::hours>(rest);
  const auto mi = chr::duration_cast<chr::minutes>(rest - h);
  const auto s = chr::duration_cast<chr::seconds>(rest - h - mi);
  const auto ms = (rest - h - mi - s).count();
  char buf[40];
  if (ms) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(h.count()),
                  static_cast<int>(mi.count()), static_cast<int>(s.count()),
                  static_cast<int>(ms));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(h.count()),
                  static_cast<int>(mi.count()), static_cast<int>(s.count()));
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Message / Rumour

bool Message::is_english() const noexcept {
  return language == "en" || language.rfind("en-", 0) == 0;
}

void Rumour::sort_messages() {
  std::stable_sort(messages.begin(), messages.end(),
                   [](const Message& a, const Message& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                     return a.id < b.id;
                   });
}

std::size_t Rumour::original_english_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(messages.begin(), messages.end(), [](const Message& m) {
        return !m.is_retweet && m.is_english();
      }));
}

std::string infer_language(std::string_view text) {
  std::size_t letters = 0;
  std::size_t ascii = 0;
  for (char32_t c : utf8::decode(text)) {
    const bool ascii_letter = (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    if (ascii_letter) {
      ++letters;
      ++ascii;
    } else if (c >= 0xC0 && c != 0xD7 && c != 0xF7) {
      ++letters;
    }
  }
  if (letters == 0) return "und";
  return static_cast<double>(ascii) >= 0.9 * static_cast<double>(letters)
             ? "en"
             : "und";
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

std::string line_context(std::string_view source, std::size_t lineno) {
  return std::string(source) + ":" + std::to_string(lineno);
}

const json& require(const json& obj, const char* field, const std::string& ctx) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null())
    throw IngestError(ctx + ": missing required field '" + field + "'");
  return *it;
}

std::string require_string(const json& obj, const char* field,
                           const std::string& ctx) {
  const json& v = require(obj, field, ctx);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw IngestError(ctx + ": field '" + field + "' must be a string");
}

std::optional<std::string> optional_string(const json& obj, const char* field,
                                           const std::string& ctx) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw IngestError(ctx + ": field '" + field + "' must be a string");
}

Timestamp read_timestamp(const json& v, const std::string& ctx) {
  try {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s.size() == 30 && s[3] == ' ') return parse_twitter_time(s);
      return parse_iso8601(s);
    }
    if (v.is_number()) {
      return Timestamp{chr::milliseconds{
          static_cast<long long>(v.get<double>() * 1000.0)}};
    }
  } catch (const DataError& e) {
    throw IngestError(ctx + ": " + e.what());
  }
  throw IngestError(ctx + ": timestamp must be an ISO-8601 string or epoch seconds");
}

}  // namespace

std::vector<Rumour> parse_jsonl(std::string_view content,
                                std::string_view source_name) {
  std::vector<Rumour> rumours;
  std::unordered_map<std::string, std::size_t> by_id;
  std::vector<std::unordered_set<std::string>> seen;

  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == content.size()) break;
      continue;
    }
    const std::string ctx = line_context(source_name, lineno);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IngestError(ctx + ": invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw IngestError(ctx + ": expected a JSON object");

    Message m;
    const std::string rumour_id = require_string(obj, "rumour_id", ctx);
    m.id = require_string(obj, "id", ctx);
    m.timestamp = read_timestamp(require(obj, "timestamp", ctx), ctx);
    const json& text = require(obj, "text", ctx);
    if (!text.is_string()) throw IngestError(ctx + ": field 'text' must be a string");
    m.text = text.get<std::string>();
    if (auto it = obj.find("is_retweet"); it != obj.end() && !it->is_null()) {
      if (!it->is_boolean())
        throw IngestError(ctx + ": field 'is_retweet' must be a boolean");
      m.is_retweet = it->get<bool>();
    }
    m.retweet_of = optional_string(obj, "retweet_of", ctx);
    if (auto lang = optional_string(obj, "language", ctx)) {
      m.language = *lang;
    } else {
      m.language = infer_language(m.text);
      m.language_inferred = true;
    }
    if (auto it = obj.find("gold_stance"); it != obj.end() && !it->is_null()) {
      if (!it->is_number_integer())
        throw IngestError(ctx + ": gold_stance must be -1, 0, 1 or null");
      auto s = stance_from_int(it->get<long long>());
      if (!s) throw IngestError(ctx + ": gold_stance must be -1, 0, 1 or null");
      m.gold_stance = s;
    }
    m.thread_id = optional_string(obj, "thread_id", ctx);

    auto [pos, inserted] = by_id.try_emplace(rumour_id, rumours.size());
    if (inserted) {
      rumours.push_back(Rumour{rumour_id, {}, std::nullopt, {}});
      seen.emplace_back();
    }
    Rumour& r = rumours[pos->second];
    if (r.claim.empty()) {
      if (auto claim = optional_string(obj, "claim", ctx)) r.claim = *claim;
    }
    if (!r.story) r.story = optional_string(obj, "story", ctx);
    if (!seen[pos->second].insert(m.id).second)
      throw IngestError(ctx + ": duplicate message id '" + m.id +
                        "' in rumour '" + rumour_id + "'");
    r.messages.push_back(std::move(m));
  }
  for (auto& r : rumours) r.sort_messages();
  return rumours;
}

std::vector<Rumour> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str(), path.string());
}

std::string to_jsonl(const std::vector<Rumour>& rumours) {
  std::string out;
  for (const auto& r : rumours) {
    for (const auto& m : r.messages) {
      ordered_json j;
      j["rumour_id"] = r.rumour_id;
      j["claim"] = r.claim;
      j["story"] = r.story ? json(*r.story) : json(nullptr);
      j["id"] = m.id;
      j["timestamp"] = format_iso8601(m.timestamp);
      j["text"] = m.text;
      j["is_retweet"] = m.is_retweet;
      j["retweet_of"] = m.retweet_of ? json(*m.retweet_of) : json(nullptr);
      j["language"] = m.language;
      j["gold_stance"] =
          m.gold_stance ? json(value_of(*m.gold_stance)) : json(nullptr);
      j["thread_id"] = m.thread_id ? json(*m.thread_id) : json(nullptr);
      out += j.dump(-1, ' ', false, json::error_handler_t::replace);
      out.push_back('\n');
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Rumour>& rumours) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_jsonl(rumours);
}

// ---------------------------------------------------------------------------
// Filtering

ClassificationPlan plan_classification(const Rumour& rumour) {
  const auto& msgs = rumour.messages;
  ClassificationPlan plan;
  plan.inherit_from.assign(msgs.size(), std::nullopt);
  plan.excluded.assign(msgs.size(), false);

  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < msgs.size(); ++i) index.emplace(msgs[i].id, i);

  // Follow retweet links to the first message that is not a linked retweet.
  auto root_of = [&](std::size_t i) -> std::optional<std::size_t> {
    std::size_t cur = i;
    for (std::size_t hops = 0; hops <= msgs.size(); ++hops) {
      const Message& m = msgs[cur];
      if (!m.is_retweet || !m.retweet_of) return cur;
      auto it = index.find(*m.retweet_of);
      if (it == index.end()) return cur;
      cur = it->second;
    }
    return std::nullopt;  // cycle
  };

  for (std::size_t i = 0; i < msgs.size(); ++i) {
    if (!msgs[i].is_english()) {
      plan.excluded[i] = true;
      continue;
    }
    auto root = root_of(i);
    if (root && *root != i && msgs[*root].is_english()) {
      plan.inherit_from[i] = *root;
    } else {
      plan.participants.push_back(i);
    }
  }
  return plan;
}

FilterResult filter_rumours(std::vector<Rumour> rumours,
                            std::size_t min_original_english) {
  FilterResult out;
  FilterSummary& s = out.summary;
  s.rumours_in = rumours.size();
  for (auto& r : rumours) {
    s.messages_in += r.messages.size();
    if (r.original_english_count() < min_original_english) {
      s.dropped_small_rumour += r.messages.size();
      continue;
    }
    const auto before = r.messages.size();
    std::erase_if(r.messages, [](const Message& m) { return !m.is_english(); });
    s.dropped_non_english += before - r.messages.size();
    s.original_english += r.original_english_count();
    const ClassificationPlan plan = plan_classification(r);
    s.participating += plan.participants.size();
    s.retweets_inheriting += static_cast<std::size_t>(
        std::count_if(plan.inherit_from.begin(), plan.inherit_from.end(),
                      [](const auto& v) { return v.has_value(); }));
    out.rumours.push_back(std::move(r));
  }
  s.rumours_kept = out.rumours.size();
  return out;
}

}  // namespace stance
