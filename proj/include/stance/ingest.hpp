#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stance/types.hpp"

namespace stance {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// "2014-08-09T22:31:02Z" (fractional seconds and +hh:mm offsets accepted).
Timestamp parse_iso8601(std::string_view text);
// "Sat Aug 09 22:31:02 +0000 2014" as found in Twitter API payloads.
Timestamp parse_twitter_time(std::string_view text);
std::string format_iso8601(Timestamp t);

struct Message {
  std::string id;
  Timestamp timestamp{};
  std::string text;
  bool is_retweet = false;
  std::optional<std::string> retweet_of;
  std::string language;
  // Set when the language tag was guessed rather than read from the data.
  bool language_inferred = false;
  std::optional<Stance> gold_stance;
  std::optional<std::string> thread_id;

  bool is_english() const noexcept;
};

struct Rumour {
  std::string rumour_id;
  std::string claim;
  std::optional<std::string> story;
  std::vector<Message> messages;

  // Ascending timestamp, ties by id.
  void sort_messages();
  std::size_t original_english_count() const noexcept;
};

// Guess: "en" when at least 90% of letters are ASCII, "und" otherwise.
std::string infer_language(std::string_view text);

// ---------------------------------------------------------------------------
// PHEME support annotations

enum class SourceSupport { supporting, denying, underspecified };
enum class ReplyResponse { agreed, disagreed, appeal_for_more_info, comment };
enum class Certainty { certain, somewhat_certain, uncertain, not_applicable };

// Mapping from release-specific spellings; unknown values throw
// IngestError mentioning `context`.
SourceSupport parse_source_support(std::string_view v, std::string_view context);
ReplyResponse parse_reply_response(std::string_view v, std::string_view context);
Certainty parse_certainty(std::string_view v, std::string_view context);

struct ThreadAnnotation {
  std::optional<SourceSupport> source_support;
  std::optional<ReplyResponse> reply_response;
  Certainty certainty = Certainty::not_applicable;
  std::string evidentiality;
};

// Resolves the two-level PHEME support annotation to a stance towards the
// rumour. Sources map supporting/denying/underspecified to +1/-1/0.
// Replies: agreed inherits the source stance, disagreed with (somewhat)
// certain certainty inverts it, everything else is neutral.
Stance resolve_stance(const ThreadAnnotation& ann, bool is_source,
                      SourceSupport source_support);

struct IngestSummary {
  std::size_t threads = 0;
  std::size_t tweets = 0;
  std::size_t rumours = 0;
  std::size_t stories = 0;
  std::size_t skipped_threads = 0;
  std::vector<std::string> warnings;
};

struct PhemeOptions {
  // Thread folders below a "threads/<lang>" directory are only read when
  // <lang> matches; folders outside such a layout are always read.
  std::string thread_language = "en";
};

struct PhemeDataset {
  std::vector<Rumour> rumours;
  IngestSummary summary;
};

PhemeDataset load_pheme(const std::filesystem::path& root,
                        const PhemeOptions& options = {});

// ---------------------------------------------------------------------------
// Canonical JSONL

std::vector<Rumour> load_jsonl(const std::filesystem::path& path);
std::vector<Rumour> parse_jsonl(std::string_view content,
                                std::string_view source_name = "<memory>");
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Rumour>& rumours);
std::string to_jsonl(const std::vector<Rumour>& rumours);

// ---------------------------------------------------------------------------
// Filtering

struct FilterSummary {
  std::size_t rumours_in = 0;
  std::size_t rumours_kept = 0;
  std::size_t messages_in = 0;
  std::size_t dropped_small_rumour = 0;  // all messages of dropped rumours
  std::size_t dropped_non_english = 0;   // within kept rumours
  std::size_t retweets_inheriting = 0;   // linked retweets, inherit a class
  std::size_t participating = 0;         // rows that enter the graph
  std::size_t original_english = 0;      // non-retweet English, kept rumours
};

struct FilterResult {
  std::vector<Rumour> rumours;
  FilterSummary summary;
};

// Keeps rumours with at least `min_original_english` non-retweet English
// messages and removes non-English messages from the kept ones.
FilterResult filter_rumours(std::vector<Rumour> rumours,
                            std::size_t min_original_english = 50);

// Which messages of a rumour are classified directly and which copy the
// class of the message they retweet.
struct ClassificationPlan {
  std::vector<std::size_t> participants;  // message indices, chronological
  std::vector<std::optional<std::size_t>> inherit_from;  // per message
  std::vector<bool> excluded;  // non-English, not classified at all
};

ClassificationPlan plan_classification(const Rumour& rumour);

}  // namespace stance
