#include <regex>
#include <string>

#include "stance/features.hpp"
#include "utf8.hpp"

namespace stance {

namespace {

char32_t lower_cp(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if ((c >= 0x100 && c <= 0x12F) || (c >= 0x132 && c <= 0x137) ||
      (c >= 0x14A && c <= 0x177)) {
    return (c % 2 == 0) ? c + 1 : c;
  }
  if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) {
    return (c % 2 == 1) ? c + 1 : c;
  }
  if (c == 0x178) return 0xFF;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

bool is_space_cp(char32_t c) {
  return c == U' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_kept_punct_cp(char32_t c) {
  return c == U',' || c == U'.' || c == U'!' || c == U'?';
}

// Punctuation, symbols and invisible format/control characters that
// step (iii) deletes.
bool is_removed_cp(char32_t c) {
  if (c < 0x20 || c == 0x7F) return !is_space_cp(c);
  if (c < 0x80) {
    const bool punct = (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                       (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    return punct && !is_kept_punct_cp(c);
  }
  if (c >= 0x80 && c <= 0x9F) return !is_space_cp(c);
  if (c >= 0xA1 && c <= 0xBF) return c != 0xAA && c != 0xB5 && c != 0xBA;
  if (c == 0xD7 || c == 0xF7) return true;
  if (c >= 0x200B && c <= 0x200F) return true;
  if (c >= 0x2010 && c <= 0x2027) return true;
  if (c >= 0x202A && c <= 0x202E) return true;
  if (c >= 0x2030 && c <= 0x205E) return true;
  if (c >= 0x2060 && c <= 0x206F) return true;
  if (c >= 0x3001 && c <= 0x303F) return true;
  if (c >= 0xFE10 && c <= 0xFE6F) return true;
  if ((c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
      (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65))
    return true;
  if (c == 0xFEFF) return true;
  return false;
}

const std::regex& url_pattern() {
  static const std::regex re(R"((?:https?|ftp)://\S*|www\.\S+)",
                             std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& email_pattern() {
  static const std::regex re(
      R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})",
      std::regex::ECMAScript);
  return re;
}

const std::regex& mention_pattern() {
  static const std::regex re(R"(@\w+)", std::regex::ECMAScript);
  return re;
}

}  // namespace

bool is_retained_punctuation(std::string_view token) noexcept {
  return token == "," || token == "." || token == "!" || token == "?";
}

std::string lowercase(std::string_view text) {
  std::u32string cps = utf8::decode(text);
  for (char32_t& c : cps) c = lower_cp(c);
  return utf8::encode(cps);
}

TokenizedMessage preprocess(std::string_view raw_text,
                            const PreprocessOptions& options) {
  // (i)
  std::string text(raw_text);
  text = std::regex_replace(text, url_pattern(), " ");
  text = std::regex_replace(text, email_pattern(), " ");
  text = std::regex_replace(text, mention_pattern(), " ");

  std::u32string cps = utf8::decode(text);
  std::u32string cleaned;
  cleaned.reserve(cps.size());
  for (char32_t c : cps) {
    c = lower_cp(c);                     // (ii)
    if (is_removed_cp(c)) continue;      // (iii)
    if (is_space_cp(c)) c = U' ';
    const std::size_t n = cleaned.size();
    if (n >= 2 && cleaned[n - 1] == c && cleaned[n - 2] == c) continue;  // (iv)
    cleaned.push_back(c);
  }

  // (v) and tokenization: whitespace runs collapse by construction.
  TokenizedMessage out;
  std::u32string current;
  auto flush = [&] {
    if (current.empty()) return;
    std::string token = utf8::encode(current);
    current.clear();
    if (options.stop_words && options.stop_words->count(token)) return;
    if (options.stem) token = porter_stem(token);
    out.tokens.push_back(std::move(token));
  };
  for (char32_t c : cleaned) {
    if (c == U' ') {
      flush();
    } else if (is_kept_punct_cp(c)) {
      flush();
      out.tokens.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(c);
    }
  }
  flush();
  return out;
}

std::string render(const TokenizedMessage& msg) {
  std::string out;
  for (std::size_t i = 0; i < msg.tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += msg.tokens[i];
  }
  return out;
}

}  // namespace stance
