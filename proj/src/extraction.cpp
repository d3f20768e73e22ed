#include "hyperrank/extraction.hpp"

#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <exception>
#include <thread>
#include <unordered_set>

#include "hyperrank/errors.hpp"
#include "hyperrank/io.hpp"
#include "json.hpp"

namespace hyperrank {

namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kWords = {
      "a",       "an",      "the",   "and",    "or",     "but",   "nor",   "so",     "yet",
      "in",      "on",      "at",    "of",     "for",    "to",    "from",  "by",     "with",
      "as",      "into",    "onto",  "about",  "after",  "before", "during", "since", "until",
      "while",   "when",    "where", "what",   "which",  "who",   "whom",  "whose",  "why",
      "how",     "he",      "she",   "it",     "they",   "we",    "i",     "you",    "his",
      "her",     "its",     "their", "our",    "my",     "your",  "this",  "that",   "these",
      "those",   "there",   "here",  "is",     "was",    "are",   "were",  "be",     "been",
      "do",      "does",    "did",   "has",    "have",   "had",   "if",    "then",   "also",
      "however", "although", "though", "both", "either", "neither", "each", "every", "some",
      "many",    "most",    "other", "such",   "not",    "no",    "all",   "any",    "can",
      "could",   "would",   "should", "will",  "may",    "might", "must",  "among",  "between",
      "upon",    "than"};
  return kWords;
}

bool is_apostrophe(UChar32 c) { return c == '\'' || c == 0x2019; }

bool is_word_char(UChar32 c) {
  return u_isalnum(c) || u_charType(c) == U_NON_SPACING_MARK ||
         u_charType(c) == U_COMBINING_SPACING_MARK;
}

struct Token {
  icu::UnicodeString text;
  bool capitalized = false;
  bool break_before = false;  // punctuation separates it from the previous token
};

// Drops a trailing possessive ('s) and any dangling apostrophes or hyphens.
void strip_word_tail(icu::UnicodeString& word) {
  int32_t n = word.length();
  if (n >= 2 && (word.charAt(n - 1) == 's' || word.charAt(n - 1) == 'S') &&
      is_apostrophe(word.charAt(n - 2))) {
    word.truncate(n - 2);
  }
  while (!word.isEmpty() &&
         (is_apostrophe(word.charAt(word.length() - 1)) || word.charAt(word.length() - 1) == '-')) {
    word.truncate(word.length() - 1);
  }
}

std::vector<Token> tokenize(std::string_view text) {
  auto u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  std::vector<Token> tokens;
  icu::UnicodeString word;
  bool pending_break = false;

  auto flush = [&] {
    strip_word_tail(word);
    if (!word.isEmpty()) {
      UChar32 first = word.char32At(0);
      tokens.push_back({word, u_isupper(first) || u_istitle(first), pending_break});
      pending_break = false;
    }
    word.remove();
  };

  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    i += U16_LENGTH(c);
    if (is_word_char(c)) {
      word.append(c);
    } else if ((is_apostrophe(c) || c == '-') && !word.isEmpty()) {
      word.append(c);
    } else if (u_isUWhiteSpace(c)) {
      flush();
    } else {
      flush();
      pending_break = true;
    }
  }
  flush();
  return tokens;
}

std::string lower_utf8(const icu::UnicodeString& s) {
  icu::UnicodeString copy(s);
  copy.toLower(icu::Locale::getRoot());
  std::string out;
  copy.toUTF8String(out);
  return out;
}

std::string strip_code_fence(std::string_view reply) {
  std::string s(reply);
  auto fence = s.find("```");
  if (fence == std::string::npos) return s;
  auto body_start = s.find('\n', fence);
  auto close = s.find("```", fence + 3);
  if (body_start == std::string::npos || close == std::string::npos || close < body_start) return s;
  return s.substr(body_start + 1, close - body_start - 1);
}

std::optional<std::vector<std::string>> entities_from_json(const nlohmann::json& j) {
  const nlohmann::json* list = nullptr;
  if (j.is_array()) {
    list = &j;
  } else if (j.is_object()) {
    for (const char* key : {"named_entities", "entities"}) {
      if (j.contains(key) && j.at(key).is_array()) {
        list = &j.at(key);
        break;
      }
    }
  }
  if (list == nullptr) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& item : *list) {
    if (item.is_string()) out.push_back(item.get<std::string>());
  }
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<std::string> OfflineExtractor::extract(std::string_view text) const {
  const auto tokens = tokenize(text);
  const auto& stop = stopwords();
  std::vector<std::string> mentions;

  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!tokens[i].capitalized) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < tokens.size() && tokens[end].capitalized && !tokens[end].break_before) ++end;

    std::size_t begin = i;
    while (begin < end && stop.contains(lower_utf8(tokens[begin].text))) ++begin;
    if (begin < end) {
      icu::UnicodeString span;
      for (std::size_t k = begin; k < end; ++k) {
        if (k > begin) span.append(static_cast<UChar>(' '));
        span.append(tokens[k].text);
      }
      std::string utf8;
      span.toUTF8String(utf8);
      mentions.push_back(std::move(utf8));
    }
    i = end;
  }
  return mentions;
}

ExtractionPrompt ExtractionPrompt::defaults() {
  ExtractionPrompt p;
  p.system =
      "Your task is to extract named entities from the given paragraph. "
      "Respond with a JSON object containing a single key \"named_entities\" whose value is "
      "the list of entities, in the order they first appear.";
  p.example_input =
      "Radio City\n"
      "Radio City is India's first private FM radio station and was started on 3 July 2001. "
      "It plays Hindi, English and regional songs. Radio City recently forayed into New Media "
      "in May 2008 with the launch of a music portal - PlanetRadiocity.com.";
  p.example_output =
      "{\"named_entities\": [\"Radio City\", \"India\", \"3 July 2001\", \"Hindi\", "
      "\"English\", \"May 2008\", \"PlanetRadiocity.com\"]}";
  p.input_template = "{passage}";
  return p;
}

ExtractionPrompt ExtractionPrompt::parse(std::string_view text) {
  ExtractionPrompt p = defaults();
  std::string* current = nullptr;
  std::string buffer;
  auto commit = [&] {
    if (current != nullptr) *current = trim(buffer);
    buffer.clear();
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.starts_with("### ")) {
      commit();
      auto name = trim(line.substr(4));
      if (name == "system") current = &p.system;
      else if (name == "example_input") current = &p.example_input;
      else if (name == "example_output") current = &p.example_output;
      else if (name == "input") current = &p.input_template;
      else throw ParseError("unknown prompt section '" + name + "'");
      continue;
    }
    buffer.append(line);
    buffer.push_back('\n');
    if (end == text.size()) break;
  }
  commit();
  if (p.input_template.find("{passage}") == std::string::npos) {
    throw ParseError("prompt input section lacks the {passage} placeholder");
  }
  return p;
}

ExtractionPrompt ExtractionPrompt::from_file(const std::filesystem::path& path) {
  return parse(io::read_text_file(path));
}

std::vector<ChatMessage> ExtractionPrompt::render(std::string_view passage) const {
  std::string input = input_template;
  auto at = input.find("{passage}");
  input.replace(at, 9, passage);
  return {{"system", system},
          {"user", example_input},
          {"assistant", example_output},
          {"user", std::move(input)}};
}

std::vector<std::string> parse_entity_reply(std::string_view reply) {
  std::string body = strip_code_fence(reply);
  for (auto [open, close] : {std::pair{'{', '}'}, std::pair{'[', ']'}}) {
    auto b = body.find(open);
    auto e = body.rfind(close);
    if (b == std::string::npos || e == std::string::npos || e < b) continue;
    auto parsed = nlohmann::json::parse(body.substr(b, e - b + 1), nullptr, false);
    if (parsed.is_discarded()) continue;
    if (auto list = entities_from_json(parsed)) return *list;
  }

  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto end = body.find('\n', pos);
    if (end == std::string::npos) end = body.size();
    auto line = trim(std::string_view(body).substr(pos, end - pos));
    pos = end + 1;
    while (!line.empty() && (line.front() == '-' || line.front() == '*')) line = trim(line.substr(1));
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

ChatExtractor::ChatExtractor(std::shared_ptr<const OpenAIClient> client, ExtractionPrompt prompt)
    : client_(std::move(client)), prompt_(std::move(prompt)) {
  if (!client_) throw ContractError("ChatExtractor needs a client");
}

std::vector<std::string> ChatExtractor::extract(std::string_view text) const {
  return parse_entity_reply(client_->chat(prompt_.render(text)));
}

std::string ChatExtractor::id() const {
  std::string prompt_key = prompt_.system + '\x1f' + prompt_.example_input + '\x1f' +
                           prompt_.example_output + '\x1f' + prompt_.input_template;
  return "chat-" + client_->config().model + "-" + io::to_hex(io::fnv1a64(prompt_key)).substr(0, 8);
}

ExtractionCache::ExtractionCache(ExtractionCache&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  entries_ = std::move(other.entries_);
}

ExtractionCache& ExtractionCache::operator=(ExtractionCache&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    entries_ = std::move(other.entries_);
  }
  return *this;
}

ExtractionCache ExtractionCache::load(const std::filesystem::path& path) {
  ExtractionCache cache;
  if (!std::filesystem::exists(path)) return cache;
  auto text = io::read_text_file(path);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    auto line = std::string_view(text).substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto obj = nlohmann::json::parse(line);
      cache.entries_[obj.at("passage_id").get<std::string>()] =
          obj.at("entities").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what(),
                       line_no);
    }
  }
  return cache;
}

std::optional<EntitySet> ExtractionCache::get(const std::string& passage_id) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(passage_id);
  if (it == entries_.end()) return std::nullopt;
  return EntitySet{passage_id, it->second};
}

void ExtractionCache::put(const EntitySet& set) {
  std::lock_guard lock(mutex_);
  entries_[set.passage_id] = set.entities;
}

std::size_t ExtractionCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string ExtractionCache::serialize() const {
  std::lock_guard lock(mutex_);
  std::string out;
  for (const auto& [id, entities] : entries_) {
    out += nlohmann::json{{"passage_id", id}, {"entities", entities}}.dump();
    out += '\n';
  }
  return out;
}

void ExtractionCache::save(const std::filesystem::path& path) const {
  io::write_file_atomic(path, serialize());
}

EntitySet extract_entities(const Passage& passage, const ExtractionClient& extractor,
                           ExtractionCache* cache) {
  if (cache != nullptr) {
    if (auto hit = cache->get(passage.id)) return *hit;
  }
  std::vector<std::string> raw;
  try {
    raw = extractor.extract(passage.text);
  } catch (const RemoteError& e) {
    throw ExtractionError(passage.id, e.what());
  }
  auto set = make_entity_set(passage.id, raw);
  if (cache != nullptr) cache->put(set);
  return set;
}

std::vector<EntitySet> extract_corpus(const std::vector<Passage>& passages,
                                      const ExtractionClient& extractor, ExtractionCache& cache,
                                      std::size_t max_in_flight) {
  std::vector<EntitySet> out(passages.size());
  std::atomic<std::size_t> next{0};
  // Keep going after a failure so every other passage lands in the cache; report the
  // failure with the lowest passage index so the error is deterministic.
  std::exception_ptr first_error;
  std::size_t first_error_at = passages.size();
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= passages.size()) return;
      try {
        out[i] = extract_entities(passages[i], extractor, &cache);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < first_error_at) {
          first_error = std::current_exception();
          first_error_at = i;
        }
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(passages.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace hyperrank
