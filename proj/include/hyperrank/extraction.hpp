#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperrank/corpus.hpp"
#include "hyperrank/entities.hpp"
#include "hyperrank/openai_client.hpp"

namespace hyperrank {

/// Produces raw (un-normalized) entity mentions for a piece of text.
class ExtractionClient {
 public:
  virtual ~ExtractionClient() = default;
  virtual std::vector<std::string> extract(std::string_view text) const = 0;
  /// Identifies the extractor configuration; caches are namespaced by it.
  virtual std::string id() const = 0;
};

/// Network-free extractor: maximal runs of capitalized tokens, broken by punctuation,
/// with leading stopwords ("The", "In", "What", ...) trimmed.
class OfflineExtractor final : public ExtractionClient {
 public:
  std::vector<std::string> extract(std::string_view text) const override;
  std::string id() const override { return "offline-capitalized-spans-v1"; }
};

/// One-shot prompt: a system instruction, one worked example, then the target passage.
struct ExtractionPrompt {
  std::string system;
  std::string example_input;
  std::string example_output;
  std::string input_template;  // contains the literal placeholder {passage}

  static ExtractionPrompt defaults();

  /// Reads a template file made of `### system`, `### example_input`,
  /// `### example_output` and `### input` sections. Missing sections keep defaults.
  static ExtractionPrompt from_file(const std::filesystem::path& path);
  static ExtractionPrompt parse(std::string_view text);

  std::vector<ChatMessage> render(std::string_view passage) const;
};

/// Pulls a list of mentions out of an LLM reply. Accepts `{"named_entities": [...]}`,
/// a bare JSON array (optionally inside a code fence), or one mention per line.
std::vector<std::string> parse_entity_reply(std::string_view reply);

class ChatExtractor final : public ExtractionClient {
 public:
  ChatExtractor(std::shared_ptr<const OpenAIClient> client, ExtractionPrompt prompt);
  std::vector<std::string> extract(std::string_view text) const override;
  std::string id() const override;

 private:
  std::shared_ptr<const OpenAIClient> client_;
  ExtractionPrompt prompt_;
};

/// Passage-id keyed store of extracted entity sets. JSONL on disk,
/// `{"passage_id": ..., "entities": [...]}` per line, sorted by passage id.
class ExtractionCache {
 public:
  ExtractionCache() = default;
  ExtractionCache(ExtractionCache&& other) noexcept;
  ExtractionCache& operator=(ExtractionCache&& other) noexcept;
  static ExtractionCache load(const std::filesystem::path& path);  // missing file -> empty

  std::optional<EntitySet> get(const std::string& passage_id) const;
  void put(const EntitySet& set);
  std::size_t size() const;

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> entries_;
};

/// Cache lookup, else extractor call; the result is normalized, deduplicated and stored
/// in `cache` when given. Remote failures surface as ExtractionError.
EntitySet extract_entities(const Passage& passage, const ExtractionClient& extractor,
                           ExtractionCache* cache = nullptr);

/// Extracts every passage with at most `max_in_flight` concurrent extractor calls.
/// Output is aligned with `passages`. A failure does not stop the other passages; once all
/// are attempted, the failure at the lowest index is rethrown and successes stay in `cache`.
std::vector<EntitySet> extract_corpus(const std::vector<Passage>& passages,
                                      const ExtractionClient& extractor, ExtractionCache& cache,
                                      std::size_t max_in_flight = 1);

}  // namespace hyperrank
