#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hyperrank {

/// A corpus unit. Passages are the hyperedges of the entity hypergraph.
struct Passage {
  std::string id;
  std::string title;
  std::string text;

  bool operator==(const Passage&) const = default;
};

/// Loads a JSONL corpus (`{"id", "title", "text"}` per line) and returns the passages
/// sorted by id. Blank lines are skipped but still counted for error line numbers.
///
/// Throws ParseError (with the 1-based line) on malformed JSON, missing/mistyped keys,
/// or text that is empty after trimming, and ValidationError on duplicate ids.
std::vector<Passage> load_corpus(const std::filesystem::path& path);
std::vector<Passage> parse_corpus(std::string_view jsonl);

std::string serialize_corpus(const std::vector<Passage>& passages);

/// Content hash of a sorted corpus, hex encoded.
std::string corpus_hash(const std::vector<Passage>& passages);

/// Text handed to the dense encoder for a passage: "title\ntext", or just text when the
/// title is empty.
std::string passage_embedding_text(const Passage& passage);

}  // namespace hyperrank
