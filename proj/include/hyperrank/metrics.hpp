#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hyperrank {

// SQuAD-style answer normalization: lowercase, drop ASCII punctuation, drop the articles
// a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

// 1 iff the normalized prediction equals some normalized gold. Empty golds throw.
int exact_match(std::string_view prediction, std::span<const std::string> golds);

// Max over golds of token-multiset F1 on normalized text. Both token lists empty -> 1,
// exactly one empty -> 0.
double token_f1(std::string_view prediction, std::span<const std::string> golds);

// Fraction of distinct gold ids present in the first k ranked ids.
double recall_at_k(std::span<const std::string> ranked_ids, std::span<const std::string> gold_ids,
                   std::size_t k);

// 1 if any gold id is in the first k ranked ids.
double hit_at_k(std::span<const std::string> ranked_ids, std::span<const std::string> gold_ids,
                std::size_t k);

}  // namespace hyperrank
