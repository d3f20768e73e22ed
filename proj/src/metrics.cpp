#include "hyperrank/metrics.hpp"

#include <unicode/locid.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "hyperrank/errors.hpp"

namespace hyperrank {

namespace {

std::vector<std::string> answer_tokens(std::string_view text) {
  auto u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u.toLower(icu::Locale::getRoot());
  std::string lowered;
  u.toUTF8String(lowered);

  std::string stripped;
  stripped.reserve(lowered.size());
  for (char c : lowered) {
    if (!std::ispunct(static_cast<unsigned char>(c))) stripped.push_back(c);
  }

  std::vector<std::string> tokens;
  std::istringstream in(stripped);
  for (std::string tok; in >> tok;) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

double f1_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::map<std::string_view, long> counts;
  for (const auto& t : gold) ++counts[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

void require_golds(std::span<const std::string> golds) {
  if (golds.empty()) throw ContractError("at least one gold answer is required");
}

std::set<std::string_view> top_k(std::span<const std::string> ranked, std::size_t k) {
  if (k < 1) throw ContractError("k must be >= 1");
  std::set<std::string_view> out;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.insert(ranked[i]);
  return out;
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string out;
  for (const auto& tok : answer_tokens(text)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

int exact_match(std::string_view prediction, std::span<const std::string> golds) {
  require_golds(golds);
  const auto pred = normalize_answer(prediction);
  return std::any_of(golds.begin(), golds.end(),
                     [&](const std::string& g) { return normalize_answer(g) == pred; })
             ? 1
             : 0;
}

double token_f1(std::string_view prediction, std::span<const std::string> golds) {
  require_golds(golds);
  const auto pred = answer_tokens(prediction);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_tokens(pred, answer_tokens(g)));
  return best;
}

double recall_at_k(std::span<const std::string> ranked_ids, std::span<const std::string> gold_ids,
                   std::size_t k) {
  if (gold_ids.empty()) throw ContractError("recall needs at least one gold id");
  const auto top = top_k(ranked_ids, k);
  const std::set<std::string_view> gold(gold_ids.begin(), gold_ids.end());
  const auto covered = std::count_if(gold.begin(), gold.end(),
                                     [&](std::string_view g) { return top.contains(g); });
  return static_cast<double>(covered) / static_cast<double>(gold.size());
}

double hit_at_k(std::span<const std::string> ranked_ids, std::span<const std::string> gold_ids,
                std::size_t k) {
  if (gold_ids.empty()) throw ContractError("hit rate needs at least one gold id");
  const auto top = top_k(ranked_ids, k);
  return std::any_of(gold_ids.begin(), gold_ids.end(),
                     [&](const std::string& g) { return top.contains(g); })
             ? 1.0
             : 0.0;
}

}  // namespace hyperrank
