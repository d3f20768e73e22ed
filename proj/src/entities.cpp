#include "hyperrank/entities.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include <stdexcept>
#include <unordered_set>

#include "hyperrank/errors.hpp"

namespace hyperrank {

std::optional<std::string> normalize_entity(std::string_view raw) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");

  auto text = icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  text.toLower(icu::Locale::getRoot());
  icu::UnicodeString composed = nfc->normalize(text, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalization failed");

  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < composed.length();) {
    UChar32 c = composed.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) {
      collapsed.append(static_cast<UChar>(' '));
      pending_space = false;
    }
    collapsed.append(c);
  }
  if (collapsed.isEmpty()) return std::nullopt;

  std::string out;
  collapsed.toUTF8String(out);
  return out;
}

EntitySet make_entity_set(std::string passage_id, const std::vector<std::string>& raw_mentions) {
  EntitySet set{std::move(passage_id), {}};
  std::unordered_set<std::string> seen;
  for (const auto& raw : raw_mentions) {
    auto norm = normalize_entity(raw);
    if (!norm) continue;
    if (seen.insert(*norm).second) set.entities.push_back(std::move(*norm));
  }
  return set;
}

EntityCatalog::EntityCatalog(std::vector<std::string> entities) {
  entities_.reserve(entities.size());
  for (auto& e : entities) {
    if (index_.contains(e)) throw ValidationError("duplicate catalog entity '" + e + "'");
    add(e);
  }
}

std::optional<EntityIndex> EntityCatalog::find(std::string_view entity) const {
  auto it = index_.find(std::string(entity));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EntityIndex EntityCatalog::add(const std::string& entity) {
  auto [it, inserted] = index_.try_emplace(entity, static_cast<EntityIndex>(entities_.size()));
  if (inserted) entities_.push_back(entity);
  return it->second;
}

EntityCatalog build_catalog(const std::vector<EntitySet>& entity_sets) {
  EntityCatalog catalog;
  for (const auto& set : entity_sets) {
    for (const auto& e : set.entities) catalog.add(e);
  }
  return catalog;
}

}  // namespace hyperrank
