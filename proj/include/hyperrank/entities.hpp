#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hyperrank {

/// Canonical form used to decide whether two mentions are the same entity: Unicode NFC,
/// lowercased, whitespace runs collapsed to one space, trimmed. Returns nullopt when
/// nothing is left, which callers treat as "drop this mention".
std::optional<std::string> normalize_entity(std::string_view raw);

struct EntitySet {
  std::string passage_id;
  std::vector<std::string> entities;  // normalized, first-occurrence order, no duplicates

  bool operator==(const EntitySet&) const = default;
};

/// Normalizes each raw mention, drops empties and duplicates, keeps first-seen order.
EntitySet make_entity_set(std::string passage_id, const std::vector<std::string>& raw_mentions);

using EntityIndex = std::uint32_t;

/// Bijection between normalized entity strings and dense indices [0, size()).
class EntityCatalog {
 public:
  EntityCatalog() = default;
  explicit EntityCatalog(std::vector<std::string> entities);

  std::size_t size() const noexcept { return entities_.size(); }
  bool empty() const noexcept { return entities_.empty(); }

  std::optional<EntityIndex> find(std::string_view entity) const;
  const std::string& entity(EntityIndex index) const { return entities_.at(index); }
  const std::vector<std::string>& entities() const noexcept { return entities_; }

  // Returns the existing index when already present.
  EntityIndex add(const std::string& entity);

 private:
  std::vector<std::string> entities_;
  std::unordered_map<std::string, EntityIndex> index_;
};

/// Assigns indices in first-seen order over the given sequence of sets. Callers pass the
/// sets in ascending passage-id order so the assignment is deterministic.
EntityCatalog build_catalog(const std::vector<EntitySet>& entity_sets);

}  // namespace hyperrank
