#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hyperrank/entities.hpp"

namespace hyperrank {

using PassageIndex = std::uint32_t;

/// One compressed orientation of a binary sparse matrix: `offsets` has one entry per
/// outer index plus a trailing nnz, `indices` holds sorted inner indices.
struct CompressedPattern {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> indices;

  bool operator==(const CompressedPattern&) const = default;
};

/// Binary entity x passage incidence matrix. Rows are entities (nodes), columns are
/// passages (hyperedges). Both the entity-major and passage-major forms are kept.
class IncidenceMatrix {
 public:
  IncidenceMatrix() : IncidenceMatrix(0, 0, {}) {}

  /// Builds from (entity, passage) pairs. Duplicate pairs collapse to one entry;
  /// out-of-range pairs throw ContractError.
  IncidenceMatrix(std::size_t entities, std::size_t passages,
                  std::vector<std::pair<EntityIndex, PassageIndex>> pairs);

  /// Adopts stored patterns after checking shapes, ordering and that both describe the
  /// same set of pairs. Throws IndexIntegrityError otherwise.
  static IncidenceMatrix from_patterns(std::size_t entities, std::size_t passages,
                                       CompressedPattern entity_major,
                                       CompressedPattern passage_major);

  std::size_t entities() const noexcept { return entities_; }
  std::size_t passages() const noexcept { return passages_; }
  std::size_t nnz() const noexcept { return by_entity_.indices.size(); }

  std::span<const std::uint32_t> passages_of(EntityIndex entity) const;
  std::span<const std::uint32_t> entities_of(PassageIndex passage) const;
  bool contains(EntityIndex entity, PassageIndex passage) const;

  const CompressedPattern& entity_major() const noexcept { return by_entity_; }
  const CompressedPattern& passage_major() const noexcept { return by_passage_; }

  bool operator==(const IncidenceMatrix&) const = default;

 private:
  IncidenceMatrix(std::size_t entities, std::size_t passages, CompressedPattern by_entity,
                  CompressedPattern by_passage)
      : entities_(entities),
        passages_(passages),
        by_entity_(std::move(by_entity)),
        by_passage_(std::move(by_passage)) {}

  std::size_t entities_ = 0;
  std::size_t passages_ = 0;
  CompressedPattern by_entity_;
  CompressedPattern by_passage_;
};

/// H_ij = 1 iff entity i is in the set of passage j. `entity_sets[j]` is column j.
/// Throws ContractError when a set mentions an entity the catalog lacks.
IncidenceMatrix build_incidence(const std::vector<EntitySet>& entity_sets,
                                const EntityCatalog& catalog);

struct DegreeVectors {
  std::vector<std::uint32_t> node_degrees;  // passages per entity (row sums)
  std::vector<std::uint32_t> edge_degrees;  // entities per passage (column sums)

  bool operator==(const DegreeVectors&) const = default;
};

DegreeVectors compute_degrees(const IncidenceMatrix& incidence);

}  // namespace hyperrank
