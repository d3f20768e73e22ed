#include "hyperrank/incidence.hpp"

#include <algorithm>
#include <string>

#include "hyperrank/errors.hpp"

namespace hyperrank {

namespace {

// Counting-sort transpose of a compressed pattern.
CompressedPattern transpose(const CompressedPattern& p, std::size_t inner_size) {
  CompressedPattern t;
  t.offsets.assign(inner_size + 1, 0);
  for (auto inner : p.indices) ++t.offsets[inner + 1];
  for (std::size_t k = 0; k < inner_size; ++k) t.offsets[k + 1] += t.offsets[k];
  t.indices.resize(p.indices.size());
  std::vector<std::uint32_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
  const std::size_t outer_size = p.offsets.empty() ? 0 : p.offsets.size() - 1;
  for (std::size_t outer = 0; outer < outer_size; ++outer) {
    for (auto k = p.offsets[outer]; k < p.offsets[outer + 1]; ++k) {
      t.indices[cursor[p.indices[k]]++] = static_cast<std::uint32_t>(outer);
    }
  }
  return t;
}

void check_pattern(const CompressedPattern& p, std::size_t outer, std::size_t inner,
                   const char* name) {
  auto fail = [&](const std::string& why) {
    throw IndexIntegrityError(std::string(name) + " incidence pattern: " + why);
  };
  if (p.offsets.size() != outer + 1) fail("offsets length does not match shape");
  if (p.offsets.front() != 0 || p.offsets.back() != p.indices.size()) fail("bad offset bounds");
  for (std::size_t o = 0; o < outer; ++o) {
    if (p.offsets[o] > p.offsets[o + 1]) fail("offsets decrease");
    for (auto k = p.offsets[o]; k < p.offsets[o + 1]; ++k) {
      if (p.indices[k] >= inner) fail("index out of range");
      if (k > p.offsets[o] && p.indices[k] <= p.indices[k - 1]) fail("indices unsorted or duplicated");
    }
  }
}

std::span<const std::uint32_t> slice(const CompressedPattern& p, std::size_t outer) {
  return {p.indices.data() + p.offsets[outer], p.offsets[outer + 1] - p.offsets[outer]};
}

}  // namespace

IncidenceMatrix::IncidenceMatrix(std::size_t entities, std::size_t passages,
                                 std::vector<std::pair<EntityIndex, PassageIndex>> pairs)
    : entities_(entities), passages_(passages) {
  for (const auto& [e, p] : pairs) {
    if (e >= entities || p >= passages) {
      throw ContractError("incidence pair (" + std::to_string(e) + ", " + std::to_string(p) +
                          ") outside " + std::to_string(entities) + "x" + std::to_string(passages));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  by_entity_.offsets.assign(entities + 1, 0);
  by_entity_.indices.reserve(pairs.size());
  for (const auto& [e, p] : pairs) {
    ++by_entity_.offsets[e + 1];
    by_entity_.indices.push_back(p);
  }
  for (std::size_t i = 0; i < entities; ++i) by_entity_.offsets[i + 1] += by_entity_.offsets[i];
  by_passage_ = transpose(by_entity_, passages);
}

IncidenceMatrix IncidenceMatrix::from_patterns(std::size_t entities, std::size_t passages,
                                               CompressedPattern entity_major,
                                               CompressedPattern passage_major) {
  check_pattern(entity_major, entities, passages, "entity-major");
  check_pattern(passage_major, passages, entities, "passage-major");
  if (transpose(entity_major, passages) != passage_major) {
    throw IndexIntegrityError("entity-major and passage-major incidence patterns disagree");
  }
  return IncidenceMatrix(entities, passages, std::move(entity_major), std::move(passage_major));
}

std::span<const std::uint32_t> IncidenceMatrix::passages_of(EntityIndex entity) const {
  if (entity >= entities_) throw ContractError("entity index out of range");
  return slice(by_entity_, entity);
}

std::span<const std::uint32_t> IncidenceMatrix::entities_of(PassageIndex passage) const {
  if (passage >= passages_) throw ContractError("passage index out of range");
  return slice(by_passage_, passage);
}

bool IncidenceMatrix::contains(EntityIndex entity, PassageIndex passage) const {
  auto row = passages_of(entity);
  return std::binary_search(row.begin(), row.end(), passage);
}

IncidenceMatrix build_incidence(const std::vector<EntitySet>& entity_sets,
                                const EntityCatalog& catalog) {
  std::vector<std::pair<EntityIndex, PassageIndex>> pairs;
  for (std::size_t j = 0; j < entity_sets.size(); ++j) {
    for (const auto& e : entity_sets[j].entities) {
      auto idx = catalog.find(e);
      if (!idx) {
        throw ContractError("entity '" + e + "' of passage '" + entity_sets[j].passage_id +
                            "' is not in the catalog");
      }
      pairs.emplace_back(*idx, static_cast<PassageIndex>(j));
    }
  }
  return IncidenceMatrix(catalog.size(), entity_sets.size(), std::move(pairs));
}

DegreeVectors compute_degrees(const IncidenceMatrix& incidence) {
  DegreeVectors d;
  const auto& rows = incidence.entity_major().offsets;
  const auto& cols = incidence.passage_major().offsets;
  d.node_degrees.resize(incidence.entities());
  d.edge_degrees.resize(incidence.passages());
  for (std::size_t i = 0; i < incidence.entities(); ++i) d.node_degrees[i] = rows[i + 1] - rows[i];
  for (std::size_t j = 0; j < incidence.passages(); ++j) d.edge_degrees[j] = cols[j + 1] - cols[j];
  return d;
}

}  // namespace hyperrank
