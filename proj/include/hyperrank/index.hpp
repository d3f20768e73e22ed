#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hyperrank/corpus.hpp"
#include "hyperrank/diffusion.hpp"
#include "hyperrank/entities.hpp"
#include "hyperrank/incidence.hpp"
#include "json.hpp"

namespace hyperrank {

inline constexpr int kIndexFormatVersion = 1;

/// Which encoder produced the stored embeddings and where they live in the index dir.
struct EmbeddingManifest {
  std::string encoder_id;
  std::size_t dim = 0;
  std::string entity_file = "entity_embeddings.f32";
  std::string passage_file = "passage_embeddings.f32";

  bool operator==(const EmbeddingManifest&) const = default;
};

/// Entity catalog, incidence structure and degrees for one corpus version. Immutable
/// once built; safe to share between threads.
struct HypergraphIndex {
  EntityCatalog catalog;
  IncidenceMatrix incidence;
  DegreeVectors degrees;
  DiffusionScaling<double> scaling;
  std::vector<std::string> passage_ids;  // column order
  std::string corpus_hash;
  EmbeddingManifest embeddings;

  std::size_t num_entities() const noexcept { return incidence.entities(); }
  std::size_t num_passages() const noexcept { return incidence.passages(); }
};

/// `entity_sets` must be aligned with `passages` (ascending id order).
HypergraphIndex build_index(const std::vector<Passage>& passages,
                            const std::vector<EntitySet>& entity_sets);

/// Index directory layout:
///   manifest.json                     counts, format version, corpus hash, embeddings
///   entities.json                     catalog strings in index order
///   passage_ids.json                  column order
///   incidence_by_entity.{offsets,indices}.u32
///   incidence_by_passage.{offsets,indices}.u32
///   node_degrees.u32, edge_degrees.u32
/// All binary files are flat little-endian arrays.
void save_index(const HypergraphIndex& index, const std::filesystem::path& dir);
HypergraphIndex load_index(const std::filesystem::path& dir);

nlohmann::json index_manifest(const HypergraphIndex& index);

struct StatsReport {
  std::size_t nodes = 0;
  std::size_t hyperedges = 0;
  std::size_t nnz = 0;
  std::size_t zero_degree_hyperedges = 0;
  double mean_entities_per_passage = 0.0;
  double mean_passages_per_entity = 0.0;
  std::map<std::uint32_t, std::size_t> node_degree_histogram;
  std::map<std::uint32_t, std::size_t> edge_degree_histogram;
};

StatsReport graph_stats(const HypergraphIndex& index);
nlohmann::json to_json(const StatsReport& report);
std::string format_stats_table(const StatsReport& report);

}  // namespace hyperrank
