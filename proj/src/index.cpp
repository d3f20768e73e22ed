#include "hyperrank/index.hpp"

#include <iomanip>
#include <sstream>

#include "hyperrank/errors.hpp"
#include "hyperrank/io.hpp"

namespace hyperrank {

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IndexIntegrityError("'" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const std::runtime_error& e) {
    throw IndexIntegrityError(e.what());
  }
}

CompressedPattern read_pattern(const fs::path& dir, const std::string& stem) {
  return {io::read_array<std::uint32_t>(dir / (stem + ".offsets.u32")),
          io::read_array<std::uint32_t>(dir / (stem + ".indices.u32"))};
}

void write_pattern(const fs::path& dir, const std::string& stem, const CompressedPattern& p) {
  io::write_array(dir / (stem + ".offsets.u32"), std::span<const std::uint32_t>(p.offsets));
  io::write_array(dir / (stem + ".indices.u32"), std::span<const std::uint32_t>(p.indices));
}

}  // namespace

HypergraphIndex build_index(const std::vector<Passage>& passages,
                            const std::vector<EntitySet>& entity_sets) {
  if (passages.size() != entity_sets.size()) {
    throw ContractError("entity sets are not aligned with passages");
  }
  for (std::size_t j = 0; j < passages.size(); ++j) {
    if (entity_sets[j].passage_id != passages[j].id) {
      throw ContractError("entity set " + std::to_string(j) + " belongs to '" +
                          entity_sets[j].passage_id + "', expected '" + passages[j].id + "'");
    }
  }

  HypergraphIndex index;
  index.catalog = build_catalog(entity_sets);
  index.incidence = build_incidence(entity_sets, index.catalog);
  index.degrees = compute_degrees(index.incidence);
  index.scaling = DiffusionScaling<double>::from_degrees(index.degrees);
  index.passage_ids.reserve(passages.size());
  for (const auto& p : passages) index.passage_ids.push_back(p.id);
  index.corpus_hash = corpus_hash(passages);
  return index;
}

nlohmann::json index_manifest(const HypergraphIndex& index) {
  return {
      {"format_version", kIndexFormatVersion},
      {"num_entities", index.num_entities()},
      {"num_passages", index.num_passages()},
      {"nnz", index.incidence.nnz()},
      {"corpus_hash", index.corpus_hash},
      {"embeddings",
       {{"encoder_id", index.embeddings.encoder_id},
        {"dim", index.embeddings.dim},
        {"entity_file", index.embeddings.entity_file},
        {"passage_file", index.embeddings.passage_file}}},
  };
}

void save_index(const HypergraphIndex& index, const fs::path& dir) {
  fs::create_directories(dir);
  io::write_file_atomic(dir / "entities.json",
                        nlohmann::json(index.catalog.entities()).dump() + "\n");
  io::write_file_atomic(dir / "passage_ids.json", nlohmann::json(index.passage_ids).dump() + "\n");
  write_pattern(dir, "incidence_by_entity", index.incidence.entity_major());
  write_pattern(dir, "incidence_by_passage", index.incidence.passage_major());
  io::write_array(dir / "node_degrees.u32", std::span<const std::uint32_t>(index.degrees.node_degrees));
  io::write_array(dir / "edge_degrees.u32", std::span<const std::uint32_t>(index.degrees.edge_degrees));
  // Manifest goes last: its presence marks a complete index.
  io::write_file_atomic(dir / "manifest.json", index_manifest(index).dump(2) + "\n");
}

HypergraphIndex load_index(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) {
    throw IndexIntegrityError("no index at '" + dir.string() + "' (manifest.json missing)");
  }
  const auto manifest = read_json(dir / "manifest.json");
  HypergraphIndex index;
  std::size_t entities = 0;
  std::size_t passages = 0;
  std::size_t nnz = 0;
  try {
    if (manifest.at("format_version").get<int>() != kIndexFormatVersion) {
      throw IndexIntegrityError("unsupported index format version");
    }
    entities = manifest.at("num_entities").get<std::size_t>();
    passages = manifest.at("num_passages").get<std::size_t>();
    nnz = manifest.at("nnz").get<std::size_t>();
    index.corpus_hash = manifest.at("corpus_hash").get<std::string>();
    const auto& emb = manifest.at("embeddings");
    index.embeddings.encoder_id = emb.at("encoder_id").get<std::string>();
    index.embeddings.dim = emb.at("dim").get<std::size_t>();
    index.embeddings.entity_file = emb.at("entity_file").get<std::string>();
    index.embeddings.passage_file = emb.at("passage_file").get<std::string>();
    index.catalog = EntityCatalog(read_json(dir / "entities.json").get<std::vector<std::string>>());
    index.passage_ids = read_json(dir / "passage_ids.json").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IndexIntegrityError("malformed index metadata: " + std::string(e.what()));
  } catch (const ValidationError& e) {
    throw IndexIntegrityError(e.what());
  }

  index.incidence = IncidenceMatrix::from_patterns(entities, passages,
                                                   read_pattern(dir, "incidence_by_entity"),
                                                   read_pattern(dir, "incidence_by_passage"));
  index.degrees.node_degrees = io::read_array<std::uint32_t>(dir / "node_degrees.u32");
  index.degrees.edge_degrees = io::read_array<std::uint32_t>(dir / "edge_degrees.u32");

  if (index.catalog.size() != entities) throw IndexIntegrityError("catalog size disagrees with manifest");
  if (index.passage_ids.size() != passages) throw IndexIntegrityError("passage id count disagrees with manifest");
  if (index.incidence.nnz() != nnz) throw IndexIntegrityError("nnz disagrees with manifest");
  if (index.degrees != compute_degrees(index.incidence)) {
    throw IndexIntegrityError("stored degree vectors disagree with the incidence pattern");
  }
  index.scaling = DiffusionScaling<double>::from_degrees(index.degrees);
  return index;
}

StatsReport graph_stats(const HypergraphIndex& index) {
  StatsReport r;
  r.nodes = index.num_entities();
  r.hyperedges = index.num_passages();
  r.nnz = index.incidence.nnz();
  for (auto d : index.degrees.node_degrees) ++r.node_degree_histogram[d];
  for (auto d : index.degrees.edge_degrees) {
    ++r.edge_degree_histogram[d];
    if (d == 0) ++r.zero_degree_hyperedges;
  }
  if (r.hyperedges > 0) r.mean_entities_per_passage = static_cast<double>(r.nnz) / static_cast<double>(r.hyperedges);
  if (r.nodes > 0) r.mean_passages_per_entity = static_cast<double>(r.nnz) / static_cast<double>(r.nodes);
  return r;
}

nlohmann::json to_json(const StatsReport& report) {
  auto histogram = [](const std::map<std::uint32_t, std::size_t>& h) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [degree, count] : h) out[std::to_string(degree)] = count;
    return out;
  };
  return {
      {"nodes", report.nodes},
      {"hyperedges", report.hyperedges},
      {"nnz", report.nnz},
      {"zero_degree_hyperedges", report.zero_degree_hyperedges},
      {"mean_entities_per_passage", report.mean_entities_per_passage},
      {"mean_passages_per_entity", report.mean_passages_per_entity},
      {"node_degree_histogram", histogram(report.node_degree_histogram)},
      {"edge_degree_histogram", histogram(report.edge_degree_histogram)},
  };
}

std::string format_stats_table(const StatsReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "No. of nodes" << report.nodes << '\n'
      << std::setw(28) << "No. of hyperedges" << report.hyperedges << '\n'
      << std::setw(28) << "Incidences (nnz)" << report.nnz << '\n'
      << std::setw(28) << "Zero-degree hyperedges" << report.zero_degree_hyperedges << '\n'
      << std::setw(28) << "Mean entities / passage" << std::fixed << std::setprecision(3)
      << report.mean_entities_per_passage << '\n'
      << std::setw(28) << "Mean passages / entity" << report.mean_passages_per_entity << '\n';
  return out.str();
}

}  // namespace hyperrank
