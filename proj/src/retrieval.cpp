#include "hyperrank/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "hyperrank/diffusion.hpp"
#include "hyperrank/errors.hpp"
#include "hyperrank/similarity.hpp"

namespace hyperrank {

void RetrievalConfig::validate() const {
  auto fail = [](const std::string& why) { throw ContractError("retrieval config: " + why); };
  if (!(eta >= 0.0 && eta <= 1.0)) fail("eta must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
  if (steps < 0) fail("steps must be >= 0");
  if (k1 < 1) fail("k1 must be >= 1");
  if (k1 > k2) fail("k1 must not exceed k2");
}

Eigen::VectorXd threshold_entity_similarity(const Eigen::Ref<const Eigen::VectorXd>& v, double eta) {
  return (v.array() > eta).select(v, 0.0);
}

Eigen::VectorXd diffusion_edge_weights(const Eigen::Ref<const Eigen::VectorXd>& p,
                                       bool use_weight_matrix) {
  if (!use_weight_matrix) return Eigen::VectorXd::Ones(p.size());
  return p.cwiseMax(0.0).cwiseMin(1.0);
}

DiffusionOutput diffuse(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& p, const HypergraphIndex& index,
                        int steps, bool use_weight_matrix) {
  if (steps < 0) throw ContractError("diffusion steps must be >= 0");
  detail::require_size(x.size(), index.num_entities(), "entity similarity vector");
  detail::require_size(p.size(), index.num_passages(), "passage similarity vector");

  const Eigen::VectorXd w = diffusion_edge_weights(p, use_weight_matrix);
  DiffusionOutput out;
  out.x_t = x;
  for (int s = 0; s < steps; ++s) {
    out.x_t = apply_diffusion_operator(out.x_t, index.incidence, index.scaling, w);
  }
  out.p_t = w.cwiseProduct(gather_to_passages(out.x_t, index.incidence));
  return out;
}

Eigen::VectorXd semantic_enhance(const Eigen::Ref<const Eigen::VectorXd>& p_t,
                                 const Eigen::Ref<const Eigen::VectorXd>& p, double beta,
                                 bool enabled) {
  if (p_t.size() != p.size()) throw ContractError("semantic_enhance: length mismatch");
  if (!enabled) return p_t;
  if (!(beta >= 0.0 && beta <= 1.0)) throw ContractError("beta must lie in [0, 1]");
  return (1.0 - beta) * p_t + beta * p;
}

std::vector<ScoredPassage> rank_passages(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                         std::size_t depth) {
  const auto n = static_cast<std::size_t>(scores.size());
  depth = std::min(depth, n);
  std::vector<PassageIndex> order(n);
  std::iota(order.begin(), order.end(), PassageIndex{0});
  auto before = [&](PassageIndex a, PassageIndex b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth), order.end(), before);

  std::vector<ScoredPassage> out;
  out.reserve(depth);
  for (std::size_t r = 0; r < depth; ++r) out.push_back({order[r], scores[order[r]]});
  return out;
}

std::size_t shared_entity_count(const IncidenceMatrix& H, PassageIndex a, PassageIndex b) {
  auto ea = H.entities_of(a);
  auto eb = H.entities_of(b);
  std::size_t shared = 0;
  auto ia = ea.begin();
  auto ib = eb.begin();
  while (ia != ea.end() && ib != eb.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++shared;
      ++ia;
      ++ib;
    }
  }
  return shared;
}

namespace {

// s_c = sum over seeds of shared entities with c (the multiplicity of H^T H h(seeds)).
std::vector<ScoredPassage> select_from_ranking(const std::vector<ScoredPassage>& ranking,
                                               const IncidenceMatrix& H, std::size_t k1,
                                               std::size_t k2) {
  k2 = std::min(k2, ranking.size());
  k1 = std::min(k1, k2);
  std::vector<ScoredPassage> selected(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k1));
  for (std::size_t r = k1; r < k2; ++r) {
    std::size_t s = 0;
    for (std::size_t seed = 0; seed < k1 && s == 0; ++seed) {
      s += shared_entity_count(H, ranking[seed].passage, ranking[r].passage);
    }
    if (s > 0) selected.push_back(ranking[r]);
  }
  return selected;
}

void check_k(std::size_t k1, std::size_t passages) {
  if (k1 > passages) {
    throw ContractError("k1 = " + std::to_string(k1) + " exceeds the corpus size " +
                        std::to_string(passages));
  }
}

}  // namespace

std::vector<ScoredPassage> structural_enhance(const Eigen::Ref<const Eigen::VectorXd>& p_tilde,
                                              const HypergraphIndex& index, std::size_t k1,
                                              std::size_t k2) {
  detail::require_size(p_tilde.size(), index.num_passages(), "relevance vector");
  if (k1 < 1 || k1 > k2) throw ContractError("structural_enhance needs 1 <= k1 <= k2");
  check_k(k1, index.num_passages());
  return select_from_ranking(rank_passages(p_tilde, k2), index.incidence, k1, k2);
}

RankedResult rank(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& p, const HypergraphIndex& index,
                  const RetrievalConfig& config, QueryArtifacts* artifacts) {
  config.validate();
  detail::require_size(x.size(), index.num_entities(), "entity similarity vector");
  detail::require_size(p.size(), index.num_passages(), "passage similarity vector");
  const std::size_t n = index.num_passages();
  check_k(config.k1, n);

  QueryArtifacts local;
  QueryArtifacts& a = artifacts != nullptr ? *artifacts : local;
  a.x = x;
  a.p = p;

  RankedResult result;
  result.diagnostics.nonzero_x = static_cast<std::size_t>((x.array() != 0.0).count());

  if (!config.use_hypergraph || result.diagnostics.nonzero_x == 0) {
    a.x_t = Eigen::VectorXd::Zero(x.size());
    a.p_t = Eigen::VectorXd::Zero(p.size());
    a.p_tilde = p;
    result.diagnostics.dense_fallback = true;
  } else {
    auto diffused = diffuse(x, p, index, config.steps, config.use_weight_matrix);
    a.x_t = std::move(diffused.x_t);
    a.p_t = std::move(diffused.p_t);
    a.p_tilde = semantic_enhance(a.p_t, p, config.beta, config.use_semantic_enhancement);
    result.diagnostics.iterations = config.steps;
  }

  result.k2 = std::min(config.k2, n);
  result.ranking = rank_passages(a.p_tilde, std::max(result.k2, std::min(config.report_depth, n)));
  if (config.use_structural_enhancement) {
    result.selected = select_from_ranking(result.ranking, index.incidence, config.k1, result.k2);
  } else {
    result.selected.assign(result.ranking.begin(),
                           result.ranking.begin() + static_cast<std::ptrdiff_t>(config.k1));
  }
  return result;
}

Retriever::Retriever(const HypergraphIndex& index, const EmbeddingMatrix& entity_embeddings,
                     const EmbeddingMatrix& passage_embeddings, const EncoderClient& encoder,
                     const ExtractionClient& extractor)
    : index_(index),
      entity_embeddings_(entity_embeddings),
      passage_embeddings_(passage_embeddings),
      encoder_(encoder),
      extractor_(extractor) {
  if (static_cast<std::size_t>(entity_embeddings.rows()) != index.num_entities()) {
    throw IndexIntegrityError("entity embeddings have " + std::to_string(entity_embeddings.rows()) +
                              " rows for " + std::to_string(index.num_entities()) + " entities");
  }
  if (static_cast<std::size_t>(passage_embeddings.rows()) != index.num_passages()) {
    throw IndexIntegrityError("passage embeddings have " + std::to_string(passage_embeddings.rows()) +
                              " rows for " + std::to_string(index.num_passages()) + " passages");
  }
  if (entity_embeddings.rows() > 0 && passage_embeddings.rows() > 0 &&
      entity_embeddings.dim() != passage_embeddings.dim()) {
    throw IndexIntegrityError("entity and passage embeddings differ in dimension");
  }
}

Eigen::VectorXd Retriever::max_entity_similarity(std::string_view query,
                                                 std::vector<std::string>& query_entities,
                                                 std::vector<std::string>& warnings) const {
  std::vector<std::string> raw;
  try {
    raw = extractor_.extract(query);
  } catch (const std::exception& e) {
    warnings.push_back(std::string("query entity extraction failed, using none: ") + e.what());
  }
  query_entities = make_entity_set("query", raw).entities;
  if (query_entities.empty()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(index_.num_entities()));
  return max_sim_to_query_entities(embed_batch(query_entities, encoder_), entity_embeddings_);
}

Eigen::VectorXd Retriever::build_passage_similarity(std::string_view query) const {
  const bool blank = std::all_of(query.begin(), query.end(),
                                 [](unsigned char c) { return std::isspace(c) != 0; });
  if (blank || passage_embeddings_.rows() == 0) {
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(index_.num_passages()));
  }
  const auto q = embed_batch({std::string(query)}, encoder_);
  return cosine_to_rows(q.row(0).transpose(), passage_embeddings_);
}

QueryVectors Retriever::prepare(std::string_view query) const {
  QueryVectors out;
  out.v = max_entity_similarity(query, out.query_entities, out.warnings);
  out.p = build_passage_similarity(query);
  return out;
}

RankedResult Retriever::rank_prepared(const QueryVectors& vectors, const RetrievalConfig& config,
                                      QueryArtifacts* artifacts) const {
  auto x = threshold_entity_similarity(vectors.v, config.eta);
  auto result = rank(x, vectors.p, index_, config, artifacts);
  result.diagnostics.query_entities = vectors.query_entities;
  result.diagnostics.warnings = vectors.warnings;
  return result;
}

RankedResult Retriever::retrieve(std::string_view query, const RetrievalConfig& config,
                                 QueryArtifacts* artifacts) const {
  return rank_prepared(prepare(query), config, artifacts);
}

Eigen::VectorXd Retriever::build_entity_similarity(std::string_view query, double eta,
                                                   std::vector<std::string>* warnings) const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ContractError("eta must lie in [0, 1]");
  std::vector<std::string> entities;
  std::vector<std::string> local_warnings;
  auto v = max_entity_similarity(query, entities, local_warnings);
  if (warnings != nullptr) *warnings = std::move(local_warnings);
  return threshold_entity_similarity(v, eta);
}

nlohmann::json to_json(const RankedResult& result, const HypergraphIndex& index,
                       std::string_view query) {
  auto entries = [&](std::span<const ScoredPassage> list) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : list) out.push_back({{"id", index.passage_ids.at(s.passage)}, {"score", s.score}});
    return out;
  };
  const auto& d = result.diagnostics;
  return {
      {"query", std::string(query)},
      {"selected", entries(result.selected)},
      {"topk2", entries(result.top_k2())},
      {"diagnostics",
       {{"query_entities", d.query_entities},
        {"nonzero_x", d.nonzero_x},
        {"iterations", d.iterations},
        {"dense_fallback", d.dense_fallback},
        {"warnings", d.warnings}}},
  };
}

}  // namespace hyperrank
