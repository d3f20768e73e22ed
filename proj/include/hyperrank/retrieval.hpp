#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hyperrank/embedding.hpp"
#include "hyperrank/extraction.hpp"
#include "hyperrank/index.hpp"
#include "json.hpp"

namespace hyperrank {

struct RetrievalConfig {
  double eta = 0.8;   // entity similarity threshold, strict: x_i = v_i iff v_i > eta
  double beta = 0.5;  // weight of the dense passage score in the final blend
  int steps = 4;      // diffusion steps t
  std::size_t k1 = 5;
  std::size_t k2 = 10;
  std::size_t report_depth = 10;  // ranking entries kept beyond k2 for Recall@k

  bool use_hypergraph = true;  // false: plain dense retrieval on p
  bool use_weight_matrix = true;
  bool use_semantic_enhancement = true;
  bool use_structural_enhancement = true;

  /// Throws ContractError on out-of-range values.
  void validate() const;
};

struct ScoredPassage {
  PassageIndex passage = 0;
  double score = 0.0;

  bool operator==(const ScoredPassage&) const = default;
};

struct RetrievalDiagnostics {
  std::vector<std::string> query_entities;
  std::size_t nonzero_x = 0;
  int iterations = 0;
  bool dense_fallback = false;
  std::vector<std::string> warnings;

  bool operator==(const RetrievalDiagnostics&) const = default;
};

struct RankedResult {
  std::vector<ScoredPassage> ranking;   // by score desc, ties by ascending passage index
  std::size_t k2 = 0;                   // ranking[0, k2) is the top-k2 list
  std::vector<ScoredPassage> selected;  // C_q, same order as ranking
  RetrievalDiagnostics diagnostics;

  std::span<const ScoredPassage> top_k2() const { return {ranking.data(), std::min(k2, ranking.size())}; }
  bool operator==(const RankedResult&) const = default;
};

/// Per-query vectors. x and p are inputs to ranking; the rest are filled by `rank`.
struct QueryArtifacts {
  Eigen::VectorXd x;        // thresholded entity similarity, |E|
  Eigen::VectorXd p;        // raw passage cosines, |P|
  Eigen::VectorXd x_t;      // after `steps` diffusion steps
  Eigen::VectorXd p_t;      // W_p H^T x_t
  Eigen::VectorXd p_tilde;  // final relevance
};

/// x_i = v_i if v_i > eta else 0.
Eigen::VectorXd threshold_entity_similarity(const Eigen::Ref<const Eigen::VectorXd>& v, double eta);

/// Edge weights for diffusion: clamp(p, 0, 1), or all ones when the weight matrix is off.
Eigen::VectorXd diffusion_edge_weights(const Eigen::Ref<const Eigen::VectorXd>& p,
                                       bool use_weight_matrix);

struct DiffusionOutput {
  Eigen::VectorXd x_t;
  Eigen::VectorXd p_t;
};

/// x_t = Lt^steps x and p_t = W H^T x_t, without renormalization between steps.
DiffusionOutput diffuse(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& p, const HypergraphIndex& index,
                        int steps, bool use_weight_matrix);

/// (1 - beta) p_t + beta p, or p_t unchanged when disabled.
Eigen::VectorXd semantic_enhance(const Eigen::Ref<const Eigen::VectorXd>& p_t,
                                 const Eigen::Ref<const Eigen::VectorXd>& p, double beta,
                                 bool enabled);

/// Top `depth` entries of `scores`, descending, ties by ascending passage index.
std::vector<ScoredPassage> rank_passages(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                         std::size_t depth);

/// Number of entities passages `a` and `b` share.
std::size_t shared_entity_count(const IncidenceMatrix& H, PassageIndex a, PassageIndex b);

/// Seeds are the top-k1 passages of p_tilde; the selection is the seeds plus every
/// other top-k2 passage sharing at least one entity with a seed, in ranking order.
/// k2 is clamped to |P|; k1 > |P| throws ContractError.
std::vector<ScoredPassage> structural_enhance(const Eigen::Ref<const Eigen::VectorXd>& p_tilde,
                                              const HypergraphIndex& index, std::size_t k1,
                                              std::size_t k2);

/// Ranking core: diffusion and both enhancements over precomputed x and p. Pure with
/// respect to the index. When x is all zero the ranking falls back to p.
RankedResult rank(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& p, const HypergraphIndex& index,
                  const RetrievalConfig& config, QueryArtifacts* artifacts = nullptr);

struct QueryVectors {
  Eigen::VectorXd v;  // unthresholded max entity similarity
  Eigen::VectorXd p;
  std::vector<std::string> query_entities;
  std::vector<std::string> warnings;
};

/// Query-time front end: extraction, encoding and similarity vectors, then `rank`.
class Retriever {
 public:
  /// Throws IndexIntegrityError if the embeddings do not line up with the index.
  Retriever(const HypergraphIndex& index, const EmbeddingMatrix& entity_embeddings,
            const EmbeddingMatrix& passage_embeddings, const EncoderClient& encoder,
            const ExtractionClient& extractor);

  /// Entity similarity before thresholding, passage similarity, and the query entities.
  /// Extraction failures degrade to no query entities plus a warning.
  QueryVectors prepare(std::string_view query) const;

  RankedResult retrieve(std::string_view query, const RetrievalConfig& config,
                        QueryArtifacts* artifacts = nullptr) const;
  RankedResult rank_prepared(const QueryVectors& vectors, const RetrievalConfig& config,
                             QueryArtifacts* artifacts = nullptr) const;

  Eigen::VectorXd build_entity_similarity(std::string_view query, double eta,
                                          std::vector<std::string>* warnings = nullptr) const;
  Eigen::VectorXd build_passage_similarity(std::string_view query) const;

  const HypergraphIndex& index() const noexcept { return index_; }

 private:
  Eigen::VectorXd max_entity_similarity(std::string_view query,
                                        std::vector<std::string>& query_entities,
                                        std::vector<std::string>& warnings) const;

  const HypergraphIndex& index_;
  const EmbeddingMatrix& entity_embeddings_;
  const EmbeddingMatrix& passage_embeddings_;
  const EncoderClient& encoder_;
  const ExtractionClient& extractor_;
};

/// {query, selected:[{id,score}], topk2:[{id,score}], diagnostics}
nlohmann::json to_json(const RankedResult& result, const HypergraphIndex& index,
                       std::string_view query);

}  // namespace hyperrank
