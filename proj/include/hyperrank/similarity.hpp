#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <string>

#include "hyperrank/embedding.hpp"
#include "hyperrank/errors.hpp"

namespace hyperrank {

/// a.b / (|a||b|) in double precision, clamped to [-1, 1]. Zero-norm input gives 0.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw ContractError("cosine of vectors with dims " + std::to_string(a.size()) + " and " +
                        std::to_string(b.size()));
  }
  const auto ad = a.template cast<double>();
  const auto bd = b.template cast<double>();
  const double na = ad.norm();
  const double nb = bd.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(ad.dot(bd) / (na * nb), -1.0, 1.0);
}

/// Cosine of `query` against every row of `rows`.
Eigen::VectorXd cosine_to_rows(const Eigen::Ref<const Eigen::VectorXf>& query,
                               const EmbeddingMatrix& rows);

/// v_i = max over query entities q of cos(q, corpus entity i). No query entities gives
/// the zero vector.
Eigen::VectorXd max_sim_to_query_entities(const EmbeddingMatrix& query_entity_rows,
                                          const EmbeddingMatrix& corpus_entity_rows);

}  // namespace hyperrank
