#include "hyperrank/similarity.hpp"

namespace hyperrank {

Eigen::VectorXd cosine_to_rows(const Eigen::Ref<const Eigen::VectorXf>& query,
                               const EmbeddingMatrix& rows) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rows.rows());
  if (rows.rows() == 0) return out;
  if (query.size() != rows.dim()) {
    throw ContractError("query dim " + std::to_string(query.size()) + " vs embedding dim " +
                        std::to_string(rows.dim()));
  }
  const double qn = query.cast<double>().norm();
  if (qn == 0.0) return out;
  const Eigen::VectorXf dots = rows.values() * query;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double n = rows.norms()[r];
    if (n == 0.0) continue;
    out[r] = std::clamp(static_cast<double>(dots[r]) / (n * qn), -1.0, 1.0);
  }
  return out;
}

Eigen::VectorXd max_sim_to_query_entities(const EmbeddingMatrix& query_entity_rows,
                                          const EmbeddingMatrix& corpus_entity_rows) {
  Eigen::VectorXd best = Eigen::VectorXd::Zero(corpus_entity_rows.rows());
  if (query_entity_rows.rows() == 0 || corpus_entity_rows.rows() == 0) return best;
  if (query_entity_rows.dim() != corpus_entity_rows.dim()) {
    throw ContractError("query entity dim " + std::to_string(query_entity_rows.dim()) +
                        " vs corpus entity dim " + std::to_string(corpus_entity_rows.dim()));
  }
  best.setConstant(-std::numeric_limits<double>::infinity());
  for (Eigen::Index q = 0; q < query_entity_rows.rows(); ++q) {
    const Eigen::VectorXf query = query_entity_rows.row(q).transpose();
    best = best.cwiseMax(cosine_to_rows(query, corpus_entity_rows));
  }
  return best;
}

}  // namespace hyperrank
