#pragma once

// Sparse application of the passage-weighted hypergraph diffusion operator
//
//   Lt = Dv^-1/2 H W De^-1 H^T Dv^-1/2
//
// where H is the entity x passage incidence matrix, Dv/De hold node/hyperedge degrees
// and W is a diagonal of per-passage weights. Zero-degree hyperedges use De^-1 := 0,
// so entityless passages are inert.

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "hyperrank/errors.hpp"
#include "hyperrank/incidence.hpp"

namespace hyperrank {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Floating-point degree factors, derived once from the integer degree vectors.
template <typename Scalar>
struct DiffusionScaling {
  VectorX<Scalar> inv_sqrt_node_degree;  // 1/sqrt(d_i), 0 where d_i = 0
  VectorX<Scalar> inv_edge_degree;       // 1/delta_j, 0 where delta_j = 0

  static DiffusionScaling from_degrees(const DegreeVectors& degrees) {
    DiffusionScaling s;
    s.inv_sqrt_node_degree.resize(static_cast<Eigen::Index>(degrees.node_degrees.size()));
    s.inv_edge_degree.resize(static_cast<Eigen::Index>(degrees.edge_degrees.size()));
    for (std::size_t i = 0; i < degrees.node_degrees.size(); ++i) {
      const auto d = degrees.node_degrees[i];
      s.inv_sqrt_node_degree[static_cast<Eigen::Index>(i)] =
          d == 0 ? Scalar(0) : Scalar(1) / std::sqrt(static_cast<Scalar>(d));
    }
    for (std::size_t j = 0; j < degrees.edge_degrees.size(); ++j) {
      const auto d = degrees.edge_degrees[j];
      s.inv_edge_degree[static_cast<Eigen::Index>(j)] =
          d == 0 ? Scalar(0) : Scalar(1) / static_cast<Scalar>(d);
    }
    return s;
  }
};

namespace detail {

inline void require_size(Eigen::Index actual, std::size_t expected, const char* what) {
  if (static_cast<std::size_t>(actual) != expected) {
    throw ContractError(std::string(what) + " has length " + std::to_string(actual) +
                        ", expected " + std::to_string(expected));
  }
}

}  // namespace detail

/// H^T x: entity vector -> passage vector. Scatters only from nonzero entries of `x`.
template <typename Derived>
VectorX<typename Derived::Scalar> gather_to_passages(const Eigen::MatrixBase<Derived>& x,
                                                     const IncidenceMatrix& H) {
  using Scalar = typename Derived::Scalar;
  detail::require_size(x.size(), H.entities(), "entity vector");
  VectorX<Scalar> out = VectorX<Scalar>::Zero(static_cast<Eigen::Index>(H.passages()));
  const auto& rows = H.entity_major();
  for (std::size_t i = 0; i < H.entities(); ++i) {
    const Scalar xi = x[static_cast<Eigen::Index>(i)];
    if (xi == Scalar(0)) continue;
    for (auto k = rows.offsets[i]; k < rows.offsets[i + 1]; ++k) out[rows.indices[k]] += xi;
  }
  return out;
}

/// H g: passage vector -> entity vector. Scatters only from nonzero entries of `g`.
template <typename Derived>
VectorX<typename Derived::Scalar> scatter_to_entities(const Eigen::MatrixBase<Derived>& g,
                                                      const IncidenceMatrix& H) {
  using Scalar = typename Derived::Scalar;
  detail::require_size(g.size(), H.passages(), "passage vector");
  VectorX<Scalar> out = VectorX<Scalar>::Zero(static_cast<Eigen::Index>(H.entities()));
  const auto& cols = H.passage_major();
  for (std::size_t j = 0; j < H.passages(); ++j) {
    const Scalar gj = g[static_cast<Eigen::Index>(j)];
    if (gj == Scalar(0)) continue;
    for (auto k = cols.offsets[j]; k < cols.offsets[j + 1]; ++k) out[cols.indices[k]] += gj;
  }
  return out;
}

/// One application of Lt to an entity vector `x`, with per-passage `edge_weights`.
/// Weights are expected in [0, 1]; clamping happens upstream.
template <typename DerivedX, typename DerivedW>
VectorX<typename DerivedX::Scalar> apply_diffusion_operator(
    const Eigen::MatrixBase<DerivedX>& x, const IncidenceMatrix& H,
    const DiffusionScaling<typename DerivedX::Scalar>& scaling,
    const Eigen::MatrixBase<DerivedW>& edge_weights) {
  detail::require_size(x.size(), H.entities(), "entity vector");
  detail::require_size(edge_weights.size(), H.passages(), "edge weight vector");
  detail::require_size(scaling.inv_sqrt_node_degree.size(), H.entities(), "node scaling");
  detail::require_size(scaling.inv_edge_degree.size(), H.passages(), "edge scaling");

  auto y = x.cwiseProduct(scaling.inv_sqrt_node_degree).eval();
  auto g = gather_to_passages(y, H);
  g.array() *= edge_weights.array() * scaling.inv_edge_degree.array();
  auto z = scatter_to_entities(g, H);
  return z.cwiseProduct(scaling.inv_sqrt_node_degree);
}

template <typename DerivedX, typename DerivedW>
VectorX<typename DerivedX::Scalar> apply_diffusion_operator(
    const Eigen::MatrixBase<DerivedX>& x, const IncidenceMatrix& H, const DegreeVectors& degrees,
    const Eigen::MatrixBase<DerivedW>& edge_weights) {
  return apply_diffusion_operator(
      x, H, DiffusionScaling<typename DerivedX::Scalar>::from_degrees(degrees), edge_weights);
}

}  // namespace hyperrank
