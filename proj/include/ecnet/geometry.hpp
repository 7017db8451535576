#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ecnet/tape.hpp"
#include "ecnet/tensor.hpp"

namespace ecnet {

struct SamplingConfig {
  std::array<double, 4> alpha{1.0, 1.0, 1.0, 1.0};
  int64_t k = 24;
  int64_t groups = 0;
};

// Farthest point sampling over rows scaled per-dimension by alpha. The seed
// is row 0 and ties keep the lowest row index; returns m indices in selection
// order.
std::vector<int64_t> d_fps(const Tensor& coords, std::span<const double> alpha, int64_t m);

// K nearest rows of feats to each query row under squared Euclidean distance
// in feature space; ties keep the lower row index. Returns a row-major
// [queries x k] index list.
std::vector<int64_t> ef_knn(const Tensor& query_feats, const Tensor& feats, int64_t k);

// Coordinate evolution: per-group mean over the neighbor axis, [G,K,C] -> [G,C].
Tensor evolve_coords(const Tensor& group_coords);

// Plain (tape-free) row gather used for coordinate bookkeeping.
Tensor gather_rows_tensor(const Tensor& src, std::span<const int64_t> idx);

// Group feature assembly: concat neighbor features with group coordinates,
// standardize around the per-group mean (epsilon-floored deviation), then
// concat the broadcast centroid features. [G,K,D] -> [G,K,2D+Cc].
Var build_group_features(Var group_feats, const Tensor& group_coords, Var centroid_feats,
                         double eps = 1e-5);

}  // namespace ecnet
