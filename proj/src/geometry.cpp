#include "ecnet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ecnet {

std::vector<int64_t> d_fps(const Tensor& coords, std::span<const double> alpha, int64_t m) {
  ECNET_CHECK(coords.rank() == 2, "d_fps: coords must be [n,dim]");
  const int64_t n = coords.shape[0];
  const int64_t dim = coords.shape[1];
  ECNET_CHECK(static_cast<int64_t>(alpha.size()) == dim,
              "d_fps: alpha has " + std::to_string(alpha.size()) + " components for dim " +
                  std::to_string(dim));
  ECNET_CHECK(m >= 1 && m <= n, "d_fps: requested " + std::to_string(m) + " centroids from " +
                                    std::to_string(n) + " points");
  std::vector<double> w(alpha.size());
  for (size_t j = 0; j < alpha.size(); ++j) {
    ECNET_CHECK(std::isfinite(alpha[j]) && alpha[j] > 0.0,
                "d_fps: alpha components must be finite and positive");
    w[j] = alpha[j] * alpha[j];
  }

  std::vector<int64_t> sel;
  sel.reserve(static_cast<size_t>(m));
  std::vector<double> min_d(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> taken(static_cast<size_t>(n), 0);
  int64_t cur = 0;
  sel.push_back(cur);
  taken[0] = 1;
  while (static_cast<int64_t>(sel.size()) < m) {
    int64_t best = -1;
    double best_d = -1.0;
    for (int64_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (int64_t j = 0; j < dim; ++j) {
        double dl = coords.at(i, j) - coords.at(cur, j);
        d += w[static_cast<size_t>(j)] * dl * dl;
      }
      double& md = min_d[static_cast<size_t>(i)];
      if (d < md) md = d;
      if (!taken[static_cast<size_t>(i)] && md > best_d) {
        best_d = md;
        best = i;
      }
    }
    sel.push_back(best);
    taken[static_cast<size_t>(best)] = 1;
    cur = best;
  }
  return sel;
}

std::vector<int64_t> ef_knn(const Tensor& query_feats, const Tensor& feats, int64_t k) {
  ECNET_CHECK(query_feats.rank() == 2 && feats.rank() == 2 &&
                  query_feats.shape[1] == feats.shape[1],
              "ef_knn: incompatible shapes " + shape_str(query_feats.shape) + " vs " +
                  shape_str(feats.shape));
  const int64_t q = query_feats.shape[0];
  const int64_t n = feats.shape[0];
  const int64_t d = feats.shape[1];
  ECNET_CHECK(k >= 1 && k <= n, "ef_knn: requested " + std::to_string(k) +
                                    " neighbors from " + std::to_string(n) + " rows");
  std::vector<int64_t> out(static_cast<size_t>(q * k));
  std::vector<std::pair<double, int64_t>> dist(static_cast<size_t>(n));
  for (int64_t a = 0; a < q; ++a) {
    const double* qp = &query_feats.data[static_cast<size_t>(a * d)];
    for (int64_t i = 0; i < n; ++i) {
      const double* fp = &feats.data[static_cast<size_t>(i * d)];
      double s = 0.0;
      for (int64_t j = 0; j < d; ++j) {
        double dl = qp[j] - fp[j];
        s += dl * dl;
      }
      dist[static_cast<size_t>(i)] = {s, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<size_t>(k), dist.end());
    for (int64_t j = 0; j < k; ++j) out[static_cast<size_t>(a * k + j)] = dist[static_cast<size_t>(j)].second;
  }
  return out;
}

Tensor evolve_coords(const Tensor& group_coords) {
  ECNET_CHECK(group_coords.rank() == 3, "evolve_coords: expected [G,K,C]");
  const int64_t g = group_coords.shape[0], k = group_coords.shape[1], c = group_coords.shape[2];
  ECNET_CHECK(k > 0, "evolve_coords: empty groups");
  Tensor out({g, c});
  for (int64_t a = 0; a < g; ++a)
    for (int64_t m = 0; m < k; ++m)
      for (int64_t j = 0; j < c; ++j) out.at(a, j) += group_coords.at(a, m, j);
  for (double& v : out.data) v /= static_cast<double>(k);
  return out;
}

Tensor gather_rows_tensor(const Tensor& src, std::span<const int64_t> idx) {
  ECNET_CHECK(src.rank() >= 1, "gather_rows_tensor: rank-0 input");
  const int64_t n = src.shape[0];
  const int64_t rowsz = n > 0 ? src.numel() / n : 0;
  Shape os = src.shape;
  os[0] = static_cast<int64_t>(idx.size());
  Tensor out(os);
  for (size_t r = 0; r < idx.size(); ++r) {
    ECNET_CHECK(idx[r] >= 0 && idx[r] < n, "gather_rows_tensor: index out of range");
    std::copy_n(&src.data[static_cast<size_t>(idx[r] * rowsz)], rowsz,
                &out.data[r * static_cast<size_t>(rowsz)]);
  }
  return out;
}

Var build_group_features(Var group_feats, const Tensor& group_coords, Var centroid_feats,
                         double eps) {
  Tape& t = *group_feats.tape;
  const Shape& fs = t.value(group_feats).shape;
  ECNET_CHECK(fs.size() == 3, "build_group_features: group features must be [G,K,D]");
  ECNET_CHECK(group_coords.rank() == 3 && group_coords.shape[0] == fs[0] &&
                  group_coords.shape[1] == fs[1],
              "build_group_features: coords " + shape_str(group_coords.shape) +
                  " do not match features " + shape_str(fs));
  const Shape& cs = t.value(centroid_feats).shape;
  ECNET_CHECK(cs.size() == 2 && cs[0] == fs[0] && cs[1] == fs[2],
              "build_group_features: centroid features " + shape_str(cs) +
                  " do not match group features " + shape_str(fs));
  const int64_t k = fs[1];

  Var with_coords = concat_last(group_feats, t.constant(group_coords));
  Var mu = mean_axis(with_coords, 1);
  Var centered = sub(with_coords, expand_axis(mu, 1, k));
  Var variance = mean_axis(mul(centered, centered), 1);
  // smoothing keeps the sqrt derivative finite for constant groups; eps
  // floors the deviation itself
  Var deviation = add_scalar(sqrt_op(variance, 1e-12), eps);
  Var standardized = mul(centered, expand_axis(reciprocal(deviation), 1, k));
  return concat_last(standardized, expand_axis(centroid_feats, 1, k));
}

}  // namespace ecnet
