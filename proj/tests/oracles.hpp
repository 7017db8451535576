// Test-only reference implementations, kept independent of the library's
// computational paths. Everything here is direct-definition, O(n^2)-style.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ecnet/tensor.hpp"

namespace oracle {

// Direct-sum DFT of a real signal, bins 0..L/2.
inline std::vector<std::complex<double>> naive_rdft(const std::vector<double>& x) {
  const size_t L = x.size();
  std::vector<std::complex<double>> out(L / 2 + 1);
  for (size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (size_t n = 0; n < L; ++n) {
      double ang = -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(n) /
                   static_cast<double>(L);
      acc += x[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// Direct-sum inverse from one-sided bins (conjugate-symmetric extension).
inline std::vector<double> naive_irdft(const std::vector<std::complex<double>>& s, size_t L) {
  std::vector<double> out(L, 0.0);
  for (size_t n = 0; n < L; ++n) {
    std::complex<double> acc{0.0, 0.0};
    for (size_t k = 0; k < L; ++k) {
      std::complex<double> bin;
      if (k < s.size()) {
        bin = s[k];
        if (k == 0 || 2 * k == L) bin = {bin.real(), 0.0};
      } else {
        bin = std::conj(s[L - k]);
      }
      double ang = 2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(n) /
                   static_cast<double>(L);
      acc += bin * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[n] = acc.real() / static_cast<double>(L);
  }
  return out;
}

// y[n] = sum_m h[m] x[(n - m) mod L]
inline std::vector<double> circular_conv(const std::vector<double>& x,
                                         const std::vector<double>& h) {
  const size_t L = x.size();
  std::vector<double> y(L, 0.0);
  for (size_t n = 0; n < L; ++n)
    for (size_t m = 0; m < L; ++m) y[n] += h[m] * x[(n + L - m) % L];
  return y;
}

// Farthest point sampling by repeated full scans; seed is row 0, distances
// are alpha-weighted squared Euclidean, ties keep the lowest index.
inline std::vector<int64_t> brute_fps(const ecnet::Tensor& pts,
                                      const std::vector<double>& alpha, int64_t m) {
  const int64_t n = pts.shape[0];
  const int64_t d = pts.shape[1];
  auto dist2 = [&](int64_t a, int64_t b) {
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      double dl = alpha[static_cast<size_t>(j)] * (pts.at(a, j) - pts.at(b, j));
      s += dl * dl;
    }
    return s;
  };
  std::vector<int64_t> sel{0};
  while (static_cast<int64_t>(sel.size()) < m) {
    int64_t best = -1;
    double best_d = -1.0;
    for (int64_t i = 0; i < n; ++i) {
      if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
      double mind = std::numeric_limits<double>::infinity();
      for (int64_t s : sel) mind = std::min(mind, dist2(i, s));
      if (mind > best_d) {
        best_d = mind;
        best = i;
      }
    }
    sel.push_back(best);
  }
  return sel;
}

// Exhaustive K nearest rows of feats to each query row, ties by lower index.
inline std::vector<int64_t> brute_knn(const ecnet::Tensor& queries,
                                      const ecnet::Tensor& feats, int64_t k) {
  const int64_t q = queries.shape[0];
  const int64_t n = feats.shape[0];
  const int64_t d = feats.shape[1];
  std::vector<int64_t> out;
  for (int64_t a = 0; a < q; ++a) {
    std::vector<std::pair<double, int64_t>> ds;
    for (int64_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (int64_t j = 0; j < d; ++j) {
        double dl = queries.at(a, j) - feats.at(i, j);
        s += dl * dl;
      }
      ds.emplace_back(s, i);
    }
    std::sort(ds.begin(), ds.end());
    for (int64_t i = 0; i < k; ++i) out.push_back(ds[static_cast<size_t>(i)].second);
  }
  return out;
}

}  // namespace oracle
