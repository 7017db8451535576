#include <doctest.h>

#include <cmath>

#include "ecnet/dft.hpp"
#include "ecnet/rng.hpp"
#include "ecnet/spectral.hpp"
#include "oracles.hpp"

using namespace ecnet;

namespace {

Tensor random_tensor(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(s));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// filter pair (re, im) for the one-sided DFT of kernel h
std::pair<Tensor, Tensor> filter_from_kernel(const std::vector<double>& h) {
  auto spec = oracle::naive_rdft(h);
  Tensor re({static_cast<int64_t>(spec.size())}), im({static_cast<int64_t>(spec.size())});
  for (size_t k = 0; k < spec.size(); ++k) {
    re.data[k] = spec[k].real();
    im.data[k] = spec[k].imag();
  }
  return {re, im};
}

}  // namespace

TEST_CASE("spatial_fa with an all-pass filter is the identity") {
  Rng rng(3);
  Tape t;
  const int64_t c = 12;
  Tensor x = random_tensor(rng, {4, 3, c});
  Var out = spatial_fa(t.constant(x), t.constant(Tensor::full({c / 2 + 1}, 1.0)),
                       t.constant(Tensor({c / 2 + 1})), Activation::identity);
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(out.value().data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));
}

TEST_CASE("spatial_fa filter bin count is floor(C/2)+1, e.g. 271 at C=540") {
  CHECK(540 / 2 + 1 == 271);
  Rng rng(5);
  Tape t;
  Tensor x = random_tensor(rng, {1, 1, 540});
  // wrong bin count rejected
  CHECK_THROWS_AS(spatial_fa(t.constant(x), t.constant(Tensor({270})),
                             t.constant(Tensor({270})), Activation::identity),
                  ContractError);
  Var ok = spatial_fa(t.constant(x), t.constant(Tensor::full({271}, 1.0)),
                      t.constant(Tensor({271})), Activation::identity);
  CHECK(ok.shape() == Shape{1, 1, 540});
}

TEST_CASE("spatial_fa with filter = DFT(h) performs circular convolution") {
  Rng rng(7);
  for (int64_t c : {4, 9, 33, 64}) {
    std::vector<double> h(static_cast<size_t>(c));
    for (auto& v : h) v = rng.uniform(-1, 1);
    auto [re, im] = filter_from_kernel(h);
    Tensor x = random_tensor(rng, {3, 2, c});
    Tape t;
    Var out = spatial_fa(t.constant(x), t.constant(re), t.constant(im), Activation::identity);
    for (int64_t g = 0; g < 3; ++g)
      for (int64_t k = 0; k < 2; ++k) {
        std::vector<double> row(static_cast<size_t>(c));
        for (int64_t j = 0; j < c; ++j) row[static_cast<size_t>(j)] = x.at(g, k, j);
        auto ref = oracle::circular_conv(row, h);
        for (int64_t j = 0; j < c; ++j) {
          CAPTURE(c);
          CHECK(out.value().at(g, k, j) == doctest::Approx(ref[static_cast<size_t>(j)])
                                               .epsilon(1e-8));
        }
      }
  }
}

TEST_CASE("temporal_fa identity and DC projection") {
  Rng rng(11);
  const int64_t n = 16, c = 5;
  Tensor x = random_tensor(rng, {n, c});
  const int64_t bins = n / 2 + 1;

  Tape t;
  Var ident = temporal_fa(t.constant(x), t.constant(Tensor::full({bins, c}, 1.0)),
                          t.constant(Tensor({bins, c})), Activation::identity);
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(ident.value().data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));

  // keeping only bin 0 projects every channel onto its time mean
  Tensor dc_re({bins, c});
  for (int64_t ch = 0; ch < c; ++ch) dc_re.at(0, ch) = 1.0;
  Var dc = temporal_fa(t.constant(x), t.constant(dc_re), t.constant(Tensor({bins, c})),
                       Activation::identity);
  for (int64_t ch = 0; ch < c; ++ch) {
    double mean = 0.0;
    for (int64_t i = 0; i < n; ++i) mean += x.at(i, ch);
    mean /= n;
    for (int64_t i = 0; i < n; ++i)
      CHECK(dc.value().at(i, ch) == doctest::Approx(mean).epsilon(1e-10));
  }
}

TEST_CASE("temporal_fa equals a per-channel reference built from the DFT oracle") {
  Rng rng(13);
  const int64_t n = 64, c = 8;
  Tensor x = random_tensor(rng, {n, c});
  const int64_t bins = n / 2 + 1;
  Tensor re = random_tensor(rng, {bins, c});
  Tensor im = random_tensor(rng, {bins, c});

  Tape t;
  Var out = temporal_fa(t.constant(x), t.constant(re), t.constant(im), Activation::identity);

  for (int64_t ch = 0; ch < c; ++ch) {
    std::vector<double> col(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) col[static_cast<size_t>(i)] = x.at(i, ch);
    auto spec = oracle::naive_rdft(col);
    for (int64_t k = 0; k < bins; ++k)
      spec[static_cast<size_t>(k)] *= std::complex<double>(re.at(k, ch), im.at(k, ch));
    auto ref = oracle::naive_irdft(spec, static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
      CHECK(out.value().at(i, ch) == doctest::Approx(ref[static_cast<size_t>(i)])
                                         .epsilon(1e-9));
  }
}

TEST_CASE("temporal_fa rejects mismatched filter shapes") {
  Tape t;
  Tensor x({8, 3});
  CHECK_THROWS_AS(temporal_fa(t.constant(x), t.constant(Tensor({4, 3})),
                              t.constant(Tensor({4, 3})), Activation::identity),
                  ContractError);
}

TEST_CASE("both frequency modules pass finite-difference gradient checks") {
  Rng rng(17);
  SUBCASE("spatial") {
    const int64_t c = 10;
    Tensor x = random_tensor(rng, {2, 3, c});
    Tensor re = random_tensor(rng, {c / 2 + 1}, 0.5, 1.5);
    Tensor im = random_tensor(rng, {c / 2 + 1}, -0.5, 0.5);
    auto res = check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          Var out = spatial_fa(v[0], v[1], v[2], Activation::gelu);
          return sum_axis(sum_axis(sum_axis(mul(out, out), 2), 1), 0);
        },
        {x, re, im}, 1e-5, 1e-6);
    CAPTURE(res.worst);
    CHECK(res.passed);
  }
  SUBCASE("spatial at an odd non-pow2 length") {
    const int64_t c = 7;
    Tensor x = random_tensor(rng, {2, 2, c});
    Tensor re = random_tensor(rng, {c / 2 + 1}, 0.5, 1.5);
    Tensor im = random_tensor(rng, {c / 2 + 1}, -0.5, 0.5);
    auto res = check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          Var out = spatial_fa(v[0], v[1], v[2], Activation::identity);
          return sum_axis(sum_axis(sum_axis(mul(out, out), 2), 1), 0);
        },
        {x, re, im}, 1e-5, 1e-6);
    CAPTURE(res.worst);
    CHECK(res.passed);
  }
  SUBCASE("temporal") {
    const int64_t n = 12, c = 4;
    Tensor x = random_tensor(rng, {n, c});
    Tensor re = random_tensor(rng, {n / 2 + 1, c}, 0.5, 1.5);
    Tensor im = random_tensor(rng, {n / 2 + 1, c}, -0.5, 0.5);
    auto res = check_gradients(
        [](Tape& t, const std::vector<Var>& v) {
          Var out = temporal_fa(v[0], v[1], v[2], Activation::gelu);
          return sum_axis(sum_axis(mul(out, out), 1), 0);
        },
        {x, re, im}, 1e-5, 1e-6);
    CAPTURE(res.worst);
    CHECK(res.passed);
  }
}

TEST_CASE("macs_single_op reproduces the documented cost ratios") {
  MacsSingleOp a = macs_single_op(540);
  CHECK(a.conv_macs == doctest::Approx(291600.0));
  CHECK(a.freq_macs == doctest::Approx(4901.55).epsilon(1e-3));
  CHECK(a.ratio > 55.0);
  CHECK(a.ratio < 65.0);

  MacsSingleOp b = macs_single_op(2);
  CHECK(b.ratio == doctest::Approx(2.0));
  MacsSingleOp c = macs_single_op(256);
  CHECK(c.ratio == doctest::Approx(32.0));
  CHECK_THROWS_AS(macs_single_op(1), ContractError);
}
