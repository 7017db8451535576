#include <doctest.h>

#include <cmath>
#include <complex>

#include "ecnet/dft.hpp"
#include "ecnet/rng.hpp"
#include "oracles.hpp"

using namespace ecnet;

namespace {

std::vector<double> random_signal(Rng& rng, size_t n, double lo = -2.0, double hi = 2.0) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(lo, hi);
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("rdft of an impulse is a flat spectrum") {
  Spectrum s = rdft(std::vector<double>{1, 0, 0, 0});
  REQUIRE(s.bins.size() == 3);
  for (const auto& b : s.bins) {
    CHECK(b.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("rdft of a constant is DC only") {
  Spectrum s = rdft(std::vector<double>{1, 1, 1, 1});
  CHECK(s.bins[0].real() == doctest::Approx(4.0));
  CHECK(std::abs(s.bins[1]) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(s.bins[2]) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rdft matches the direct-sum oracle across algorithm branches") {
  Rng rng(17);
  // radix-2, naive (<32 non-pow2), and Bluestein lengths
  for (size_t len : {1u, 2u, 3u, 7u, 16u, 31u, 33u, 64u, 132u, 268u, 384u, 540u}) {
    auto x = random_signal(rng, len);
    Spectrum s = rdft(x);
    auto ref = oracle::naive_rdft(x);
    REQUIRE(s.bins.size() == ref.size());
    double m = 0.0;
    for (size_t k = 0; k < ref.size(); ++k) m = std::max(m, std::abs(s.bins[k] - ref[k]));
    CAPTURE(len);
    CHECK(m < 1e-9);
  }
}

TEST_CASE("irdft inverts rdft to round-trip precision") {
  Rng rng(23);
  for (size_t len : {1u, 2u, 5u, 12u, 64u, 132u, 384u, 1024u}) {
    auto x = random_signal(rng, len);
    auto back = irdft(rdft(x));
    CAPTURE(len);
    CHECK(max_abs_diff(x, back) < 1e-10);
  }
}

TEST_CASE("irdft matches the direct inverse including filtered spectra") {
  Rng rng(29);
  for (size_t len : {8u, 21u, 50u, 132u}) {
    auto x = random_signal(rng, len);
    Spectrum s = rdft(x);
    // arbitrary complex filtering, so bins 0 and Nyquist may go complex
    for (auto& b : s.bins)
      b *= std::complex<double>(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    auto got = irdft(s);
    auto ref = oracle::naive_irdft(s.bins, len);
    CAPTURE(len);
    CHECK(max_abs_diff(got, ref) < 1e-10);
  }
}

TEST_CASE("rdft reality conditions hold exactly") {
  Rng rng(31);
  for (size_t len : {6u, 9u, 64u, 135u}) {
    auto x = random_signal(rng, len);
    Spectrum s = rdft(x);
    CHECK(s.bins[0].imag() == 0.0);
    if (len % 2 == 0) CHECK(s.bins.back().imag() == 0.0);
  }
}

TEST_CASE("rdft is linear") {
  Rng rng(37);
  for (size_t len : {16u, 45u}) {
    auto x = random_signal(rng, len);
    auto y = random_signal(rng, len);
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    std::vector<double> z(len);
    for (size_t i = 0; i < len; ++i) z[i] = a * x[i] + b * y[i];
    Spectrum sz = rdft(z), sx = rdft(x), sy = rdft(y);
    double m = 0.0;
    for (size_t k = 0; k < sz.bins.size(); ++k)
      m = std::max(m, std::abs(sz.bins[k] - (a * sx.bins[k] + b * sy.bins[k])));
    CHECK(m < 1e-10);
  }
}

TEST_CASE("Parseval energy identity on the one-sided spectrum") {
  Rng rng(41);
  for (size_t len : {8u, 27u, 64u, 384u}) {
    auto x = random_signal(rng, len);
    double time_e = 0.0;
    for (double v : x) time_e += v * v;
    Spectrum s = rdft(x);
    double freq_e = std::norm(s.bins[0]);
    size_t last = s.bins.size() - 1;
    for (size_t k = 1; k < s.bins.size(); ++k) {
      double w = (len % 2 == 0 && k == last) ? 1.0 : 2.0;
      freq_e += w * std::norm(s.bins[k]);
    }
    freq_e /= static_cast<double>(len);
    CAPTURE(len);
    CHECK(std::abs(time_e - freq_e) < 1e-9 * std::max(1.0, time_e));
  }
}
