#include "ecnet/dft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "ecnet/tensor.hpp"

namespace ecnet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// e^{-i pi m^2 / L} with the quadratic phase reduced mod 2L to keep the
// argument small for long signals.
std::complex<double> chirp_term(size_t m, size_t L) {
  uint64_t q = (static_cast<uint64_t>(m) * m) % (2 * L);
  double ang = -std::numbers::pi * static_cast<double>(q) / static_cast<double>(L);
  return {std::cos(ang), std::sin(ang)};
}

}  // namespace

Dft::Dft(size_t length) : len_(length) {
  ECNET_CHECK(length >= 1, "dft length must be >= 1");
  if (is_pow2(len_)) {
    algo_ = Algo::Radix2;
    fft_n_ = len_;
  } else if (len_ < kNaiveLimit) {
    algo_ = Algo::Naive;
    cos_tab_.resize(len_ * len_);
    sin_tab_.resize(len_ * len_);
    for (size_t k = 0; k < len_; ++k) {
      for (size_t n = 0; n < len_; ++n) {
        double ang = kTwoPi * static_cast<double>((k * n) % len_) / static_cast<double>(len_);
        cos_tab_[k * len_ + n] = std::cos(ang);
        sin_tab_[k * len_ + n] = std::sin(ang);
      }
    }
    return;
  } else {
    algo_ = Algo::Bluestein;
    fft_n_ = next_pow2(2 * len_ - 1);
  }

  twiddle_.resize(fft_n_ / 2);
  for (size_t k = 0; k < fft_n_ / 2; ++k) {
    double ang = -kTwoPi * static_cast<double>(k) / static_cast<double>(fft_n_);
    twiddle_[k] = {std::cos(ang), std::sin(ang)};
  }
  bitrev_.resize(fft_n_);
  for (size_t i = 0, j = 0; i < fft_n_; ++i) {
    bitrev_[i] = static_cast<uint32_t>(j);
    for (size_t bit = fft_n_ >> 1; (j ^= bit) < bit; bit >>= 1) {
    }
  }

  if (algo_ == Algo::Bluestein) {
    chirp_.resize(len_);
    for (size_t n = 0; n < len_; ++n) chirp_[n] = chirp_term(n, len_);
    // kernel b[m] = conj(chirp[|m|]) wrapped onto the padded ring
    std::vector<std::complex<double>> b(fft_n_, {0.0, 0.0});
    for (size_t m = 0; m < len_; ++m) {
      std::complex<double> v = std::conj(chirp_[m]);
      b[m] = v;
      if (m != 0) b[fft_n_ - m] = v;
    }
    kernel_fwd_ = b;
    fft_inplace(kernel_fwd_.data(), false);
    // inverse direction swaps the chirp sign, i.e. conjugates the kernel input
    for (size_t m = 0; m < fft_n_; ++m) b[m] = std::conj(b[m]);
    kernel_inv_ = std::move(b);
    fft_inplace(kernel_inv_.data(), false);
  }
}

void Dft::fft_inplace(std::complex<double>* a, bool invert) const {
  const size_t n = fft_n_;
  for (size_t i = 0; i < n; ++i) {
    size_t j = bitrev_[i];
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t half = 1; half < n; half <<= 1) {
    size_t step = n / (2 * half);
    for (size_t base = 0; base < n; base += 2 * half) {
      for (size_t k = 0; k < half; ++k) {
        std::complex<double> w = twiddle_[k * step];
        if (invert) w = std::conj(w);
        std::complex<double> u = a[base + k];
        std::complex<double> v = w * a[base + k + half];
        a[base + k] = u + v;
        a[base + k + half] = u - v;
      }
    }
  }
  // no scaling here; callers apply 1/L where required
}

void Dft::transform_complex(std::complex<double>* buf, bool invert) const {
  if (algo_ == Algo::Radix2) {
    fft_inplace(buf, invert);
    return;
  }
  // Bluestein: X[k] = chirp[k] * (a (*) b)[k], a[n] = x[n] * chirp[n]
  const auto& kernel = invert ? kernel_inv_ : kernel_fwd_;
  static thread_local std::vector<std::complex<double>> a;
  a.assign(fft_n_, {0.0, 0.0});
  for (size_t n = 0; n < len_; ++n) {
    std::complex<double> c = invert ? std::conj(chirp_[n]) : chirp_[n];
    a[n] = buf[n] * c;
  }
  fft_inplace(a.data(), false);
  for (size_t m = 0; m < fft_n_; ++m) a[m] *= kernel[m];
  fft_inplace(a.data(), true);
  double scale = 1.0 / static_cast<double>(fft_n_);
  for (size_t k = 0; k < len_; ++k) {
    std::complex<double> c = invert ? std::conj(chirp_[k]) : chirp_[k];
    buf[k] = a[k] * scale * c;
  }
}

void Dft::forward_naive(const double* x, std::complex<double>* out) const {
  const size_t B = bins();
  for (size_t k = 0; k < B; ++k) {
    double re = 0.0, im = 0.0;
    const double* ct = &cos_tab_[k * len_];
    const double* st = &sin_tab_[k * len_];
    for (size_t n = 0; n < len_; ++n) {
      re += x[n] * ct[n];
      im -= x[n] * st[n];
    }
    out[k] = {re, im};
  }
}

void Dft::inverse_naive(const std::complex<double>* s, double* out) const {
  const size_t B = bins();
  const double inv_len = 1.0 / static_cast<double>(len_);
  for (size_t n = 0; n < len_; ++n) {
    double acc = s[0].real();
    for (size_t k = 1; k < B; ++k) {
      double w = (2 * k == len_) ? 1.0 : 2.0;
      acc += w * (s[k].real() * cos_tab_[k * len_ + n] - s[k].imag() * sin_tab_[k * len_ + n]);
    }
    out[n] = acc * inv_len;
  }
}

void Dft::forward(const double* x, std::complex<double>* out) const {
  const size_t B = bins();
  if (algo_ == Algo::Naive) {
    forward_naive(x, out);
  } else {
    static thread_local std::vector<std::complex<double>> buf;
    buf.resize(len_);
    for (size_t n = 0; n < len_; ++n) buf[n] = {x[n], 0.0};
    transform_complex(buf.data(), false);
    for (size_t k = 0; k < B; ++k) out[k] = buf[k];
  }
  // reality conditions: these imaginary parts vanish analytically
  out[0].imag(0.0);
  if (len_ % 2 == 0) out[B - 1].imag(0.0);
}

void Dft::inverse(const std::complex<double>* s, double* out) const {
  if (algo_ == Algo::Naive) {
    inverse_naive(s, out);
    return;
  }
  const size_t B = bins();
  static thread_local std::vector<std::complex<double>> buf;
  buf.assign(len_, {0.0, 0.0});
  buf[0] = {s[0].real(), 0.0};
  for (size_t k = 1; k < B; ++k) buf[k] = s[k];
  if (len_ % 2 == 0) buf[B - 1] = {s[B - 1].real(), 0.0};
  for (size_t k = 1; k < len_ - B + 1; ++k) buf[len_ - k] = std::conj(buf[k]);
  transform_complex(buf.data(), true);
  double inv_len = 1.0 / static_cast<double>(len_);
  for (size_t n = 0; n < len_; ++n) out[n] = buf[n].real() * inv_len;
}

const Dft& dft_plan(size_t length) {
  static std::mutex mu;
  static std::map<size_t, std::unique_ptr<Dft>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(length);
  if (it == cache.end()) it = cache.emplace(length, std::make_unique<Dft>(length)).first;
  return *it->second;
}

Spectrum rdft(std::span<const double> x) {
  const Dft& plan = dft_plan(x.size());
  Spectrum s;
  s.source_length = x.size();
  s.bins.resize(plan.bins());
  plan.forward(x.data(), s.bins.data());
  return s;
}

std::vector<double> irdft(const Spectrum& s) {
  const Dft& plan = dft_plan(s.source_length);
  ECNET_CHECK(s.bins.size() == plan.bins(),
              "spectrum has " + std::to_string(s.bins.size()) + " bins, expected " +
                  std::to_string(plan.bins()) + " for length " + std::to_string(s.source_length));
  std::vector<double> out(s.source_length);
  plan.inverse(s.bins.data(), out.data());
  return out;
}

}  // namespace ecnet
