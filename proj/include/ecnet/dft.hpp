#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ecnet {

// One side of a real-signal spectrum: bins 0..floor(L/2). The other half is
// determined by conjugate symmetry and is never stored.
struct Spectrum {
  std::vector<std::complex<double>> bins;
  size_t source_length = 0;
};

// Transform plan for a fixed length. Power-of-two lengths use an iterative
// radix-2 FFT; other lengths below kNaiveLimit use the direct sum; the rest
// use Bluestein's chirp-z reduction onto a padded radix-2 transform.
class Dft {
 public:
  static constexpr size_t kNaiveLimit = 32;

  explicit Dft(size_t length);

  size_t length() const { return len_; }
  size_t bins() const { return len_ / 2 + 1; }

  // X[k] = sum_n x[n] e^{-i 2 pi k n / L}, k = 0..bins-1.
  void forward(const double* x, std::complex<double>* out) const;
  // x[n] = (1/L) sum_k X_ext[k] e^{+i 2 pi k n / L} with the conjugate-symmetric
  // extension of the stored bins; imaginary parts of bins 0 and L/2 are ignored
  // (they cannot contribute to a real signal).
  void inverse(const std::complex<double>* bins, double* out) const;

 private:
  enum class Algo { Radix2, Naive, Bluestein };

  void forward_naive(const double* x, std::complex<double>* out) const;
  void inverse_naive(const std::complex<double>* bins, double* out) const;
  void transform_complex(std::complex<double>* buf, bool invert) const;

  size_t len_;
  Algo algo_;

  // radix-2 tables for size fft_n_ (== len_ for Radix2, padded size for Bluestein)
  size_t fft_n_ = 0;
  std::vector<std::complex<double>> twiddle_;
  std::vector<uint32_t> bitrev_;
  void fft_inplace(std::complex<double>* a, bool invert) const;

  // Bluestein tables
  std::vector<std::complex<double>> chirp_;       // e^{-i pi n^2 / L}, n < len_
  std::vector<std::complex<double>> kernel_fwd_;  // FFT of padded conj chirp
  std::vector<std::complex<double>> kernel_inv_;

  // naive tables
  std::vector<double> cos_tab_, sin_tab_;  // [len_ * len_], angle 2 pi k n / L
};

// Plan cache; returned references stay valid for the process lifetime.
const Dft& dft_plan(size_t length);

Spectrum rdft(std::span<const double> x);
std::vector<double> irdft(const Spectrum& s);

}  // namespace ecnet
