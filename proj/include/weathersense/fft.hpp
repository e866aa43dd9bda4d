#pragma once

#include <complex>
#include <vector>

#include "weathersense/common.hpp"

namespace weathersense {

using cplx = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 Cooley-Tukey transform. Unnormalized forward
// DFT: X[k] = sum_n x[n] exp(-j 2 pi k n / N). Length must be a power of two.
inline void fft_inplace(std::vector<cplx>& a) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (!is_power_of_two(n)) throw DomainError("fft_inplace: length must be a power of two");

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Forward FFT of arbitrary-length input, zero-padded to the next power of
// two. Returns the padded spectrum.
inline std::vector<cplx> fft_padded(const std::vector<cplx>& x) {
  std::vector<cplx> a(x);
  a.resize(next_power_of_two(x.size() == 0 ? 1 : x.size()), cplx{0.0, 0.0});
  fft_inplace(a);
  return a;
}

// Swap halves so that index N/2 corresponds to frequency zero.
template <typename T>
inline std::vector<T> fftshift(const std::vector<T>& x) {
  const std::size_t n = x.size();
  std::vector<T> out(n);
  const std::size_t h = n / 2;
  for (std::size_t i = 0; i < n; ++i) out[i] = x[(i + h) % n];
  return out;
}

}  // namespace weathersense
