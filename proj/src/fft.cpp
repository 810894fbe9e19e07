// Copyright 2026 The shuffledp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shuffledp/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "shuffledp/numerics.hpp"

namespace shuffledp {
namespace numerics {
namespace {

bool IsPowerOfTwo(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

void CheckLength(std::size_t n) {
  if (!IsPowerOfTwo(n)) {
    throw std::invalid_argument("FFT length must be a power of two and >= 2");
  }
}

}  // namespace

FftPlan::FftPlan(std::size_t n, kernels::Exec exec) : n_(n), exec_(exec) {
  CheckLength(n);
  twiddles_.resize(n / 2);
  const double step = -2.0 * kPi / static_cast<double>(n);
  const std::int64_t half = static_cast<std::int64_t>(n / 2);
#pragma omp parallel for schedule(static) \
    if (exec_ == kernels::Exec::kParallel && half > (1 << 12))
  for (std::int64_t k = 0; k < half; ++k) {
    twiddles_[k] = std::polar(1.0, step * static_cast<double>(k));
  }
}

void FftPlan::Transform(std::span<std::complex<double>> data,
                        bool inverse) const {
  if (data.size() != n_) {
    throw std::invalid_argument("FftPlan: data length does not match plan");
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n_; ++i) {
    std::size_t bit = n_ >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  const bool parallel = exec_ == kernels::Exec::kParallel && n_ >= (1 << 15);
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t stride = n_ / len;
    const std::int64_t blocks = static_cast<std::int64_t>(n_ / len);
#pragma omp parallel for schedule(static) if (parallel && blocks > 1)
    for (std::int64_t b = 0; b < blocks; ++b) {
      const std::size_t base = static_cast<std::size_t>(b) * len;
      for (std::size_t k = 0; k < half; ++k) {
        std::complex<double> w = twiddles_[k * stride];
        if (inverse) w = std::conj(w);
        const std::complex<double> u = data[base + k];
        const std::complex<double> v = data[base + k + half] * w;
        data[base + k] = u + v;
        data[base + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n_);
    const std::int64_t n = static_cast<std::int64_t>(n_);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < n; ++i) data[i] *= scale;
  }
}

void FftPlan::Forward(std::span<std::complex<double>> data) const {
  Transform(data, false);
}

void FftPlan::Inverse(std::span<std::complex<double>> data) const {
  Transform(data, true);
}

ComplexVector FftForward(const ComplexVector& v) {
  ComplexVector out = v;
  FftPlan(v.size(), kernels::Exec::kSerial).Forward(out);
  return out;
}

ComplexVector FftInverse(const ComplexVector& v) {
  ComplexVector out = v;
  FftPlan(v.size(), kernels::Exec::kSerial).Inverse(out);
  return out;
}

ComplexVector FftShift(const ComplexVector& v) {
  CheckLength(v.size());
  const std::size_t n = v.size();
  const std::size_t half = n / 2;
  ComplexVector out(n);
  for (std::size_t i = 0; i < n; ++i) out[(i + half) % n] = v[i];
  return out;
}

ComplexVector IfftShift(const ComplexVector& v) {
  // Exact inverse of FftShift; identical rotation for even lengths.
  return FftShift(v);
}

}  // namespace numerics
}  // namespace shuffledp
