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

#ifndef SHUFFLEDP_KERNELS_H_
#define SHUFFLEDP_KERNELS_H_

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace shuffledp {
namespace kernels {

// Every kernel has a serial and an OpenMP path producing bit-identical
// results; reductions use a fixed chunk partition so the result does not
// depend on the thread count.
enum class Exec { kSerial, kParallel };

inline constexpr std::size_t kChunk = 4096;

// Deterministic chunked sum (also improves accumulation accuracy).
double ChunkedSum(std::span<const double> values, Exec exec);

// data[k] <- ((1 - gamma) + gamma * data[k])^m, elementwise.
void MixtureCfPower(std::span<std::complex<double>> data, double gamma,
                    long long m, Exec exec);

// data[k] <- data[k] * exp(-2 pi i k shift_bins / N).  With an integer bin
// shift the factor is periodic in k, so signed and unsigned frequency
// conventions agree.
void ApplyLatticePhase(std::span<std::complex<double>> data,
                       long long shift_bins, Exec exec);

// out[j] <- clamped CDF difference F_tr(x_j + h/2) - F_tr(x_j - h/2) for the
// absolute grid x_j = (j_lo + j) * h, where F_tr is the CDF `cdf` conditioned
// to [s, s_end] (cdf_s = cdf(s), p_in = cdf(s_end) - cdf(s)).  The first and
// last bin absorb the window edges so the bins sum to 1.
void BinPmfFromCdf(const std::function<double(double)>& cdf, double cdf_s,
                   double p_in, long long j_lo, double h, double s,
                   double s_end, std::span<double> out, Exec exec);

// Sum_j probs[j] * (1 - F(offset - (j0 + j) * h)) with F a CDF supported on
// [support_lo, support_hi]; outside that range F is 0 or 1, so only the
// index window whose thresholds land inside the support calls F.
double MainTermSum(std::span<const double> probs, double h, long long j0,
                   double offset, const std::function<double(double)>& cdf,
                   double support_lo, double support_hi, Exec exec);

// Zeroes small negative entries (round-off from the inverse FFT) and returns
// the total clipped magnitude.  Entries at or below -hard_fail throw.
double ClipNegativeMass(std::span<double> probs, double hard_fail);

}  // namespace kernels
}  // namespace shuffledp

#endif  // SHUFFLEDP_KERNELS_H_
