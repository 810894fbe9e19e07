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

#include "shuffledp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shuffledp/numerics.hpp"

namespace shuffledp {
namespace kernels {
namespace {

std::int64_t NumChunks(std::size_t n) {
  return static_cast<std::int64_t>((n + kChunk - 1) / kChunk);
}

}  // namespace

double ChunkedSum(std::span<const double> values, Exec exec) {
  const std::int64_t chunks = NumChunks(values.size());
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static) \
    if (exec == Exec::kParallel && chunks > 1)
  for (std::int64_t ci = 0; ci < chunks; ++ci) {
    const std::size_t lo = static_cast<std::size_t>(ci) * kChunk;
    const std::size_t hi = std::min(values.size(), lo + kChunk);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += values[i];
    partial[static_cast<std::size_t>(ci)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void MixtureCfPower(std::span<std::complex<double>> data, double gamma,
                    long long m, Exec exec) {
  const std::int64_t n = static_cast<std::int64_t>(data.size());
  const double md = static_cast<double>(m);
#pragma omp parallel for schedule(static) \
    if (exec == Exec::kParallel && n > (1 << 12))
  for (std::int64_t i = 0; i < n; ++i) {
    const std::complex<double> w =
        (1.0 - gamma) + gamma * data[static_cast<std::size_t>(i)];
    const double r = std::abs(w);
    if (r == 0.0) {
      data[static_cast<std::size_t>(i)] = 0.0;
      continue;
    }
    // |w| <= 1, so r^m underflows harmlessly to zero for most frequencies.
    const double mag = std::exp(md * std::log(r));
    data[static_cast<std::size_t>(i)] = std::polar(mag, md * std::arg(w));
  }
}

void ApplyLatticePhase(std::span<std::complex<double>> data,
                       long long shift_bins, Exec exec) {
  const std::int64_t n = static_cast<std::int64_t>(data.size());
  if (n == 0 || shift_bins % n == 0) return;
  const double step = -2.0 * numerics::kPi *
                      static_cast<double>(shift_bins % n) /
                      static_cast<double>(n);
#pragma omp parallel for schedule(static) \
    if (exec == Exec::kParallel && n > (1 << 12))
  for (std::int64_t k = 0; k < n; ++k) {
    // Reduce the angle mod 2 pi before polar for full precision at large k.
    const double turns = step * static_cast<double>(k) / (2.0 * numerics::kPi);
    const double angle =
        2.0 * numerics::kPi * (turns - std::nearbyint(turns));
    data[static_cast<std::size_t>(k)] *= std::polar(1.0, angle);
  }
}

void BinPmfFromCdf(const std::function<double(double)>& cdf, double cdf_s,
                   double p_in, long long j_lo, double h, double s,
                   double s_end, std::span<double> out, Exec exec) {
  if (p_in <= 0.0) {
    throw std::invalid_argument("BinPmfFromCdf: empty truncation window");
  }
  const std::int64_t bins = static_cast<std::int64_t>(out.size());
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
#pragma omp parallel for schedule(dynamic, 256) \
    if (exec == Exec::kParallel && bins > 512)
  for (std::int64_t e = 0; e <= bins; ++e) {
    const double x =
        (static_cast<double>(j_lo + e) - 0.5) * h;  // left edge of bin e
    double v;
    if (x <= s) {
      v = 0.0;
    } else if (x >= s_end) {
      v = 1.0;
    } else {
      v = std::clamp((cdf(x) - cdf_s) / p_in, 0.0, 1.0);
    }
    edges[static_cast<std::size_t>(e)] = v;
  }
  for (std::int64_t j = 0; j < bins; ++j) {
    out[static_cast<std::size_t>(j)] =
        std::max(0.0, edges[static_cast<std::size_t>(j) + 1] -
                          edges[static_cast<std::size_t>(j)]);
  }
}

double MainTermSum(std::span<const double> probs, double h, long long j0,
                   double offset, const std::function<double(double)>& cdf,
                   double support_lo, double support_hi, Exec exec) {
  const std::int64_t n = static_cast<std::int64_t>(probs.size());
  // Threshold offset - (j0 + j) * h is decreasing in j.  For j above j_hi it
  // falls below support_lo (1 - F = 1); below j_lo it exceeds support_hi
  // (1 - F = 0).
  const double a = (offset - support_hi) / h - static_cast<double>(j0);
  const double b = (offset - support_lo) / h - static_cast<double>(j0);
  const std::int64_t j_lo =
      std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(a)) - 1,
                               0, n);
  const std::int64_t j_hi =
      std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(b)) + 1, 0,
                               n);

  double total = ChunkedSum(
      probs.subspan(static_cast<std::size_t>(j_hi),
                    static_cast<std::size_t>(n - j_hi)),
      exec);

  const std::int64_t mid = j_hi - j_lo;
  const std::int64_t chunks = NumChunks(static_cast<std::size_t>(mid));
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(dynamic, 1) \
    if (exec == Exec::kParallel && chunks > 1)
  for (std::int64_t ci = 0; ci < chunks; ++ci) {
    const std::int64_t lo = j_lo + ci * static_cast<std::int64_t>(kChunk);
    const std::int64_t hi =
        std::min(j_hi, lo + static_cast<std::int64_t>(kChunk));
    double acc = 0.0;
    for (std::int64_t j = lo; j < hi; ++j) {
      const double p = probs[static_cast<std::size_t>(j)];
      if (p == 0.0) continue;
      const double t = offset - static_cast<double>(j0 + j) * h;
      acc += p * (1.0 - cdf(t));
    }
    partial[static_cast<std::size_t>(ci)] = acc;
  }
  for (double p : partial) total += p;
  return total;
}

double ClipNegativeMass(std::span<double> probs, double hard_fail) {
  double clipped = 0.0;
  for (double& p : probs) {
    if (p < 0.0) {
      if (p <= -hard_fail) {
        throw std::runtime_error(
            "ClipNegativeMass: negative probability beyond tolerance; "
            "increase the FFT window");
      }
      clipped -= p;
      p = 0.0;
    }
  }
  return clipped;
}

}  // namespace kernels
}  // namespace shuffledp
