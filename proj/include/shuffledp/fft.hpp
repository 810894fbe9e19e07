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

#ifndef SHUFFLEDP_FFT_H_
#define SHUFFLEDP_FFT_H_

#include <complex>
#include <span>
#include <vector>

#include "shuffledp/kernels.hpp"

namespace shuffledp {
namespace numerics {

using ComplexVector = std::vector<std::complex<double>>;

// Iterative radix-2 FFT with a precomputed twiddle table.  Grid sizes are
// always powers of two here, so no general-N support is provided.  A plan is
// immutable once built and safe to share across threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n,
                   kernels::Exec exec = kernels::Exec::kParallel);

  std::size_t size() const { return n_; }

  // Unnormalized forward transform, in place.
  void Forward(std::span<std::complex<double>> data) const;
  // Inverse transform, divides by N.
  void Inverse(std::span<std::complex<double>> data) const;

 private:
  void Transform(std::span<std::complex<double>> data, bool inverse) const;

  std::size_t n_;
  kernels::Exec exec_;
  std::vector<std::complex<double>> twiddles_;  // e^{-2 pi i k / n}, k < n/2
};

// Value-semantics wrappers used by callers that do not manage a plan.
ComplexVector FftForward(const ComplexVector& v);
ComplexVector FftInverse(const ComplexVector& v);

// Rotation by N/2: index j maps to (j + N/2) mod N.  For the even lengths
// used here the inverse shift is the same rotation.
ComplexVector FftShift(const ComplexVector& v);
ComplexVector IfftShift(const ComplexVector& v);

}  // namespace numerics
}  // namespace shuffledp

#endif  // SHUFFLEDP_FFT_H_
