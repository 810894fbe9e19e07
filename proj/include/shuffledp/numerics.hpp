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

#ifndef SHUFFLEDP_NUMERICS_H_
#define SHUFFLEDP_NUMERICS_H_

#include <cstddef>
#include <functional>
#include <stdexcept>

namespace shuffledp {
namespace numerics {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

// Principal branch of the Lambert W function, solving w*exp(w) = z for
// z >= -1/e.  Damped Halley iteration from a log-based initial guess;
// fixed-point residual |w e^w - z| <= 1e-12 * max(1, |z|).
double LambertW0(double z);

// Standard normal CDF, evaluated through erfc so that both tails keep full
// relative accuracy.
double StdNormalCdf(double x);

// Standard normal density.
double StdNormalPdf(double x);

// Upper incomplete gamma function Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt
// for s > 0, x >= 0.  Series for x < s + 1, Lentz continued fraction
// otherwise; relative error <= 1e-10.
double UpperIncompleteGamma(double s, double x);

// Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s).
double RegularizedUpperGamma(double s, double x);

// Bisection on a bracketing interval: requires f(a) * f(b) <= 0.  Stops when
// |f(mid)| <= tol or the bracket width is below tol * max(1, |mid|).
double FindRootBisect(const std::function<double(double)>& f, double a,
                      double b, double tol);

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adaptive Gauss-Kronrod (G7, K15) integration of f over [a, b].  Infinite
// endpoints are handled by algebraic substitution (x = t / (1 - t^2) on the
// full line, x = a + t / (1 - t) on half lines).  The returned error
// estimate is the sum of |K15 - G7| over accepted subintervals.  Throws
// QuadratureError when the target max(rel_tol * |value|, abs_tol) is not met
// within max_evals integrand evaluations.
QuadratureResult IntegrateAdaptive(const std::function<double(double)>& f,
                                   double a, double b, double rel_tol,
                                   double abs_tol,
                                   std::size_t max_evals = std::size_t(1)
                                                           << 20);

}  // namespace numerics
}  // namespace shuffledp

#endif  // SHUFFLEDP_NUMERICS_H_
