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

#ifndef SHUFFLEDP_ASYMPTOTICS_H_
#define SHUFFLEDP_ASYMPTOTICS_H_

#include <cstdint>

#include "shuffledp/mechanisms.hpp"

namespace shuffledp {
namespace asymptotics {

struct AsymptoticParams {
  std::int64_t n = 2;
  double alpha = 1.0;
  double chi = 1.0;
};

// Leading term of the blanket divergence in its exact (e^eps - 1) form:
// phi(chi (e^eps - 1) sqrt(n)) / (chi^3 (e^eps - 1)^2 n^{3/2}).
double LeadingDivergence(double eps, std::int64_t n, double chi);

// Closed-form privacy curve eps_n(alpha, chi) =
// log(1 + sqrt(2 W(sqrt(n) / (2 alpha chi sqrt(2 pi))) / (chi^2 n))),
// the unique positive root of LeadingDivergence = alpha / n.
double EpsilonCurveClosedForm(const AsymptoticParams& params);

// Moments of the Bernoulli-thinned amplification variable Z = B * l_eps(Y).
struct MomentSummary {
  double mu_eps = 0.0;     // gamma (1 - e^eps), exact identity
  double sigma_eps = 0.0;  // std of Z
  double gamma = 1.0;
  double kappa3 = 0.0;  // third cumulant of Z, when requested
  bool has_kappa3 = false;
};

MomentSummary ComputeMomentSummary(const mechanisms::LocalRandomizer& mech,
                                   double x1, double x1p,
                                   const mechanisms::ReferenceDistribution& ref,
                                   double eps, bool with_kappa3 = false);

// Two-term refinement of the divergence,
// (1/gamma) [mu_n (1 - Phi(t_n)) + (sigma^2 + mu_n^2) phi(t_n) /
// (sigma sqrt(n-1))] with t_n = -mu_n sqrt(n-1) / sigma.  The optional
// cumulant correction subtracts the first Edgeworth term (requires kappa3).
double RefinedDivergenceFromMoments(const MomentSummary& m, std::int64_t n,
                                    bool cumulant_correction = false);

double RefinedDivergence(const mechanisms::LocalRandomizer& mech, double x1,
                         double x1p,
                         const mechanisms::ReferenceDistribution& ref,
                         double eps, std::int64_t n,
                         bool cumulant_correction = false);

struct EpsilonSolveResult {
  double eps = 0.0;
  double t_n = 0.0;
  // The dropped remainder terms are uncontrolled when t_n is small at the
  // returned root.
  bool small_t_warning = false;
};

// Bisection on RefinedDivergence(eps) = alpha / n over the bracket
// [eps_cf / 10, 10 eps_cf] around the closed-form root.
EpsilonSolveResult EpsilonCurveRefined(
    const mechanisms::LocalRandomizer& mech, double x1, double x1p,
    const mechanisms::ReferenceDistribution& ref, double alpha,
    std::int64_t n);

struct DeltaBandResult {
  double eps_lower_curve = 0.0;  // at chi_up, with its worst-case moments
  double eps_upper_curve = 0.0;  // at chi_lo
};

// Privacy band [eps_n(alpha, chi_up), eps_n(alpha, chi_lo)] via the refined
// solver with the respective worst-case reference moments.
DeltaBandResult DeltaBand(const mechanisms::LocalRandomizer& mech,
                          double alpha, std::int64_t n);

}  // namespace asymptotics
}  // namespace shuffledp

#endif  // SHUFFLEDP_ASYMPTOTICS_H_
