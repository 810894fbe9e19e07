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

#ifndef SHUFFLEDP_MECHANISMS_H_
#define SHUFFLEDP_MECHANISMS_H_

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace shuffledp {
namespace mechanisms {

enum class MechanismKind { kKrr, kGenGaussian };

// Descriptor of a local randomizer.  For k-RR the output alphabet is
// {1, ..., k} (symbols passed around as doubles); the generalized Gaussian
// randomizer adds noise with density proportional to exp(-|y-x|^beta /
// scale^beta) to an input from [domain_lo, domain_hi].
struct LocalRandomizer {
  MechanismKind kind = MechanismKind::kKrr;
  int k = 2;
  double eps0 = 1.0;
  double beta = 2.0;
  double scale = 1.0;
  double domain_lo = 0.0;
  double domain_hi = 1.0;

  static LocalRandomizer Krr(int k, double eps0);
  static LocalRandomizer GenGaussian(double beta, double scale,
                                     double domain_lo = 0.0,
                                     double domain_hi = 1.0);

  bool discrete() const { return kind == MechanismKind::kKrr; }
  // k-RR report probabilities p = e^{eps0}/(e^{eps0}+k-1), q = 1/(...).
  double krr_p() const;
  double krr_q() const;
};

// Throws std::invalid_argument on malformed descriptors.
void Validate(const LocalRandomizer& mech);

void to_json(nlohmann::json& j, const LocalRandomizer& mech);
void from_json(const nlohmann::json& j, LocalRandomizer& mech);

// Reference distribution for the privacy amplification variable: either the
// blanket or one of the local output distributions R_x.
struct ReferenceDistribution {
  bool blanket = true;
  double x = 0.0;

  static ReferenceDistribution Blanket() { return {true, 0.0}; }
  static ReferenceDistribution Local(double x) { return {false, x}; }
};

// Which measure the amplification variable is evaluated under.
enum class SamplingLaw { kReference, kHypothesisX1, kHypothesisX1Prime };

// Density (or PMF) of R_x at y.
double OutputDensity(const LocalRandomizer& mech, double x, double y);

// Blanket mass gamma = integral of inf_x R_x.
double BlanketMass(const LocalRandomizer& mech);

// Normalized blanket density R_BG(y).
double BlanketDensity(const LocalRandomizer& mech, double y);

double ReferenceDensity(const LocalRandomizer& mech,
                        const ReferenceDistribution& ref, double y);

// Thinning mass associated with a reference: gamma for the blanket, 1 for a
// local reference.
double ReferenceMass(const LocalRandomizer& mech,
                     const ReferenceDistribution& ref);

// Pointwise privacy amplification value
// l_eps(y) = (R_{x1}(y) - e^eps R_{x1'}(y)) / R_ref(y).
double ParValue(const LocalRandomizer& mech, double x1, double x1p,
                const ReferenceDistribution& ref, double eps, double y);

// Distribution of l_eps(Y) when Y follows the chosen sampling law.
struct ParDistribution {
  std::function<double(double)> cdf;
  // Present for discrete mechanisms: (value, probability), sorted by value.
  std::optional<std::vector<std::pair<double, double>>> pmf;
  double mean = 0.0;
  double variance = 0.0;
  double support_lo = 0.0;  // -inf allowed
  double support_hi = 0.0;  // +inf allowed
  SamplingLaw law = SamplingLaw::kReference;

  // Smallest u with cdf(u) >= p, found by bracketed bisection.
  double Quantile(double p) const;
};

// Raised when the monotone-piece detection grid for a continuous mechanism
// is too coarse; message carries the suggested grid size.
class PieceDetectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ParDistribution MakeParDistribution(const LocalRandomizer& mech, double x1,
                                    double x1p,
                                    const ReferenceDistribution& ref,
                                    double eps, SamplingLaw law,
                                    std::size_t grid_points = 4096);

// Reusable evaluator of y -> l_eps(y) with the normalization constants
// hoisted out of the call.
std::function<double(double)> MakeParValueFn(const LocalRandomizer& mech,
                                             double x1, double x1p,
                                             const ReferenceDistribution& ref,
                                             double eps);

// E[l_eps(Y)^order] under the reference law (exact for k-RR, quadrature
// otherwise).
double ParMoment(const LocalRandomizer& mech, double x1, double x1p,
                 const ReferenceDistribution& ref, double eps, int order,
                 double rel_tol = 1e-9);

// Var of l_0 under the reference law; the mean vanishes at eps = 0, so this
// equals the integral of (R_{x1} - R_{x1'})^2 / R_ref.
double VarianceL0(const LocalRandomizer& mech, double x1, double x1p,
                  const ReferenceDistribution& ref, double rel_tol = 1e-9);

// Scale that gives a generalized Gaussian of shape beta a per-coordinate
// noise standard deviation of sigma: scale = sigma sqrt(Gamma(1/b)/Gamma(3/b)).
double GenGaussianScaleForSigma(double beta, double sigma);

}  // namespace mechanisms
}  // namespace shuffledp

#endif  // SHUFFLEDP_MECHANISMS_H_
