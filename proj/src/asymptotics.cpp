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

#include "shuffledp/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

#include "shuffledp/numerics.hpp"
#include "shuffledp/shuffle_index.hpp"

namespace shuffledp {
namespace asymptotics {

using mechanisms::LocalRandomizer;
using mechanisms::ReferenceDistribution;
using numerics::StdNormalCdf;
using numerics::StdNormalPdf;

double LeadingDivergence(double eps, std::int64_t n, double chi) {
  if (!(eps > 0.0)) throw std::invalid_argument("LeadingDivergence: eps > 0");
  const double u = std::expm1(eps);
  const double nd = static_cast<double>(n);
  return StdNormalPdf(chi * u * std::sqrt(nd)) /
         (chi * chi * chi * u * u * nd * std::sqrt(nd));
}

double EpsilonCurveClosedForm(const AsymptoticParams& params) {
  if (!(params.alpha > 0.0) || !(params.chi > 0.0) || params.n < 2) {
    throw std::invalid_argument("EpsilonCurveClosedForm: invalid parameters");
  }
  const double nd = static_cast<double>(params.n);
  const double w = numerics::LambertW0(
      std::sqrt(nd) / (2.0 * params.alpha * params.chi * numerics::kSqrt2Pi));
  return std::log1p(
      std::sqrt(2.0 * w / (params.chi * params.chi * nd)));
}

MomentSummary ComputeMomentSummary(const LocalRandomizer& mech, double x1,
                                   double x1p,
                                   const ReferenceDistribution& ref,
                                   double eps, bool with_kappa3) {
  MomentSummary m;
  m.gamma = mechanisms::ReferenceMass(mech, ref);
  // E[l_eps] = 1 - e^eps holds for every mechanism and reference, so the
  // thinned mean is exact.
  m.mu_eps = m.gamma * (1.0 - std::exp(eps));
  const double ex = 1.0 - std::exp(eps);
  const double ex2 = mechanisms::ParMoment(mech, x1, x1p, ref, eps, 2);
  const double var_z = m.gamma * ex2 - m.gamma * m.gamma * ex * ex;
  if (!(var_z > 0.0)) {
    throw std::runtime_error("ComputeMomentSummary: degenerate variance");
  }
  m.sigma_eps = std::sqrt(var_z);
  if (with_kappa3) {
    const double ex3 = mechanisms::ParMoment(mech, x1, x1p, ref, eps, 3);
    const double g = m.gamma;
    const double m1 = g * ex, m2 = g * ex2, m3 = g * ex3;
    m.kappa3 = m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1;
    m.has_kappa3 = true;
  }
  return m;
}

double RefinedDivergenceFromMoments(const MomentSummary& m, std::int64_t n,
                                    bool cumulant_correction) {
  if (n < 2) throw std::invalid_argument("RefinedDivergence: n >= 2");
  const double sqn = std::sqrt(static_cast<double>(n - 1));
  const double t = -m.mu_eps * sqn / m.sigma_eps;
  const double phi_t = StdNormalPdf(t);
  double a = m.mu_eps * (1.0 - StdNormalCdf(t)) +
             (m.sigma_eps * m.sigma_eps + m.mu_eps * m.mu_eps) /
                 (m.sigma_eps * sqn) * phi_t;
  if (cumulant_correction) {
    if (!m.has_kappa3) {
      throw std::invalid_argument(
          "RefinedDivergence: cumulant correction requires kappa3");
    }
    const double s = m.sigma_eps;
    const double b1 =
        m.kappa3 * m.mu_eps / (6.0 * s * s * s * sqn) * phi_t *
            (t * t - 1.0) +
        m.kappa3 * (s * s + m.mu_eps * m.mu_eps) / (6.0 * s * s * s * s) *
            phi_t * t * (t * t - 3.0) / static_cast<double>(n - 1);
    a -= b1;
  }
  return a / m.gamma;
}

double RefinedDivergence(const LocalRandomizer& mech, double x1, double x1p,
                         const ReferenceDistribution& ref, double eps,
                         std::int64_t n, bool cumulant_correction) {
  if (!(eps > 0.0)) throw std::invalid_argument("RefinedDivergence: eps > 0");
  const MomentSummary m =
      ComputeMomentSummary(mech, x1, x1p, ref, eps, cumulant_correction);
  return RefinedDivergenceFromMoments(m, n, cumulant_correction);
}

EpsilonSolveResult EpsilonCurveRefined(const LocalRandomizer& mech, double x1,
                                       double x1p,
                                       const ReferenceDistribution& ref,
                                       double alpha, std::int64_t n) {
  if (!(alpha > 0.0) || n < 2) {
    throw std::invalid_argument("EpsilonCurveRefined: invalid parameters");
  }
  const double gamma = mechanisms::ReferenceMass(mech, ref);
  const double sigma0 = std::sqrt(mechanisms::VarianceL0(mech, x1, x1p, ref));
  const double chi = std::sqrt(gamma) / sigma0;
  const double eps_cf = EpsilonCurveClosedForm({n, alpha, chi});

  const double target = alpha / static_cast<double>(n);
  auto g = [&](double eps) {
    return RefinedDivergence(mech, x1, x1p, ref, eps, n) - target;
  };
  double lo = eps_cf / 10.0, hi = 10.0 * eps_cf;
  const double g_lo = g(lo), g_hi = g(hi);
  if (!(g_lo > 0.0) || !(g_hi < 0.0)) {
    throw std::runtime_error(
        "EpsilonCurveRefined: bracket failure, g(lo)=" +
        std::to_string(g_lo) + " g(hi)=" + std::to_string(g_hi));
  }
  // Bisection to 1e-10 relative on eps.
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * lo; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  EpsilonSolveResult out;
  out.eps = 0.5 * (lo + hi);
  const MomentSummary m = ComputeMomentSummary(mech, x1, x1p, ref, out.eps);
  out.t_n = -m.mu_eps * std::sqrt(static_cast<double>(n - 1)) / m.sigma_eps;
  out.small_t_warning = out.t_n < 1.0;
  return out;
}

DeltaBandResult DeltaBand(const LocalRandomizer& mech, double alpha,
                          std::int64_t n) {
  const shuffle_index::ShuffleIndices idx =
      shuffle_index::WorstCaseIndices(mech);
  DeltaBandResult out;
  out.eps_upper_curve =
      EpsilonCurveRefined(mech, idx.pair_lo.first, idx.pair_lo.second,
                          ReferenceDistribution::Blanket(), alpha, n)
          .eps;
  out.eps_lower_curve =
      EpsilonCurveRefined(mech, idx.pair_up.first, idx.pair_up.second,
                          ReferenceDistribution::Local(idx.ref_up), alpha, n)
          .eps;
  if (out.eps_lower_curve > out.eps_upper_curve) {
    // chi ordering guarantees this up to solver tolerance; enforce it.
    std::swap(out.eps_lower_curve, out.eps_upper_curve);
  }
  return out;
}

}  // namespace asymptotics
}  // namespace shuffledp
