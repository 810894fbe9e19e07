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

#ifndef SHUFFLEDP_ACCOUNTANT_H_
#define SHUFFLEDP_ACCOUNTANT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "shuffledp/kernels.hpp"
#include "shuffledp/mechanisms.hpp"

namespace shuffledp {
namespace accountant {

// Numerical knobs of the FFT pipeline.  The inner truncation window is
// [s, s + w_in], h the bin width on the absolute grid x_j = j h, and the
// outer FFT window w_out = grid_size * h with grid_size a power of two.
struct FftParams {
  std::int64_t n = 2;
  double gamma = 1.0;
  double c = 0.0;  // band half-width of the main-term thresholds
  double s = 0.0;
  double w_in = 0.0;
  double h = 0.0;
  double w_out = 0.0;
  std::size_t grid_size = 0;
};

struct ErrorBudget {
  double eta_main = 0.5;
  double eta_trunc = 1e-3;
  double eta_disc = 1e-3;
  double eta_alias = 1e-3;
};

struct TuningOptions {
  std::size_t grid_cap = std::size_t(1) << 28;
  // For discrete mechanisms, search for a bin width whose grid nearly
  // contains the atoms; the certified discretization bound then uses the
  // exact snap moments and much coarser grids suffice.
  bool snap_discrete_grid = true;
  std::size_t par_grid_points = 4096;
};

class InfeasibleBudgetError : public std::runtime_error {
 public:
  InfeasibleBudgetError(const std::string& what, double minimal_eta_main)
      : std::runtime_error(what), minimal_eta_main(minimal_eta_main) {}
  double minimal_eta_main = 0.0;
};

// Single-summand discretization: conditional PMF of the truncated
// amplification variable on the absolute grid, plus the moment inputs of the
// error bounds.
struct SummandDiscretization {
  std::vector<double> probs;  // bin j_lo + i
  std::int64_t j_lo = 0;
  double q_out = 0.0;    // mass outside the truncation window
  double mu_z_tr = 0.0;  // mean of the truncated summand
  double mu_z_di = 0.0;  // mean of the discretized summand
  double m2_z_di = 0.0;  // second moment of the discretized summand
  // Bernstein inputs for the discretization deviation D = Z_tr - Z_di:
  // worst-case (h/2 constants) for continuous references, exact snap moments
  // for discrete atoms.
  double disc_var = 0.0;  // Var(B * D)
  double disc_k = 0.0;    // a.s. bound on |B D - E[B D]|
  double disc_mean = 0.0;  // E[D]
};

SummandDiscretization DiscretizeSummand(
    const FftParams& params, const mechanisms::ParDistribution& f_ref,
    kernels::Exec exec = kernels::Exec::kParallel);

// PMF of the lattice-centered sum S - m0 h, m0 = round(mu_S_di / h).  The
// sub-bin residual mu_S_di - m0 h is kept in lattice_offset and enters the
// main-term thresholds exactly.
struct CenteredPmf {
  std::vector<double> probs;
  double h = 0.0;
  std::int64_t j0 = 0;  // probs[i] sits at z = (j0 + i) h
  double mu_s_tr = 0.0;
  double mu_s_di = 0.0;
  double lattice_offset = 0.0;
  double neg_mass_clipped = 0.0;
  double mass = 0.0;
};

CenteredPmf CalculatePmf(const FftParams& params,
                         const SummandDiscretization& summand,
                         kernels::Exec exec = kernels::Exec::kParallel);

// Convenience overload running DiscretizeSummand first.
CenteredPmf CalculatePmf(const FftParams& params,
                         const mechanisms::ParDistribution& f_ref,
                         kernels::Exec exec = kernels::Exec::kParallel);

// Sum_j probs[j] (1 - F_x(-c - z_j - mu_S_tr + lattice_offset)); the sign of
// c selects the shifted or unshifted threshold of the two-sided bounds.
double CalculateMainTerm(const CenteredPmf& pmf,
                         const mechanisms::ParDistribution& f_x,
                         double c_signed,
                         kernels::Exec exec = kernels::Exec::kParallel);

struct ErrorTerms {
  double e_trunc = 0.0;
  double e_disc = 0.0;
  double e_alias = 0.0;
};

// Exact truncation probability and Bernstein bounds for discretization and
// aliasing, from the discretized-summand moments.
ErrorTerms ComputeErrorBounds(const FftParams& params,
                              const SummandDiscretization& summand);

struct DivergenceBounds {
  double lower = 0.0;
  double upper = 0.0;
  double midpoint = 0.0;
  double e_trunc = 0.0;
  double e_disc = 0.0;
  double e_alias = 0.0;
  double p_plus_x1 = 0.0;
  double p_minus_x1 = 0.0;
  double p_plus_x1p = 0.0;
  double p_minus_x1p = 0.0;
  bool mean_gap_ok = true;
  double neg_mass_clipped = 0.0;
  std::int64_t n = 0;
  double eps = 0.0;
  std::size_t grid_size = 0;
  double wall_ms = 0.0;
};

// Certified two-sided bounds on the blanket divergence at the given
// parameters.
DivergenceBounds ComputeDivergenceBounds(
    const mechanisms::LocalRandomizer& mech, double x1, double x1p,
    const mechanisms::ReferenceDistribution& ref, double eps, std::int64_t n,
    const FftParams& params, kernels::Exec exec = kernels::Exec::kParallel);

// Parameter selection from the error budget: c from the main-term knob,
// truncation window from the exact truncation formula, h from the Bernstein
// discretization bound, w_out from the Bernstein aliasing bound, grid
// rounded up to a power of two.
FftParams TuneParams(const mechanisms::LocalRandomizer& mech, double x1,
                     double x1p, const mechanisms::ReferenceDistribution& ref,
                     double eps, std::int64_t n, const ErrorBudget& budget,
                     double alpha, const TuningOptions& options = {});

// Tune-then-bound convenience path.
DivergenceBounds CertifiedDivergence(
    const mechanisms::LocalRandomizer& mech, double x1, double x1p,
    const mechanisms::ReferenceDistribution& ref, double eps, std::int64_t n,
    const ErrorBudget& budget, double alpha,
    const TuningOptions& options = {},
    kernels::Exec exec = kernels::Exec::kParallel);

// Exact blanket divergence for k-RR by multinomial enumeration; n <= 20.
double ExactSmallN(const mechanisms::LocalRandomizer& mech, double x1,
                   double x1p, const mechanisms::ReferenceDistribution& ref,
                   double eps, std::int64_t n);

struct McEstimate {
  double divergence = 0.0;
  double std_error = 0.0;
  double p_x1 = 0.0;
  double p_x1p = 0.0;
  double se_x1 = 0.0;
  double se_x1p = 0.0;
};

// Monte-Carlo estimate of the probability-difference representation of the
// blanket divergence:
// Pr[sum_{i<=M} l(Y_i) > 0 | Y_1 ~ R_{x1}] - e^eps Pr[... | Y_1 ~ R_{x1'}]
// with M ~ 1 + Bin(n-1, gamma) and Y_{2:} ~ R_ref.
McEstimate McDivergence(const mechanisms::LocalRandomizer& mech, double x1,
                        double x1p,
                        const mechanisms::ReferenceDistribution& ref,
                        double eps, std::int64_t n, std::int64_t samples,
                        std::uint64_t seed,
                        kernels::Exec exec = kernels::Exec::kParallel);

struct BandPoint {
  std::int64_t n = 0;
  double eps_used = 0.0;
  double delta_upper = 0.0;  // U of the blanket-reference bounds
  double delta_lower = 0.0;  // L of the worst local-reference bounds
  double alpha_over_n = 0.0;
  DivergenceBounds upper_run;
  DivergenceBounds lower_run;
};

// Certified upper/lower delta band across an n grid: eps from the refined
// curve at chi_lo, upper bound at the worst blanket pair, lower bound at the
// worst local-reference triple.
std::vector<BandPoint> CertifiedBand(
    const mechanisms::LocalRandomizer& mech, double alpha,
    const std::vector<std::int64_t>& n_grid, const ErrorBudget& budget,
    const TuningOptions& options = {},
    kernels::Exec exec = kernels::Exec::kParallel);

nlohmann::json BoundsToJson(const DivergenceBounds& b);
std::string BoundsCsvHeader();
std::string BoundsToCsvRow(const DivergenceBounds& b);

}  // namespace accountant
}  // namespace shuffledp

#endif  // SHUFFLEDP_ACCOUNTANT_H_
