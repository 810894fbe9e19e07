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

#include "shuffledp/accountant.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "shuffledp/asymptotics.hpp"
#include "shuffledp/fft.hpp"
#include "shuffledp/numerics.hpp"
#include "shuffledp/shuffle_index.hpp"

namespace shuffledp {
namespace accountant {
namespace {

using mechanisms::LocalRandomizer;
using mechanisms::ParDistribution;
using mechanisms::ReferenceDistribution;
using mechanisms::SamplingLaw;

double ExactTruncationError(std::int64_t n, double gamma, double q_out) {
  if (q_out <= 0.0) return 0.0;
  // 1 - (1 - gamma q)^{n-1}, evaluated without cancellation.
  return -std::expm1(static_cast<double>(n - 1) * std::log1p(-gamma * q_out));
}

double BernsteinTail(double a, double two_n_var, double k_term) {
  if (a <= 0.0) return 1.0;
  const double denom = two_n_var + (2.0 / 3.0) * k_term * a;
  if (denom <= 0.0) return 0.0;
  return 2.0 * std::exp(-a * a / denom);
}

std::size_t NextPowerOfTwo(std::size_t n) {
  std::size_t p = 2;
  while (p < n) p <<= 1;
  return p;
}

std::int64_t WrapIndex(std::int64_t j, std::int64_t n) {
  return ((j % n) + n) % n;
}

}  // namespace

SummandDiscretization DiscretizeSummand(const FftParams& params,
                                        const ParDistribution& f_ref,
                                        kernels::Exec exec) {
  const double h = params.h;
  const double s = params.s;
  const double s_end = params.s + params.w_in;
  SummandDiscretization out;
  out.j_lo = std::llround(s / h);
  const std::int64_t bins = std::llround(params.w_in / h) + 1;
  out.probs.assign(static_cast<std::size_t>(bins), 0.0);

  if (f_ref.pmf.has_value()) {
    double p_in = 0.0;
    for (const auto& [v, p] : *f_ref.pmf) {
      if (v >= s && v <= s_end) p_in += p;
    }
    out.q_out = std::max(0.0, 1.0 - p_in);
    if (p_in <= 0.0) {
      throw std::invalid_argument("DiscretizeSummand: empty window");
    }
    double mean_tr = 0.0, mean_di = 0.0, m2_di = 0.0;
    double d_mean = 0.0, d_m2 = 0.0, d_max = 0.0;
    for (const auto& [v, p] : *f_ref.pmf) {
      if (v < s || v > s_end) continue;
      const double cp = p / p_in;
      const std::int64_t j = std::llround(v / h);
      if (j < out.j_lo || j >= out.j_lo + bins) {
        throw std::logic_error("DiscretizeSummand: atom outside the grid");
      }
      out.probs[static_cast<std::size_t>(j - out.j_lo)] += cp;
      const double x = static_cast<double>(j) * h;
      const double d = v - x;  // snap residual, |d| <= h/2
      mean_tr += cp * v;
      mean_di += cp * x;
      m2_di += cp * x * x;
      d_mean += cp * d;
      d_m2 += cp * d * d;
      d_max = std::max(d_max, std::abs(d));
    }
    out.mu_z_tr = mean_tr;
    out.mu_z_di = mean_di;
    out.m2_z_di = m2_di;
    out.disc_mean = d_mean;
    out.disc_var = std::max(
        0.0, params.gamma * d_m2 -
                 params.gamma * params.gamma * d_mean * d_mean);
    out.disc_k = d_max + params.gamma * std::abs(d_mean);
    return out;
  }

  const double cdf_s = f_ref.cdf(s);
  const double cdf_e = f_ref.cdf(s_end);
  const double p_in = cdf_e - cdf_s;
  out.q_out = std::max(0.0, cdf_s + 1.0 - cdf_e);
  if (p_in <= 0.0) {
    throw std::invalid_argument("DiscretizeSummand: empty window");
  }
  kernels::BinPmfFromCdf(f_ref.cdf, cdf_s, p_in, out.j_lo, h, s, s_end,
                         out.probs, exec);
  // Truncated mean from the CDF integral identity
  // ((s+w)F(s+w) - sF(s) - int_s^{s+w} F) / (F(s+w) - F(s)).
  const auto integral = numerics::IntegrateAdaptive(
      f_ref.cdf, s, s_end, 1e-12, 1e-13 * std::max(1.0, params.w_in));
  out.mu_z_tr = (s_end * cdf_e - s * cdf_s - integral.value) / p_in;
  double mean_di = 0.0, m2_di = 0.0;
  for (std::int64_t i = 0; i < bins; ++i) {
    const double x = static_cast<double>(out.j_lo + i) * h;
    const double p = out.probs[static_cast<std::size_t>(i)];
    mean_di += p * x;
    m2_di += p * x * x;
  }
  out.mu_z_di = mean_di;
  out.m2_z_di = m2_di;
  out.disc_mean = out.mu_z_tr - out.mu_z_di;
  // Worst-case constants |D| <= h/2 for a continuous reference.
  out.disc_var = params.gamma * h * h / 4.0;
  out.disc_k = (1.0 + params.gamma) * h / 2.0;
  return out;
}

ErrorTerms ComputeErrorBounds(const FftParams& params,
                              const SummandDiscretization& summand) {
  ErrorTerms e;
  const double n1 = static_cast<double>(params.n - 1);
  e.e_trunc = ExactTruncationError(params.n, params.gamma, summand.q_out);
  e.e_disc = BernsteinTail(params.c, 2.0 * n1 * summand.disc_var,
                           summand.disc_k);
  const double v_alias =
      std::max(0.0, params.gamma * summand.m2_z_di -
                        params.gamma * params.gamma * summand.mu_z_di *
                            summand.mu_z_di);
  const double k_alias =
      std::max(std::abs(params.s), std::abs(params.s + params.w_in)) +
      params.gamma * std::abs(summand.mu_z_di);
  // Effective half-width: one bin pays for the lattice-centering residual
  // and the edge bin.
  const double a =
      0.5 * static_cast<double>(params.grid_size) * params.h - params.h;
  e.e_alias = BernsteinTail(a, 2.0 * n1 * v_alias, k_alias);
  return e;
}

CenteredPmf CalculatePmf(const FftParams& params,
                         const SummandDiscretization& summand,
                         kernels::Exec exec) {
  const std::size_t n_grid = params.grid_size;
  if (n_grid < 2 || (n_grid & (n_grid - 1)) != 0) {
    throw std::invalid_argument("CalculatePmf: grid_size must be a power of two");
  }
  if (summand.probs.size() > n_grid) {
    throw std::invalid_argument("CalculatePmf: summand wider than the grid");
  }
  CenteredPmf out;
  out.h = params.h;
  out.mu_s_tr =
      static_cast<double>(params.n - 1) * params.gamma * summand.mu_z_tr;
  out.mu_s_di =
      static_cast<double>(params.n - 1) * params.gamma * summand.mu_z_di;
  const std::int64_t m0 = std::llround(out.mu_s_di / params.h);
  out.lattice_offset = out.mu_s_di - static_cast<double>(m0) * params.h;

  const std::int64_t ng = static_cast<std::int64_t>(n_grid);
  numerics::ComplexVector work(n_grid);
  for (std::size_t i = 0; i < summand.probs.size(); ++i) {
    const std::int64_t j = summand.j_lo + static_cast<std::int64_t>(i);
    work[static_cast<std::size_t>(WrapIndex(j, ng))] += summand.probs[i];
  }

  numerics::FftPlan plan(n_grid, exec);
  plan.Forward(work);
  kernels::MixtureCfPower(work, params.gamma, params.n - 1, exec);
  // Centering: the output PMF of S - m0 h reads entry j from the uncentered
  // PMF at j + m0, i.e. a left rotation by m0 bins.
  kernels::ApplyLatticePhase(work, -m0, exec);
  plan.Inverse(work);

  out.j0 = -ng / 2;
  out.probs.resize(n_grid);
  const std::int64_t half = ng / 2;
#pragma omp parallel for schedule(static) \
    if (exec == kernels::Exec::kParallel && ng > (1 << 14))
  for (std::int64_t i = 0; i < ng; ++i) {
    out.probs[static_cast<std::size_t>(i)] =
        work[static_cast<std::size_t>(WrapIndex(i - half, ng))].real();
  }
  out.neg_mass_clipped = kernels::ClipNegativeMass(out.probs, 1e-9);
  out.mass = kernels::ChunkedSum(out.probs, exec);
  if (std::abs(out.mass - 1.0) > 1e-9 + out.neg_mass_clipped) {
    throw std::runtime_error("CalculatePmf: probability mass check failed");
  }
  return out;
}

CenteredPmf CalculatePmf(const FftParams& params, const ParDistribution& f_ref,
                         kernels::Exec exec) {
  return CalculatePmf(params, DiscretizeSummand(params, f_ref, exec), exec);
}

double CalculateMainTerm(const CenteredPmf& pmf, const ParDistribution& f_x,
                         double c_signed, kernels::Exec exec) {
  const double offset = -c_signed - pmf.mu_s_tr + pmf.lattice_offset;
  const double value =
      kernels::MainTermSum(pmf.probs, pmf.h, pmf.j0, offset, f_x.cdf,
                           f_x.support_lo, f_x.support_hi, exec);
  return std::clamp(value, 0.0, 1.0);
}

DivergenceBounds ComputeDivergenceBounds(const LocalRandomizer& mech,
                                         double x1, double x1p,
                                         const ReferenceDistribution& ref,
                                         double eps, std::int64_t n,
                                         const FftParams& params,
                                         kernels::Exec exec) {
  const auto start = std::chrono::steady_clock::now();
  const ParDistribution f_ref = mechanisms::MakeParDistribution(
      mech, x1, x1p, ref, eps, SamplingLaw::kReference);
  const ParDistribution f_x1 = mechanisms::MakeParDistribution(
      mech, x1, x1p, ref, eps, SamplingLaw::kHypothesisX1);
  const ParDistribution f_x1p = mechanisms::MakeParDistribution(
      mech, x1, x1p, ref, eps, SamplingLaw::kHypothesisX1Prime);

  const SummandDiscretization summand = DiscretizeSummand(params, f_ref, exec);
  const ErrorTerms errors = ComputeErrorBounds(params, summand);
  const CenteredPmf pmf = CalculatePmf(params, summand, exec);

  const double keep = 1.0 - errors.e_trunc;
  DivergenceBounds out;
  out.p_plus_x1 = keep * CalculateMainTerm(pmf, f_x1, params.c, exec);
  out.p_minus_x1 = keep * CalculateMainTerm(pmf, f_x1, -params.c, exec);
  out.p_plus_x1p = keep * CalculateMainTerm(pmf, f_x1p, params.c, exec);
  out.p_minus_x1p = keep * CalculateMainTerm(pmf, f_x1p, -params.c, exec);

  const double ee = std::exp(eps);
  // delta_err^low = delta_err^up by construction; the clipped negative mass
  // is charged on top to keep the bounds certified.
  const double delta_err =
      (1.0 + ee) * (errors.e_alias + errors.e_disc + 2.0 * errors.e_trunc +
                    pmf.neg_mass_clipped);
  out.e_trunc = errors.e_trunc;
  out.e_disc = errors.e_disc;
  out.e_alias = errors.e_alias;
  out.neg_mass_clipped = pmf.neg_mass_clipped;
  out.lower = std::clamp(out.p_minus_x1 - ee * out.p_plus_x1p - delta_err,
                         0.0, 1.0);
  out.upper = std::clamp(out.p_plus_x1 - ee * out.p_minus_x1p + delta_err,
                         out.lower, 1.0);
  out.midpoint = 0.5 * (out.lower + out.upper);
  out.mean_gap_ok = std::abs(pmf.mu_s_di - pmf.mu_s_tr) <= params.c;
  out.n = n;
  out.eps = eps;
  out.grid_size = params.grid_size;
  out.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

namespace {

// Largest bin width whose exact snap moments keep the Bernstein
// discretization bound within budget; scans downward so the first accepted
// width is the coarsest. Returns 0 when no width above `h_floor` works.
double SnapScanBinWidth(const std::vector<std::pair<double, double>>& atoms,
                        double gamma, std::int64_t n, double c,
                        double lambda_disc, double disc_target,
                        double h_floor, double h_ceil) {
  if (atoms.empty() || h_ceil <= h_floor) return 0.0;
  double v_max = 1.0;
  for (const auto& [v, p] : atoms) v_max = std::max(v_max, std::abs(v));
  // Residual scale that meets the variance budget with a factor-2 margin.
  const double var_budget =
      c * c / (2.0 * lambda_disc * static_cast<double>(n - 1)) / 2.0;
  const double d_scale = std::sqrt(std::max(var_budget / gamma, 1e-300));

  auto accepted = [&](double h) {
    double d_mean = 0.0, d_m2 = 0.0, d_max = 0.0;
    for (const auto& [v, p] : atoms) {
      const double d = v - h * std::round(v / h);
      d_mean += p * d;
      d_m2 += p * d * d;
      d_max = std::max(d_max, std::abs(d));
    }
    const double var = std::max(0.0, gamma * d_m2 -
                                         gamma * gamma * d_mean * d_mean);
    const double k = d_max + gamma * std::abs(d_mean);
    return BernsteinTail(c, 2.0 * static_cast<double>(n - 1) * var, k) <=
           disc_target;
  };

  double h = h_ceil;
  std::int64_t steps = 0;
  const std::int64_t max_steps = 80'000'000;
  while (h > h_floor && steps < max_steps) {
    if (accepted(h)) return h;
    const double dh = std::max(h * d_scale / (2.0 * v_max), h * 1e-12);
    h -= dh;
    ++steps;
  }
  return 0.0;
}

}  // namespace

FftParams TuneParams(const LocalRandomizer& mech, double x1, double x1p,
                     const ReferenceDistribution& ref, double eps,
                     std::int64_t n, const ErrorBudget& budget, double alpha,
                     const TuningOptions& options) {
  if (!(eps > 0.0) || n < 2) {
    throw std::invalid_argument("TuneParams: need eps > 0 and n >= 2");
  }
  FftParams params;
  params.n = n;
  params.gamma = mechanisms::ReferenceMass(mech, ref);

  const double d_target = std::max(
      asymptotics::RefinedDivergence(mech, x1, x1p, ref, eps, n), 1e-300);
  const double sigma2 = mechanisms::VarianceL0(mech, x1, x1p, ref);
  params.c = sigma2 / (4.0 * alpha * alpha) * budget.eta_main /
             std::log(static_cast<double>(std::max<std::int64_t>(n, 3)));

  const ParDistribution f_ref = mechanisms::MakeParDistribution(
      mech, x1, x1p, ref, eps, SamplingLaw::kReference,
      options.par_grid_points);

  // Truncation window: exact support hull for finite PMFs, otherwise a
  // symmetric-in-probability quantile window sized to the truncation budget.
  double raw_s, raw_e;
  if (f_ref.pmf.has_value()) {
    raw_s = f_ref.support_lo;
    raw_e = f_ref.support_hi;
  } else {
    const double trunc_target = budget.eta_trunc * d_target;
    double q = std::min(
        0.9, -std::expm1(std::log1p(-std::min(trunc_target, 0.9)) /
                         static_cast<double>(n - 1)) /
                 params.gamma);
    q = std::min(q, 0.9);
    for (int it = 0;; ++it) {
      raw_s = f_ref.Quantile(q / 2.0);
      raw_e = f_ref.Quantile(1.0 - q / 2.0);
      const double q_exact =
          f_ref.cdf(raw_s - 1e-12 * std::abs(raw_s)) + 1.0 - f_ref.cdf(raw_e);
      if (ExactTruncationError(n, params.gamma, q_exact) <= trunc_target ||
          it >= 60) {
        break;
      }
      q *= 0.25;
    }
  }

  // Bin width from the Bernstein discretization bound: bisection on h with
  // worst-case |D| <= h/2 constants, then an optional snap scan for discrete
  // atoms using their exact snap moments.
  const double disc_target = budget.eta_disc * d_target;
  const double lambda_disc = std::log(2.0 / std::min(disc_target, 1.999));
  const double n1 = static_cast<double>(n - 1);
  auto disc_bound_worst = [&](double h) {
    return BernsteinTail(params.c, 2.0 * n1 * params.gamma * h * h / 4.0,
                         (1.0 + params.gamma) * h / 2.0);
  };
  double h_hi = std::max((raw_e - raw_s) / 16.0, 1e-300);
  double h = h_hi;
  if (disc_bound_worst(h) > disc_target) {
    double lo = 0.0, hi = h_hi;
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (disc_bound_worst(mid) <= disc_target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    h = lo;
  }
  if (options.snap_discrete_grid && f_ref.pmf.has_value()) {
    const double snapped = SnapScanBinWidth(
        *f_ref.pmf, params.gamma, n, params.c, lambda_disc, disc_target, h,
        (raw_e - raw_s) / 16.0);
    if (snapped > h) h = snapped;
  }
  if (!(h > 0.0)) {
    throw InfeasibleBudgetError("TuneParams: no feasible bin width",
                                budget.eta_main);
  }
  params.h = h;

  // Snap the window to the absolute grid (only ever widening it).
  const std::int64_t j_s = static_cast<std::int64_t>(
      std::floor(raw_s / h - 1e-9));
  const std::int64_t j_e =
      static_cast<std::int64_t>(std::ceil(raw_e / h + 1e-9));
  params.s = static_cast<double>(j_s) * h;
  params.w_in = static_cast<double>(j_e - j_s) * h;

  const SummandDiscretization summand =
      DiscretizeSummand(params, f_ref, kernels::Exec::kParallel);

  // Outer window from the Bernstein aliasing bound.
  const double alias_target = budget.eta_alias * d_target;
  const double lambda_w = std::log(2.0 / std::min(alias_target, 1.999));
  const double v_alias =
      std::max(0.0, params.gamma * summand.m2_z_di -
                        params.gamma * params.gamma * summand.mu_z_di *
                            summand.mu_z_di);
  const double k_alias =
      std::max(std::abs(params.s), std::abs(params.s + params.w_in)) +
      params.gamma * std::abs(summand.mu_z_di);
  const double bk = lambda_w * (2.0 / 3.0) * k_alias;
  const double a =
      0.5 * (bk + std::sqrt(bk * bk + 8.0 * lambda_w * n1 * v_alias));
  const double w_out_raw = 2.0 * a + 2.0 * h;

  const std::size_t min_bins = summand.probs.size() + 2;
  const std::size_t n_raw = static_cast<std::size_t>(
      std::ceil(w_out_raw / h));
  const std::size_t grid =
      NextPowerOfTwo(std::max({n_raw, min_bins, std::size_t(16)}));
  if (grid > options.grid_cap) {
    const double minimal_eta =
        budget.eta_main * static_cast<double>(grid) /
        static_cast<double>(options.grid_cap);
    throw InfeasibleBudgetError(
        "TuneParams: grid size " + std::to_string(grid) +
            " exceeds cap; eta_main >= " + std::to_string(minimal_eta) +
            " would fit",
        minimal_eta);
  }
  params.grid_size = grid;
  params.w_out = static_cast<double>(grid) * h;
  return params;
}

DivergenceBounds CertifiedDivergence(const LocalRandomizer& mech, double x1,
                                     double x1p,
                                     const ReferenceDistribution& ref,
                                     double eps, std::int64_t n,
                                     const ErrorBudget& budget, double alpha,
                                     const TuningOptions& options,
                                     kernels::Exec exec) {
  const auto start = std::chrono::steady_clock::now();
  const FftParams params =
      TuneParams(mech, x1, x1p, ref, eps, n, budget, alpha, options);
  DivergenceBounds out =
      ComputeDivergenceBounds(mech, x1, x1p, ref, eps, n, params, exec);
  out.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

double ExactSmallN(const LocalRandomizer& mech, double x1, double x1p,
                   const ReferenceDistribution& ref, double eps,
                   std::int64_t n) {
  if (!mech.discrete()) {
    throw std::invalid_argument("ExactSmallN: k-RR mechanisms only");
  }
  if (n < 1 || n > 20) {
    throw std::invalid_argument("ExactSmallN: n must be in [1, 20]");
  }
  const double gamma = mechanisms::ReferenceMass(mech, ref);
  const ParDistribution dist = mechanisms::MakeParDistribution(
      mech, x1, x1p, ref, eps, SamplingLaw::kReference);

  // Atoms of the thinned variable Z = B * l(Y).
  std::vector<std::pair<double, double>> atoms;
  if (gamma < 1.0) atoms.emplace_back(0.0, 1.0 - gamma);
  for (const auto& [v, p] : *dist.pmf) {
    bool merged = false;
    for (auto& [av, ap] : atoms) {
      if (std::abs(av - v) <= 1e-14 * std::max(1.0, std::abs(v))) {
        ap += gamma * p;
        merged = true;
        break;
      }
    }
    if (!merged) atoms.emplace_back(v, gamma * p);
  }

  const std::size_t m = atoms.size();
  std::vector<double> log_p(m), values(m);
  for (std::size_t i = 0; i < m; ++i) {
    values[i] = atoms[i].first;
    log_p[i] = std::log(atoms[i].second);
  }
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);

  double expectation = 0.0;
  // Enumerate multinomial count vectors (c_1, ..., c_m) summing to n.
  std::vector<std::int64_t> counts(m, 0);
  std::function<void(std::size_t, std::int64_t)> recurse =
      [&](std::size_t idx, std::int64_t remaining) {
        if (idx + 1 == m) {
          counts[idx] = remaining;
          double total = 0.0, log_prob = log_n_fact;
          for (std::size_t i = 0; i < m; ++i) {
            total += static_cast<double>(counts[i]) * values[i];
            log_prob += static_cast<double>(counts[i]) * log_p[i] -
                        std::lgamma(static_cast<double>(counts[i]) + 1.0);
          }
          if (total > 0.0) expectation += total * std::exp(log_prob);
          return;
        }
        for (std::int64_t c = 0; c <= remaining; ++c) {
          counts[idx] = c;
          recurse(idx + 1, remaining - c);
        }
      };
  recurse(0, n);
  return expectation / (static_cast<double>(n) * gamma);
}

namespace {

// Sampler of a single generalized Gaussian output.
double SampleGenGaussian(const LocalRandomizer& mech, double center,
                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double mag;
  if (mech.beta == 2.0) {
    std::normal_distribution<double> normal(0.0, mech.scale / numerics::kSqrt2);
    return center + normal(rng);
  }
  if (mech.beta == 1.0) {
    std::exponential_distribution<double> expo(1.0);
    mag = mech.scale * expo(rng);
  } else {
    std::gamma_distribution<double> gamma_dist(1.0 / mech.beta, 1.0);
    mag = mech.scale * std::pow(gamma_dist(rng), 1.0 / mech.beta);
  }
  return unif(rng) < 0.5 ? center - mag : center + mag;
}

// Sample from the blanket of a generalized Gaussian by rejection from the
// endpoint mixture.
double SampleBlanket(const LocalRandomizer& mech, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const double center =
        unif(rng) < 0.5 ? mech.domain_lo : mech.domain_hi;
    const double y = SampleGenGaussian(mech, center, rng);
    const double f_lo = mechanisms::OutputDensity(mech, mech.domain_lo, y);
    const double f_hi = mechanisms::OutputDensity(mech, mech.domain_hi, y);
    const double accept = std::min(f_lo, f_hi) / (0.5 * (f_lo + f_hi));
    if (unif(rng) < accept) return y;
  }
}

struct HypothesisCounter {
  std::int64_t hits = 0;
  std::int64_t total = 0;
};

}  // namespace

McEstimate McDivergence(const LocalRandomizer& mech, double x1, double x1p,
                        const ReferenceDistribution& ref, double eps,
                        std::int64_t n, std::int64_t samples,
                        std::uint64_t seed, kernels::Exec exec) {
  const double gamma = mechanisms::ReferenceMass(mech, ref);
  McEstimate out;

  // Discrete fast path: per sample only a handful of binomial draws.
  std::vector<double> ref_values, ref_probs;
  if (mech.discrete()) {
    const ParDistribution dist = mechanisms::MakeParDistribution(
        mech, x1, x1p, ref, eps, SamplingLaw::kReference);
    for (const auto& [v, p] : *dist.pmf) {
      ref_values.push_back(v);
      ref_probs.push_back(p);
    }
  }
  const auto l_fn = mech.discrete()
                        ? std::function<double(double)>()
                        : mechanisms::MakeParValueFn(mech, x1, x1p, ref, eps);

  double p_hat[2], se_hat[2];
  for (int hyp = 0; hyp < 2; ++hyp) {
    const double first_center = hyp == 0 ? x1 : x1p;
    const ParDistribution first_dist = mechanisms::MakeParDistribution(
        mech, x1, x1p, ref, eps,
        hyp == 0 ? SamplingLaw::kHypothesisX1
                 : SamplingLaw::kHypothesisX1Prime);

    const std::int64_t chunk = 1 << 14;
    const std::int64_t chunks = (samples + chunk - 1) / chunk;
    std::vector<std::int64_t> hits(static_cast<std::size_t>(chunks), 0);
#pragma omp parallel for schedule(dynamic, 1) \
    if (exec == kernels::Exec::kParallel && chunks > 1)
    for (std::int64_t ci = 0; ci < chunks; ++ci) {
      std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL *
                                     static_cast<std::uint64_t>(
                                         ci + chunks * hyp + 1));
      std::binomial_distribution<std::int64_t> binom(n - 1, gamma);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const std::int64_t lo = ci * chunk;
      const std::int64_t hi = std::min(samples, lo + chunk);
      std::int64_t local = 0;
      for (std::int64_t sidx = lo; sidx < hi; ++sidx) {
        double total = 0.0;
        // First summand from the hypothesis distribution.
        if (mech.discrete()) {
          double u = unif(rng), acc = 0.0;
          double v1 = first_dist.pmf->back().first;
          for (const auto& [v, p] : *first_dist.pmf) {
            acc += p;
            if (u <= acc) {
              v1 = v;
              break;
            }
          }
          total += v1;
          std::int64_t m_rest = binom(rng);
          double remaining = 1.0;
          for (std::size_t a = 0; a + 1 < ref_values.size() && m_rest > 0;
               ++a) {
            std::binomial_distribution<std::int64_t> part(
                m_rest, std::min(1.0, ref_probs[a] / remaining));
            const std::int64_t cnt = part(rng);
            total += static_cast<double>(cnt) * ref_values[a];
            m_rest -= cnt;
            remaining -= ref_probs[a];
          }
          if (m_rest > 0) total += static_cast<double>(m_rest) *
                                   ref_values.back();
        } else {
          total += l_fn(SampleGenGaussian(mech, first_center, rng));
          const std::int64_t m_rest = binom(rng);
          for (std::int64_t i = 0; i < m_rest; ++i) {
            const double y = ref.blanket ? SampleBlanket(mech, rng)
                                         : SampleGenGaussian(mech, ref.x, rng);
            total += l_fn(y);
          }
        }
        if (total > 0.0) ++local;
      }
      hits[static_cast<std::size_t>(ci)] = local;
    }
    std::int64_t total_hits = 0;
    for (auto hcount : hits) total_hits += hcount;
    p_hat[hyp] = static_cast<double>(total_hits) /
                 static_cast<double>(samples);
    se_hat[hyp] = std::sqrt(std::max(
        p_hat[hyp] * (1.0 - p_hat[hyp]) / static_cast<double>(samples),
        1.0 / (static_cast<double>(samples) * static_cast<double>(samples))));
  }

  const double ee = std::exp(eps);
  out.p_x1 = p_hat[0];
  out.p_x1p = p_hat[1];
  out.se_x1 = se_hat[0];
  out.se_x1p = se_hat[1];
  out.divergence = p_hat[0] - ee * p_hat[1];
  out.std_error =
      std::sqrt(se_hat[0] * se_hat[0] + ee * ee * se_hat[1] * se_hat[1]);
  return out;
}

std::vector<BandPoint> CertifiedBand(const LocalRandomizer& mech, double alpha,
                                     const std::vector<std::int64_t>& n_grid,
                                     const ErrorBudget& budget,
                                     const TuningOptions& options,
                                     kernels::Exec exec) {
  const shuffle_index::ShuffleIndices idx =
      shuffle_index::WorstCaseIndices(mech);
  const ReferenceDistribution blanket = ReferenceDistribution::Blanket();
  const ReferenceDistribution worst_local =
      ReferenceDistribution::Local(idx.ref_up);

  std::vector<BandPoint> out;
  out.reserve(n_grid.size());
  for (const std::int64_t n : n_grid) {
    BandPoint pt;
    pt.n = n;
    pt.alpha_over_n = alpha / static_cast<double>(n);
    pt.eps_used = asymptotics::EpsilonCurveRefined(
                      mech, idx.pair_lo.first, idx.pair_lo.second, blanket,
                      alpha, n)
                      .eps;
    pt.upper_run = CertifiedDivergence(mech, idx.pair_lo.first,
                                       idx.pair_lo.second, blanket,
                                       pt.eps_used, n, budget, alpha, options,
                                       exec);
    pt.lower_run = CertifiedDivergence(mech, idx.pair_up.first,
                                       idx.pair_up.second, worst_local,
                                       pt.eps_used, n, budget, alpha, options,
                                       exec);
    pt.delta_upper = pt.upper_run.upper;
    pt.delta_lower = pt.lower_run.lower;
    out.push_back(std::move(pt));
  }
  return out;
}

nlohmann::json BoundsToJson(const DivergenceBounds& b) {
  return nlohmann::json{{"n", b.n},
                        {"eps", b.eps},
                        {"lower", b.lower},
                        {"upper", b.upper},
                        {"e_trunc", b.e_trunc},
                        {"e_disc", b.e_disc},
                        {"e_alias", b.e_alias},
                        {"grid_size", b.grid_size},
                        {"wall_ms", b.wall_ms}};
}

std::string BoundsCsvHeader() {
  return "n,eps,lower,upper,e_trunc,e_disc,e_alias,grid_size,wall_ms";
}

std::string BoundsToCsvRow(const DivergenceBounds& b) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%.17g",
                static_cast<long long>(b.n), b.eps, b.lower, b.upper,
                b.e_trunc, b.e_disc, b.e_alias, b.grid_size, b.wall_ms);
  return buf;
}

}  // namespace accountant
}  // namespace shuffledp
