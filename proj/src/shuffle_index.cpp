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

#include "shuffledp/shuffle_index.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "shuffledp/numerics.hpp"

namespace shuffledp {
namespace shuffle_index {
namespace {

using mechanisms::LocalRandomizer;
using mechanisms::MechanismKind;
using mechanisms::ReferenceDistribution;
using mechanisms::VarianceL0;

constexpr double kGolden = 0.61803398874989484820;

// Minimizes f over [a, b] by golden-section search.
std::pair<double, double> GoldenMin(const std::function<double(double)>& f,
                                    double a, double b, double tol) {
  double u1 = b - kGolden * (b - a), u2 = a + kGolden * (b - a);
  double f1 = f(u1), f2 = f(u2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = u2;
      u2 = u1;
      f2 = f1;
      u1 = b - kGolden * (b - a);
      f1 = f(u1);
    } else {
      a = u1;
      u1 = u2;
      f1 = f2;
      u2 = a + kGolden * (b - a);
      f2 = f(u2);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

double VarUnderLocal(const LocalRandomizer& mech, double x1, double x1p,
                     double x) {
  return VarianceL0(mech, x1, x1p, ReferenceDistribution::Local(x));
}

// Inner infimum of chi over the reference input, i.e. the maximizing
// variance, for a location-family mechanism.
ChiUpResult ChiUpGenGaussian(const LocalRandomizer& mech, double x1,
                             double x1p) {
  auto neg_var = [&](double x) { return -VarUnderLocal(mech, x1, x1p, x); };
  // Seed with a coarse scan; the variance in x is smooth with O(1) modes.
  const int kSeed = 21;
  double best_x = mech.domain_lo;
  double best = neg_var(best_x);
  for (int i = 1; i < kSeed; ++i) {
    const double x = mech.domain_lo +
                     (mech.domain_hi - mech.domain_lo) * i / (kSeed - 1.0);
    const double v = neg_var(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  const double span = (mech.domain_hi - mech.domain_lo) / (kSeed - 1.0);
  const double a = std::max(mech.domain_lo, best_x - span);
  const double b = std::min(mech.domain_hi, best_x + span);
  auto [x_star, neg] = GoldenMin(neg_var, a, b, 1e-7);
  if (neg > best) {  // keep the scan winner if refinement did not help
    x_star = best_x;
    neg = best;
  }
  return {1.0 / std::sqrt(-neg), x_star};
}

// 2-D pair minimization: coarse grid over domain^2 followed by coordinate
// golden-section refinement.
template <typename F>
std::pair<std::pair<double, double>, double> MinimizeOverPairs(
    const LocalRandomizer& mech, F raw_f) {
  const double lo = mech.domain_lo, hi = mech.domain_hi;
  const double min_gap = 1e-6 * (hi - lo);
  auto f = [&](double a, double b) {
    if (std::abs(a - b) < min_gap) {
      return std::numeric_limits<double>::infinity();
    }
    return raw_f(a, b);
  };
  const int kGrid = 21;
  double best = std::numeric_limits<double>::infinity();
  std::pair<double, double> best_pair{lo, hi};
  std::vector<double> xs(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = lo + (hi - lo) * i / (kGrid - 1.0);
  }
  for (int i = 0; i < kGrid; ++i) {
    for (int j = i + 1; j < kGrid; ++j) {
      const double v = f(xs[i], xs[j]);
      if (v < best) {
        best = v;
        best_pair = {xs[i], xs[j]};
      }
    }
  }
  // The endpoints pair is always a candidate.
  {
    const double v = f(lo, hi);
    if (v < best) {
      best = v;
      best_pair = {lo, hi};
    }
  }
  // Coordinate refinement.
  const double span = (hi - lo) / (kGrid - 1.0);
  for (int round = 0; round < 3; ++round) {
    auto [x1, val1] = GoldenMin(
        [&](double a) { return f(a, best_pair.second); },
        std::max(lo, best_pair.first - span),
        std::min(hi, best_pair.first + span), 1e-6);
    if (val1 < best && std::abs(x1 - best_pair.second) > 1e-9) {
      best = val1;
      best_pair.first = x1;
    }
    auto [x2, val2] = GoldenMin(
        [&](double b) { return f(best_pair.first, b); },
        std::max(lo, best_pair.second - span),
        std::min(hi, best_pair.second + span), 1e-6);
    if (val2 < best && std::abs(x2 - best_pair.first) > 1e-9) {
      best = val2;
      best_pair.second = x2;
    }
  }
  return {best_pair, best};
}

// Numerical band-collapse check: some R_x must match gamma * R_BG on the
// disagreement set of the attaining pair.
bool TightnessGenGaussian(const LocalRandomizer& mech,
                          const std::pair<double, double>& pair_lo,
                          double x_star) {
  const double gamma = mechanisms::BlanketMass(mech);
  const double radius = mech.scale * std::pow(30.0, 1.0 / mech.beta);
  const int kPoints = 1000;
  for (int i = 0; i < kPoints; ++i) {
    const double y = (pair_lo.first - radius) +
                     (pair_lo.second + radius - pair_lo.first + radius) * i /
                         (kPoints - 1.0);
    const double rx1 = mechanisms::OutputDensity(mech, pair_lo.first, y);
    const double rx1p = mechanisms::OutputDensity(mech, pair_lo.second, y);
    if (std::abs(rx1 - rx1p) <= 1e-12 * std::max(rx1, rx1p)) continue;
    const double lhs = mechanisms::OutputDensity(mech, x_star, y);
    const double rhs = gamma * mechanisms::BlanketDensity(mech, y);
    if (std::abs(lhs - rhs) > 1e-6 * std::max(rhs, 1e-300)) return false;
  }
  return true;
}

}  // namespace

double ChiLoPair(const LocalRandomizer& mech, double x1, double x1p) {
  const double gamma = mechanisms::BlanketMass(mech);
  const double var =
      VarianceL0(mech, x1, x1p, ReferenceDistribution::Blanket());
  return std::sqrt(gamma / var);
}

ChiUpResult ChiUpPair(const LocalRandomizer& mech, double x1, double x1p) {
  if (mech.kind == MechanismKind::kKrr) {
    const double p = mech.krr_p(), q = mech.krr_q();
    const double var_inside = (p - q) * (p - q) * (1.0 / p + 1.0 / q);
    if (mech.k >= 3) {
      const double var_outside = 2.0 * (p - q) * (p - q) / q;
      if (var_outside >= var_inside) {
        // Attained at any reference symbol outside the pair.
        double x_star = 1.0;
        while (x_star == x1 || x_star == x1p) x_star += 1.0;
        return {std::sqrt(1.0 / var_outside), x_star};
      }
    }
    return {std::sqrt(1.0 / var_inside), x1};
  }
  return ChiUpGenGaussian(mech, x1, x1p);
}

ShuffleIndices WorstCaseIndices(const LocalRandomizer& mech) {
  ShuffleIndices out;
  if (mech.kind == MechanismKind::kKrr) {
    // Pair-independent closed forms.
    out.pair_lo = {1.0, 2.0};
    out.pair_up = {1.0, 2.0};
    out.chi_lo = ChiLoPair(mech, 1.0, 2.0);
    const ChiUpResult up = ChiUpPair(mech, 1.0, 2.0);
    out.chi_up = up.chi;
    out.ref_up = up.attaining_x;
    out.tight = mech.k >= 3;
    return out;
  }

  auto [pair_lo, chi_lo] = MinimizeOverPairs(
      mech, [&](double a, double b) { return ChiLoPair(mech, a, b); });
  out.pair_lo = pair_lo;
  out.chi_lo = chi_lo;

  ChiUpResult best_up;
  auto [pair_up, chi_up] = MinimizeOverPairs(mech, [&](double a, double b) {
    return ChiUpPair(mech, a, b).chi;
  });
  best_up = ChiUpPair(mech, pair_up.first, pair_up.second);
  out.pair_up = pair_up;
  out.chi_up = chi_up;
  out.ref_up = best_up.attaining_x;

  out.tight = TightnessGenGaussian(mech, out.pair_lo, out.ref_up) &&
              std::abs(out.chi_up - out.chi_lo) <= 1e-6 * out.chi_lo;
  return out;
}

}  // namespace shuffle_index
}  // namespace shuffledp
