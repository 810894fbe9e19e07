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

#include "shuffledp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace shuffledp {
namespace numerics {
namespace {

constexpr double kInvE = 0.36787944117144232160;  // 1/e

// Nodes/weights of the 15-point Kronrod rule on [-1, 1]; the embedded
// 7-point Gauss rule uses the odd-indexed nodes.
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Interval {
  double a, b, value, error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

// One G7/K15 evaluation on [a, b].
Interval GaussKronrod(const std::function<double(double)>& f, double a,
                      double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double kronrod = 0.0, gauss = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double off = half * kKronrodNodes[i];
    double fv;
    if (i == 7) {
      fv = f(mid);
      kronrod += kKronrodWeights[i] * fv;
      gauss += kGaussWeights[3] * fv;
    } else {
      const double f1 = f(mid - off);
      const double f2 = f(mid + off);
      kronrod += kKronrodWeights[i] * (f1 + f2);
      if (i % 2 == 1) gauss += kGaussWeights[i / 2] * (f1 + f2);
    }
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

double LambertW0(double z) {
  if (std::isnan(z) || z < -kInvE - 1e-15) {
    throw std::domain_error("LambertW0: argument below -1/e");
  }
  if (z == 0.0) return 0.0;
  z = std::max(z, -kInvE);

  double w;
  if (z > std::exp(1.0)) {
    const double l1 = std::log(z);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  } else if (z > -0.25) {
    // Series about 0, good enough as a seed.
    w = z * (1.0 - z + 1.5 * z * z);
    if (z > 1.0) w = std::log1p(z);
  } else {
    // Near the branch point w = -1 + sqrt(2(e z + 1)) - ...
    const double p = std::sqrt(2.0 * (std::exp(1.0) * z + 1.0));
    w = -1.0 + p - p * p / 3.0;
  }

  const double scale = std::max(1.0, std::abs(z));
  for (int it = 0; it < 60; ++it) {
    const double ew = std::exp(w);
    const double fw = w * ew - z;
    if (std::abs(fw) <= 1e-13 * scale) break;
    const double d1 = ew * (1.0 + w);
    const double d2 = ew * (2.0 + w);
    double step = fw / (d1 - 0.5 * fw * d2 / d1);
    // Damping keeps the iterate above the branch point.
    while (w - step < -1.0) step *= 0.5;
    w -= step;
  }
  return std::max(w, -1.0);
}

double StdNormalCdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double StdNormalPdf(double x) {
  return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

namespace {

// Lower regularized gamma by series, valid for x < s + 1.
double LowerRegularizedSeries(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k < 10000; ++k) {
    term *= x / (s + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Upper regularized gamma by Lentz continued fraction, valid for x >= s + 1.
double UpperRegularizedContinuedFraction(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace

double RegularizedUpperGamma(double s, double x) {
  if (!(s > 0.0) || x < 0.0) {
    throw std::domain_error("RegularizedUpperGamma: need s > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (x < s + 1.0) return 1.0 - LowerRegularizedSeries(s, x);
  return UpperRegularizedContinuedFraction(s, x);
}

double UpperIncompleteGamma(double s, double x) {
  return RegularizedUpperGamma(s, x) * std::tgamma(s);
}

double FindRootBisect(const std::function<double(double)>& f, double a,
                      double b, double tol) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) {
    throw std::invalid_argument(
        "FindRootBisect: endpoints do not bracket a root");
  }
  double mid = a;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (a + b);
    const double fm = f(mid);
    if (std::abs(fm) <= tol || (b - a) <= tol * std::max(1.0, std::abs(mid))) {
      return mid;
    }
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return mid;
}

QuadratureResult IntegrateAdaptive(const std::function<double(double)>& f,
                                   double a, double b, double rel_tol,
                                   double abs_tol, std::size_t max_evals) {
  const bool inf_a = std::isinf(a);
  const bool inf_b = std::isinf(b);
  std::function<double(double)> g = f;
  double lo = a, hi = b;
  if (inf_a && inf_b) {
    // x = t / (1 - t^2) maps (-1, 1) onto the real line.
    g = [&f](double t) {
      const double u = 1.0 - t * t;
      return f(t / u) * (1.0 + t * t) / (u * u);
    };
    lo = -1.0;
    hi = 1.0;
  } else if (inf_b) {
    g = [&f, a](double t) {
      const double u = 1.0 - t;
      return f(a + t / u) / (u * u);
    };
    lo = 0.0;
    hi = 1.0;
  } else if (inf_a) {
    g = [&f, b](double t) {
      const double u = 1.0 - t;
      return f(b - t / u) / (u * u);
    };
    lo = 0.0;
    hi = 1.0;
  }

  QuadratureResult result;
  if (lo == hi) return result;

  std::priority_queue<Interval> queue;
  Interval whole = GaussKronrod(g, lo, hi);
  result.evaluations = 15;
  double total = whole.value;
  double total_err = whole.error;
  queue.push(whole);

  auto target = [&](double value) {
    return std::max(rel_tol * std::abs(value), abs_tol);
  };

  while (total_err > target(total) && !queue.empty()) {
    if (result.evaluations + 30 > max_evals) {
      throw QuadratureError("IntegrateAdaptive: evaluation budget exhausted");
    }
    const Interval worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Interval no longer splittable in double precision; accept it.
      continue;
    }
    const Interval left = GaussKronrod(g, worst.a, mid);
    const Interval right = GaussKronrod(g, mid, worst.b);
    result.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
  }

  result.value = total;
  result.abs_error_estimate = total_err;
  return result;
}

}  // namespace numerics
}  // namespace shuffledp
