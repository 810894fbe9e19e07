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

#include "shuffledp/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "shuffledp/numerics.hpp"

namespace shuffledp {
namespace mechanisms {
namespace {

using numerics::IntegrateAdaptive;
using numerics::RegularizedUpperGamma;

// Numeric reach of a generalized Gaussian: exp(-700) is below 1e-304.
double TailRadius(const LocalRandomizer& mech) {
  return mech.scale * std::pow(700.0, 1.0 / mech.beta);
}

double LogGenGaussianNorm(const LocalRandomizer& mech) {
  return std::log(mech.beta / (2.0 * mech.scale)) -
         std::lgamma(1.0 / mech.beta);
}

double LogGenGaussianDensity(const LocalRandomizer& mech, double center,
                             double y) {
  return LogGenGaussianNorm(mech) -
         std::pow(std::abs(y - center) / mech.scale, mech.beta);
}

double DomainMid(const LocalRandomizer& mech) {
  return 0.5 * (mech.domain_lo + mech.domain_hi);
}

// log of the unnormalized blanket density inf_x R_x(y); the infimum over the
// interval domain is attained at the far endpoint.
double LogBlanketUnnormalized(const LocalRandomizer& mech, double y) {
  const double far_center =
      y < DomainMid(mech) ? mech.domain_hi : mech.domain_lo;
  return LogGenGaussianDensity(mech, far_center, y);
}

// CDF of a generalized Gaussian centered at `center`.
double GenGaussianCdf(const LocalRandomizer& mech, double center, double t) {
  const double z = std::pow(std::abs(t - center) / mech.scale, mech.beta);
  const double q = 0.5 * RegularizedUpperGamma(1.0 / mech.beta, z);
  return t < center ? q : 1.0 - q;
}

double BlanketCdf(const LocalRandomizer& mech, double t) {
  const double mid = DomainMid(mech);
  const double gamma = BlanketMass(mech);
  if (t <= mid) {
    return GenGaussianCdf(mech, mech.domain_hi, t) / gamma;
  }
  return (GenGaussianCdf(mech, mech.domain_hi, mid) +
          GenGaussianCdf(mech, mech.domain_lo, t) -
          GenGaussianCdf(mech, mech.domain_lo, mid)) /
         gamma;
}

int KrrSymbol(const LocalRandomizer& mech, double y) {
  const int s = static_cast<int>(std::llround(y));
  if (s < 1 || s > mech.k || std::abs(y - s) > 1e-9) {
    throw std::invalid_argument("k-RR output symbol must be in {1,...,k}");
  }
  return s;
}

struct LawSpec {
  bool blanket = false;
  double center = 0.0;  // local density center / k-RR symbol
};

LawSpec ResolveLaw(const LocalRandomizer& mech, double x1, double x1p,
                   const ReferenceDistribution& ref, SamplingLaw law) {
  switch (law) {
    case SamplingLaw::kReference:
      return ref.blanket ? LawSpec{true, 0.0} : LawSpec{false, ref.x};
    case SamplingLaw::kHypothesisX1:
      return LawSpec{false, x1};
    case SamplingLaw::kHypothesisX1Prime:
      return LawSpec{false, x1p};
  }
  (void)mech;
  return {};
}

double LawDensity(const LocalRandomizer& mech, const LawSpec& law, double y) {
  if (law.blanket) return BlanketDensity(mech, y);
  return OutputDensity(mech, law.center, y);
}

double LawCdf(const LocalRandomizer& mech, const LawSpec& law, double t) {
  if (law.blanket) return BlanketCdf(mech, t);
  return GenGaussianCdf(mech, law.center, t);
}

// --- continuous privacy amplification machinery ------------------------

// l_eps(y) evaluated in log space; the reference never divides to zero.
struct ParEvaluator {
  LocalRandomizer mech;
  double x1, x1p, eps;
  bool blanket_ref;
  double ref_center;
  double log_gamma;  // log of reference mass normalizer (0 for local refs)

  double LogRef(double y) const {
    if (blanket_ref) return LogBlanketUnnormalized(mech, y) - log_gamma;
    return LogGenGaussianDensity(mech, ref_center, y);
  }

  double operator()(double y) const {
    const double lr = LogRef(y);
    const double a = LogGenGaussianDensity(mech, x1, y) - lr;
    const double b = eps + LogGenGaussianDensity(mech, x1p, y) - lr;
    return std::exp(a) - std::exp(b);
  }
};

struct MonotonePiece {
  double y_lo, y_hi;  // piece interval
  double l_lo, l_hi;  // l at the ends
  bool decreasing;
};

// Immutable description of l_eps as finitely many monotone pieces plus the
// CDF of the sampling law; shared by the returned closures.
struct PiecewisePar {
  ParEvaluator l;
  LocalRandomizer mech;
  LawSpec law;
  std::vector<MonotonePiece> pieces;
  double y_lo, y_hi;
  double value_lo, value_hi;  // hull of l over [y_lo, y_hi]

  double InvertOnPiece(const MonotonePiece& p, double u) const {
    double a = p.y_lo, b = p.y_hi;
    for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a));
         ++it) {
      const double m = 0.5 * (a + b);
      const double lm = l(m);
      const bool go_right = p.decreasing ? (lm > u) : (lm < u);
      if (go_right) {
        a = m;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  }

  // Pr[l(Y) <= u] as a finite sum of law-CDF differences over the solution
  // intervals of {l <= u}.
  double Cdf(double u) const {
    double total = 0.0;
    if (l(y_lo) <= u) total += LawCdf(mech, law, y_lo);
    if (l(y_hi) <= u) total += 1.0 - LawCdf(mech, law, y_hi);
    for (const auto& p : pieces) {
      if (p.decreasing) {
        if (u < p.l_hi) continue;
        const double y_star = u >= p.l_lo ? p.y_lo : InvertOnPiece(p, u);
        total += LawCdf(mech, law, p.y_hi) - LawCdf(mech, law, y_star);
      } else {
        if (u < p.l_lo) continue;
        const double y_star = u >= p.l_hi ? p.y_hi : InvertOnPiece(p, u);
        total += LawCdf(mech, law, y_star) - LawCdf(mech, law, p.y_lo);
      }
    }
    return std::clamp(total, 0.0, 1.0);
  }
};

std::shared_ptr<PiecewisePar> BuildPiecewise(const LocalRandomizer& mech,
                                             double x1, double x1p,
                                             const ReferenceDistribution& ref,
                                             double eps, SamplingLaw law_kind,
                                             std::size_t grid_points) {
  const double gamma = ref.blanket ? BlanketMass(mech) : 1.0;
  ParEvaluator l{mech,       x1, x1p, eps, ref.blanket,
                 ref.blanket ? 0.0 : ref.x, std::log(gamma)};
  const LawSpec law = ResolveLaw(mech, x1, x1p, ref, law_kind);

  const double radius = TailRadius(mech);
  double c_lo = std::min({x1, x1p, mech.domain_lo, law.center});
  double c_hi = std::max({x1, x1p, mech.domain_hi, law.center});
  if (!ref.blanket) {
    c_lo = std::min(c_lo, ref.x);
    c_hi = std::max(c_hi, ref.x);
  }
  const double y_lo = c_lo - radius;
  const double y_hi = c_hi + radius;

  for (std::size_t pts = grid_points; pts <= (1u << 17); pts *= 2) {
    std::vector<double> ys(pts), ls(pts);
    const double step = (y_hi - y_lo) / static_cast<double>(pts - 1);
    for (std::size_t i = 0; i < pts; ++i) {
      ys[i] = y_lo + step * static_cast<double>(i);
      ls[i] = l(ys[i]);
    }

    // Breakpoints at sign changes of the discrete slope, refined by
    // golden-section search.
    std::vector<double> breaks{y_lo};
    constexpr double kGolden = 0.61803398874989484820;
    for (std::size_t i = 1; i + 1 < pts; ++i) {
      const double d1 = ls[i] - ls[i - 1];
      const double d2 = ls[i + 1] - ls[i];
      if (d1 == 0.0 || d2 == 0.0 || (d1 > 0.0) == (d2 > 0.0)) continue;
      const bool maximum = d1 > 0.0;
      double a = ys[i - 1], b = ys[i + 1];
      double u1 = b - kGolden * (b - a), u2 = a + kGolden * (b - a);
      double f1 = l(u1), f2 = l(u2);
      for (int it = 0; it < 90 && (b - a) > 1e-13 * (1.0 + std::abs(a));
           ++it) {
        const bool keep_left = maximum ? (f1 > f2) : (f1 < f2);
        if (keep_left) {
          b = u2;
          u2 = u1;
          f2 = f1;
          u1 = b - kGolden * (b - a);
          f1 = l(u1);
        } else {
          a = u1;
          u1 = u2;
          f1 = f2;
          u2 = a + kGolden * (b - a);
          f2 = l(u2);
        }
      }
      breaks.push_back(0.5 * (a + b));
    }
    breaks.push_back(y_hi);
    std::sort(breaks.begin(), breaks.end());

    auto pw = std::make_shared<PiecewisePar>();
    pw->l = l;
    pw->mech = mech;
    pw->law = law;
    pw->y_lo = y_lo;
    pw->y_hi = y_hi;
    bool ok = true;
    double vmin = ls[0], vmax = ls[0];
    for (std::size_t b = 0; b + 1 < breaks.size() && ok; ++b) {
      MonotonePiece piece;
      piece.y_lo = breaks[b];
      piece.y_hi = breaks[b + 1];
      piece.l_lo = l(piece.y_lo);
      piece.l_hi = l(piece.y_hi);
      piece.decreasing = piece.l_lo > piece.l_hi;
      // The piece must be monotone between its refined breakpoints.
      double prev = piece.l_lo;
      for (int s = 1; s <= 8 && ok; ++s) {
        const double y =
            piece.y_lo + (piece.y_hi - piece.y_lo) * s / 9.0;
        const double v = l(y);
        if (piece.decreasing ? v > prev + 1e-12 * (1.0 + std::abs(prev))
                             : v < prev - 1e-12 * (1.0 + std::abs(prev))) {
          ok = false;
        }
        prev = v;
      }
      if (piece.decreasing) std::swap(piece.l_lo, piece.l_hi);
      vmin = std::min({vmin, piece.l_lo});
      vmax = std::max({vmax, piece.l_hi});
      if (piece.decreasing) std::swap(piece.l_lo, piece.l_hi);
      pw->pieces.push_back(piece);
    }
    if (!ok) continue;  // retry with a doubled grid
    pw->value_lo = vmin;
    pw->value_hi = vmax;
    return pw;
  }
  throw PieceDetectionError(
      "monotone-piece detection failed; retry with grid_points > 131072");
}

// Integral of f(y) * law-density(y) over the working range, split at the
// blanket kink and piece breakpoints.
double LawExpectation(const PiecewisePar& pw,
                      const std::function<double(double)>& f,
                      double rel_tol) {
  std::vector<double> cuts{pw.y_lo};
  for (const auto& p : pw.pieces) cuts.push_back(p.y_hi);
  if (pw.law.blanket) cuts.push_back(DomainMid(pw.mech));
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  const LocalRandomizer& mech = pw.mech;
  const LawSpec& law = pw.law;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    auto integrand = [&](double y) {
      return f(y) * LawDensity(mech, law, y);
    };
    total += IntegrateAdaptive(integrand, cuts[i], cuts[i + 1], rel_tol,
                               1e-14)
                 .value;
  }
  return total;
}

// --- k-RR atoms ---------------------------------------------------------

std::vector<std::pair<double, double>> KrrAtoms(const LocalRandomizer& mech,
                                                double x1, double x1p,
                                                const ReferenceDistribution& ref,
                                                double eps, SamplingLaw law) {
  const LawSpec spec = ResolveLaw(mech, x1, x1p, ref, law);
  std::vector<std::pair<double, double>> atoms;
  for (int y = 1; y <= mech.k; ++y) {
    const double value = ParValue(mech, x1, x1p, ref, eps, y);
    double prob;
    if (spec.blanket) {
      prob = 1.0 / mech.k;
    } else {
      const int c = KrrSymbol(mech, spec.center);
      prob = (y == c) ? mech.krr_p() : mech.krr_q();
    }
    atoms.emplace_back(value, prob);
  }
  std::sort(atoms.begin(), atoms.end());
  // Merge numerically identical values.
  std::vector<std::pair<double, double>> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() &&
        std::abs(a.first - merged.back().first) <=
            1e-14 * std::max(1.0, std::abs(a.first))) {
      merged.back().second += a.second;
    } else {
      merged.push_back(a);
    }
  }
  return merged;
}

}  // namespace

LocalRandomizer LocalRandomizer::Krr(int k, double eps0) {
  LocalRandomizer m;
  m.kind = MechanismKind::kKrr;
  m.k = k;
  m.eps0 = eps0;
  Validate(m);
  return m;
}

LocalRandomizer LocalRandomizer::GenGaussian(double beta, double scale,
                                             double domain_lo,
                                             double domain_hi) {
  LocalRandomizer m;
  m.kind = MechanismKind::kGenGaussian;
  m.beta = beta;
  m.scale = scale;
  m.domain_lo = domain_lo;
  m.domain_hi = domain_hi;
  Validate(m);
  return m;
}

double LocalRandomizer::krr_p() const {
  return std::exp(eps0) / (std::exp(eps0) + k - 1);
}

double LocalRandomizer::krr_q() const {
  return 1.0 / (std::exp(eps0) + k - 1);
}

void Validate(const LocalRandomizer& mech) {
  if (mech.kind == MechanismKind::kKrr) {
    if (mech.k < 2) throw std::invalid_argument("k-RR requires k >= 2");
    if (!(mech.eps0 >= 0.0) || !std::isfinite(mech.eps0)) {
      throw std::invalid_argument("k-RR requires eps0 >= 0");
    }
  } else {
    if (!(mech.beta >= 1.0 && mech.beta <= 2.0)) {
      throw std::invalid_argument("generalized Gaussian requires beta in [1,2]");
    }
    if (!(mech.scale > 0.0)) {
      throw std::invalid_argument("generalized Gaussian requires scale > 0");
    }
    if (!(mech.domain_lo < mech.domain_hi)) {
      throw std::invalid_argument("domain must be a nonempty interval");
    }
  }
}

void to_json(nlohmann::json& j, const LocalRandomizer& mech) {
  if (mech.kind == MechanismKind::kKrr) {
    j = nlohmann::json{{"kind", "krr"}, {"k", mech.k}, {"eps0", mech.eps0}};
  } else {
    j = nlohmann::json{{"kind", "gen_gaussian"},
                       {"beta", mech.beta},
                       {"scale", mech.scale},
                       {"domain", {mech.domain_lo, mech.domain_hi}}};
  }
}

void from_json(const nlohmann::json& j, LocalRandomizer& mech) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "krr") {
    mech = LocalRandomizer::Krr(j.at("k").get<int>(),
                                j.at("eps0").get<double>());
  } else if (kind == "gen_gaussian") {
    double lo = 0.0, hi = 1.0;
    if (j.contains("domain")) {
      lo = j.at("domain").at(0).get<double>();
      hi = j.at("domain").at(1).get<double>();
    }
    mech = LocalRandomizer::GenGaussian(j.at("beta").get<double>(),
                                        j.at("scale").get<double>(), lo, hi);
  } else {
    throw std::invalid_argument("unknown mechanism kind: " + kind);
  }
}

double OutputDensity(const LocalRandomizer& mech, double x, double y) {
  if (mech.discrete()) {
    const int xs = KrrSymbol(mech, x);
    const int ys = KrrSymbol(mech, y);
    return ys == xs ? mech.krr_p() : mech.krr_q();
  }
  return std::exp(LogGenGaussianDensity(mech, x, y));
}

double BlanketMass(const LocalRandomizer& mech) {
  if (mech.discrete()) return mech.k * mech.krr_q();
  const double half_width = 0.5 * (mech.domain_hi - mech.domain_lo);
  const double z = std::pow(half_width / mech.scale, mech.beta);
  return RegularizedUpperGamma(1.0 / mech.beta, z);
}

double BlanketDensity(const LocalRandomizer& mech, double y) {
  if (mech.discrete()) {
    KrrSymbol(mech, y);
    return 1.0 / mech.k;
  }
  return std::exp(LogBlanketUnnormalized(mech, y)) / BlanketMass(mech);
}

double ReferenceDensity(const LocalRandomizer& mech,
                        const ReferenceDistribution& ref, double y) {
  return ref.blanket ? BlanketDensity(mech, y)
                     : OutputDensity(mech, ref.x, y);
}

double ReferenceMass(const LocalRandomizer& mech,
                     const ReferenceDistribution& ref) {
  return ref.blanket ? BlanketMass(mech) : 1.0;
}

double ParValue(const LocalRandomizer& mech, double x1, double x1p,
                const ReferenceDistribution& ref, double eps, double y) {
  if (x1 == x1p) throw std::invalid_argument("need distinct inputs x1 != x1'");
  if (mech.discrete()) {
    const double num = OutputDensity(mech, x1, y) -
                       std::exp(eps) * OutputDensity(mech, x1p, y);
    const double den = ReferenceDensity(mech, ref, y);
    if (den <= 0.0) {
      throw std::domain_error("reference density vanishes at y");
    }
    return num / den;
  }
  const double gamma = ref.blanket ? BlanketMass(mech) : 1.0;
  ParEvaluator l{mech,       x1, x1p, eps, ref.blanket,
                 ref.blanket ? 0.0 : ref.x, std::log(gamma)};
  return l(y);
}

double ParDistribution::Quantile(double p) const {
  double lo = support_lo, hi = support_hi;
  if (!std::isfinite(lo)) lo = -1e300;
  if (!std::isfinite(hi)) hi = 1e300;
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * (1.0 + std::abs(lo));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= p) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

ParDistribution MakeParDistribution(const LocalRandomizer& mech, double x1,
                                    double x1p,
                                    const ReferenceDistribution& ref,
                                    double eps, SamplingLaw law,
                                    std::size_t grid_points) {
  if (x1 == x1p) throw std::invalid_argument("need distinct inputs x1 != x1'");
  ParDistribution dist;
  dist.law = law;

  if (mech.discrete()) {
    auto atoms = KrrAtoms(mech, x1, x1p, ref, eps, law);
    double mean = 0.0, m2 = 0.0;
    for (const auto& [v, p] : atoms) {
      mean += v * p;
      m2 += v * v * p;
    }
    dist.mean = mean;
    dist.variance = std::max(0.0, m2 - mean * mean);
    dist.support_lo = atoms.front().first;
    dist.support_hi = atoms.back().first;
    dist.pmf = atoms;
    dist.cdf = [atoms](double u) {
      double acc = 0.0;
      for (const auto& [v, p] : atoms) {
        if (v <= u) acc += p;
      }
      return acc;
    };
    return dist;
  }

  auto pw = BuildPiecewise(mech, x1, x1p, ref, eps, law, grid_points);
  dist.support_lo = pw->value_lo;
  dist.support_hi = pw->value_hi;
  dist.mean = LawExpectation(
      *pw, [&pw](double y) { return pw->l(y); }, 1e-10);
  const double m2 = LawExpectation(
      *pw,
      [&pw](double y) {
        const double v = pw->l(y);
        return v * v;
      },
      1e-10);
  dist.variance = std::max(0.0, m2 - dist.mean * dist.mean);
  dist.cdf = [pw](double u) { return pw->Cdf(u); };
  return dist;
}

std::function<double(double)> MakeParValueFn(const LocalRandomizer& mech,
                                             double x1, double x1p,
                                             const ReferenceDistribution& ref,
                                             double eps) {
  if (x1 == x1p) throw std::invalid_argument("need distinct inputs x1 != x1'");
  if (mech.discrete()) {
    std::vector<double> by_symbol(static_cast<std::size_t>(mech.k) + 1);
    for (int y = 1; y <= mech.k; ++y) {
      by_symbol[static_cast<std::size_t>(y)] =
          ParValue(mech, x1, x1p, ref, eps, y);
    }
    LocalRandomizer m = mech;
    return [m, by_symbol](double y) {
      return by_symbol[static_cast<std::size_t>(KrrSymbol(m, y))];
    };
  }
  const double gamma = ref.blanket ? BlanketMass(mech) : 1.0;
  const double lognorm = LogGenGaussianNorm(mech);
  const double mid = DomainMid(mech);
  const LocalRandomizer m = mech;
  const bool blanket = ref.blanket;
  const double refc = ref.blanket ? 0.0 : ref.x;
  const double lg = std::log(gamma);
  return [m, x1, x1p, eps, blanket, refc, lg, lognorm, mid](double y) {
    auto logd = [&](double center) {
      return lognorm - std::pow(std::abs(y - center) / m.scale, m.beta);
    };
    const double lr =
        blanket ? logd(y < mid ? m.domain_hi : m.domain_lo) - lg : logd(refc);
    return std::exp(logd(x1) - lr) - std::exp(eps + logd(x1p) - lr);
  };
}

double ParMoment(const LocalRandomizer& mech, double x1, double x1p,
                 const ReferenceDistribution& ref, double eps, int order,
                 double rel_tol) {
  if (mech.discrete()) {
    auto atoms = KrrAtoms(mech, x1, x1p, ref, eps, SamplingLaw::kReference);
    double acc = 0.0;
    for (const auto& [v, p] : atoms) acc += std::pow(v, order) * p;
    return acc;
  }
  const auto l = MakeParValueFn(mech, x1, x1p, ref, eps);
  const double radius = TailRadius(mech);
  // Split at density kinks (centers, blanket midpoint) for the adaptive rule.
  std::vector<double> cuts{x1, x1p, mech.domain_lo, mech.domain_hi,
                           DomainMid(mech)};
  if (!ref.blanket) cuts.push_back(ref.x);
  double c_lo = cuts[0], c_hi = cuts[0];
  for (double c : cuts) {
    c_lo = std::min(c_lo, c);
    c_hi = std::max(c_hi, c);
  }
  cuts.push_back(c_lo - radius);
  cuts.push_back(c_hi + radius);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    auto integrand = [&](double y) {
      return std::pow(l(y), order) * ReferenceDensity(mech, ref, y);
    };
    total += IntegrateAdaptive(integrand, cuts[i], cuts[i + 1], rel_tol,
                               1e-14)
                 .value;
  }
  return total;
}

double VarianceL0(const LocalRandomizer& mech, double x1, double x1p,
                  const ReferenceDistribution& ref, double rel_tol) {
  // E[l_0] = 0 under the reference law, so the variance is the second moment.
  return ParMoment(mech, x1, x1p, ref, 0.0, 2, rel_tol);
}

double GenGaussianScaleForSigma(double beta, double sigma) {
  return sigma * std::sqrt(std::tgamma(1.0 / beta) / std::tgamma(3.0 / beta));
}

}  // namespace mechanisms
}  // namespace shuffledp
