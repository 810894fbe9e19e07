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

#include <cmath>
#include <random>

#include "doctest.h"
#include "shuffledp/numerics.hpp"

namespace mech = shuffledp::mechanisms;
namespace num = shuffledp::numerics;
using mech::LocalRandomizer;
using mech::ReferenceDistribution;
using mech::SamplingLaw;

namespace {

const double kE2 = std::exp(2.0);

// Test-side blanket sampler for a generalized Gaussian: rejection from the
// endpoint mixture.
double SampleBlanketOracle(const LocalRandomizer& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, m.scale / num::kSqrt2);
  for (;;) {
    const double center = unif(rng) < 0.5 ? m.domain_lo : m.domain_hi;
    const double y = center + noise(rng);
    const double f_lo = mech::OutputDensity(m, m.domain_lo, y);
    const double f_hi = mech::OutputDensity(m, m.domain_hi, y);
    if (unif(rng) * 0.5 * (f_lo + f_hi) < std::min(f_lo, f_hi)) return y;
  }
}

}  // namespace

TEST_CASE("LocalRandomizer validation and JSON round trip") {
  CHECK_THROWS_AS(LocalRandomizer::Krr(1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LocalRandomizer::GenGaussian(0.5, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(LocalRandomizer::GenGaussian(2.0, -1.0),
                  std::invalid_argument);

  const LocalRandomizer krr = LocalRandomizer::Krr(3, 2.0);
  nlohmann::json j = krr;
  const LocalRandomizer krr2 = j.get<LocalRandomizer>();
  CHECK(krr2.k == 3);
  CHECK(krr2.eps0 == 2.0);

  const LocalRandomizer gg = LocalRandomizer::GenGaussian(1.5, 2.25);
  nlohmann::json j2 = gg;
  const LocalRandomizer gg2 = j2.get<LocalRandomizer>();
  CHECK(gg2.beta == 1.5);
  CHECK(gg2.scale == 2.25);
  CHECK(gg2.domain_lo == 0.0);
  CHECK(gg2.domain_hi == 1.0);
}

TEST_CASE("Blanket mass") {
  CHECK(mech::BlanketMass(LocalRandomizer::Krr(3, 0.0)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mech::BlanketMass(LocalRandomizer::Krr(3, 2.0)) ==
        doctest::Approx(3.0 / (kE2 + 2.0)).epsilon(1e-14));
  // Gamma(1, x) = e^{-x} closed form at beta = 1, scale = 1.
  CHECK(mech::BlanketMass(LocalRandomizer::GenGaussian(1.0, 1.0)) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("Blanket density") {
  const LocalRandomizer krr = LocalRandomizer::Krr(3, 2.0);
  CHECK(mech::BlanketDensity(krr, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const LocalRandomizer gg = LocalRandomizer::GenGaussian(2.0, 2.0);
  CHECK(mech::BlanketDensity(gg, 0.5) ==
        doctest::Approx(mech::OutputDensity(gg, 0.0, 0.5) /
                        mech::BlanketMass(gg))
            .epsilon(1e-13));
  CHECK(mech::OutputDensity(gg, 0.0, 0.5) ==
        doctest::Approx(mech::OutputDensity(gg, 1.0, 0.5)).epsilon(1e-13));

  const LocalRandomizer lap = LocalRandomizer::GenGaussian(1.0, 1.0);
  const auto norm = num::IntegrateAdaptive(
      [&](double y) { return mech::BlanketDensity(lap, y); },
      -std::numeric_limits<double>::infinity(),
      std::numeric_limits<double>::infinity(), 1e-10, 1e-12);
  CHECK(norm.value == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Generalized Gaussian density normalization") {
  for (double beta : {1.0, 1.5, 2.0}) {
    const LocalRandomizer gg = LocalRandomizer::GenGaussian(beta, 1.7);
    const auto total = num::IntegrateAdaptive(
        [&](double y) { return mech::OutputDensity(gg, 0.3, y); },
        -std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity(), 1e-10, 1e-12);
    CHECK(total.value == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("ParValue for k-RR") {
  const LocalRandomizer krr = LocalRandomizer::Krr(3, 2.0);
  const auto blanket = ReferenceDistribution::Blanket();
  const double p = krr.krr_p(), q = krr.krr_q();
  CHECK(mech::ParValue(krr, 1, 2, blanket, 0.0, 1) ==
        doctest::Approx(3.0 * (p - q)).epsilon(1e-14));
  CHECK(mech::ParValue(krr, 1, 2, blanket, 0.0, 3) ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(mech::ParValue(krr, 1, 1, blanket, 0.0, 1),
                  std::invalid_argument);
}

TEST_CASE("ParValue numerator root for generalized Gaussian") {
  // At the symmetry point between x1 and x1' (eps = 0) the numerator
  // vanishes.
  const LocalRandomizer gg = LocalRandomizer::GenGaussian(2.0, 2.0);
  const auto blanket = ReferenceDistribution::Blanket();
  CHECK(std::abs(mech::ParValue(gg, 0.0, 1.0, blanket, 0.0, 0.5)) <= 1e-13);
}

TEST_CASE("k-RR par distribution atoms") {
  const LocalRandomizer krr = LocalRandomizer::Krr(3, 2.0);
  const auto blanket = ReferenceDistribution::Blanket();
  const double p = krr.krr_p(), q = krr.krr_q();
  const double big = 3.0 * (p - q);

  const auto ref_dist = mech::MakeParDistribution(krr, 1, 2, blanket, 0.0,
                                                  SamplingLaw::kReference);
  REQUIRE(ref_dist.pmf.has_value());
  REQUIRE(ref_dist.pmf->size() == 3);
  CHECK((*ref_dist.pmf)[0].first == doctest::Approx(-big).epsilon(1e-14));
  CHECK((*ref_dist.pmf)[1].first == doctest::Approx(0.0).epsilon(1e-15));
  CHECK((*ref_dist.pmf)[2].first == doctest::Approx(big).epsilon(1e-14));
  for (const auto& [v, prob] : *ref_dist.pmf) {
    CHECK(prob == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }

  const auto hyp_dist = mech::MakeParDistribution(
      krr, 1, 2, blanket, 0.0, SamplingLaw::kHypothesisX1);
  REQUIRE(hyp_dist.pmf.has_value());
  CHECK((*hyp_dist.pmf)[2].second == doctest::Approx(p).epsilon(1e-14));
  CHECK((*hyp_dist.pmf)[0].second == doctest::Approx(q).epsilon(1e-14));
  CHECK((*hyp_dist.pmf)[1].second == doctest::Approx(q).epsilon(1e-14));
}

TEST_CASE("k-RR PMF probabilities sum to one under every law") {
  for (int k : {2, 3, 5}) {
    const LocalRandomizer krr = LocalRandomizer::Krr(k, 1.3);
    for (auto law : {SamplingLaw::kReference, SamplingLaw::kHypothesisX1,
                     SamplingLaw::kHypothesisX1Prime}) {
      for (const auto& ref :
           {ReferenceDistribution::Blanket(),
            ReferenceDistribution::Local(1.0)}) {
        const auto dist =
            mech::MakeParDistribution(krr, 1, 2, ref, 0.37, law);
        double total = 0.0;
        for (const auto& [v, p] : *dist.pmf) total += p;
        CHECK(std::abs(total - 1.0) <= 1e-14);
      }
    }
  }
}

TEST_CASE("Reference-law mean identity") {
  // E[l_eps(Y)] = 1 - e^eps for every mechanism and admissible reference.
  for (double eps : {0.0, 0.1, 0.7}) {
    const LocalRandomizer krr = LocalRandomizer::Krr(4, 2.0);
    const double m_krr = mech::ParMoment(
        krr, 1, 2, ReferenceDistribution::Blanket(), eps, 1);
    CHECK(std::abs(m_krr - (1.0 - std::exp(eps))) <= 1e-10);
    const double m_krr_local = mech::ParMoment(
        krr, 1, 2, ReferenceDistribution::Local(3.0), eps, 1);
    CHECK(std::abs(m_krr_local - (1.0 - std::exp(eps))) <= 1e-10);

    const LocalRandomizer gg = LocalRandomizer::GenGaussian(2.0, 2.8284);
    const double m_gg = mech::ParMoment(
        gg, 0.0, 1.0, ReferenceDistribution::Blanket(), eps, 1);
    CHECK(std::abs(m_gg - (1.0 - std::exp(eps))) <= 1e-7);
    const double m_gg_local = mech::ParMoment(
        gg, 0.0, 1.0, ReferenceDistribution::Local(0.5), eps, 1);
    CHECK(std::abs(m_gg_local - (1.0 - std::exp(eps))) <= 1e-7);
  }
}

TEST_CASE("VarianceL0 closed forms for k-RR") {
  const LocalRandomizer krr = LocalRandomizer::Krr(3, 2.0);
  const double p = krr.krr_p(), q = krr.krr_q();
  CHECK(mech::VarianceL0(krr, 1, 2, ReferenceDistribution::Blanket()) ==
        doctest::Approx(6.0 * (p - q) * (p - q)).epsilon(1e-13));
  CHECK(mech::VarianceL0(krr, 1, 2, ReferenceDistribution::Local(3.0)) ==
        doctest::Approx(2.0 * (p - q) * (p - q) / q).epsilon(1e-13));
  CHECK_THROWS_AS(
      mech::VarianceL0(krr, 1, 1, ReferenceDistribution::Blanket()),
      std::invalid_argument);
}

TEST_CASE("Generalized Gaussian CDF is nondecreasing and matches sampling") {
  const LocalRandomizer gg = LocalRandomizer::GenGaussian(2.0, 2.8284);
  const auto dist = mech::MakeParDistribution(
      gg, 0.0, 1.0, ReferenceDistribution::Blanket(), 0.1,
      SamplingLaw::kReference);

  double prev = -1.0;
  const double lo = dist.support_lo, hi = dist.support_hi;
  for (int i = 0; i < 1000; ++i) {
    const double u = lo + (hi - lo) * i / 999.0;
    const double v = dist.cdf(u);
    CHECK(v >= prev - 1e-12);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
  CHECK(dist.cdf(lo - 1.0) <= 1e-9);
  CHECK(dist.cdf(hi + 1.0) >= 1.0 - 1e-9);

  // Empirical CDF from 1e6 blanket samples within 3 KS standard errors.
  const auto l_fn = mech::MakeParValueFn(
      gg, 0.0, 1.0, ReferenceDistribution::Blanket(), 0.1);
  std::mt19937_64 rng(0xabcdef12345ULL);
  const int kSamples = 1000000;
  std::vector<double> draws(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    draws[i] = l_fn(SampleBlanketOracle(gg, rng));
  }
  std::sort(draws.begin(), draws.end());
  double max_gap = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double u = draws[static_cast<std::size_t>(
        (i + 0.5) / 200.0 * (kSamples - 1))];
    const double empirical =
        static_cast<double>(std::upper_bound(draws.begin(), draws.end(), u) -
                            draws.begin()) /
        kSamples;
    max_gap = std::max(max_gap, std::abs(empirical - dist.cdf(u)));
  }
  CHECK(max_gap <= 3.0 * 0.8686 / std::sqrt(static_cast<double>(kSamples)));
}

TEST_CASE("Blanket dominance") {
  // gamma * R_BG(y) <= R_x(y) pointwise.
  const LocalRandomizer gg = LocalRandomizer::GenGaussian(1.5, 1.2);
  const double gamma = mech::BlanketMass(gg);
  for (int xi = 0; xi <= 10; ++xi) {
    const double x = xi / 10.0;
    for (int yi = -40; yi <= 40; ++yi) {
      const double y = yi / 8.0;
      CHECK(gamma * mech::BlanketDensity(gg, y) <=
            mech::OutputDensity(gg, x, y) + 1e-12);
    }
  }
  const LocalRandomizer krr = LocalRandomizer::Krr(4, 1.0);
  const double gamma_krr = mech::BlanketMass(krr);
  for (int x = 1; x <= 4; ++x) {
    for (int y = 1; y <= 4; ++y) {
      CHECK(gamma_krr * mech::BlanketDensity(krr, y) <=
            mech::OutputDensity(krr, x, y) + 1e-12);
    }
  }
}

TEST_CASE("Quantile inverts the CDF") {
  const LocalRandomizer gg = LocalRandomizer::GenGaussian(2.0, 2.0);
  const auto dist = mech::MakeParDistribution(
      gg, 0.0, 1.0, ReferenceDistribution::Blanket(), 0.05,
      SamplingLaw::kReference);
  for (double p : {1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-6}) {
    const double u = dist.Quantile(p);
    CHECK(dist.cdf(u) >= p - 1e-9);
  }
}

TEST_CASE("GenGaussianScaleForSigma") {
  CHECK(mech::GenGaussianScaleForSigma(2.0, 2.0) ==
        doctest::Approx(2.0 * num::kSqrt2).epsilon(1e-12));
  CHECK(mech::GenGaussianScaleForSigma(1.0, 2.0) ==
        doctest::Approx(num::kSqrt2).epsilon(1e-12));
  // The calibrated mechanism really has standard deviation sigma.
  for (double beta : {1.0, 1.5, 2.0}) {
    const double c = mech::GenGaussianScaleForSigma(beta, 2.0);
    const LocalRandomizer gg = LocalRandomizer::GenGaussian(beta, c);
    const auto var = num::IntegrateAdaptive(
        [&](double y) { return y * y * mech::OutputDensity(gg, 0.0, y); },
        -std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity(), 1e-10, 1e-12);
    CHECK(var.value == doctest::Approx(4.0).epsilon(1e-7));
  }
}
