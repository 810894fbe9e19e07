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

#include <cmath>
#include <random>

#include "doctest.h"
#include "shuffledp/numerics.hpp"

namespace si = shuffledp::shuffle_index;
using shuffledp::mechanisms::LocalRandomizer;

namespace {

double KrrChiLoClosedForm(int k, double eps0) {
  const double p = std::exp(eps0) / (std::exp(eps0) + k - 1);
  const double q = 1.0 / (std::exp(eps0) + k - 1);
  return std::sqrt(q / (2.0 * (p - q) * (p - q)));
}

}  // namespace

TEST_CASE("k-RR chi_lo closed form") {
  const double expected = KrrChiLoClosedForm(3, 2.0);
  CHECK(expected == doctest::Approx(0.33912).epsilon(2e-4));
  CHECK(si::ChiLoPair(LocalRandomizer::Krr(3, 2.0), 1, 2) ==
        doctest::Approx(expected).epsilon(1e-12));
  // Diverges as eps0 -> 0.
  CHECK(si::ChiLoPair(LocalRandomizer::Krr(2, 1e-3), 1, 2) > 100.0);
}

TEST_CASE("k-RR chi_lo is pair independent") {
  for (int k : {2, 3, 4, 5}) {
    const LocalRandomizer krr = LocalRandomizer::Krr(k, 1.7);
    const double base = si::ChiLoPair(krr, 1, 2);
    for (int a = 1; a <= k; ++a) {
      for (int b = a + 1; b <= k; ++b) {
        CHECK(std::abs(si::ChiLoPair(krr, a, b) - base) <= 1e-12);
      }
    }
  }
}

TEST_CASE("k-RR chi_up") {
  // k >= 3: the infimum sits at a third symbol and matches chi_lo.
  const auto up3 = si::ChiUpPair(LocalRandomizer::Krr(3, 2.0), 1, 2);
  CHECK(up3.chi == doctest::Approx(KrrChiLoClosedForm(3, 2.0)).epsilon(1e-12));
  CHECK(up3.attaining_x == 3.0);

  // k = 2: attained inside the pair.
  const LocalRandomizer krr2 = LocalRandomizer::Krr(2, 2.0);
  const double p = krr2.krr_p(), q = krr2.krr_q();
  const double expected = 1.0 / ((p - q) * std::sqrt(1.0 / p + 1.0 / q));
  const auto up2 = si::ChiUpPair(krr2, 1, 2);
  CHECK(up2.chi == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("k-RR band collapse for k >= 3") {
  for (int k : {3, 4, 5}) {
    for (double eps0 : {0.5, 1.0, 2.0, 4.0}) {
      const auto idx = si::WorstCaseIndices(LocalRandomizer::Krr(k, eps0));
      CHECK(std::abs(idx.chi_up - idx.chi_lo) <= 1e-10);
      CHECK(idx.tight);
    }
  }
  const auto idx2 = si::WorstCaseIndices(LocalRandomizer::Krr(2, 2.0));
  CHECK_FALSE(idx2.tight);
  CHECK(idx2.chi_up > idx2.chi_lo + 1e-6);
}

TEST_CASE("Ordering chi_up >= chi_lo on random mechanisms and pairs") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int checked = 0;
  // Discrete draws.
  for (int i = 0; i < 30; ++i) {
    const int k = 2 + static_cast<int>(unif(rng) * 4.0);
    const double eps0 = 0.2 + 3.0 * unif(rng);
    const LocalRandomizer krr = LocalRandomizer::Krr(k, eps0);
    const int a = 1 + static_cast<int>(unif(rng) * k) % k;
    int b = 1 + static_cast<int>(unif(rng) * k) % k;
    if (a == b) b = a == k ? 1 : a + 1;
    CHECK(si::ChiUpPair(krr, a, b).chi >= si::ChiLoPair(krr, a, b) - 1e-9);
    ++checked;
  }
  // Continuous draws.
  for (int i = 0; i < 20; ++i) {
    const double beta = 1.0 + unif(rng);
    const double scale = 0.5 + 3.0 * unif(rng);
    const LocalRandomizer gg = LocalRandomizer::GenGaussian(beta, scale);
    double a = unif(rng), b = unif(rng);
    if (std::abs(a - b) < 0.05) b = a < 0.5 ? a + 0.5 : a - 0.5;
    CHECK(si::ChiUpPair(gg, a, b).chi >= si::ChiLoPair(gg, a, b) - 1e-9);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("Generalized Gaussian worst-case indices") {
  const LocalRandomizer gg =
      LocalRandomizer::GenGaussian(2.0, 2.0 * shuffledp::numerics::kSqrt2);
  const auto idx = si::WorstCaseIndices(gg);
  CHECK(idx.chi_up >= idx.chi_lo - 1e-9);
  CHECK(idx.chi_lo / idx.chi_up > 0.7);
  CHECK_FALSE(idx.tight);
  // The endpoint pair attains (or ties) the minimum.
  CHECK(std::abs(idx.pair_lo.first - 0.0) <= 0.05);
  CHECK(std::abs(idx.pair_lo.second - 1.0) <= 0.05);
}

TEST_CASE("Generalized Gaussian endpoint pair dominates on a grid") {
  const LocalRandomizer gg = LocalRandomizer::GenGaussian(1.5, 1.5);
  const double endpoint = si::ChiLoPair(gg, 0.0, 1.0);
  for (int i = 0; i < 21; ++i) {
    for (int j = i + 1; j < 21; ++j) {
      const double a = i / 20.0, b = j / 20.0;
      CHECK(endpoint <= si::ChiLoPair(gg, a, b) + 1e-9);
    }
  }
}
