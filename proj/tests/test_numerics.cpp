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

#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

namespace num = shuffledp::numerics;

namespace {

// Independent root oracle for w e^w = z on a bracket.
double LambertBisectOracle(double z, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid * std::exp(mid) < z) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("LambertW0 basic values") {
  CHECK(num::LambertW0(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(num::LambertW0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-13));
  const double oracle = LambertBisectOracle(186.016, 3.0, 5.0);
  CHECK(num::LambertW0(186.016) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(3.8723).epsilon(1e-4));
  CHECK_THROWS_AS(num::LambertW0(-1.0), std::domain_error);
}

TEST_CASE("LambertW0 fixed point over log-spaced grid") {
  for (int i = 0; i < 10000; ++i) {
    const double z = std::pow(10.0, -6.0 + 18.0 * i / 9999.0);
    const double w = num::LambertW0(z);
    CHECK(std::abs(w * std::exp(w) - z) <= 1e-12 * std::max(1.0, z));
  }
  // Branch point neighborhood.
  const double w_edge = num::LambertW0(-0.36787944117144232);
  CHECK(w_edge == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("StdNormalCdf values and symmetry") {
  CHECK(num::StdNormalCdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(num::StdNormalCdf(40.0) - 1.0) <= 1e-15);
  // Quadrature oracle for Phi(1), independent of the erfc path.
  const auto q = num::IntegrateAdaptive(num::StdNormalPdf, -40.0, 1.0, 1e-13,
                                        1e-14);
  CHECK(num::StdNormalCdf(1.0) == doctest::Approx(q.value).epsilon(1e-12));
  CHECK(num::StdNormalCdf(1.0) ==
        doctest::Approx(0.841344746068543).epsilon(1e-12));
  for (double x : {-7.5, -3.0, -0.3, 0.0, 0.4, 2.0, 6.0}) {
    CHECK(std::abs(num::StdNormalCdf(x) + num::StdNormalCdf(-x) - 1.0) <=
          1e-14);
  }
}

TEST_CASE("UpperIncompleteGamma values") {
  CHECK(num::UpperIncompleteGamma(1.0, 0.5) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  // Gamma(1/2, x) = sqrt(pi) erfc(sqrt(x)); erfc through the normal CDF.
  const double erfc_quarter = 2.0 * num::StdNormalCdf(-0.25 * num::kSqrt2);
  CHECK(num::UpperIncompleteGamma(0.5, 0.0625) ==
        doctest::Approx(std::sqrt(num::kPi) * erfc_quarter).epsilon(1e-10));
  CHECK(num::UpperIncompleteGamma(2.5, 0.0) ==
        doctest::Approx(std::tgamma(2.5)).epsilon(1e-13));
  CHECK_THROWS_AS(num::UpperIncompleteGamma(-1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(num::UpperIncompleteGamma(1.0, -1.0), std::domain_error);
}

TEST_CASE("UpperIncompleteGamma recurrence") {
  // Gamma(s+1, x) = s Gamma(s, x) + x^s e^{-x}.
  for (double s : {0.4, 0.5, 0.8, 1.0, 1.7, 2.5, 4.0}) {
    for (double x : {0.01, 0.3, 1.0, 2.7, 8.0, 30.0}) {
      const double lhs = num::UpperIncompleteGamma(s + 1.0, x);
      const double rhs = s * num::UpperIncompleteGamma(s, x) +
                         std::pow(x, s) * std::exp(-x);
      CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(std::abs(lhs), 1e-30));
    }
  }
}

TEST_CASE("FindRootBisect") {
  CHECK(num::FindRootBisect([](double x) { return x - 2.0; }, 0.0, 5.0,
                            1e-12) == doctest::Approx(2.0).epsilon(1e-11));
  // Newton oracle for x^3 = 2.
  double newton = 1.5;
  for (int i = 0; i < 60; ++i) {
    newton -= (newton * newton * newton - 2.0) / (3.0 * newton * newton);
  }
  CHECK(num::FindRootBisect([](double x) { return x * x * x - 2.0; }, 1.0,
                            2.0, 1e-13) ==
        doctest::Approx(newton).epsilon(1e-12));
  CHECK(num::FindRootBisect(
            [](double x) { return num::StdNormalCdf(x) - 0.5; }, -1.0, 1.0,
            1e-13) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK_THROWS_AS(num::FindRootBisect([](double x) { return x + 10.0; }, 0.0,
                                      1.0, 1e-12),
                  std::invalid_argument);
}

TEST_CASE("IntegrateAdaptive basics") {
  const auto one = num::IntegrateAdaptive([](double) { return 1.0; }, 0.0,
                                          1.0, 1e-12, 1e-14);
  CHECK(one.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(one.abs_error_estimate <= 1e-14);

  const auto normal = num::IntegrateAdaptive(
      num::StdNormalPdf, -std::numeric_limits<double>::infinity(),
      std::numeric_limits<double>::infinity(), 1e-12, 1e-14);
  CHECK(normal.value == doctest::Approx(1.0).epsilon(1e-10));

  const auto expo = num::IntegrateAdaptive(
      [](double t) { return std::exp(-t); }, 0.0,
      std::numeric_limits<double>::infinity(), 1e-12, 1e-14);
  CHECK(expo.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("IntegrateAdaptive honest error estimates") {
  struct Case {
    std::function<double(double)> f;
    double a, b, exact;
  };
  const std::vector<Case> battery = {
      {[](double x) { return std::sin(x); }, 0.0, num::kPi, 2.0},
      {[](double x) { return std::exp(x); }, 0.0, 1.0, std::exp(1.0) - 1.0},
      {[](double x) { return 1.0 / (1.0 + x * x); },
       -std::numeric_limits<double>::infinity(),
       std::numeric_limits<double>::infinity(), num::kPi},
      {[](double x) { return std::exp(-x * x); }, 0.0,
       std::numeric_limits<double>::infinity(), 0.5 * std::sqrt(num::kPi)},
      {[](double x) { return std::sqrt(x); }, 0.0, 1.0, 2.0 / 3.0},
  };
  for (const auto& c : battery) {
    const auto r = num::IntegrateAdaptive(c.f, c.a, c.b, 1e-10, 1e-12);
    const double true_err = std::abs(r.value - c.exact);
    CHECK(true_err <= 10.0 * std::max(r.abs_error_estimate, 1e-15));
  }
}

TEST_CASE("IntegrateAdaptive budget exhaustion") {
  CHECK_THROWS_AS(
      num::IntegrateAdaptive([](double x) { return std::sin(1.0 / x); },
                             1e-12, 1.0, 1e-14, 1e-16, 600),
      num::QuadratureError);
}
