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

#ifndef SHUFFLEDP_SHUFFLE_INDEX_H_
#define SHUFFLEDP_SHUFFLE_INDEX_H_

#include <utility>

#include "shuffledp/mechanisms.hpp"

namespace shuffledp {
namespace shuffle_index {

// chi_lo = sqrt(gamma / Var_{BG}(l_0)) for a fixed input pair.
double ChiLoPair(const mechanisms::LocalRandomizer& mech, double x1,
                 double x1p);

struct ChiUpResult {
  double chi = 0.0;
  double attaining_x = 0.0;  // reference input realizing the inner infimum
};

// chi_up = inf_x sqrt(1 / Var_{R_x}(l_0)) for a fixed pair.  Closed form for
// k-RR; golden-section over the attaining x for location families.
ChiUpResult ChiUpPair(const mechanisms::LocalRandomizer& mech, double x1,
                      double x1p);

struct ShuffleIndices {
  double chi_lo = 0.0;
  double chi_up = 0.0;
  std::pair<double, double> pair_lo;
  std::pair<double, double> pair_up;
  double ref_up = 0.0;
  bool tight = false;
};

// Worst-case (over input pairs) indices plus the band-collapse check.
ShuffleIndices WorstCaseIndices(const mechanisms::LocalRandomizer& mech);

}  // namespace shuffle_index
}  // namespace shuffledp

#endif  // SHUFFLEDP_SHUFFLE_INDEX_H_
