// Copyright 2026 The robustq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Worst-case-distribution probe: a single-action game on [0, 1] with the
// indicator reward 1{x' <= x0} and a near-zero discount. The robust value at
// threshold x0 is then the worst-case distribution's CDF at x0, which makes
// the effect of the regularization level directly visible.

#pragma once

#include <vector>

#include "robustq/linalg.hpp"
#include "robustq/sinkhorn_dual.hpp"

namespace robustq {

struct CdfProbeParams {
    double ref_alpha = 2.0;  // reference Beta shape
    double ref_beta = 2.0;
    NuSpec nu = NuSpec::uniform(0.0, 1.0);
    double epsilon = 0.5;
    VecD deltas{10.0, 1.0, 0.1, 0.01};
    double discount = 0.01;  // small enough that bootstrap contamination is ~1%
    VecD grid;               // thresholds x0; default 41 points on [0, 1]
    int n_nu = 512;          // prior quantile samples for the inner expectation
    int outer_nodes = 64;    // Gauss-Legendre order for the reference expectation
    int value_sweeps = 2;    // fixed-point refinements of the discounted tail

    void validate() const;  // throws ConfigError
};

struct CdfCurve {
    double delta = 0.0;
    VecD x0;
    VecD value;
};

/// Worst-case CDF curve for each configured regularization level. The dual is
/// evaluated with the full reference expectation (Gauss-Legendre against the
/// Beta density), the prior by stratified quantiles, and the multiplier by
/// golden-section maximization of the concave scalar dual. The small
/// discounted continuation is resolved by fixed-point sweeps over the grid.
///
/// epsilon = 0 switches robustness off and returns the reference CDF (the
/// zero-radius ball degenerates to the reference measure).
std::vector<CdfCurve> worst_case_cdf(const CdfProbeParams& params);

}  // namespace robustq
