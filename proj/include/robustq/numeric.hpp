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

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "robustq/linalg.hpp"

namespace robustq {

/// Maximizes a unimodal function on [lo, hi] by golden-section search.
/// Returns (argmax, max). `iters` of 200 shrinks the bracket by ~1e-41.
std::pair<double, double> golden_section_max(const std::function<double(double)>& f, double lo,
                                             double hi, int iters = 200, double value_tol = 0.0);

/// Gauss-Legendre nodes and weights on [a, b], computed by Newton iteration
/// on the Legendre polynomial roots.
struct Quadrature {
    VecD nodes;
    VecD weights;
};
Quadrature gauss_legendre(int n, double a, double b);

/// Linear interpolation of tabulated (xs, ys); clamps outside the table.
/// xs must be strictly increasing.
double interp_linear(const VecD& xs, const VecD& ys, double x);

namespace stats {

double mean(const VecD& v);
/// Population standard deviation (divide by n).
double stddev(const VecD& v);
double min(const VecD& v);
double max(const VecD& v);
/// Linear-interpolation quantile on sorted order statistics, h = (n-1)p.
double quantile(VecD v, double p);

}  // namespace stats

}  // namespace robustq
