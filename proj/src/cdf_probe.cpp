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

#include "robustq/cdf_probe.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/beta.hpp>

#include "robustq/errors.hpp"
#include "robustq/numeric.hpp"

namespace robustq {

void CdfProbeParams::validate() const {
    if (!(ref_alpha > 0.0 && ref_beta > 0.0))
        throw ConfigError("CdfProbeParams: reference Beta parameters must be positive");
    if (!(epsilon >= 0.0)) throw ConfigError("CdfProbeParams: epsilon must be nonnegative");
    if (deltas.empty()) throw ConfigError("CdfProbeParams: need at least one delta");
    for (double d : deltas)
        if (!(d > 0.0)) throw ConfigError("CdfProbeParams: deltas must be positive");
    if (!(discount >= 0.0 && discount < 1.0))
        throw ConfigError("CdfProbeParams: discount must be in [0, 1)");
    if (n_nu < 2) throw ConfigError("CdfProbeParams: n_nu must be >= 2");
    if (outer_nodes < 2) throw ConfigError("CdfProbeParams: outer_nodes must be >= 2");
    if (value_sweeps < 1) throw ConfigError("CdfProbeParams: value_sweeps must be >= 1");
    for (double g : grid)
        if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("CdfProbeParams: grid must lie in [0, 1]");
    nu.validate();
}

std::vector<CdfCurve> worst_case_cdf(const CdfProbeParams& params) {
    params.validate();
    VecD grid = params.grid;
    if (grid.empty()) {
        grid.resize(41);
        for (std::size_t i = 0; i < grid.size(); ++i)
            grid[i] = static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    }

    // Reference expectation: Gauss-Legendre nodes weighted by the Beta density.
    const Quadrature gl = gauss_legendre(params.outer_nodes, 0.0, 1.0);
    const boost::math::beta_distribution<double> ref(params.ref_alpha, params.ref_beta);
    const std::size_t nk = gl.nodes.size();
    VecD outer_w(nk);
    for (std::size_t k = 0; k < nk; ++k)
        outer_w[k] = gl.weights[k] * boost::math::pdf(ref, gl.nodes[k]);

    // Prior quantile samples, shared across thresholds and deltas.
    Rng unused_rng(0);
    const std::vector<double> ys = sample_nu(params.nu, params.n_nu, unused_rng);
    const std::size_t nj = ys.size();

    std::vector<CdfCurve> curves;
    const double alpha = params.discount;

    for (double delta : params.deltas) {
        CdfCurve curve;
        curve.delta = delta;
        curve.x0 = grid;
        curve.value.assign(grid.size(), 0.0);

        if (params.epsilon == 0.0) {
            // Zero-radius ball: the value is the reference expectation of the
            // indicator (the reference CDF, taken exactly) plus the small
            // discounted continuation, which is continuous and quadrates well.
            VecD v_prev(grid.size(), 0.0);
            for (int sweep = 0; sweep < params.value_sweeps; ++sweep) {
                for (std::size_t gidx = 0; gidx < grid.size(); ++gidx) {
                    double acc = boost::math::cdf(ref, grid[gidx]);
                    for (std::size_t k = 0; k < nk; ++k)
                        acc += outer_w[k] * alpha * interp_linear(grid, v_prev, gl.nodes[k]);
                    curve.value[gidx] = acc;
                }
                v_prev = curve.value;
            }
            curves.push_back(std::move(curve));
            continue;
        }

        // exp(-|x_k - y_j|/delta), lambda-independent
        Matrix edk(nk, nj);
        for (std::size_t k = 0; k < nk; ++k)
            for (std::size_t j = 0; j < nj; ++j)
                edk(k, j) = std::exp(-std::abs(gl.nodes[k] - ys[j]) / delta);

        VecD v_prev(grid.size(), 0.0);
        VecD payoff(nj), shifted(nj);
        for (int sweep = 0; sweep < params.value_sweeps; ++sweep) {
            for (std::size_t gidx = 0; gidx < grid.size(); ++gidx) {
                const double x0 = grid[gidx];
                for (std::size_t j = 0; j < nj; ++j)
                    payoff[j] =
                        (ys[j] <= x0 ? 1.0 : 0.0) + alpha * interp_linear(grid, v_prev, ys[j]);

                const auto dual = [&](double lambda) {
                    const double ld = lambda * delta;
                    double bmax = -payoff[0] / ld;
                    for (std::size_t j = 0; j < nj; ++j) {
                        shifted[j] = -payoff[j] / ld;
                        bmax = std::max(bmax, shifted[j]);
                    }
                    for (std::size_t j = 0; j < nj; ++j) shifted[j] = std::exp(shifted[j] - bmax);
                    double outer = 0.0;
                    const double log_n = std::log(static_cast<double>(nj));
                    for (std::size_t k = 0; k < nk; ++k) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < nj; ++j) s += edk(k, j) * shifted[j];
                        double row;
                        if (s > 0.0) {
                            row = bmax + std::log(s) - log_n;
                        } else {
                            // factorized sum underflowed; redo this row with a
                            // combined-exponent shift
                            double cmax = -payoff[0] / ld - std::abs(gl.nodes[k] - ys[0]) / delta;
                            for (std::size_t j = 1; j < nj; ++j)
                                cmax = std::max(cmax, -payoff[j] / ld -
                                                          std::abs(gl.nodes[k] - ys[j]) / delta);
                            double srow = 0.0;
                            for (std::size_t j = 0; j < nj; ++j)
                                srow += std::exp(-payoff[j] / ld -
                                                 std::abs(gl.nodes[k] - ys[j]) / delta - cmax);
                            row = cmax + std::log(srow) - log_n;
                        }
                        outer += outer_w[k] * row;
                    }
                    return -lambda * params.epsilon - ld * outer;
                };
                const auto [log_lambda, value] = golden_section_max(
                    [&](double t) { return dual(std::exp(t)); }, std::log(1e-8), std::log(1e4),
                    160, 1e-12);
                (void)log_lambda;
                curve.value[gidx] = value;
            }
            v_prev = curve.value;
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

}  // namespace robustq
