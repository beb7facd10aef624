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
// Brute-force ground truth on finite supports. Everything here favors
// transparency over speed: transport LPs by exhaustive vertex enumeration,
// entropic couplings by log-domain scaling, robust values by grid search or
// penalty-method refinement. Used to validate the dual engine, never by it.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robustq/errors.hpp"
#include "robustq/linalg.hpp"

namespace robustq {

/// The one-sample duality precondition (nonnegative effective radius) fails
/// for this instance, so the dual value is undefined.
struct InfeasibleDualityError : NumericalError {
    explicit InfeasibleDualityError(const std::string& what) : NumericalError(what) {}
};

/// Finite-support robust instance: reference weights p_hat, sampling prior nu
/// (full support), payoff per point, ball radius epsilon and regularization
/// delta (delta = 0 means plain transport cost).
struct DiscreteRobustInstance {
    std::vector<VecD> support;
    VecD p_hat;
    VecD nu;
    VecD payoff;
    double epsilon = 0.0;
    double delta = 0.0;

    std::size_t size() const { return support.size(); }
    Matrix cost_matrix() const;
    void validate() const;  // throws InputError
};

/// Optimal-transport cost between marginals p and q under the given cost
/// matrix, by exhaustive enumeration of basis (spanning-tree) vertices.
/// Supports up to 4x4.
double transport_lp_value(const Matrix& cost, const VecD& p, const VecD& q);

/// Entropically regularized transport cost
///   min_pi  sum pi*d + delta * sum pi*log(pi / (p_i nu_j))
/// over couplings with marginals (p, q), by log-domain scaling iterations to
/// marginal L1 error <= tol.
double entropic_ot_value(const Matrix& cost, const VecD& p, const VecD& nu, const VecD& q,
                         double delta, double tol = 1e-12, long max_iters = 500000);

/// Regularized (delta > 0) or plain (delta = 0) transport distance from the
/// instance's reference weights to candidate weights q.
double sinkhorn_distance_discrete(const DiscreteRobustInstance& inst, std::span<const double> q);

struct PrimalResult {
    bool feasible = false;
    double value = 0.0;
    VecD q;  // minimizing weights
};

/// min_q E_q[payoff] subject to sinkhorn_distance_discrete(p_hat, q) <= eps,
/// q on the simplex. Coarse-to-fine grid search for <= 3 support points;
/// projected gradient with increasing infeasibility penalty otherwise.
PrimalResult primal_robust_value(const DiscreteRobustInstance& inst);

/// Effective radius with the outer expectation taken exactly over p_hat.
double exact_epsilon_bar(const DiscreteRobustInstance& inst);

/// Exact dual of the robust expectation (delta > 0): golden-section
/// maximization of the concave scalar dual over the multiplier.
/// Throws InfeasibleDualityError when the effective radius is negative.
double dual_robust_value_discrete(const DiscreteRobustInstance& inst);

/// Structured-text round trip for regression fixtures.
std::string serialize_instance(const DiscreteRobustInstance& inst);
DiscreteRobustInstance parse_instance(const std::string& text);
void save_instance(const DiscreteRobustInstance& inst, const std::string& path);
DiscreteRobustInstance load_instance(const std::string& path);

}  // namespace robustq
