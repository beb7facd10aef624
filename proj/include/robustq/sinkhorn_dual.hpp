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
// Robust Bellman targets over a Sinkhorn ambiguity ball, computed through the
// scalar dual: a concave maximization over the multiplier lambda, with the
// multiplier kept positive by a softplus reparameterization and the inner
// expectation stabilized by max-shifted log-mean-exp.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "robustq/linalg.hpp"
#include "robustq/replay.hpp"
#include "robustq/rng.hpp"

namespace robustq {

/// Overflow-safe log(1 + e^x).
double softplus(double x);
/// Inverse of softplus on (0, inf); handy for seeding tests at a target multiplier.
double softplus_inv(double y);
/// Logistic sigmoid, the derivative of softplus.
double logistic(double x);

/// log((1/N) sum_i e^{v_i}) with the max subtracted first; never overflows
/// for finite inputs. Throws InputError on an empty list.
double stable_log_mean_exp(std::span<const double> values);

enum class NuFamily { Uniform, Beta, StudentT, PointMass, Empirical };

/// Sampling prior for the dual's inner expectation. The prior fixes the
/// support of every distribution the ambiguity ball can reach.
struct NuSpec {
    NuFamily family = NuFamily::Uniform;
    double p1 = 0.0;  // Uniform lo | Beta a | StudentT location | PointMass y
    double p2 = 1.0;  // Uniform hi | Beta b | StudentT scale
    double p3 = 0.0;  // StudentT degrees of freedom
    std::vector<double> samples;  // Empirical only
    bool stratified = true;

    static NuSpec uniform(double lo, double hi, bool stratified = true);
    static NuSpec beta(double a, double b, bool stratified = true);
    static NuSpec student_t(double loc, double scale, double dof, bool stratified = true);
    static NuSpec point_mass(double y);
    static NuSpec empirical(std::vector<double> samples, bool stratified = true);

    void validate() const;  // throws ConfigError
    /// Inverse CDF; throws ConfigError for families without one (Empirical).
    double quantile(double p) const;
    double draw(Rng& rng) const;
};

enum class EpsilonBarPolicy { Error, WarnAndDrop };

/// Ambiguity-ball parameters: radius epsilon, entropic regularization delta,
/// the sampling prior and its sample count.
struct AmbiguityConfig {
    double epsilon = 0.1;
    double delta = 1e-4;
    NuSpec nu;
    int n_nu = 16;
    EpsilonBarPolicy epsilon_bar_policy = EpsilonBarPolicy::Error;

    void validate() const;  // throws ConfigError
};

/// If stratified and the family has an inverse CDF, returns the quantiles at
/// i/(n+1), i = 1..n; otherwise i.i.d. draws. Empirical + stratified requires
/// n == samples.size() and passes the list through verbatim, so a weighted
/// discrete prior can be encoded exactly by repetition.
std::vector<double> sample_nu(const NuSpec& spec, int n, Rng& rng);

/// Effective radius for one stored next state:
///   epsilon + delta * log((1/N) sum_j e^{-cost(x_ref, x_nu_j)/delta}).
/// Negative values mean the one-sample duality precondition failed; the
/// caller applies the configured policy.
double epsilon_bar(const VecD& x_next_ref, const std::vector<VecD>& nu_points,
                   const AmbiguityConfig& cfg,
                   const std::function<double(const VecD&, const VecD&)>& cost);

/// Same, from precomputed transport costs.
double epsilon_bar_from_distances(std::span<const double> distances, const AmbiguityConfig& cfg);

/// Dual objective at a given positive multiplier:
///   -lp*eps - lp*delta*[C + log mean exp(C_j - C)],  C_j = (-f_j - lp*d_j)/(lp*delta).
/// Throws NumericalError naming the offending sample on a non-finite
/// intermediate.
double dual_value_at_multiplier(double lambda_plus, std::span<const double> payoffs,
                                std::span<const double> distances, double epsilon, double delta);

struct DualObjectiveEval {
    double value = 0.0;
    double grad_raw = 0.0;  // d value / d lambda_raw through the softplus
};

/// Value and analytic gradient of the dual objective in the unconstrained
/// raw parameter, lambda_plus = softplus(lambda_raw).
DualObjectiveEval dual_objective(double lambda_raw, std::span<const double> payoffs,
                                 std::span<const double> distances, const AmbiguityConfig& cfg);

/// Ascent controls. `eta0 * (1 + k/k_sched)` grows the step so the search
/// escapes the flat softplus region at negative raw values. `exact` switches
/// to golden-section maximization over the multiplier (used by probes and
/// property tests that need the true supremum).
struct SolveOptions {
    double init_raw = 1.0;
    double eta0 = 0.05;
    int k_sched = 50;
    int max_iters = 500;
    // |gradient| below this counts as zero and stops. In the boundary case
    // where the supremum sits at multiplier -> 0 the raw gradient magnitude
    // approximates the remaining attainable gain, so this tolerance bounds
    // the value left on the table.
    double grad_tol = 1e-4;
    // A sign that never flips means the optimum lies at a boundary the
    // softplus-damped ascent only crawls toward; after this many iterations
    // the solve switches to golden-section on the bracket the ascent
    // identified. Subsequent warm starts from the cache then stop at once.
    int fallback_after = 150;
    bool exact = false;
    double exact_lo = 1e-8;
    double exact_hi = 1e4;
};

struct DualSolveResult {
    double lambda_star = 0.0;   // optimized multiplier (positive)
    double lambda_raw = 0.0;    // raw parameter, cached for warm starts
    double value = 0.0;         // robust target estimate
    double epsilon_bar = 0.0;
    int iterations = 0;
    bool from_cache = false;
    bool converged = true;
};

/// Gradient ascent on the raw parameter; stops when the gradient sign flips
/// relative to the first step (or is exactly zero), else flags non-converged
/// after max_iters.
DualSolveResult solve_lambda(std::span<const double> payoffs, std::span<const double> distances,
                             const AmbiguityConfig& cfg, std::optional<double> init_raw = {},
                             const SolveOptions& opts = {});

/// Per-slot warm starts for the dual ascent, keyed by replay slot id and
/// storing the last optimized raw parameter. Must be invalidated when a slot
/// is overwritten and cleared when the ambiguity config changes.
class LambdaCache {
public:
    std::optional<double> get(std::size_t slot) const {
        auto it = map_.find(slot);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }
    void put(std::size_t slot, double lambda_raw) { map_[slot] = lambda_raw; }
    void invalidate(std::size_t slot) { map_.erase(slot); }
    void clear() { map_.clear(); }
    std::size_t size() const { return map_.size(); }

private:
    std::unordered_map<std::size_t, double> map_;
};

/// Per-action Q values for a state.
using QValueFn = std::function<VecD(const VecD&)>;

/// Environment-specific pieces the robust target needs: the known reward,
/// the map from a prior draw to a candidate next state, and the transport
/// cost (full-state Euclidean by default; overridable, e.g. to a 1-d cost).
struct DualTargetModel {
    std::function<double(const VecD& x, int a, const VecD& x_next)> reward;
    std::function<VecD(const VecD& x, int a, double y)> state_from_nu;
    std::function<double(const VecD& x_next_ref, const VecD& candidate)> cost;
    double discount = 0.9;

    static DualTargetModel with_euclidean_cost(
        std::function<double(const VecD&, int, const VecD&)> reward,
        std::function<VecD(const VecD&, int, double)> state_from_nu, double discount);
};

struct RobustBatchStats {
    int eps_bar_negatives = 0;
    int dropped = 0;
    int nonconverged = 0;
    double mean_lambda = 0.0;
    int solved = 0;
};

/// Robust targets for a batch of stored transitions. Per transition: sample
/// the prior, form candidate next states and payoffs
///   f_j = r(x, a, x_j) + discount * max_b Q_target(x_j, b),
/// check the effective radius, maximize the dual from the cached warm start,
/// write the optimized raw multiplier back to the cache and return the dual
/// value as the target. The outer expectation uses exactly the one stored
/// next-state sample.
///
/// Under EpsilonBarPolicy::WarnAndDrop a transition with negative effective
/// radius gets a NaN target and is counted in stats; under Error it throws
/// TrainingError with the transition index. Per-transition sampling streams
/// derive from (seed, slot id, step) so repeated evaluations share random
/// numbers.
std::vector<double> robust_target_batch(std::span<const Transition> transitions,
                                        std::span<const std::size_t> slot_ids,
                                        const QValueFn& q_target, const DualTargetModel& model,
                                        const AmbiguityConfig& cfg, LambdaCache* cache,
                                        std::uint64_t seed, std::uint64_t step,
                                        RobustBatchStats* stats = nullptr,
                                        const SolveOptions& opts = {});

/// Non-robust targets r + discount * max_b Q_target(x', b). Both benchmark
/// environments are infinite-horizon, so this always bootstraps.
std::vector<double> dqn_target_batch(std::span<const Transition> transitions,
                                     const QValueFn& q_target, double discount);

}  // namespace robustq
