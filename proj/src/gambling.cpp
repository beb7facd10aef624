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

#include "robustq/gambling.hpp"

#include <cmath>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "robustq/errors.hpp"
#include "robustq/numeric.hpp"
#include "robustq/sinkhorn_dual.hpp"

namespace robustq {

std::pair<double, double> gambling_shape_params(double x, int a, const GamblingParams& p) {
    if (a == 0) return {p.alpha_prime, p.beta_prime};
    const double ad = static_cast<double>(a);
    return {softplus(p.alpha_prime - ad * x), softplus(p.beta_prime + ad * (1.0 - x))};
}

double gambling_reward(double x, int a, double x_next, const GamblingParams& p) {
    const double u = static_cast<double>(a) * (x_next - x);
    return u >= 0.0 ? u : p.reward_factor * u;
}

std::pair<double, double> gambling_step(double x, int a, const GamblingParams& p, Rng& rng) {
    if (!(x >= 0.0 && x <= 1.0)) throw InputError("gambling_step: state must be in [0, 1]");
    if (a != -1 && a != 0 && a != 1) throw InputError("gambling_step: action must be -1, 0 or 1");
    const auto [alpha, beta] = gambling_shape_params(x, a, p);
    const double x_next = rng.beta(alpha, beta);
    return {x_next, gambling_reward(x, a, x_next, p)};
}

BetaFit fit_beta_mom(const std::vector<double>& samples) {
    if (samples.size() < 2) throw InputError("fit_beta_mom: need at least 2 samples");
    for (double s : samples)
        if (!(s > 0.0 && s < 1.0))
            throw InputError("fit_beta_mom: samples must lie strictly inside (0, 1)");
    const double m = stats::mean(samples);
    double v = 0.0;
    for (double s : samples) v += (s - m) * (s - m);
    v /= static_cast<double>(samples.size());
    BetaFit fit;
    double t = m * (1.0 - m) / v - 1.0;
    if (t <= 0.0) {
        t = 1e-3;
        fit.degenerate = true;
    }
    fit.alpha = m * t;
    fit.beta = (1.0 - m) * t;
    return fit;
}

double gambling_expected_reward(double x, int a, const GamblingParams& p) {
    if (a == 0) return 0.0;
    const auto [alpha, beta] = gambling_shape_params(x, a, p);
    const boost::math::beta_distribution<double> dist(alpha, beta);
    boost::math::quadrature::tanh_sinh<double> integrator;
    const auto integrand = [&](double t) {
        return gambling_reward(x, a, t, p) * boost::math::pdf(dist, t);
    };
    // split at the reward kink x' = x
    double total = 0.0;
    if (x > 0.0) total += integrator.integrate(integrand, 0.0, x, 1e-8);
    if (x < 1.0) total += integrator.integrate(integrand, x, 1.0, 1e-8);
    return total;
}

GreedyExpectedRewardPolicy::GreedyExpectedRewardPolicy(const GamblingParams& params,
                                                       int grid_points) {
    if (grid_points < 2) throw InputError("GreedyExpectedRewardPolicy: need at least 2 grid points");
    grid_.resize(grid_points);
    er_down_.resize(grid_points);
    er_up_.resize(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(grid_points - 1);
        grid_[i] = x;
        er_down_[i] = gambling_expected_reward(x, -1, params);
        er_up_[i] = gambling_expected_reward(x, +1, params);
    }
}

double GreedyExpectedRewardPolicy::expected_reward(double x, int a) const {
    if (a == 0) return 0.0;
    return interp_linear(grid_, a < 0 ? er_down_ : er_up_, x);
}

int GreedyExpectedRewardPolicy::act(double x) const {
    int best = -1;
    double best_v = expected_reward(x, -1);
    for (int a : {0, 1}) {
        const double v = expected_reward(x, a);
        if (v > best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

GamblingEnv::GamblingEnv(GamblingParams true_params, GamblingParams reference_params,
                         GamblingMode mode)
    : true_params_(true_params), reference_params_(reference_params), mode_(mode) {
    if (!(true_params_.alpha_prime > 0.0 && true_params_.beta_prime > 0.0 &&
          reference_params_.alpha_prime > 0.0 && reference_params_.beta_prime > 0.0))
        throw ConfigError("GamblingEnv: Beta parameters must be positive");
    if (!(true_params_.reward_factor > 0.0))
        throw ConfigError("GamblingEnv: reward factor must be positive");
}

GamblingEnv::GamblingEnv(GamblingParams params)
    : GamblingEnv(params, params, GamblingMode::TrueDist) {}

double GamblingEnv::action_value(std::size_t action) const {
    switch (action) {
        case 0:
            return -1.0;
        case 1:
            return 0.0;
        case 2:
            return 1.0;
    }
    throw InputError("GamblingEnv: action index out of range");
}

VecD GamblingEnv::reset(Rng& rng) {
    const GamblingParams& p = active_params();
    return {rng.beta(p.alpha_prime, p.beta_prime)};
}

Environment::Outcome GamblingEnv::step(const VecD& state, std::size_t action, Rng& rng) {
    const int a = static_cast<int>(action_value(action));
    const auto [x_next, r] = gambling_step(state.at(0), a, active_params(), rng);
    return {{x_next}, r};
}

double GamblingEnv::reward(const VecD& state, std::size_t action, const VecD& next_state) const {
    const int a = static_cast<int>(action_value(action));
    return gambling_reward(state.at(0), a, next_state.at(0), active_params());
}

VecD GamblingEnv::state_from_nu(const VecD&, std::size_t, double y) const { return {y}; }

std::unique_ptr<Environment> GamblingEnv::clone() const {
    return std::make_unique<GamblingEnv>(*this);
}

}  // namespace robustq
