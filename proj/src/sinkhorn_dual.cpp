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

#include "robustq/sinkhorn_dual.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "robustq/errors.hpp"
#include "robustq/numeric.hpp"

namespace robustq {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double softplus_inv(double y) {
    if (y <= 0.0) throw InputError("softplus_inv: argument must be positive");
    if (y > 30.0) return y;  // softplus is the identity to double precision here
    return std::log(std::expm1(y));
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_log_mean_exp(std::span<const double> values) {
    if (values.empty()) throw InputError("stable_log_mean_exp: empty list");
    const double c = *std::max_element(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += std::exp(v - c);
    return c + std::log(s / static_cast<double>(values.size()));
}

NuSpec NuSpec::uniform(double lo, double hi, bool stratified) {
    NuSpec s;
    s.family = NuFamily::Uniform;
    s.p1 = lo;
    s.p2 = hi;
    s.stratified = stratified;
    return s;
}

NuSpec NuSpec::beta(double a, double b, bool stratified) {
    NuSpec s;
    s.family = NuFamily::Beta;
    s.p1 = a;
    s.p2 = b;
    s.stratified = stratified;
    return s;
}

NuSpec NuSpec::student_t(double loc, double scale, double dof, bool stratified) {
    NuSpec s;
    s.family = NuFamily::StudentT;
    s.p1 = loc;
    s.p2 = scale;
    s.p3 = dof;
    s.stratified = stratified;
    return s;
}

NuSpec NuSpec::point_mass(double y) {
    NuSpec s;
    s.family = NuFamily::PointMass;
    s.p1 = y;
    return s;
}

NuSpec NuSpec::empirical(std::vector<double> samples, bool stratified) {
    NuSpec s;
    s.family = NuFamily::Empirical;
    s.samples = std::move(samples);
    s.stratified = stratified;
    return s;
}

void NuSpec::validate() const {
    switch (family) {
        case NuFamily::Uniform:
            if (!(p1 < p2)) throw ConfigError("NuSpec: Uniform requires lo < hi");
            break;
        case NuFamily::Beta:
            if (!(p1 > 0.0 && p2 > 0.0)) throw ConfigError("NuSpec: Beta requires a, b > 0");
            break;
        case NuFamily::StudentT:
            if (!(p2 > 0.0 && p3 > 0.0))
                throw ConfigError("NuSpec: StudentT requires scale > 0 and dof > 0");
            break;
        case NuFamily::PointMass:
            break;
        case NuFamily::Empirical:
            if (samples.empty()) throw ConfigError("NuSpec: Empirical requires a non-empty sample list");
            break;
    }
}

double NuSpec::quantile(double p) const {
    switch (family) {
        case NuFamily::Uniform:
            return p1 + (p2 - p1) * p;
        case NuFamily::Beta:
            return boost::math::quantile(boost::math::beta_distribution<double>(p1, p2), p);
        case NuFamily::StudentT:
            return p1 + p2 * boost::math::quantile(boost::math::students_t_distribution<double>(p3), p);
        case NuFamily::PointMass:
            return p1;
        case NuFamily::Empirical:
            throw ConfigError("NuSpec: Empirical has no inverse CDF");
    }
    throw ConfigError("NuSpec: unknown family");
}

double NuSpec::draw(Rng& rng) const {
    switch (family) {
        case NuFamily::Uniform:
            return rng.uniform(p1, p2);
        case NuFamily::Beta:
            return rng.beta(p1, p2);
        case NuFamily::StudentT:
            return p1 + p2 * rng.student_t(p3);
        case NuFamily::PointMass:
            return p1;
        case NuFamily::Empirical:
            return samples[rng.below(samples.size())];
    }
    throw ConfigError("NuSpec: unknown family");
}

void AmbiguityConfig::validate() const {
    if (!(delta > 0.0)) throw ConfigError("AmbiguityConfig: delta must be positive");
    if (!(epsilon >= 0.0)) throw ConfigError("AmbiguityConfig: epsilon must be nonnegative");
    if (n_nu < 1) throw ConfigError("AmbiguityConfig: n_nu must be >= 1");
    nu.validate();
}

std::vector<double> sample_nu(const NuSpec& spec, int n, Rng& rng) {
    spec.validate();
    if (n < 1) throw InputError("sample_nu: n must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    if (spec.family == NuFamily::PointMass) {
        std::fill(out.begin(), out.end(), spec.p1);
        return out;
    }
    if (spec.family == NuFamily::Empirical) {
        if (spec.stratified) {
            if (static_cast<std::size_t>(n) != spec.samples.size())
                throw ConfigError("sample_nu: stratified Empirical requires n == sample count (" +
                                  std::to_string(spec.samples.size()) + "), got n=" +
                                  std::to_string(n));
            return spec.samples;
        }
        for (auto& y : out) y = spec.draw(rng);
        return out;
    }
    if (spec.stratified) {
        for (int i = 1; i <= n; ++i)
            out[static_cast<std::size_t>(i - 1)] =
                spec.quantile(static_cast<double>(i) / (static_cast<double>(n) + 1.0));
        return out;
    }
    for (auto& y : out) y = spec.draw(rng);
    return out;
}

double epsilon_bar_from_distances(std::span<const double> distances, const AmbiguityConfig& cfg) {
    std::vector<double> scaled(distances.size());
    for (std::size_t j = 0; j < distances.size(); ++j) scaled[j] = -distances[j] / cfg.delta;
    return cfg.epsilon + cfg.delta * stable_log_mean_exp(scaled);
}

double epsilon_bar(const VecD& x_next_ref, const std::vector<VecD>& nu_points,
                   const AmbiguityConfig& cfg,
                   const std::function<double(const VecD&, const VecD&)>& cost) {
    if (nu_points.empty()) throw InputError("epsilon_bar: empty sample list");
    std::vector<double> d(nu_points.size());
    for (std::size_t j = 0; j < nu_points.size(); ++j) d[j] = cost(x_next_ref, nu_points[j]);
    return epsilon_bar_from_distances(d, cfg);
}

double dual_value_at_multiplier(double lambda_plus, std::span<const double> payoffs,
                                std::span<const double> distances, double epsilon, double delta) {
    if (payoffs.size() != distances.size() || payoffs.empty())
        throw InputError("dual objective: payoffs and distances must be same nonempty length");
    if (!(lambda_plus > 0.0)) throw InputError("dual objective: multiplier must be positive");
    const double ld = lambda_plus * delta;
    std::vector<double> c(payoffs.size());
    for (std::size_t j = 0; j < payoffs.size(); ++j) {
        c[j] = (-payoffs[j] - lambda_plus * distances[j]) / ld;
        if (!std::isfinite(c[j]))
            throw NumericalError("dual objective: non-finite exponent at sample " +
                                 std::to_string(j) + " (payoff=" + std::to_string(payoffs[j]) +
                                 ", distance=" + std::to_string(distances[j]) + ")");
    }
    const double value = -lambda_plus * epsilon - ld * stable_log_mean_exp(c);
    if (!std::isfinite(value)) throw NumericalError("dual objective: non-finite value");
    return value;
}

DualObjectiveEval dual_objective(double lambda_raw, std::span<const double> payoffs,
                                 std::span<const double> distances, const AmbiguityConfig& cfg) {
    if (payoffs.size() != distances.size() || payoffs.empty())
        throw InputError("dual_objective: payoffs and distances must be same nonempty length");
    const double lp = softplus(lambda_raw);
    const double ld = lp * cfg.delta;
    const std::size_t n = payoffs.size();
    thread_local std::vector<double> c;  // scratch; this is the solver's hot loop
    c.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        c[j] = (-payoffs[j] - lp * distances[j]) / ld;
        if (!std::isfinite(c[j]))
            throw NumericalError("dual_objective: non-finite exponent at sample " +
                                 std::to_string(j));
    }
    const double cmax = *std::max_element(c.begin(), c.end());
    double sum = 0.0;
    double weighted_payoff = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(c[j] - cmax);
        sum += e;
        weighted_payoff += e * payoffs[j];
    }
    weighted_payoff /= sum;  // softmax-weighted payoff
    const double lme = cmax + std::log(sum / static_cast<double>(n));
    DualObjectiveEval out;
    out.value = -lp * cfg.epsilon - ld * lme;
    const double dvalue_dlp = -cfg.epsilon - cfg.delta * lme - weighted_payoff / lp;
    out.grad_raw = dvalue_dlp * logistic(lambda_raw);
    if (!std::isfinite(out.value) || !std::isfinite(out.grad_raw))
        throw NumericalError("dual_objective: non-finite value or gradient");
    return out;
}

namespace {
int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }
}  // namespace

DualSolveResult solve_lambda(std::span<const double> payoffs, std::span<const double> distances,
                             const AmbiguityConfig& cfg, std::optional<double> init_raw,
                             const SolveOptions& opts) {
    DualSolveResult res;
    res.epsilon_bar = epsilon_bar_from_distances(distances, cfg);
    res.from_cache = init_raw.has_value();

    if (opts.exact) {
        auto [log_lp, value] = golden_section_max(
            [&](double t) {
                return dual_value_at_multiplier(std::exp(t), payoffs, distances, cfg.epsilon,
                                                cfg.delta);
            },
            std::log(opts.exact_lo), std::log(opts.exact_hi), 220, 1e-13);
        res.lambda_star = std::exp(log_lp);
        res.lambda_raw = softplus_inv(res.lambda_star);
        res.value = value;
        res.iterations = 220;
        res.converged = true;
        return res;
    }

    double raw = init_raw.value_or(opts.init_raw);
    const double raw_start = raw;
    int first_sign = 0;
    DualObjectiveEval ev{};
    int k = 0;
    bool stopped = false;
    for (; k < opts.max_iters; ++k) {
        ev = dual_objective(raw, payoffs, distances, cfg);
        if (std::abs(ev.grad_raw) <= opts.grad_tol) {  // flat: already at the top
            stopped = true;
            ++k;
            break;
        }
        const int s = sign_of(ev.grad_raw);
        if (k == 0) {
            first_sign = s;
        } else if (s != first_sign) {
            stopped = true;
            ++k;
            break;
        }
        if (opts.fallback_after > 0 && k >= opts.fallback_after) {
            // The optimum sits past a boundary the damped ascent only crawls
            // toward; finish the concave scalar problem by golden-section on
            // the one-sided bracket the ascent has established.
            const double lp_now = softplus(raw);
            const double lo = first_sign < 0 ? opts.exact_lo
                                             : std::min(lp_now, softplus(raw_start));
            const double hi = first_sign < 0 ? std::max(lp_now, softplus(raw_start))
                                             : opts.exact_hi;
            const auto [log_lp, value] = golden_section_max(
                [&](double t) {
                    return dual_value_at_multiplier(std::exp(t), payoffs, distances, cfg.epsilon,
                                                    cfg.delta);
                },
                std::log(lo), std::log(hi), 120, 1e-12);
            res.lambda_star = std::exp(log_lp);
            res.lambda_raw = softplus_inv(res.lambda_star);
            res.value = value;
            res.iterations = k + 120;
            res.converged = true;
            return res;
        }
        const double eta =
            opts.eta0 * (1.0 + static_cast<double>(k) / static_cast<double>(opts.k_sched));
        raw += eta * ev.grad_raw;
    }
    if (!stopped) ev = dual_objective(raw, payoffs, distances, cfg);

    res.lambda_raw = raw;
    res.lambda_star = softplus(raw);
    res.value = ev.value;
    res.iterations = k;
    res.converged = stopped;
    return res;
}

DualTargetModel DualTargetModel::with_euclidean_cost(
    std::function<double(const VecD&, int, const VecD&)> reward,
    std::function<VecD(const VecD&, int, double)> state_from_nu, double discount) {
    DualTargetModel m;
    m.reward = std::move(reward);
    m.state_from_nu = std::move(state_from_nu);
    m.cost = [](const VecD& a, const VecD& b) { return euclidean_distance(a, b); };
    m.discount = discount;
    return m;
}

std::vector<double> robust_target_batch(std::span<const Transition> transitions,
                                        std::span<const std::size_t> slot_ids,
                                        const QValueFn& q_target, const DualTargetModel& model,
                                        const AmbiguityConfig& cfg, LambdaCache* cache,
                                        std::uint64_t seed, std::uint64_t step,
                                        RobustBatchStats* stats, const SolveOptions& opts) {
    if (transitions.empty()) throw InputError("robust_target_batch: empty batch");
    if (transitions.size() != slot_ids.size())
        throw InputError("robust_target_batch: slot_ids size mismatch");
    cfg.validate();

    std::vector<double> targets(transitions.size());
    const std::size_t n_nu = static_cast<std::size_t>(cfg.n_nu);
    std::vector<double> payoffs(n_nu), distances(n_nu);

    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const Transition& t = transitions[i];
        const std::size_t slot = slot_ids[i];
        Rng rng(mix_seed(seed, slot, step));
        const std::vector<double> ys = sample_nu(cfg.nu, cfg.n_nu, rng);

        for (std::size_t j = 0; j < n_nu; ++j) {
            const VecD candidate = model.state_from_nu(t.state, t.action, ys[j]);
            distances[j] = model.cost(t.next_state, candidate);
            const VecD q = q_target(candidate);
            const double cont = *std::max_element(q.begin(), q.end());
            payoffs[j] = model.reward(t.state, t.action, candidate) + model.discount * cont;
        }

        const double eb = epsilon_bar_from_distances(distances, cfg);
        if (eb < 0.0) {
            if (stats) ++stats->eps_bar_negatives;
            if (cfg.epsilon_bar_policy == EpsilonBarPolicy::Error)
                throw TrainingError("robust_target_batch: effective radius negative (" +
                                    std::to_string(eb) + ") for transition " + std::to_string(i) +
                                    " (slot " + std::to_string(slot) + ")");
            if (stats) ++stats->dropped;
            targets[i] = std::nan("");
            continue;
        }

        std::optional<double> init = cache ? cache->get(slot) : std::nullopt;
        const DualSolveResult res = solve_lambda(payoffs, distances, cfg, init, opts);
        if (cache) cache->put(slot, res.lambda_raw);
        if (stats) {
            stats->mean_lambda += res.lambda_star;
            ++stats->solved;
            if (!res.converged) ++stats->nonconverged;
        }
        targets[i] = res.value;
    }
    if (stats && stats->solved > 0) stats->mean_lambda /= static_cast<double>(stats->solved);
    return targets;
}

std::vector<double> dqn_target_batch(std::span<const Transition> transitions,
                                     const QValueFn& q_target, double discount) {
    std::vector<double> targets(transitions.size());
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const VecD q = q_target(transitions[i].next_state);
        targets[i] = transitions[i].reward + discount * *std::max_element(q.begin(), q.end());
    }
    return targets;
}

}  // namespace robustq
