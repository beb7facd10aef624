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

#include "robustq/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "robustq/errors.hpp"

namespace robustq {

QNetwork::QNetwork(std::vector<std::size_t> layer_sizes, Rng& rng)
    : layer_sizes_(std::move(layer_sizes)) {
    if (layer_sizes_.size() < 2) throw InputError("QNetwork: need at least input and output sizes");
    for (std::size_t s : layer_sizes_)
        if (s == 0) throw InputError("QNetwork: layer sizes must be positive");
    for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
        const std::size_t fan_in = layer_sizes_[l];
        const std::size_t fan_out = layer_sizes_[l + 1];
        Matrix w(fan_out, fan_in);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& x : w.data) x = rng.uniform(-limit, limit);
        weights_.push_back(std::move(w));
        biases_.emplace_back(fan_out, 0.0);
    }
}

QNetwork QNetwork::zeros(std::vector<std::size_t> layer_sizes) {
    Rng rng(0);
    QNetwork net(std::move(layer_sizes), rng);
    for (auto& w : net.weights_) std::fill(w.data.begin(), w.data.end(), 0.0);
    return net;
}

std::size_t QNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].data.size() + biases_[l].size();
    return n;
}

bool QNetwork::parameters_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
        if (!all_finite(weights_[l].data) || !all_finite(biases_[l])) return false;
    return true;
}

VecD forward(const QNetwork& net, const VecD& state) {
    if (state.size() != net.input_dim())
        throw InputError("forward: state dimension " + std::to_string(state.size()) +
                         " does not match network input " + std::to_string(net.input_dim()));
    VecD act = state;
    const std::size_t L = net.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
        const Matrix& w = net.weight(l);
        const VecD& b = net.bias(l);
        VecD next(w.rows);
        for (std::size_t i = 0; i < w.rows; ++i) {
            double s = b[i];
            for (std::size_t j = 0; j < w.cols; ++j) s += w(i, j) * act[j];
            next[i] = s;
        }
        if (l + 1 < L)  // ReLU on hidden layers only
            for (double& x : next) x = x > 0.0 ? x : 0.0;
        act = std::move(next);
    }
    return act;
}

Gradients Gradients::zeros_like(const QNetwork& net) {
    Gradients g;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        g.weights.emplace_back(net.weight(l).rows, net.weight(l).cols);
        g.biases.emplace_back(net.bias(l).size(), 0.0);
    }
    return g;
}

void Gradients::scale(double s) {
    for (auto& w : weights)
        for (double& x : w.data) x *= s;
    for (auto& b : biases)
        for (double& x : b) x *= s;
}

bool Gradients::all_finite() const {
    for (const auto& w : weights)
        if (!robustq::all_finite(w.data)) return false;
    for (const auto& b : biases)
        if (!robustq::all_finite(b)) return false;
    return true;
}

Gradients backward(const QNetwork& net, const std::vector<VecD>& states,
                   const std::vector<VecD>& output_grads) {
    if (states.size() != output_grads.size())
        throw InputError("backward: states and output_grads sizes differ");
    Gradients g = Gradients::zeros_like(net);
    const std::size_t L = net.num_layers();

    std::vector<VecD> activations(L + 1);  // activations[l]: input to layer l
    for (std::size_t n = 0; n < states.size(); ++n) {
        if (states[n].size() != net.input_dim()) throw InputError("backward: state dimension mismatch");
        if (output_grads[n].size() != net.output_dim())
            throw InputError("backward: output gradient dimension mismatch");

        activations[0] = states[n];
        for (std::size_t l = 0; l < L; ++l) {
            const Matrix& w = net.weight(l);
            const VecD& b = net.bias(l);
            VecD next(w.rows);
            for (std::size_t i = 0; i < w.rows; ++i) {
                double s = b[i];
                for (std::size_t j = 0; j < w.cols; ++j) s += w(i, j) * activations[l][j];
                next[i] = s;
            }
            if (l + 1 < L)
                for (double& x : next) x = x > 0.0 ? x : 0.0;
            activations[l + 1] = std::move(next);
        }

        // delta starts as the gradient at the (linear) output layer
        VecD delta = output_grads[n];
        for (std::size_t l = L; l-- > 0;) {
            const Matrix& w = net.weight(l);
            Matrix& gw = g.weights[l];
            VecD& gb = g.biases[l];
            const VecD& in = activations[l];
            for (std::size_t i = 0; i < w.rows; ++i) {
                gb[i] += delta[i];
                for (std::size_t j = 0; j < w.cols; ++j) gw(i, j) += delta[i] * in[j];
            }
            if (l == 0) break;
            VecD prev(w.cols, 0.0);
            for (std::size_t j = 0; j < w.cols; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < w.rows; ++i) s += w(i, j) * delta[i];
                // ReLU mask of the post-activation feeding this layer
                prev[j] = activations[l][j] > 0.0 ? s : 0.0;
            }
            delta = std::move(prev);
        }
    }
    return g;
}

AdamState AdamState::init(const QNetwork& net, double lr) {
    AdamState s;
    s.lr = lr;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        s.m_w.emplace_back(net.weight(l).rows, net.weight(l).cols);
        s.v_w.emplace_back(net.weight(l).rows, net.weight(l).cols);
        s.m_b.emplace_back(net.bias(l).size(), 0.0);
        s.v_b.emplace_back(net.bias(l).size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(double* theta, double* m, double* v, const double* grad, std::size_t n,
                 const AdamState& opt, double bc1, double bc2, const char* where, std::size_t layer) {
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = grad[i];
        if (!std::isfinite(gi))
            throw TrainingError("adam_step: non-finite gradient at layer " + std::to_string(layer) +
                                " " + where + "[" + std::to_string(i) + "]");
        m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * gi;
        v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
}

}  // namespace

void adam_step(QNetwork& net, const Gradients& grads, AdamState& opt) {
    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        adam_update(net.weight(l).data.data(), opt.m_w[l].data.data(), opt.v_w[l].data.data(),
                    grads.weights[l].data.data(), net.weight(l).data.size(), opt, bc1, bc2, "weight",
                    l);
        adam_update(net.bias(l).data(), opt.m_b[l].data(), opt.v_b[l].data(),
                    grads.biases[l].data(), net.bias(l).size(), opt, bc1, bc2, "bias", l);
    }
}

QNetwork sync_target(const QNetwork& net) { return net; }

void save_checkpoint(const QNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestError("save_checkpoint: cannot open " + path);
    out << "robustq-ckpt v1\n";
    out << "layers";
    for (std::size_t s : net.layer_sizes()) out << ' ' << s;
    out << "\nactivation relu\n";
    char buf[32];
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        out << "W" << l << '\n';
        const Matrix& w = net.weight(l);
        for (std::size_t i = 0; i < w.rows; ++i) {
            for (std::size_t j = 0; j < w.cols; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", w(i, j));
                out << buf << (j + 1 < w.cols ? " " : "");
            }
            out << '\n';
        }
        out << "b" << l << '\n';
        for (std::size_t i = 0; i < net.bias(l).size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", net.bias(l)[i]);
            out << buf << (i + 1 < net.bias(l).size() ? " " : "");
        }
        out << '\n';
    }
    if (!out) throw IngestError("save_checkpoint: write failed for " + path);
}

QNetwork load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("load_checkpoint: cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "robustq-ckpt v1")
        throw IngestError("load_checkpoint: bad magic/version in " + path + ": '" + line + "'");
    std::getline(in, line);
    std::istringstream hdr(line);
    std::string tag;
    hdr >> tag;
    if (tag != "layers") throw IngestError("load_checkpoint: missing layer header in " + path);
    std::vector<std::size_t> sizes;
    std::size_t s;
    while (hdr >> s) sizes.push_back(s);
    if (sizes.size() < 2) throw IngestError("load_checkpoint: malformed layer sizes in " + path);
    std::getline(in, line);  // activation line
    if (line != "activation relu")
        throw IngestError("load_checkpoint: unsupported activation in " + path + ": '" + line + "'");

    QNetwork net = QNetwork::zeros(sizes);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        std::getline(in, line);
        if (line != "W" + std::to_string(l))
            throw IngestError("load_checkpoint: expected W" + std::to_string(l) + " in " + path);
        Matrix& w = net.weight(l);
        for (std::size_t i = 0; i < w.rows; ++i) {
            std::getline(in, line);
            std::istringstream row(line);
            for (std::size_t j = 0; j < w.cols; ++j)
                if (!(row >> w(i, j)))
                    throw IngestError("load_checkpoint: truncated weight row in " + path);
        }
        std::getline(in, line);
        if (line != "b" + std::to_string(l))
            throw IngestError("load_checkpoint: expected b" + std::to_string(l) + " in " + path);
        std::getline(in, line);
        std::istringstream row(line);
        for (std::size_t i = 0; i < net.bias(l).size(); ++i)
            if (!(row >> net.bias(l)[i]))
                throw IngestError("load_checkpoint: truncated bias row in " + path);
    }
    if (!net.parameters_finite()) throw IngestError("load_checkpoint: non-finite parameters in " + path);
    return net;
}

}  // namespace robustq
