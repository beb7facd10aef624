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

#include <cstddef>
#include <string>
#include <vector>

#include "robustq/linalg.hpp"
#include "robustq/rng.hpp"

namespace robustq {

/// Fully-connected Q-network: ReLU hidden layers, linear output, one output
/// unit per action so a single forward pass yields all action values.
///
/// Plain value type: copying gives an independent parameter set, which is
/// exactly what target-network synchronization needs.
class QNetwork {
public:
    QNetwork() = default;

    /// He-uniform weights, zero biases.
    QNetwork(std::vector<std::size_t> layer_sizes, Rng& rng);

    /// All-zero parameters (useful for tests and deterministic baselines).
    static QNetwork zeros(std::vector<std::size_t> layer_sizes);

    std::size_t input_dim() const { return layer_sizes_.front(); }
    std::size_t output_dim() const { return layer_sizes_.back(); }
    std::size_t num_layers() const { return weights_.size(); }
    const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }

    Matrix& weight(std::size_t l) { return weights_[l]; }
    const Matrix& weight(std::size_t l) const { return weights_[l]; }
    VecD& bias(std::size_t l) { return biases_[l]; }
    const VecD& bias(std::size_t l) const { return biases_[l]; }

    std::size_t parameter_count() const;

    /// Asserts every weight and bias is a finite real.
    bool parameters_finite() const;

private:
    std::vector<std::size_t> layer_sizes_;
    std::vector<Matrix> weights_;  // weights_[l]: layer_sizes_[l+1] x layer_sizes_[l]
    std::vector<VecD> biases_;
};

/// Gradient accumulator shaped like a QNetwork's parameters.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<VecD> biases;

    static Gradients zeros_like(const QNetwork& net);
    void scale(double s);
    bool all_finite() const;
};

/// All action values for one state. Throws InputError on dimension mismatch.
VecD forward(const QNetwork& net, const VecD& state);

/// Gradient of sum_i <output_grads[i], forward(net, states[i])> with respect
/// to every parameter, output_grads treated as constants. Exact backprop;
/// matches central finite differences.
Gradients backward(const QNetwork& net, const std::vector<VecD>& states,
                   const std::vector<VecD>& output_grads);

/// Adam optimizer state. Accumulators mirror the parameter shapes.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Matrix> m_w, v_w;
    std::vector<VecD> m_b, v_b;

    static AdamState init(const QNetwork& net, double lr = 1e-3);
};

/// One bias-corrected Adam update in place. Throws TrainingError naming the
/// parameter location if a gradient entry is non-finite.
void adam_step(QNetwork& net, const Gradients& grads, AdamState& opt);

/// Deep copy for use as a bootstrap target network.
QNetwork sync_target(const QNetwork& net);

/// Versioned text checkpoint: layer-size header then row-major weights and
/// biases, full double precision.
void save_checkpoint(const QNetwork& net, const std::string& path);
QNetwork load_checkpoint(const std::string& path);

}  // namespace robustq
