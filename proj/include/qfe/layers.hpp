#pragma once

#include <span>
#include <vector>

#include "qfe/circuits.hpp"
#include "qfe/gradients.hpp"
#include "qfe/statevector.hpp"

namespace qfe {

// Rank-3 activation tensor, row-major [channel][row][col].
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w, double fill = 0.0);

    double& at(int c, int i, int j) {
        return data[(static_cast<std::size_t>(c) * height + i) * width + j];
    }
    double at(int c, int i, int j) const {
        return data[(static_cast<std::size_t>(c) * height + i) * width + j];
    }
    std::size_t size() const { return data.size(); }
    bool same_shape(const FeatureMap& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }
};

enum class Activation { ScaledSigmoid, Identity };

// sigma(p) = 2*pi / (1 + exp(-p)), onto (0, 2*pi)
double scaled_sigmoid(double p);
double scaled_sigmoid_prime(double p);
double activate(Activation act, double p);
double activate_prime(Activation act, double p);

// ---------------------------------------------------------------------------
// Quantum feature extraction layer

struct QfeConfig {
    int in_channels = 1;
    int out_filters = 1;
    int kernel = 3;
    int stride = 1;
    AnsatzPreset preset{AnsatzKind::Sim1, 1};
    // One observable: classic decoding, out_channels == out_filters.
    // Several: fan-out decoding, each observable feeds its own output channel
    // and out_channels == out_filters * observables.size().
    std::vector<Observable> observables{Observable::z(0)};
    Activation activation = Activation::ScaledSigmoid;
};

class QfeLayer {
public:
    explicit QfeLayer(QfeConfig config);

    const QfeConfig& config() const { return cfg_; }
    int n_qubits() const { return cfg_.kernel * cfg_.kernel; }
    int out_channels() const {
        return cfg_.out_filters * static_cast<int>(cfg_.observables.size());
    }
    int weight_count_per_circuit() const { return weight_count_; }
    static int output_extent(int input_extent, int kernel, int stride) {
        return (input_extent - kernel) / stride + 1;
    }

    struct Cache {
        int in_height = 0, in_width = 0;
        int out_height = 0, out_width = 0;
        bool has_grads = false;
        // pre-activation per [out_channel][i][j]
        std::vector<double> preact;
        // with want_grads: PatchGradient per [out_channel][in_channel][i][j]
        std::vector<PatchGradient> grads;
    };
    FeatureMap forward(const FeatureMap& input, bool want_grads, Cache& cache) const;
    // Accumulates into d_weights/d_bias (layouts of weights()/bias(), zeroed by
    // the caller per batch); returns dL/d(input). Uses only cached shift-rule
    // evaluations; runs no circuit simulations.
    FeatureMap backward(const Cache& cache, const FeatureMap& upstream,
                        std::span<double> d_weights, std::span<double> d_bias) const;

    // weights: [out_filters][in_channels][weight_count], radians
    std::vector<double>& weights() { return weights_; }
    const std::vector<double>& weights() const { return weights_; }
    // bias: [out_channels]
    std::vector<double>& bias() { return bias_; }
    const std::vector<double>& bias() const { return bias_; }

private:
    std::span<const double> circuit_weights(int filter, int channel) const;

    QfeConfig cfg_;
    CircuitTemplate composed_;  // encoder followed by ansatz
    int weight_count_ = 0;
    std::vector<double> weights_;
    std::vector<double> bias_;
};

// ---------------------------------------------------------------------------
// Max pooling (window x window, stride = window)

struct MaxPoolCache {
    int in_height = 0, in_width = 0;
    int window = 2;
    std::vector<int> argmax;  // flat input index per output cell, first in row-major on ties
};

FeatureMap maxpool_forward(const FeatureMap& input, MaxPoolCache& cache, int window = 2);
FeatureMap maxpool_backward(const MaxPoolCache& cache, const FeatureMap& upstream);

// ---------------------------------------------------------------------------
// Global average pooling

std::vector<double> gap_forward(const FeatureMap& input);
FeatureMap gap_backward(std::span<const double> upstream, int channels, int height, int width);

// ---------------------------------------------------------------------------
// Fully-connected layer: h(W x + B)

enum class FcActivation { ReLU, Identity };

struct FcCache {
    std::vector<double> input;
    std::vector<double> preact;
};

std::vector<double> fc_forward(std::span<const double> x, std::span<const double> weights,
                               std::span<const double> bias, FcActivation act, FcCache* cache);
// Returns dL/dx; accumulates dL/dW, dL/dB.
std::vector<double> fc_backward(const FcCache& cache, std::span<const double> weights,
                                std::span<const double> upstream, FcActivation act,
                                std::span<double> d_weights, std::span<double> d_bias);

// ---------------------------------------------------------------------------
// Loss

struct LossResult {
    double loss = 0.0;
    std::vector<double> d_logits;  // softmax - onehot
};

LossResult softmax_cross_entropy(std::span<const double> logits, std::span<const double> one_hot);

}  // namespace qfe
