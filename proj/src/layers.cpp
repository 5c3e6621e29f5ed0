#include "qfe/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qfe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_finite(const FeatureMap& fm, const char* what) {
    for (double v : fm.data) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
    }
}

}  // namespace

FeatureMap::FeatureMap(int c, int h, int w, double fill) : channels(c), height(h), width(w) {
    if (c <= 0 || h <= 0 || w <= 0)
        throw std::invalid_argument("feature map dimensions must be positive");
    data.assign(static_cast<std::size_t>(c) * h * w, fill);
}

double scaled_sigmoid(double p) { return kTwoPi / (1.0 + std::exp(-p)); }

double scaled_sigmoid_prime(double p) {
    const double s = scaled_sigmoid(p);
    return s * (kTwoPi - s) / kTwoPi;
}

double activate(Activation act, double p) {
    return act == Activation::ScaledSigmoid ? scaled_sigmoid(p) : p;
}

double activate_prime(Activation act, double p) {
    return act == Activation::ScaledSigmoid ? scaled_sigmoid_prime(p) : 1.0;
}

// ---------------------------------------------------------------------------
// QfeLayer

QfeLayer::QfeLayer(QfeConfig config) : cfg_(std::move(config)) {
    if (cfg_.in_channels < 1 || cfg_.out_filters < 1)
        throw std::invalid_argument("QFE layer needs positive channel and filter counts");
    if (cfg_.kernel < 1) throw std::invalid_argument("QFE kernel must be positive");
    if (cfg_.stride < 1) throw std::invalid_argument("QFE stride must be positive");
    if (cfg_.observables.empty())
        throw std::invalid_argument("QFE layer needs at least one observable");

    const int n = n_qubits();
    const CircuitTemplate encoder = build_encoder(n);
    const CircuitTemplate ansatz = build_ansatz(cfg_.preset, n);
    weight_count_ = ansatz.n_weight_slots;
    composed_ = compose(encoder, ansatz);
    for (const Observable& obs : cfg_.observables) {
        if (obs.max_qubit() >= n)
            throw std::invalid_argument("QFE observable acts beyond the patch register");
    }

    weights_.assign(static_cast<std::size_t>(cfg_.out_filters) * cfg_.in_channels * weight_count_,
                    0.0);
    bias_.assign(static_cast<std::size_t>(out_channels()), 0.0);
}

std::span<const double> QfeLayer::circuit_weights(int filter, int channel) const {
    const std::size_t offset =
        (static_cast<std::size_t>(filter) * cfg_.in_channels + channel) * weight_count_;
    return {weights_.data() + offset, static_cast<std::size_t>(weight_count_)};
}

FeatureMap QfeLayer::forward(const FeatureMap& input, bool want_grads, Cache& cache) const {
    if (input.channels != cfg_.in_channels) {
        throw std::invalid_argument("QFE layer expects " + std::to_string(cfg_.in_channels) +
                                    " input channels, got " + std::to_string(input.channels));
    }
    if (input.height < cfg_.kernel || input.width < cfg_.kernel)
        throw std::invalid_argument("QFE input smaller than the kernel");
    check_finite(input, "QFE input");

    const int f = cfg_.kernel;
    const int out_h = output_extent(input.height, f, cfg_.stride);
    const int out_w = output_extent(input.width, f, cfg_.stride);
    const int n_out = out_channels();
    const int n_obs = static_cast<int>(cfg_.observables.size());
    const std::size_t n_patches = static_cast<std::size_t>(out_h) * out_w;

    cache.in_height = input.height;
    cache.in_width = input.width;
    cache.out_height = out_h;
    cache.out_width = out_w;
    cache.has_grads = want_grads;
    cache.preact.assign(static_cast<std::size_t>(n_out) * n_patches, 0.0);
    cache.grads.clear();
    if (want_grads)
        cache.grads.resize(static_cast<std::size_t>(n_out) * cfg_.in_channels * n_patches);

    FeatureMap out(n_out, out_h, out_w);

    // One work item per (filter, channel, patch). Each item writes only its
    // own slots of `values`/`cache.grads`, and the channel sum below runs in
    // fixed order, so worker count never changes the result.
    const std::size_t n_items = static_cast<std::size_t>(cfg_.out_filters) * cfg_.in_channels *
                                n_patches;
    std::vector<double> values(static_cast<std::size_t>(n_out) * cfg_.in_channels * n_patches,
                               0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) if (!omp_in_parallel() && n_items > 1)
#endif
    for (std::size_t item = 0; item < n_items; ++item) {
        const int o = static_cast<int>(item / (cfg_.in_channels * n_patches));
        const int c = static_cast<int>((item / n_patches) % cfg_.in_channels);
        const std::size_t patch = item % n_patches;
        const int i = static_cast<int>(patch) / out_w;
        const int j = static_cast<int>(patch) % out_w;

        std::vector<double> patch_vals(static_cast<std::size_t>(f) * f);
        for (int di = 0; di < f; ++di)
            for (int dj = 0; dj < f; ++dj)
                patch_vals[static_cast<std::size_t>(di) * f + dj] =
                    input.at(c, i * cfg_.stride + di, j * cfg_.stride + dj);

        if (want_grads) {
            std::vector<PatchGradient> pg =
                patch_gradient_multi(composed_, patch_vals, circuit_weights(o, c),
                                     cfg_.observables);
            for (int k = 0; k < n_obs; ++k) {
                const int oc = o * n_obs + k;
                const std::size_t slot =
                    (static_cast<std::size_t>(oc) * cfg_.in_channels + c) * n_patches + patch;
                values[slot] = pg[k].value;
                cache.grads[slot] = std::move(pg[k]);
            }
        } else {
            std::vector<Gate> gates = composed_.bind(patch_vals, circuit_weights(o, c));
            Statevector state = run_circuit(composed_.n_qubits, gates);
            for (int k = 0; k < n_obs; ++k) {
                const int oc = o * n_obs + k;
                values[(static_cast<std::size_t>(oc) * cfg_.in_channels + c) * n_patches +
                       patch] = expectation(state, cfg_.observables[k]);
            }
        }
    }

    for (int oc = 0; oc < n_out; ++oc) {
        for (std::size_t patch = 0; patch < n_patches; ++patch) {
            double p = 0.0;
            for (int c = 0; c < cfg_.in_channels; ++c)
                p += values[(static_cast<std::size_t>(oc) * cfg_.in_channels + c) * n_patches +
                            patch];
            p += bias_[oc];
            cache.preact[oc * n_patches + patch] = p;
            out.data[oc * n_patches + patch] = activate(cfg_.activation, p);
        }
    }
    return out;
}

FeatureMap QfeLayer::backward(const Cache& cache, const FeatureMap& upstream,
                              std::span<double> d_weights, std::span<double> d_bias) const {
    if (cfg_.stride != 1)
        throw std::invalid_argument("QFE backward pass is derived for stride 1 only");
    if (!cache.has_grads)
        throw std::logic_error("QFE backward needs a cache from forward(want_grads=true)");
    if (upstream.channels != out_channels() || upstream.height != cache.out_height ||
        upstream.width != cache.out_width)
        throw std::invalid_argument("upstream gradient shape mismatch");
    if (d_weights.size() != weights_.size() || d_bias.size() != bias_.size())
        throw std::invalid_argument("gradient buffer size mismatch");

    const int f = cfg_.kernel;
    const int n_obs = static_cast<int>(cfg_.observables.size());
    const std::size_t n_patches = static_cast<std::size_t>(cache.out_height) * cache.out_width;

    FeatureMap d_input(cfg_.in_channels, cache.in_height, cache.in_width);

    // Fixed row-major accumulation order: output channels outer, patches inner.
    for (int oc = 0; oc < upstream.channels; ++oc) {
        const int o = oc / n_obs;
        for (std::size_t patch = 0; patch < n_patches; ++patch) {
            const int i = static_cast<int>(patch) / cache.out_width;
            const int j = static_cast<int>(patch) % cache.out_width;
            const double sigma_prime =
                activate_prime(cfg_.activation, cache.preact[oc * n_patches + patch]);
            const double g = sigma_prime * upstream.at(oc, i, j);

            d_bias[oc] += g;
            for (int c = 0; c < cfg_.in_channels; ++c) {
                const PatchGradient& pg =
                    cache.grads[(static_cast<std::size_t>(oc) * cfg_.in_channels + c) *
                                    n_patches +
                                patch];
                double* dw = d_weights.data() +
                             (static_cast<std::size_t>(o) * cfg_.in_channels + c) * weight_count_;
                for (int k = 0; k < weight_count_; ++k) dw[k] += g * pg.d_weights[k];
                // Scatter-add the input derivatives back into the patch's
                // source coordinates.
                for (int di = 0; di < f; ++di)
                    for (int dj = 0; dj < f; ++dj)
                        d_input.at(c, i + di, j + dj) +=
                            g * pg.d_inputs[static_cast<std::size_t>(di) * f + dj];
            }
        }
    }
    return d_input;
}

// ---------------------------------------------------------------------------
// Max pooling

FeatureMap maxpool_forward(const FeatureMap& input, MaxPoolCache& cache, int window) {
    if (window < 1) throw std::invalid_argument("pool window must be positive");
    if (input.height % window != 0 || input.width % window != 0) {
        throw std::invalid_argument("pooling needs dimensions divisible by " +
                                    std::to_string(window) + ", got " +
                                    std::to_string(input.height) + "x" +
                                    std::to_string(input.width));
    }
    const int out_h = input.height / window;
    const int out_w = input.width / window;
    FeatureMap out(input.channels, out_h, out_w);
    cache.in_height = input.height;
    cache.in_width = input.width;
    cache.window = window;
    cache.argmax.assign(out.size(), 0);

    std::size_t idx = 0;
    for (int c = 0; c < input.channels; ++c) {
        for (int i = 0; i < out_h; ++i) {
            for (int j = 0; j < out_w; ++j, ++idx) {
                double best = -std::numeric_limits<double>::infinity();
                int best_flat = 0;
                for (int di = 0; di < window; ++di) {
                    for (int dj = 0; dj < window; ++dj) {
                        const int ii = i * window + di, jj = j * window + dj;
                        const double v = input.at(c, ii, jj);
                        if (v > best) {  // strict: ties keep the first in row-major order
                            best = v;
                            best_flat = (c * input.height + ii) * input.width + jj;
                        }
                    }
                }
                out.data[idx] = best;
                cache.argmax[idx] = best_flat;
            }
        }
    }
    return out;
}

FeatureMap maxpool_backward(const MaxPoolCache& cache, const FeatureMap& upstream) {
    if (upstream.size() != cache.argmax.size())
        throw std::invalid_argument("upstream shape does not match pooling cache");
    FeatureMap d_input(upstream.channels, cache.in_height, cache.in_width);
    for (std::size_t idx = 0; idx < cache.argmax.size(); ++idx)
        d_input.data[static_cast<std::size_t>(cache.argmax[idx])] += upstream.data[idx];
    return d_input;
}

// ---------------------------------------------------------------------------
// Global average pooling

std::vector<double> gap_forward(const FeatureMap& input) {
    const double inv = 1.0 / (static_cast<double>(input.height) * input.width);
    std::vector<double> out(static_cast<std::size_t>(input.channels), 0.0);
    for (int c = 0; c < input.channels; ++c) {
        double acc = 0.0;
        for (int i = 0; i < input.height; ++i)
            for (int j = 0; j < input.width; ++j) acc += input.at(c, i, j);
        out[static_cast<std::size_t>(c)] = acc * inv;
    }
    return out;
}

FeatureMap gap_backward(std::span<const double> upstream, int channels, int height, int width) {
    if (static_cast<int>(upstream.size()) != channels)
        throw std::invalid_argument("GAP upstream length must equal channel count");
    FeatureMap d_input(channels, height, width);
    const double inv = 1.0 / (static_cast<double>(height) * width);
    for (int c = 0; c < channels; ++c) {
        const double v = upstream[static_cast<std::size_t>(c)] * inv;
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j) d_input.at(c, i, j) = v;
    }
    return d_input;
}

// ---------------------------------------------------------------------------
// Fully-connected layer

std::vector<double> fc_forward(std::span<const double> x, std::span<const double> weights,
                               std::span<const double> bias, FcActivation act, FcCache* cache) {
    const std::size_t n_in = x.size();
    const std::size_t n_out = bias.size();
    if (weights.size() != n_in * n_out)
        throw std::invalid_argument("FC weight matrix size mismatch");

    std::vector<double> preact(n_out, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
        double acc = bias[o];
        const double* row = weights.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
        preact[o] = acc;
    }
    std::vector<double> out(n_out);
    for (std::size_t o = 0; o < n_out; ++o)
        out[o] = (act == FcActivation::ReLU) ? std::max(0.0, preact[o]) : preact[o];
    if (cache) {
        cache->input.assign(x.begin(), x.end());
        cache->preact = preact;
    }
    return out;
}

std::vector<double> fc_backward(const FcCache& cache, std::span<const double> weights,
                                std::span<const double> upstream, FcActivation act,
                                std::span<double> d_weights, std::span<double> d_bias) {
    const std::size_t n_in = cache.input.size();
    const std::size_t n_out = cache.preact.size();
    if (upstream.size() != n_out) throw std::invalid_argument("FC upstream length mismatch");
    if (d_weights.size() != n_in * n_out || d_bias.size() != n_out)
        throw std::invalid_argument("FC gradient buffer size mismatch");

    std::vector<double> d_input(n_in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
        const double hprime =
            (act == FcActivation::ReLU) ? (cache.preact[o] > 0.0 ? 1.0 : 0.0) : 1.0;
        const double g = hprime * upstream[o];
        d_bias[o] += g;
        double* wrow_grad = d_weights.data() + o * n_in;
        const double* wrow = weights.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) {
            wrow_grad[i] += g * cache.input[i];
            d_input[i] += g * wrow[i];
        }
    }
    return d_input;
}

// ---------------------------------------------------------------------------
// Loss

LossResult softmax_cross_entropy(std::span<const double> logits, std::span<const double> one_hot) {
    if (logits.size() != one_hot.size())
        throw std::invalid_argument("logits and label lengths differ");
    if (logits.empty()) throw std::invalid_argument("empty logits");

    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    const double log_z = std::log(z) + m;

    LossResult res;
    res.d_logits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double p = std::exp(logits[i] - log_z);
        res.d_logits[i] = p - one_hot[i];
        if (one_hot[i] != 0.0) res.loss -= one_hot[i] * (logits[i] - log_z);
    }
    return res;
}

}  // namespace qfe
