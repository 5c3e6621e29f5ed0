#include "qfe/model.hpp"

#include <sstream>
#include <stdexcept>

namespace qfe {

namespace {

struct QfeNode final : LayerNode {
    QfeLayer layer;

    explicit QfeNode(QfeConfig cfg) : layer(std::move(cfg)) {}

    struct C final : Cache {
        QfeLayer::Cache inner;
    };

    std::string describe() const override {
        const QfeConfig& c = layer.config();
        std::ostringstream os;
        os << "qfe(filters=" << c.out_filters << ", kernel=" << c.kernel
           << ", ansatz=" << ansatz_name(c.preset.kind) << "xL" << c.preset.layers;
        if (c.observables.size() > 1) os << ", fanout=" << c.observables.size();
        os << ")";
        return os.str();
    }

    Shape out_shape(const Shape& in) const override {
        const QfeConfig& c = layer.config();
        if (in.channels != c.in_channels)
            throw std::invalid_argument(describe() + ": expects " +
                                        std::to_string(c.in_channels) + " channels, got " +
                                        std::to_string(in.channels));
        if (in.height < c.kernel || in.width < c.kernel)
            throw std::invalid_argument(describe() + ": input smaller than kernel");
        return {layer.out_channels(), QfeLayer::output_extent(in.height, c.kernel, c.stride),
                QfeLayer::output_extent(in.width, c.kernel, c.stride)};
    }

    FeatureMap forward(const FeatureMap& input, bool want_grads,
                       std::unique_ptr<Cache>& cache) const override {
        auto c = std::make_unique<C>();
        FeatureMap out = layer.forward(input, want_grads, c->inner);
        cache = std::move(c);
        return out;
    }

    FeatureMap backward(const Cache& cache, const FeatureMap& upstream,
                        std::vector<std::vector<double>>& grads) const override {
        const auto& c = static_cast<const C&>(cache);
        return layer.backward(c.inner, upstream, grads[0], grads[1]);
    }

    std::vector<std::vector<double>*> params() override {
        return {&layer.weights(), &layer.bias()};
    }

    void init_params(Rng& rng) override {
        layer.weights() = init_qfe_weights(layer.weights().size(), rng);
        std::fill(layer.bias().begin(), layer.bias().end(), 0.0);
    }
};

struct MaxPoolNode final : LayerNode {
    int window;

    explicit MaxPoolNode(int w) : window(w) {}

    struct C final : Cache {
        MaxPoolCache inner;
    };

    std::string describe() const override { return "maxpool(" + std::to_string(window) + ")"; }

    Shape out_shape(const Shape& in) const override {
        if (in.height % window != 0 || in.width % window != 0)
            throw std::invalid_argument(describe() + ": dimensions not divisible at " + in.str());
        return {in.channels, in.height / window, in.width / window};
    }

    FeatureMap forward(const FeatureMap& input, bool, std::unique_ptr<Cache>& cache) const override {
        auto c = std::make_unique<C>();
        FeatureMap out = maxpool_forward(input, c->inner, window);
        cache = std::move(c);
        return out;
    }

    FeatureMap backward(const Cache& cache, const FeatureMap& upstream,
                        std::vector<std::vector<double>>&) const override {
        return maxpool_backward(static_cast<const C&>(cache).inner, upstream);
    }
};

struct GapNode final : LayerNode {
    struct C final : Cache {
        int channels = 0, height = 0, width = 0;
    };

    std::string describe() const override { return "gap"; }

    Shape out_shape(const Shape& in) const override { return {in.channels, 1, 1}; }

    FeatureMap forward(const FeatureMap& input, bool, std::unique_ptr<Cache>& cache) const override {
        auto c = std::make_unique<C>();
        c->channels = input.channels;
        c->height = input.height;
        c->width = input.width;
        cache = std::move(c);
        FeatureMap out(input.channels, 1, 1);
        out.data = gap_forward(input);
        return out;
    }

    FeatureMap backward(const Cache& cache, const FeatureMap& upstream,
                        std::vector<std::vector<double>>&) const override {
        const auto& c = static_cast<const C&>(cache);
        return gap_backward(upstream.data, c.channels, c.height, c.width);
    }
};

struct FlattenNode final : LayerNode {
    struct C final : Cache {
        int channels = 0, height = 0, width = 0;
    };

    std::string describe() const override { return "flatten"; }

    Shape out_shape(const Shape& in) const override {
        return {in.channels * in.height * in.width, 1, 1};
    }

    FeatureMap forward(const FeatureMap& input, bool, std::unique_ptr<Cache>& cache) const override {
        auto c = std::make_unique<C>();
        c->channels = input.channels;
        c->height = input.height;
        c->width = input.width;
        cache = std::move(c);
        FeatureMap out(input.channels * input.height * input.width, 1, 1);
        out.data = input.data;
        return out;
    }

    FeatureMap backward(const Cache& cache, const FeatureMap& upstream,
                        std::vector<std::vector<double>>&) const override {
        const auto& c = static_cast<const C&>(cache);
        FeatureMap out(c.channels, c.height, c.width);
        out.data = upstream.data;
        return out;
    }
};

struct FcNode final : LayerNode {
    int in_features, out_features;
    FcActivation act;
    std::vector<double> weights, bias;

    FcNode(int in, int out, FcActivation a)
        : in_features(in), out_features(out), act(a),
          weights(static_cast<std::size_t>(in) * out, 0.0),
          bias(static_cast<std::size_t>(out), 0.0) {}

    struct C final : Cache {
        FcCache inner;
    };

    std::string describe() const override {
        return "fc(" + std::to_string(in_features) + "->" + std::to_string(out_features) +
               (act == FcActivation::ReLU ? ", relu)" : ")");
    }

    Shape out_shape(const Shape& in) const override {
        if (in.height != 1 || in.width != 1 || in.channels != in_features)
            throw std::invalid_argument(describe() + ": expects flat input of " +
                                        std::to_string(in_features) + " features, got " +
                                        in.str());
        return {out_features, 1, 1};
    }

    FeatureMap forward(const FeatureMap& input, bool, std::unique_ptr<Cache>& cache) const override {
        auto c = std::make_unique<C>();
        FeatureMap out(out_features, 1, 1);
        out.data = fc_forward(input.data, weights, bias, act, &c->inner);
        cache = std::move(c);
        return out;
    }

    FeatureMap backward(const Cache& cache, const FeatureMap& upstream,
                        std::vector<std::vector<double>>& grads) const override {
        const auto& c = static_cast<const C&>(cache);
        FeatureMap out(in_features, 1, 1);
        out.data = fc_backward(c.inner, weights, upstream.data, act, grads[0], grads[1]);
        return out;
    }

    std::vector<std::vector<double>*> params() override { return {&weights, &bias}; }

    void init_params(Rng& rng) override {
        weights = init_fc_weights(weights.size(), rng);
        std::fill(bias.begin(), bias.end(), 0.0);
    }
};

std::vector<Observable> qfe_observables(int kernel, bool fanout) {
    if (!fanout) return {Observable::z(0)};
    std::vector<Observable> obs;
    for (int q = 0; q < kernel * kernel; ++q) obs.push_back(Observable::z(q));
    return obs;
}

}  // namespace

std::string Shape::str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

std::unique_ptr<LayerNode> make_qfe_node(QfeConfig config) {
    return std::make_unique<QfeNode>(std::move(config));
}
std::unique_ptr<LayerNode> make_maxpool_node(int window) {
    return std::make_unique<MaxPoolNode>(window);
}
std::unique_ptr<LayerNode> make_gap_node() { return std::make_unique<GapNode>(); }
std::unique_ptr<LayerNode> make_flatten_node() { return std::make_unique<FlattenNode>(); }
std::unique_ptr<LayerNode> make_fc_node(int in_features, int out_features, FcActivation act) {
    return std::make_unique<FcNode>(in_features, out_features, act);
}

void Model::init_params(Rng& rng) {
    for (auto& node : nodes) node->init_params(rng);
}

std::vector<Shape> Model::shape_chain() const {
    std::vector<Shape> chain{input_shape};
    for (const auto& node : nodes) chain.push_back(node->out_shape(chain.back()));
    return chain;
}

void Model::validate() const {
    const std::vector<Shape> chain = shape_chain();
    const Shape expected{n_classes, 1, 1};
    if (!(chain.back() == expected)) {
        throw std::invalid_argument("model output is " + chain.back().str() + ", expected " +
                                    expected.str());
    }
}

FeatureMap Model::forward(const FeatureMap& input, bool want_grads, ModelCaches& caches) const {
    caches.resize(nodes.size());
    FeatureMap x = input;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        x = nodes[i]->forward(x, want_grads, caches[i]);
    return x;
}

void Model::backward(const ModelCaches& caches, const FeatureMap& d_logits,
                     ModelGrads& grads) const {
    if (caches.size() != nodes.size()) throw std::logic_error("cache chain length mismatch");
    FeatureMap up = d_logits;
    for (std::size_t i = nodes.size(); i-- > 0;)
        up = nodes[i]->backward(*caches[i], up, grads[i]);
}

std::vector<std::vector<double>*> Model::all_params() {
    std::vector<std::vector<double>*> out;
    for (auto& node : nodes)
        for (auto* p : node->params()) out.push_back(p);
    return out;
}

std::vector<std::size_t> Model::param_sizes() {
    std::vector<std::size_t> out;
    for (auto& node : nodes)
        for (auto* p : node->params()) out.push_back(p->size());
    return out;
}

ModelGrads Model::make_grads() {
    ModelGrads grads(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (auto* p : nodes[i]->params()) grads[i].emplace_back(p->size(), 0.0);
    }
    return grads;
}

void Model::accumulate(ModelGrads& into, const ModelGrads& from, double scale) {
    for (std::size_t n = 0; n < into.size(); ++n)
        for (std::size_t t = 0; t < into[n].size(); ++t)
            for (std::size_t i = 0; i < into[n][t].size(); ++i)
                into[n][t][i] += scale * from[n][t][i];
}

std::string Model::describe() const {
    std::ostringstream os;
    const std::vector<Shape> chain = shape_chain();
    os << "input " << chain[0].str();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        os << " -> " << nodes[i]->describe() << " " << chain[i + 1].str();
    return os.str();
}

Model build_model(const RunConfig& cfg, const Shape& input_shape, int n_classes) {
    Model m;
    m.input_shape = input_shape;
    m.n_classes = n_classes;

    auto qfe = [&](int in_channels, int filters, bool fanout) {
        QfeConfig qc;
        qc.in_channels = in_channels;
        qc.out_filters = filters;
        qc.kernel = cfg.kernel;
        qc.preset = cfg.ansatz;
        qc.observables = qfe_observables(cfg.kernel, fanout);
        return qc;
    };
    const int fan = cfg.fanout ? cfg.kernel * cfg.kernel : 1;

    if (cfg.model_preset == "model1") {
        m.nodes.push_back(make_qfe_node(qfe(input_shape.channels, cfg.qfe1_filters, cfg.fanout)));
        m.nodes.push_back(make_maxpool_node(2));
        m.nodes.push_back(make_qfe_node(qfe(cfg.qfe1_filters * fan, cfg.qfe2_filters, cfg.fanout)));
        m.nodes.push_back(make_maxpool_node(2));
        m.nodes.push_back(make_flatten_node());
        // Flatten width depends on the input size; compute it from the chain so far.
        Shape s = input_shape;
        for (const auto& node : m.nodes) s = node->out_shape(s);
        m.nodes.push_back(make_fc_node(s.channels, cfg.fc1_width, FcActivation::ReLU));
        m.nodes.push_back(make_fc_node(cfg.fc1_width, cfg.fc2_width, FcActivation::ReLU));
        m.nodes.push_back(make_fc_node(cfg.fc2_width, n_classes, FcActivation::Identity));
    } else if (cfg.model_preset == "model2") {
        const int qfe3 = (cfg.qfe3_filters == 0) ? n_classes : cfg.qfe3_filters;
        if (qfe3 != n_classes) {
            throw std::invalid_argument(
                "model2 needs model.qfe3.filters == class count (GAP feeds the logits); got " +
                std::to_string(qfe3) + " filters for " + std::to_string(n_classes) + " classes");
        }
        m.nodes.push_back(make_qfe_node(qfe(input_shape.channels, cfg.qfe1_filters, cfg.fanout)));
        m.nodes.push_back(make_maxpool_node(2));
        m.nodes.push_back(make_qfe_node(qfe(cfg.qfe1_filters * fan, cfg.qfe2_filters, cfg.fanout)));
        m.nodes.push_back(make_qfe_node(qfe(cfg.qfe2_filters * fan, qfe3, false)));
        m.nodes.push_back(make_gap_node());
    } else if (cfg.model_preset == "qfegap") {
        m.nodes.push_back(make_qfe_node(qfe(input_shape.channels, n_classes, false)));
        m.nodes.push_back(make_gap_node());
    } else {
        throw std::invalid_argument("unknown model preset " + cfg.model_preset);
    }

    m.validate();
    return m;
}

int argmax_lowest_tie(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax of empty vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
    return best;
}

}  // namespace qfe
