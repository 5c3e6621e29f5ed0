#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qfe/config.hpp"
#include "qfe/layers.hpp"
#include "qfe/optim.hpp"

namespace qfe {

struct Shape {
    int channels = 0, height = 0, width = 0;
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

// One layer of a model. Parameters live in the node; activations and caches
// flow through the call arguments so concurrent samples never share state.
class LayerNode {
public:
    struct Cache {
        virtual ~Cache() = default;
    };

    virtual ~LayerNode() = default;
    virtual std::string describe() const = 0;
    virtual Shape out_shape(const Shape& in) const = 0;
    virtual FeatureMap forward(const FeatureMap& input, bool want_grads,
                               std::unique_ptr<Cache>& cache) const = 0;
    // Accumulates parameter gradients into `grads` (one tensor per params()
    // entry); returns dL/d(input).
    virtual FeatureMap backward(const Cache& cache, const FeatureMap& upstream,
                                std::vector<std::vector<double>>& grads) const = 0;
    virtual std::vector<std::vector<double>*> params() { return {}; }
    virtual void init_params(Rng&) {}
};

std::unique_ptr<LayerNode> make_qfe_node(QfeConfig config);
std::unique_ptr<LayerNode> make_maxpool_node(int window = 2);
std::unique_ptr<LayerNode> make_gap_node();
std::unique_ptr<LayerNode> make_flatten_node();
std::unique_ptr<LayerNode> make_fc_node(int in_features, int out_features, FcActivation act);

// [node][tensor][element], aligned with each node's params()
using ModelGrads = std::vector<std::vector<std::vector<double>>>;
using ModelCaches = std::vector<std::unique_ptr<LayerNode::Cache>>;

class Model {
public:
    Shape input_shape;
    int n_classes = 0;
    std::vector<std::unique_ptr<LayerNode>> nodes;

    void init_params(Rng& rng);
    // Shapes after each node, starting with input_shape; validates composition.
    std::vector<Shape> shape_chain() const;
    void validate() const;  // chain composes and ends at (n_classes, 1, 1)

    FeatureMap forward(const FeatureMap& input, bool want_grads, ModelCaches& caches) const;
    void backward(const ModelCaches& caches, const FeatureMap& d_logits, ModelGrads& grads) const;

    std::vector<std::vector<double>*> all_params();
    std::vector<std::size_t> param_sizes();
    ModelGrads make_grads();
    static void accumulate(ModelGrads& into, const ModelGrads& from, double scale = 1.0);

    std::string describe() const;
};

// Builds model1 / model2 / qfegap from the run configuration. The input shape
// comes from the dataset; the chain must end at n_classes logits.
Model build_model(const RunConfig& cfg, const Shape& input_shape, int n_classes);

int argmax_lowest_tie(std::span<const double> values);

}  // namespace qfe
