#include <doctest.h>

#include "qfe/model.hpp"
#include "support/oracles.hpp"

using namespace qfe;
namespace oracle = qfe::testing;

namespace {

RunConfig micro_config() {
    KvConfig kv;
    kv.set("train.seed", "1");
    RunConfig cfg = RunConfig::resolve(kv);
    cfg.ansatz = {AnsatzKind::Sim1, 1};
    return cfg;
}

}  // namespace

TEST_CASE("model2 reproduces the documented shape chain") {
    RunConfig cfg = micro_config();
    cfg.model_preset = "model2";
    Model m = build_model(cfg, {1, 22, 22}, 10);
    const std::vector<Shape> chain = m.shape_chain();
    REQUIRE(chain.size() == 6);
    CHECK(chain[0] == Shape{1, 22, 22});
    CHECK(chain[1] == Shape{4, 20, 20});
    CHECK(chain[2] == Shape{4, 10, 10});
    CHECK(chain[3] == Shape{8, 8, 8});
    CHECK(chain[4] == Shape{10, 6, 6});
    CHECK(chain[5] == Shape{10, 1, 1});
}

TEST_CASE("model1 reproduces the documented spatial chain") {
    RunConfig cfg = micro_config();
    cfg.model_preset = "model1";
    Model m = build_model(cfg, {1, 22, 22}, 10);
    const std::vector<Shape> chain = m.shape_chain();
    REQUIRE(chain.size() == 9);
    CHECK(chain[1] == Shape{4, 20, 20});
    CHECK(chain[2] == Shape{4, 10, 10});
    CHECK(chain[3] == Shape{8, 8, 8});
    CHECK(chain[4] == Shape{8, 4, 4});
    CHECK(chain[5] == Shape{128, 1, 1});
    CHECK(chain[6] == Shape{120, 1, 1});
    CHECK(chain[7] == Shape{84, 1, 1});
    CHECK(chain[8] == Shape{10, 1, 1});
}

TEST_CASE("model composition errors are loud") {
    RunConfig cfg = micro_config();
    cfg.model_preset = "model2";
    cfg.qfe3_filters = 7;  // GAP would emit 7 logits for 10 classes
    CHECK_THROWS_AS(build_model(cfg, {1, 22, 22}, 10), std::invalid_argument);

    RunConfig odd = micro_config();
    odd.model_preset = "model2";
    // 9x9 after the first QFE layer cannot be pooled by 2.
    CHECK_THROWS_AS(build_model(odd, {1, 11, 11}, 10), std::invalid_argument);
}

TEST_CASE("argmax breaks ties toward the lowest class index") {
    CHECK(argmax_lowest_tie(std::vector<double>{0.1, 0.9, 0.3}) == 1);
    CHECK(argmax_lowest_tie(std::vector<double>{0.5, 0.5, 0.5}) == 0);
    CHECK(argmax_lowest_tie(std::vector<double>{0.1, 0.7, 0.7}) == 1);
}

TEST_CASE("micro model end-to-end gradients match finite differences") {
    // 6x6 input -> QFE(Sim1, L=1, 1 filter) -> GAP -> FC(2) -> cross entropy
    RunConfig cfg = micro_config();
    cfg.model_preset = "qfegap";
    Model m;
    m.input_shape = {1, 6, 6};
    m.n_classes = 2;
    QfeConfig qc;
    qc.in_channels = 1;
    qc.out_filters = 1;
    qc.kernel = 3;
    qc.preset = {AnsatzKind::Sim1, 1};
    m.nodes.push_back(make_qfe_node(qc));
    m.nodes.push_back(make_gap_node());
    m.nodes.push_back(make_fc_node(1, 2, FcActivation::Identity));
    m.validate();

    Rng rng(21);
    m.init_params(rng);

    FeatureMap input(1, 6, 6);
    for (double& v : input.data) v = rng.uniform(0.0, 3.14);
    const std::vector<double> label = {0.0, 1.0};

    auto loss_now = [&]() {
        ModelCaches caches;
        const FeatureMap logits = m.forward(input, false, caches);
        return softmax_cross_entropy(logits.data, label).loss;
    };

    ModelCaches caches;
    const FeatureMap logits = m.forward(input, true, caches);
    const LossResult lr = softmax_cross_entropy(logits.data, label);
    ModelGrads grads = m.make_grads();
    FeatureMap up(2, 1, 1);
    up.data = lr.d_logits;
    m.backward(caches, up, grads);

    const auto params = m.all_params();
    std::size_t flat_index = 0;
    for (std::size_t n = 0; n < grads.size(); ++n) {
        for (std::size_t t = 0; t < grads[n].size(); ++t) {
            auto* tensor = params[flat_index++];
            for (std::size_t i = 0; i < tensor->size(); ++i) {
                const double keep = (*tensor)[i];
                const double fd = oracle::finite_difference(
                    [&](double v) {
                        (*tensor)[i] = v;
                        const double l = loss_now();
                        (*tensor)[i] = keep;
                        return l;
                    },
                    keep);
                const double got = grads[n][t][i];
                const bool ok = std::abs(got - fd) <= 1e-5 * std::max(1.0, std::abs(fd));
                CHECK(ok);
            }
        }
    }
}

TEST_CASE("model describe names every stage") {
    RunConfig cfg = micro_config();
    cfg.model_preset = "model2";
    Model m = build_model(cfg, {1, 22, 22}, 10);
    const std::string desc = m.describe();
    CHECK(desc.find("qfe(") != std::string::npos);
    CHECK(desc.find("maxpool") != std::string::npos);
    CHECK(desc.find("gap") != std::string::npos);
    CHECK(desc.find("10x1x1") != std::string::npos);
}
