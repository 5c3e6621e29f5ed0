#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qfe/checkpoint.hpp"
#include "qfe/trainer.hpp"

using namespace qfe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("qfe_trainer_" + std::to_string(static_cast<unsigned>(::getpid())) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Writes a small synthetic IDX dataset and returns a config pointed at it.
RunConfig micro_run(const TempDir& dir, std::uint64_t seed) {
    const fs::path data = dir.path / "data";
    fs::create_directories(data);
    const RawDataset train = synth_digits(64, 8, 100);
    const RawDataset test = synth_digits(32, 8, 101);
    write_idx_images((data / "train-images-idx3-ubyte").string(), train.images);
    write_idx_labels((data / "train-labels-idx1-ubyte").string(), train.labels);
    write_idx_images((data / "t10k-images-idx3-ubyte").string(), test.images);
    write_idx_labels((data / "t10k-labels-idx1-ubyte").string(), test.labels);

    KvConfig kv;
    kv.set("train.seed", std::to_string(seed));
    RunConfig cfg = RunConfig::resolve(kv);
    cfg.model_preset = "qfegap";
    cfg.kernel = 2;
    cfg.ansatz = {AnsatzKind::Sim15, 1};
    cfg.schedule_kind = "constant";
    cfg.learning_rate = 0.05;
    cfg.batch_size = 16;
    cfg.epochs = 2;
    cfg.classes = {0, 1};
    cfg.train_count = 40;
    cfg.test_count = 16;
    cfg.downsample = 2;  // 8x8 -> 4x4
    cfg.data_dir = data.string();
    cfg.out_dir = (dir.path / "out").string();
    return cfg;
}

}  // namespace

TEST_CASE("micro training run lowers the cost and writes artifacts") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 42);
    cfg.epochs = 3;
    const TrainResult result = train(cfg);

    REQUIRE(result.records.size() == 6);  // 3 epochs x {train, test}
    const auto& first = result.records[0];
    const auto& last = result.records[4];
    CHECK(first.split == "train");
    CHECK(last.epoch == 3);
    CHECK(last.cost < first.cost);
    for (const auto& r : result.records) {
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
        CHECK(std::isfinite(r.cost));
    }

    CHECK(fs::exists(result.metrics_path));
    CHECK(fs::exists(result.checkpoint_path));
    const auto parsed = read_metrics_csv(result.metrics_path);
    REQUIRE(parsed.size() == 6);
    CHECK(parsed[0].cost == result.records[0].cost);
    CHECK(parsed[5].sims == result.records[5].sims);
}

TEST_CASE("training is bit-reproducible and worker-count independent") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 7);
    cfg.epochs = 1;
    cfg.workers = 1;
    const TrainResult a = train(cfg);
    cfg.out_dir = (dir.path / "out2").string();
    const TrainResult b = train(cfg);
    cfg.out_dir = (dir.path / "out3").string();
    cfg.workers = 2;
    const TrainResult c = train(cfg);

    REQUIRE(a.records.size() == b.records.size());
    REQUIRE(a.records.size() == c.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].cost == b.records[i].cost);          // bitwise
        CHECK(a.records[i].accuracy == b.records[i].accuracy);  // bitwise
        CHECK(a.records[i].sims == b.records[i].sims);
        CHECK(a.records[i].cost == c.records[i].cost);
        CHECK(a.records[i].accuracy == c.records[i].accuracy);
        CHECK(a.records[i].sims == c.records[i].sims);
    }
}

TEST_CASE("simulation counter matches the analytic shift-rule budget") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 11);
    cfg.epochs = 1;
    cfg.train_count = 8;
    cfg.test_count = 8;
    cfg.batch_size = 8;

    reset_simulation_count();
    const TrainResult result = train(cfg);

    // qfegap on 4x4 inputs with kernel 2: 3x3 = 9 patches, 2 filters.
    const CircuitTemplate tpl =
        compose(build_encoder(4), build_ansatz({AnsatzKind::Sim15, 1}, 4));
    const std::uint64_t per_sample_train = 9ull * 2ull *
        static_cast<std::uint64_t>(shift_evaluation_count(tpl));
    const std::uint64_t per_sample_eval = 9ull * 2ull;
    // Training pass with gradients + post-epoch eval on the train split.
    const std::uint64_t train_sims = 8 * per_sample_train + 8 * per_sample_eval;
    const std::uint64_t test_sims = 8 * per_sample_eval;
    CHECK(result.records[0].sims == train_sims);
    CHECK(result.records[1].sims == test_sims);
}

TEST_CASE("checkpoints round-trip through save and load") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 13);
    cfg.epochs = 1;
    const TrainResult result = train(cfg);

    LoadedCheckpoint lc = load_checkpoint(result.checkpoint_path);
    CHECK(lc.config.seed == cfg.seed);
    CHECK(lc.config.model_preset == "qfegap");
    CHECK(lc.n_classes == 2);

    auto [train_set, test_set] = load_datasets(cfg);
    const EvalResult direct = evaluate(lc.model, test_set, 1);
    // The final test record came from the same parameters just before saving.
    const auto& last_test = result.records.back();
    CHECK(direct.cost == last_test.cost);
    CHECK(direct.accuracy == last_test.accuracy);

    int total = 0;
    for (const auto& row : direct.confusion)
        for (int v : row) total += v;
    CHECK(total == static_cast<int>(test_set.size()));
}

TEST_CASE("evaluate applies the lowest-index tie rule to constant logits") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 17);
    auto [train_set, test_set] = load_datasets(cfg);

    Model m = build_model(cfg, {1, 4, 4}, 2);
    // Zero weights with identity-activation-free path: the GAP logits become
    // equal constants, so every argmax resolves to class 0.
    for (auto* p : m.all_params()) std::fill(p->begin(), p->end(), 0.0);
    const EvalResult res = evaluate(m, test_set, 1);
    CHECK(res.accuracy == doctest::Approx(0.5));  // balanced two-class set
    for (std::size_t truth = 0; truth < res.confusion.size(); ++truth) {
        CHECK(res.confusion[truth][0] == 8);  // everything predicted as class 0
        CHECK(res.confusion[truth][1] == 0);
    }
}

TEST_CASE("non-finite losses abort with the offending batch") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 19);
    cfg.learning_rate = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train(cfg), TrainingDiverged);
    try {
        train(cfg);
    } catch (const TrainingDiverged& e) {
        CHECK(e.epoch == 1);
        CHECK(e.batch_index >= 1);  // the first step poisons the weights
    }
}

TEST_CASE("dataset growth enlarges the active subset on plateau") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 23);
    cfg.epochs = 4;
    cfg.learning_rate = 1e-12;  // effectively frozen, so growth must trigger
    cfg.growth_enable = true;
    cfg.growth_initial_fraction = 0.25;
    cfg.growth_factor = 2.0;
    cfg.growth_patience = 1;

    const TrainResult result = train(cfg);
    REQUIRE(result.applied.size() == 4);
    CHECK(result.applied[0].active_samples == 10);
    CHECK(result.applied.back().active_samples > result.applied.front().active_samples);
}

TEST_CASE("plateau rule halves the constant learning rate after stale epochs") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 29);
    cfg.epochs = 5;
    // A vanishing learning rate freezes the cost, so every epoch is stale and
    // the halving cadence is fully deterministic.
    cfg.learning_rate = 1e-12;
    cfg.plateau = true;
    cfg.plateau_patience = 2;
    const TrainResult result = train(cfg);
    REQUIRE(result.applied.size() == 5);
    CHECK(result.applied[0].learning_rate == doctest::Approx(1e-12));
    CHECK(result.applied[2].learning_rate == doctest::Approx(1e-12));
    CHECK(result.applied[3].learning_rate == doctest::Approx(0.5e-12));
    CHECK(result.applied[4].learning_rate == doctest::Approx(0.5e-12));
}

TEST_CASE("table1 schedule cannot run past its last row") {
    TempDir dir;
    RunConfig cfg = micro_run(dir, 31);
    cfg.schedule_kind = "table1";
    cfg.epochs = 10;
    CHECK_THROWS_AS(train(cfg), std::out_of_range);
}
