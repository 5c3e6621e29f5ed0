#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qfe/checkpoint.hpp"
#include "qfe/config.hpp"
#include "qfe/data.hpp"
#include "qfe/model.hpp"

namespace qfe {

struct MetricsRecord {
    int epoch = 0;
    std::string split;  // "train" or "test"
    double cost = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;       // wall clock, the one field that is not reproducible
    std::uint64_t sims = 0;     // circuit simulations spent producing this record
};

struct EpochSetting {
    int epoch = 0;
    double learning_rate = 0.0;
    int batch_size = 0;
    int active_samples = 0;  // training subset size (grows with the growth knob)
};

struct EvalResult {
    double cost = 0.0;
    double accuracy = 0.0;
    std::vector<std::vector<int>> confusion;  // [true][predicted]
};

// Raised when a batch produces a non-finite loss.
struct TrainingDiverged : std::runtime_error {
    int epoch, batch_index;
    TrainingDiverged(int e, int b, const std::string& msg)
        : std::runtime_error(msg), epoch(e), batch_index(b) {}
};

struct TrainResult {
    std::vector<MetricsRecord> records;
    std::vector<EpochSetting> applied;  // actual per-epoch lr / batch / subset
    std::string metrics_path;
    std::string checkpoint_path;
};

// Loads the dataset named by the config and returns (train, test).
std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg);

TrainResult train(const RunConfig& cfg);
TrainResult train(const RunConfig& cfg, const Dataset& train_set, const Dataset& test_set);

EvalResult evaluate(const Model& model, const Dataset& dataset, int workers = 0);

struct SweepRow {
    std::string ansatz;
    int layers = 0;
    double train_cost = 0.0, train_accuracy = 0.0;
    double test_cost = 0.0, test_accuracy = 0.0;
    std::string metrics_path;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<std::string> metrics_paths;
    std::string summary_path;
    // Per-run applied settings, for schedule auditing.
    std::vector<std::vector<EpochSetting>> applied;
};

// All 6 ansatz presets x layers 1..5 on the shared dataset of the base config.
SweepResult sweep(const RunConfig& base);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

}  // namespace qfe
