#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qfe/circuits.hpp"

namespace qfe {

// Flat `key = value` text with dotted keys; '#' starts a comment.
class KvConfig {
public:
    static KvConfig from_file(const std::string& path);
    static KvConfig from_text(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

struct RunConfig {
    // model
    std::string model_preset = "model2";  // model1 | model2 | qfegap
    int qfe1_filters = 4;
    int qfe2_filters = 8;
    int qfe3_filters = 0;  // 0 = number of classes (model2's GAP feeds the logits)
    int fc1_width = 120;
    int fc2_width = 84;
    int kernel = 3;
    bool fanout = false;  // per-qubit Z observables fan out extra channels

    // ansatz
    AnsatzPreset ansatz{AnsatzKind::Sim15, 3};

    // training
    int epochs = 9;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string schedule_kind = "table1";  // table1 | constant
    double learning_rate = 0.01;
    int batch_size = 50;
    bool plateau = false;  // halve lr after `plateau_patience` stale epochs (constant schedule)
    int plateau_patience = 2;
    int workers = 0;  // 0 = all cores
    bool growth_enable = false;
    double growth_initial_fraction = 0.25;
    double growth_factor = 2.0;
    int growth_patience = 2;

    // data
    std::string data_dir = "data";
    int train_count = 6000;
    int test_count = 600;
    std::vector<int> classes;  // empty = all digits
    int downsample = 1;

    // output
    std::string out_dir = "out";
    std::string metrics_name = "metrics.csv";
    std::string checkpoint_name = "checkpoint.qfec";

    // Parses and validates; throws std::invalid_argument on unknown keys or
    // bad values. The seed key is mandatory.
    static RunConfig resolve(const KvConfig& kv);
    // Round-trips through resolve(); embedded in checkpoints.
    std::string to_text() const;
};

}  // namespace qfe
