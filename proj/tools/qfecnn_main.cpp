#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "qfe/checkpoint.hpp"
#include "qfe/config.hpp"
#include "qfe/data.hpp"
#include "qfe/trainer.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string seed, data_dir, out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "config file (flat key = value)");
    cmd->add_option("--set", opts.sets, "override, repeatable: --set key=value");
    cmd->add_option("--seed", opts.seed, "overrides train.seed");
    cmd->add_option("--data-dir", opts.data_dir, "overrides data.dir");
    cmd->add_option("--out-dir", opts.out_dir, "overrides out.dir");
}

qfe::RunConfig resolve_config(const CommonOpts& opts) {
    qfe::KvConfig kv;
    if (!opts.config_path.empty()) kv = qfe::KvConfig::from_file(opts.config_path);
    for (const std::string& kvpair : opts.sets) {
        const auto eq = kvpair.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kvpair + "'");
        kv.set(kvpair.substr(0, eq), kvpair.substr(eq + 1));
    }
    if (!opts.seed.empty()) kv.set("train.seed", opts.seed);
    if (!opts.data_dir.empty()) kv.set("data.dir", opts.data_dir);
    if (!opts.out_dir.empty()) kv.set("out.dir", opts.out_dir);
    return qfe::RunConfig::resolve(kv);
}

void print_records(const std::vector<qfe::MetricsRecord>& records) {
    for (const auto& r : records) {
        std::printf("epoch %2d %-5s cost %.6f accuracy %.4f (%.1fs, %llu sims)\n", r.epoch,
                    r.split.c_str(), r.cost, r.accuracy, r.seconds,
                    static_cast<unsigned long long>(r.sims));
    }
}

int cmd_train(const CommonOpts& opts) {
    const qfe::RunConfig cfg = resolve_config(opts);
    const qfe::TrainResult result = qfe::train(cfg);
    print_records(result.records);
    std::printf("metrics: %s\ncheckpoint: %s\n", result.metrics_path.c_str(),
                result.checkpoint_path.c_str());
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint_path) {
    qfe::LoadedCheckpoint lc = qfe::load_checkpoint(checkpoint_path);
    // Flags and --set entries layer on top of the embedded config.
    qfe::KvConfig kv = qfe::KvConfig::from_text(lc.config.to_text());
    if (!opts.config_path.empty()) {
        for (const auto& [key, value] : qfe::KvConfig::from_file(opts.config_path).entries())
            kv.set(key, value);
    }
    for (const std::string& kvpair : opts.sets) {
        const auto eq = kvpair.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kvpair + "'");
        kv.set(kvpair.substr(0, eq), kvpair.substr(eq + 1));
    }
    if (!opts.seed.empty()) kv.set("train.seed", opts.seed);
    if (!opts.data_dir.empty()) kv.set("data.dir", opts.data_dir);
    if (!opts.out_dir.empty()) kv.set("out.dir", opts.out_dir);
    const qfe::RunConfig cfg = qfe::RunConfig::resolve(kv);
    auto [train_set, test_set] = qfe::load_datasets(cfg);
    const qfe::EvalResult res = qfe::evaluate(lc.model, test_set, cfg.workers);
    std::printf("cost %.6f accuracy %.4f\n", res.cost, res.accuracy);
    std::printf("confusion (rows = true class):\n");
    for (const auto& row : res.confusion) {
        for (int v : row) std::printf("%6d", v);
        std::printf("\n");
    }
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    const qfe::RunConfig cfg = resolve_config(opts);
    const qfe::SweepResult result = qfe::sweep(cfg);
    for (const auto& row : result.rows) {
        std::printf("%-6s L%d  train cost %.4f acc %.4f | test cost %.4f acc %.4f\n",
                    row.ansatz.c_str(), row.layers, row.train_cost, row.train_accuracy,
                    row.test_cost, row.test_accuracy);
    }
    std::printf("summary: %s (%zu runs)\n", result.summary_path.c_str(), result.rows.size());
    return 0;
}

int cmd_synth_data(const std::string& dir, int train_count, int test_count, int side,
                   std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const qfe::RawDataset train = qfe::synth_digits(train_count, side, seed);
    const qfe::RawDataset test = qfe::synth_digits(test_count, side, seed + 1);
    namespace fs = std::filesystem;
    qfe::write_idx_images((fs::path(dir) / "train-images-idx3-ubyte").string(), train.images);
    qfe::write_idx_labels((fs::path(dir) / "train-labels-idx1-ubyte").string(), train.labels);
    qfe::write_idx_images((fs::path(dir) / "t10k-images-idx3-ubyte").string(), test.images);
    qfe::write_idx_labels((fs::path(dir) / "t10k-labels-idx1-ubyte").string(), test.labels);
    std::printf("wrote %d train / %d test synthetic digits (%dx%d) to %s\n", train_count,
                test_count, side, side, dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid quantum-classical CNN with quantum feature extraction layers"};
    app.require_subcommand(1);

    CommonOpts train_opts, eval_opts, sweep_opts;
    std::string checkpoint_path;

    CLI::App* train_cmd = app.add_subcommand("train", "train a model from a config");
    add_common(train_cmd, train_opts);

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "run all 6 ansatz presets x layers 1..5");
    add_common(sweep_cmd, sweep_opts);

    std::string synth_dir = "data";
    int synth_train = 400, synth_test = 200, synth_side = 28;
    std::uint64_t synth_seed = 7;
    CLI::App* synth_cmd = app.add_subcommand(
        "synth-data", "write procedural stand-in digits (IDX) when MNIST is unavailable");
    synth_cmd->add_option("--data-dir", synth_dir, "output directory");
    synth_cmd->add_option("--train-count", synth_train, "training sample count");
    synth_cmd->add_option("--test-count", synth_test, "test sample count");
    synth_cmd->add_option("--side", synth_side, "square image size in pixels");
    synth_cmd->add_option("--seed", synth_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_opts);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_opts, checkpoint_path);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts);
        if (synth_cmd->parsed())
            return cmd_synth_data(synth_dir, synth_train, synth_test, synth_side, synth_seed);
    } catch (const qfe::TrainingDiverged& e) {
        std::cerr << "error: code=nonfinite_loss epoch=" << e.epoch
                  << " batch=" << e.batch_index << " msg=\"" << e.what() << "\"\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: msg=\"" << e.what() << "\"\n";
        return 1;
    }
    return 0;
}
