#include "qfe/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qfe {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Distinct deterministic streams per purpose, all derived from the run seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose) {
    return seed * 0x9E3779B97F4A7C15ULL + purpose;
}

struct SampleResult {
    double loss = 0.0;
    ModelGrads grads;
};

int resolve_workers(int workers) {
#ifdef _OPENMP
    return workers > 0 ? workers : omp_get_max_threads();
#else
    (void)workers;
    return 1;
#endif
}

FeatureMap logits_to_map(const std::vector<double>& v) {
    FeatureMap fm(static_cast<int>(v.size()), 1, 1);
    fm.data = v;
    return fm;
}

}  // namespace

std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg) {
    const DataFiles files = locate_mnist(cfg.data_dir);
    RawDataset train_raw = read_idx(files.train_images, files.train_labels);
    RawDataset test_raw = read_idx(files.test_images, files.test_labels);

    SplitOptions opt;
    opt.train_total = cfg.train_count;
    opt.test_total = 0;
    opt.classes = cfg.classes;
    opt.downsample = cfg.downsample;
    Dataset train_set = balanced_subset(train_raw, opt, stream_seed(cfg.seed, 11)).first;

    opt.train_total = cfg.test_count;
    Dataset test_set = balanced_subset(test_raw, opt, stream_seed(cfg.seed, 13)).first;
    return {std::move(train_set), std::move(test_set)};
}

EvalResult evaluate(const Model& model, const Dataset& dataset, int workers) {
    const int n = static_cast<int>(dataset.size());
    if (n == 0) throw std::invalid_argument("cannot evaluate an empty dataset");
    const int n_classes = dataset.n_classes();

    std::vector<double> losses(static_cast<std::size_t>(n), 0.0);
    std::vector<int> preds(static_cast<std::size_t>(n), 0);
    std::string failure;

    const int threads = resolve_workers(workers);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
#endif
    for (int i = 0; i < n; ++i) {
        try {
            ModelCaches caches;
            const FeatureMap logits = model.forward(dataset.images[i], false, caches);
            const LossResult lr = softmax_cross_entropy(logits.data, dataset.labels[i]);
            losses[static_cast<std::size_t>(i)] = lr.loss;
            preds[static_cast<std::size_t>(i)] = argmax_lowest_tie(logits.data);
        } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (failure.empty()) failure = e.what();
        }
    }
    if (!failure.empty()) throw std::runtime_error("evaluation failed: " + failure);

    EvalResult out;
    out.confusion.assign(static_cast<std::size_t>(n_classes),
                         std::vector<int>(static_cast<std::size_t>(n_classes), 0));
    double cost = 0.0;
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        cost += losses[static_cast<std::size_t>(i)];
        const int truth = dataset.label_ids[static_cast<std::size_t>(i)];
        const int pred = preds[static_cast<std::size_t>(i)];
        out.confusion[truth][pred] += 1;
        if (truth == pred) ++correct;
    }
    out.cost = cost / n;
    out.accuracy = static_cast<double>(correct) / n;
    return out;
}

TrainResult train(const RunConfig& cfg) {
    auto [train_set, test_set] = load_datasets(cfg);
    return train(cfg, train_set, test_set);
}

TrainResult train(const RunConfig& cfg, const Dataset& train_set, const Dataset& test_set) {
    if (!cfg.seed_set) throw std::invalid_argument("train.seed is required");
    if (train_set.size() == 0) throw std::invalid_argument("empty training set");
    if (train_set.n_classes() != test_set.n_classes())
        throw std::invalid_argument("train and test class counts differ");

    const Shape input_shape{train_set.images[0].channels, train_set.images[0].height,
                            train_set.images[0].width};
    Model model = build_model(cfg, input_shape, train_set.n_classes());
    Rng init_rng(stream_seed(cfg.seed, 17));
    model.init_params(init_rng);

    Adam adam(model.param_sizes());
    auto params = model.all_params();

    Schedule schedule = (cfg.schedule_kind == "table1")
                            ? Schedule::table1()
                            : Schedule::constant(cfg.learning_rate, cfg.batch_size, cfg.epochs);
    schedule.validate();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) schedule.for_epoch(epoch);

    const int n_train = static_cast<int>(train_set.size());
    const int threads = resolve_workers(cfg.workers);

    // Base order is fixed once so the growth subset is a stable prefix.
    std::vector<int> base_order(static_cast<std::size_t>(n_train));
    std::iota(base_order.begin(), base_order.end(), 0);
    {
        Rng order_rng(stream_seed(cfg.seed, 19));
        order_rng.shuffle(base_order);
    }
    int active = n_train;
    if (cfg.growth_enable) {
        active = std::max(1, static_cast<int>(std::lround(cfg.growth_initial_fraction * n_train)));
    }

    TrainResult result;
    double plateau_lr_scale = 1.0;
    double best_cost = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const ScheduleRow row = schedule.for_epoch(epoch);
        const double lr = row.learning_rate * plateau_lr_scale;
        const int batch_size = row.batch_size;
        result.applied.push_back({epoch, lr, batch_size, active});

        const double t_train0 = now_seconds();
        const std::uint64_t sims_train0 = simulation_count();

        std::vector<int> order(base_order.begin(), base_order.begin() + active);
        Rng shuffle_rng(stream_seed(cfg.seed, 23) + static_cast<std::uint64_t>(epoch) * 1000003);
        shuffle_rng.shuffle(order);

        for (int start = 0, batch_index = 0; start < active; start += batch_size, ++batch_index) {
            const int count = std::min(batch_size, active - start);
            std::vector<SampleResult> partial(static_cast<std::size_t>(count));
            std::string failure;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
#endif
            for (int b = 0; b < count; ++b) {
                try {
                    const int idx = order[static_cast<std::size_t>(start + b)];
                    SampleResult& sr = partial[static_cast<std::size_t>(b)];
                    sr.grads = model.make_grads();
                    ModelCaches caches;
                    const FeatureMap logits = model.forward(train_set.images[idx], true, caches);
                    const LossResult lr_res =
                        softmax_cross_entropy(logits.data, train_set.labels[idx]);
                    sr.loss = lr_res.loss;
                    model.backward(caches, logits_to_map(lr_res.d_logits), sr.grads);
                } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
                    if (failure.empty()) failure = e.what();
                }
            }
            if (!failure.empty()) {
                throw TrainingDiverged(epoch, batch_index,
                                       "epoch " + std::to_string(epoch) + " batch " +
                                           std::to_string(batch_index) + ": " + failure);
            }

            // Ordered reduction: identical result for every worker count.
            ModelGrads batch_grads = model.make_grads();
            double batch_loss = 0.0;
            const double inv = 1.0 / count;
            for (int b = 0; b < count; ++b) {
                batch_loss += partial[static_cast<std::size_t>(b)].loss;
                Model::accumulate(batch_grads, partial[static_cast<std::size_t>(b)].grads, inv);
            }
            batch_loss *= inv;
            if (!std::isfinite(batch_loss)) {
                throw TrainingDiverged(epoch, batch_index,
                                       "non-finite loss at epoch " + std::to_string(epoch) +
                                           " batch " + std::to_string(batch_index));
            }

            std::vector<std::vector<double>> flat;
            flat.reserve(params.size());
            for (const auto& node : batch_grads)
                for (const auto& tensor : node) flat.push_back(tensor);
            adam.step(params, flat, lr);
        }

        const EvalResult train_eval = evaluate(model, train_set, cfg.workers);
        const double t_train1 = now_seconds();
        const std::uint64_t sims_train1 = simulation_count();
        result.records.push_back({epoch, "train", train_eval.cost, train_eval.accuracy,
                                  t_train1 - t_train0, sims_train1 - sims_train0});

        const double t_test0 = now_seconds();
        const std::uint64_t sims_test0 = simulation_count();
        const EvalResult test_eval = evaluate(model, test_set, cfg.workers);
        const double t_test1 = now_seconds();
        const std::uint64_t sims_test1 = simulation_count();
        result.records.push_back({epoch, "test", test_eval.cost, test_eval.accuracy,
                                  t_test1 - t_test0, sims_test1 - sims_test0});

        // Plateau bookkeeping drives the optional lr halving and data growth.
        if (train_eval.cost < best_cost - 1e-9) {
            best_cost = train_eval.cost;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
        }
        if (cfg.plateau && cfg.schedule_kind == "constant" &&
            stale_epochs >= cfg.plateau_patience) {
            plateau_lr_scale *= 0.5;
            stale_epochs = 0;
        }
        if (cfg.growth_enable && active < n_train && stale_epochs >= cfg.growth_patience) {
            active = std::min(n_train,
                              static_cast<int>(std::lround(active * cfg.growth_factor)));
            stale_epochs = 0;
        }
    }

    fs::create_directories(cfg.out_dir);
    const fs::path metrics_path = fs::path(cfg.out_dir) / cfg.metrics_name;
    fs::create_directories(metrics_path.parent_path());
    write_metrics_csv(metrics_path.string(), result.records);
    result.metrics_path = metrics_path.string();

    const fs::path ckpt_path = fs::path(cfg.out_dir) / cfg.checkpoint_name;
    fs::create_directories(ckpt_path.parent_path());
    save_checkpoint(ckpt_path.string(), cfg, model, adam);
    result.checkpoint_path = ckpt_path.string();
    return result;
}

SweepResult sweep(const RunConfig& base) {
    auto [train_set, test_set] = load_datasets(base);

    SweepResult out;
    for (AnsatzKind kind : all_ansatz_kinds()) {
        for (int layers = 1; layers <= 5; ++layers) {
            RunConfig cfg = base;
            cfg.ansatz = {kind, layers};
            const std::string stem =
                std::string(ansatz_name(kind)) + "_L" + std::to_string(layers);
            cfg.metrics_name = "sweep/" + stem + ".csv";
            cfg.checkpoint_name = "sweep/" + stem + ".qfec";

            const TrainResult tr = train(cfg, train_set, test_set);

            SweepRow row;
            row.ansatz = std::string(ansatz_name(kind));
            row.layers = layers;
            row.metrics_path = tr.metrics_path;
            for (const MetricsRecord& rec : tr.records) {
                if (rec.epoch != cfg.epochs) continue;
                if (rec.split == "train") {
                    row.train_cost = rec.cost;
                    row.train_accuracy = rec.accuracy;
                } else {
                    row.test_cost = rec.cost;
                    row.test_accuracy = rec.accuracy;
                }
            }
            out.rows.push_back(row);
            out.metrics_paths.push_back(tr.metrics_path);
            out.applied.push_back(tr.applied);
        }
    }

    const fs::path summary = fs::path(base.out_dir) / "sweep" / "summary.csv";
    fs::create_directories(summary.parent_path());
    std::ofstream f(summary);
    if (!f) throw std::runtime_error("cannot write " + summary.string());
    f << "ansatz,layers,train_cost,train_accuracy,test_cost,test_accuracy\n";
    f.precision(17);
    for (const SweepRow& row : out.rows) {
        f << row.ansatz << "," << row.layers << "," << row.train_cost << ","
          << row.train_accuracy << "," << row.test_cost << "," << row.test_accuracy << "\n";
    }
    out.summary_path = summary.string();
    return out;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "epoch,split,cost,accuracy,seconds,sims\n";
    f.precision(17);
    for (const MetricsRecord& r : records) {
        f << r.epoch << "," << r.split << "," << r.cost << "," << r.accuracy << "," << r.seconds
          << "," << r.sims << "\n";
    }
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(f, line) || line != "epoch,split,cost,accuracy,seconds,sims")
        throw std::runtime_error("unexpected metrics header in " + path);
    std::vector<MetricsRecord> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        MetricsRecord r;
        std::string tok;
        std::getline(ss, tok, ',');
        r.epoch = std::stoi(tok);
        std::getline(ss, r.split, ',');
        std::getline(ss, tok, ',');
        r.cost = std::stod(tok);
        std::getline(ss, tok, ',');
        r.accuracy = std::stod(tok);
        std::getline(ss, tok, ',');
        r.seconds = std::stod(tok);
        std::getline(ss, tok, ',');
        r.sims = std::stoull(tok);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace qfe
