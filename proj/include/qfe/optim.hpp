#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qfe {

// Deterministic random source. The distributions are hand-rolled on top of a
// 64-bit generator so the same seed gives the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();  // [0, 1)
    double uniform(double lo, double hi);
    double gaussian(double mean, double stddev);  // Box-Muller

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_u64() % i);
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// QFE weights: i.i.d. uniform on [-pi, pi].
std::vector<double> init_qfe_weights(std::size_t count, Rng& rng);
// Fully-connected weights: i.i.d. Gaussian, zero mean, stddev 0.001.
std::vector<double> init_fc_weights(std::size_t count, Rng& rng);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Canonical Adam with bias correction over a fixed list of parameter tensors.
class Adam {
public:
    Adam() = default;
    Adam(std::vector<std::size_t> tensor_sizes, AdamConfig config = {});

    void step(std::span<std::vector<double>*> params,
              std::span<const std::vector<double>> grads, double learning_rate);

    int step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }

    // Checkpoint support: raw state in, raw state out.
    void restore(int t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

private:
    AdamConfig cfg_;
    int t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

struct ScheduleRow {
    int first_epoch = 1;  // inclusive, 1-based
    int last_epoch = 1;   // inclusive
    double learning_rate = 0.01;
    int batch_size = 32;
};

struct Schedule {
    std::vector<ScheduleRow> rows;

    // 1: 0.01/32, 2-3: 0.005/32, 4-6: 0.001/32, 7-9: 0.0005/16
    static Schedule table1();
    static Schedule constant(double learning_rate, int batch_size, int epochs);

    ScheduleRow for_epoch(int epoch) const;
    void validate() const;  // contiguous, non-overlapping ranges
};

}  // namespace qfe
