#include "qfe/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qfe {

namespace {

// splitmix64: tiny, well-mixed, and identical everywhere.
std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : state_(seed) {
    // Avoid the all-zero fixed point and decorrelate small seeds.
    next_u64();
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian(double mean, double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return mean + stddev * r * std::cos(a);
}

std::vector<double> init_qfe_weights(std::size_t count, Rng& rng) {
    std::vector<double> out(count);
    for (double& v : out) v = rng.uniform(-std::numbers::pi, std::numbers::pi);
    return out;
}

std::vector<double> init_fc_weights(std::size_t count, Rng& rng) {
    std::vector<double> out(count);
    for (double& v : out) v = rng.gaussian(0.0, 0.001);
    return out;
}

Adam::Adam(std::vector<std::size_t> tensor_sizes, AdamConfig config) : cfg_(config) {
    m_.reserve(tensor_sizes.size());
    v_.reserve(tensor_sizes.size());
    for (std::size_t n : tensor_sizes) {
        m_.emplace_back(n, 0.0);
        v_.emplace_back(n, 0.0);
    }
}

void Adam::step(std::span<std::vector<double>*> params,
                std::span<const std::vector<double>> grads, double learning_rate) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("Adam tensor count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t g = 0; g < params.size(); ++g) {
        std::vector<double>& p = *params[g];
        const std::vector<double>& dp = grads[g];
        if (p.size() != m_[g].size() || dp.size() != m_[g].size())
            throw std::invalid_argument("Adam tensor shape mismatch in group " +
                                        std::to_string(g));
        for (std::size_t i = 0; i < p.size(); ++i) {
            m_[g][i] = cfg_.beta1 * m_[g][i] + (1.0 - cfg_.beta1) * dp[i];
            v_[g][i] = cfg_.beta2 * v_[g][i] + (1.0 - cfg_.beta2) * dp[i] * dp[i];
            const double m_hat = m_[g][i] / bc1;
            const double v_hat = v_[g][i] / bc2;
            p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
        }
    }
}

void Adam::restore(int t, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
    if (m.size() != m_.size() || v.size() != v_.size())
        throw std::invalid_argument("Adam restore tensor count mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

Schedule Schedule::table1() {
    Schedule s;
    s.rows = {{1, 1, 0.01, 32}, {2, 3, 0.005, 32}, {4, 6, 0.001, 32}, {7, 9, 0.0005, 16}};
    return s;
}

Schedule Schedule::constant(double learning_rate, int batch_size, int epochs) {
    Schedule s;
    s.rows = {{1, epochs, learning_rate, batch_size}};
    return s;
}

ScheduleRow Schedule::for_epoch(int epoch) const {
    for (const ScheduleRow& row : rows) {
        if (epoch >= row.first_epoch && epoch <= row.last_epoch) return row;
    }
    throw std::out_of_range("no schedule row covers epoch " + std::to_string(epoch));
}

void Schedule::validate() const {
    if (rows.empty()) throw std::invalid_argument("empty schedule");
    int expected = rows.front().first_epoch;
    for (const ScheduleRow& row : rows) {
        if (row.first_epoch != expected || row.last_epoch < row.first_epoch)
            throw std::invalid_argument("schedule rows must be contiguous and non-overlapping");
        if (row.batch_size < 1 || row.learning_rate <= 0.0)
            throw std::invalid_argument("schedule row has invalid learning rate or batch size");
        expected = row.last_epoch + 1;
    }
}

}  // namespace qfe
