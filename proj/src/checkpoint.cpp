#include "qfe/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qfe {

namespace {

constexpr char kMagic[8] = {'Q', 'F', 'E', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return v;
}

void write_tensor(std::ostream& out, const std::vector<double>& t) {
    write_pod<std::uint64_t>(out, t.size());
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
}

std::vector<double> read_tensor(std::istream& in, const std::string& path) {
    const auto n = read_pod<std::uint64_t>(in, path);
    std::vector<double> t(n);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint tensor: " + path);
    return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const RunConfig& cfg, Model& model,
                     const Adam& adam) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);

    out.write(kMagic, sizeof kMagic);
    write_pod(out, kVersion);
    write_pod<std::int32_t>(out, model.input_shape.channels);
    write_pod<std::int32_t>(out, model.input_shape.height);
    write_pod<std::int32_t>(out, model.input_shape.width);
    write_pod<std::int32_t>(out, model.n_classes);

    const std::string cfg_text = cfg.to_text();
    write_pod<std::uint64_t>(out, cfg_text.size());
    out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

    const auto params = model.all_params();
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) write_tensor(out, *p);

    write_pod<std::int32_t>(out, adam.step_count());
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(adam.first_moments().size()));
    for (const auto& m : adam.first_moments()) write_tensor(out, m);
    for (const auto& v : adam.second_moments()) write_tensor(out, v);

    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    LoadedCheckpoint lc;
    lc.input_shape.channels = read_pod<std::int32_t>(in, path);
    lc.input_shape.height = read_pod<std::int32_t>(in, path);
    lc.input_shape.width = read_pod<std::int32_t>(in, path);
    lc.n_classes = read_pod<std::int32_t>(in, path);

    const auto cfg_len = read_pod<std::uint64_t>(in, path);
    std::string cfg_text(cfg_len, '\0');
    in.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len));
    if (!in) throw std::runtime_error("truncated checkpoint config: " + path);
    lc.config = RunConfig::resolve(KvConfig::from_text(cfg_text));

    lc.model = build_model(lc.config, lc.input_shape, lc.n_classes);

    const auto n_tensors = read_pod<std::uint32_t>(in, path);
    auto params = lc.model.all_params();
    if (n_tensors != params.size())
        throw std::runtime_error("checkpoint tensor count does not match the model");
    for (auto* p : params) {
        std::vector<double> t = read_tensor(in, path);
        if (t.size() != p->size())
            throw std::runtime_error("checkpoint tensor size does not match the model");
        *p = std::move(t);
    }

    const auto t_step = read_pod<std::int32_t>(in, path);
    const auto n_adam = read_pod<std::uint32_t>(in, path);
    if (n_adam != params.size())
        throw std::runtime_error("checkpoint optimizer state does not match the model");
    std::vector<std::vector<double>> m, v;
    for (std::uint32_t i = 0; i < n_adam; ++i) m.push_back(read_tensor(in, path));
    for (std::uint32_t i = 0; i < n_adam; ++i) v.push_back(read_tensor(in, path));
    lc.adam = Adam(lc.model.param_sizes());
    lc.adam.restore(t_step, std::move(m), std::move(v));
    return lc;
}

}  // namespace qfe
