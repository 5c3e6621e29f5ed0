#include "qfe/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "qfe/optim.hpp"

namespace qfe {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

struct GzFile {
    gzFile f = nullptr;
    explicit GzFile(const std::string& path, const char* mode) : f(gzopen(path.c_str(), mode)) {}
    ~GzFile() {
        if (f) gzclose(f);
    }
    GzFile(const GzFile&) = delete;
    GzFile& operator=(const GzFile&) = delete;
};

void read_exact(gzFile f, void* dst, std::size_t bytes, const std::string& path,
                std::size_t offset) {
    const int got = gzread(f, dst, static_cast<unsigned>(bytes));
    if (got < 0 || static_cast<std::size_t>(got) != bytes) {
        throw IdxFormatError(path + ": truncated at byte offset " + std::to_string(offset) +
                             " (wanted " + std::to_string(bytes) + " more)");
    }
}

std::uint32_t read_be32(gzFile f, const std::string& path, std::size_t offset) {
    std::uint8_t b[4];
    read_exact(f, b, 4, path, offset);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

void write_be32(gzFile f, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    if (gzwrite(f, b, 4) != 4) throw std::runtime_error("IDX write failed");
}

void write_idx(const std::string& path, std::uint32_t magic, std::span<const int> dims,
               std::span<const std::uint8_t> bytes, bool gzip) {
    GzFile out(path, gzip ? "wb" : "wbT");  // T = no compression, plain bytes
    if (!out.f) throw std::runtime_error("cannot open " + path + " for writing");
    write_be32(out.f, magic);
    for (int d : dims) write_be32(out.f, static_cast<std::uint32_t>(d));
    if (gzwrite(out.f, bytes.data(), static_cast<unsigned>(bytes.size())) !=
        static_cast<int>(bytes.size()))
        throw std::runtime_error("IDX write failed: " + path);
}

std::string find_with_gz(const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path plain = fs::path(dir) / name;
    if (fs::exists(plain)) return plain.string();
    const fs::path gz = fs::path(dir) / (name + ".gz");
    if (fs::exists(gz)) return gz.string();
    throw std::runtime_error("missing dataset file " + plain.string() + " (or .gz)");
}

void draw_disk(std::vector<std::uint8_t>& img, int side, double cx, double cy, double radius,
               int intensity) {
    const int lo_x = std::max(0, static_cast<int>(cx - radius - 1));
    const int hi_x = std::min(side - 1, static_cast<int>(cx + radius + 1));
    const int lo_y = std::max(0, static_cast<int>(cy - radius - 1));
    const int hi_y = std::min(side - 1, static_cast<int>(cy + radius + 1));
    for (int y = lo_y; y <= hi_y; ++y) {
        for (int x = lo_x; x <= hi_x; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            if (d <= radius) {
                auto& px = img[static_cast<std::size_t>(y) * side + x];
                px = static_cast<std::uint8_t>(std::min(255, px + intensity));
            }
        }
    }
}

}  // namespace

IdxData read_idx_file(const std::string& path) {
    GzFile in(path, "rb");
    if (!in.f) throw IdxFormatError("cannot open " + path);

    IdxData out;
    std::size_t offset = 0;
    out.magic = read_be32(in.f, path, offset);
    offset += 4;
    if (out.magic != kImagesMagic && out.magic != kLabelsMagic) {
        throw IdxFormatError(path + ": bad IDX magic at byte offset 0 (got 0x" +
                             [&] {
                                 char buf[16];
                                 std::snprintf(buf, sizeof buf, "%08x", out.magic);
                                 return std::string(buf);
                             }() +
                             ")");
    }
    const int n_dims = (out.magic == kImagesMagic) ? 3 : 1;
    std::size_t total = 1;
    for (int d = 0; d < n_dims; ++d) {
        const std::uint32_t dim = read_be32(in.f, path, offset);
        offset += 4;
        if (dim == 0 || dim > (1u << 28))
            throw IdxFormatError(path + ": implausible dimension " + std::to_string(dim));
        out.dims.push_back(static_cast<int>(dim));
        total *= dim;
    }
    out.bytes.resize(total);
    read_exact(in.f, out.bytes.data(), total, path, offset);
    return out;
}

RawDataset read_idx(const std::string& images_path, const std::string& labels_path) {
    IdxData img = read_idx_file(images_path);
    IdxData lab = read_idx_file(labels_path);
    if (img.magic != kImagesMagic)
        throw IdxFormatError(images_path + ": expected image magic 0x00000803");
    if (lab.magic != kLabelsMagic)
        throw IdxFormatError(labels_path + ": expected label magic 0x00000801");
    if (img.dims[0] != lab.dims[0]) {
        throw IdxFormatError("image count " + std::to_string(img.dims[0]) +
                             " does not match label count " + std::to_string(lab.dims[0]));
    }
    RawDataset out;
    out.images.count = img.dims[0];
    out.images.rows = img.dims[1];
    out.images.cols = img.dims[2];
    out.images.pixels = std::move(img.bytes);
    out.labels = std::move(lab.bytes);
    for (std::uint8_t l : out.labels) {
        if (l > 9) throw IdxFormatError(labels_path + ": label value out of range 0-9");
    }
    return out;
}

void write_idx_images(const std::string& path, const RawImages& images, bool gzip) {
    const int dims[3] = {images.count, images.rows, images.cols};
    write_idx(path, kImagesMagic, dims, images.pixels, gzip);
}

void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels, bool gzip) {
    const int dims[1] = {static_cast<int>(labels.size())};
    write_idx(path, kLabelsMagic, dims, labels, gzip);
}

std::vector<std::uint8_t> center_crop_22(std::span<const std::uint8_t> image28) {
    if (image28.size() != 28 * 28)
        throw std::invalid_argument("center_crop_22 expects a 28x28 image");
    std::vector<std::uint8_t> out;
    out.reserve(22 * 22);
    for (int i = 3; i < 25; ++i)
        for (int j = 3; j < 25; ++j) out.push_back(image28[static_cast<std::size_t>(i) * 28 + j]);
    return out;
}

std::vector<double> scale_to_angles(std::span<const std::uint8_t> bytes) {
    std::vector<double> out(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        out[i] = std::numbers::pi * static_cast<double>(bytes[i]) / 255.0;
    return out;
}

FeatureMap downsample_2x(const FeatureMap& input) {
    if (input.height % 2 != 0 || input.width % 2 != 0)
        throw std::invalid_argument("downsample_2x needs even dimensions");
    FeatureMap out(input.channels, input.height / 2, input.width / 2);
    for (int c = 0; c < input.channels; ++c)
        for (int i = 0; i < out.height; ++i)
            for (int j = 0; j < out.width; ++j)
                out.at(c, i, j) = 0.25 * (input.at(c, 2 * i, 2 * j) + input.at(c, 2 * i, 2 * j + 1) +
                                          input.at(c, 2 * i + 1, 2 * j) +
                                          input.at(c, 2 * i + 1, 2 * j + 1));
    return out;
}

std::pair<Dataset, Dataset> balanced_subset(const RawDataset& raw, const SplitOptions& options,
                                            std::uint64_t seed) {
    std::vector<int> classes = options.classes;
    if (classes.empty()) classes = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    const int n_classes = static_cast<int>(classes.size());
    if (options.train_total % n_classes != 0 || options.test_total % n_classes != 0)
        throw std::invalid_argument("subset totals must divide evenly across classes");
    const int train_per = options.train_total / n_classes;
    const int test_per = options.test_total / n_classes;

    std::vector<std::vector<int>> by_class(10);
    for (int i = 0; i < raw.images.count; ++i) by_class[raw.labels[i]].push_back(i);

    Rng rng(seed);
    Dataset train, test;
    train.classes = classes;
    test.classes = classes;

    // Gather (class, raw index) picks per class, then materialize in a fixed
    // order so the datasets are independent of the class iteration pattern.
    std::vector<std::pair<int, int>> train_picks, test_picks;
    for (int k = 0; k < n_classes; ++k) {
        auto& pool = by_class[classes[static_cast<std::size_t>(k)]];
        if (static_cast<int>(pool.size()) < train_per + test_per) {
            throw std::runtime_error("class " + std::to_string(classes[k]) + " has only " +
                                     std::to_string(pool.size()) + " samples, need " +
                                     std::to_string(train_per + test_per));
        }
        rng.shuffle(pool);
        for (int i = 0; i < train_per; ++i) train_picks.emplace_back(k, pool[i]);
        for (int i = 0; i < test_per; ++i) test_picks.emplace_back(k, pool[train_per + i]);
    }

    auto materialize = [&](Dataset& ds, const std::vector<std::pair<int, int>>& picks) {
        for (const auto& [k, idx] : picks) {
            std::vector<double> angles;
            int side = 0;
            if (raw.images.rows == 28 && raw.images.cols == 28) {
                angles = scale_to_angles(center_crop_22(raw.images.image(idx)));
                side = 22;
            } else {
                if (raw.images.rows != raw.images.cols)
                    throw std::invalid_argument("non-square images need 28x28 input");
                angles = scale_to_angles(raw.images.image(idx));
                side = raw.images.rows;
            }
            FeatureMap fm(1, side, side);
            fm.data = std::move(angles);
            if (options.downsample == 2) fm = downsample_2x(fm);
            else if (options.downsample != 1)
                throw std::invalid_argument("downsample factor must be 1 or 2");
            ds.images.push_back(std::move(fm));
            ds.label_ids.push_back(k);
            std::vector<double> one_hot(static_cast<std::size_t>(n_classes), 0.0);
            one_hot[static_cast<std::size_t>(k)] = 1.0;
            ds.labels.push_back(std::move(one_hot));
        }
    };
    materialize(train, train_picks);
    materialize(test, test_picks);
    return {std::move(train), std::move(test)};
}

DataFiles locate_mnist(const std::string& dir) {
    DataFiles f;
    f.train_images = find_with_gz(dir, "train-images-idx3-ubyte");
    f.train_labels = find_with_gz(dir, "train-labels-idx1-ubyte");
    f.test_images = find_with_gz(dir, "t10k-images-idx3-ubyte");
    f.test_labels = find_with_gz(dir, "t10k-labels-idx1-ubyte");
    return f;
}

RawDataset synth_digits(int count, int side, std::uint64_t seed) {
    if (count < 1 || side < 4) throw std::invalid_argument("synth_digits needs count >= 1, side >= 4");
    RawDataset out;
    out.images.count = count;
    out.images.rows = side;
    out.images.cols = side;
    out.images.pixels.assign(static_cast<std::size_t>(count) * side * side, 0);
    out.labels.resize(static_cast<std::size_t>(count));

    Rng rng(seed);
    const double mid = (side - 1) / 2.0;
    for (int s = 0; s < count; ++s) {
        std::vector<std::uint8_t> img(static_cast<std::size_t>(side) * side, 0);
        const int label = s % 2;  // alternate so any prefix is near-balanced
        const int ink = 170 + static_cast<int>(rng.uniform() * 85.0);
        const double jx = rng.uniform(-0.08, 0.08) * side;
        const double jy = rng.uniform(-0.08, 0.08) * side;
        const double pen = std::max(0.6, side / 14.0);

        if (label == 0) {
            // Closed ring around the center.
            const double rx = side * rng.uniform(0.22, 0.32);
            const double ry = side * rng.uniform(0.26, 0.36);
            const int steps = 12 * side;
            for (int t = 0; t < steps; ++t) {
                const double a = 2.0 * std::numbers::pi * t / steps;
                draw_disk(img, side, mid + jx + rx * std::cos(a), mid + jy + ry * std::sin(a),
                          pen, ink / 6);
            }
        } else {
            // Near-vertical stroke.
            const double slant = rng.uniform(-0.12, 0.12);
            const double len = side * rng.uniform(0.55, 0.75);
            const int steps = 6 * side;
            for (int t = 0; t < steps; ++t) {
                const double y = mid + jy - len / 2.0 + len * t / steps;
                const double x = mid + jx + slant * (y - mid);
                draw_disk(img, side, x, y, pen, ink / 5);
            }
        }
        std::copy(img.begin(), img.end(),
                  out.images.pixels.begin() + static_cast<std::size_t>(s) * side * side);
        out.labels[static_cast<std::size_t>(s)] = static_cast<std::uint8_t>(label);
    }
    return out;
}

}  // namespace qfe
