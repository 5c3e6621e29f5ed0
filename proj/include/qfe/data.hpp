#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qfe/layers.hpp"

namespace qfe {

struct IdxFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Decoded IDX container: big-endian magic 0x0000080? plus dimensions.
struct IdxData {
    std::uint32_t magic = 0;
    std::vector<int> dims;
    std::vector<std::uint8_t> bytes;
};

// Reads a (possibly gzip-compressed) IDX file.
IdxData read_idx_file(const std::string& path);

struct RawImages {
    int count = 0, rows = 0, cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols

    std::span<const std::uint8_t> image(int index) const {
        const std::size_t n = static_cast<std::size_t>(rows) * cols;
        return {pixels.data() + static_cast<std::size_t>(index) * n, n};
    }
};

struct RawDataset {
    RawImages images;
    std::vector<std::uint8_t> labels;
};

// Image file (magic 0x00000803) + label file (magic 0x00000801), counts must match.
RawDataset read_idx(const std::string& images_path, const std::string& labels_path);

void write_idx_images(const std::string& path, const RawImages& images, bool gzip = false);
void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels,
                      bool gzip = false);

// Keeps rows/cols 3..24 of a 28x28 image (3-pixel symmetric margin).
std::vector<std::uint8_t> center_crop_22(std::span<const std::uint8_t> image28);

// v -> pi * v / 255, the RY angle range of raw pixels.
std::vector<double> scale_to_angles(std::span<const std::uint8_t> bytes);

// 2x2 average pooling of every image channel; dimensions must be even.
FeatureMap downsample_2x(const FeatureMap& input);

struct Dataset {
    std::vector<FeatureMap> images;
    std::vector<int> label_ids;               // position within `classes`
    std::vector<std::vector<double>> labels;  // one-hot, length = classes.size()
    std::vector<int> classes;                 // original digit per class index

    std::size_t size() const { return images.size(); }
    int n_classes() const { return static_cast<int>(classes.size()); }
};

struct SplitOptions {
    int train_total = 6000;
    int test_total = 600;
    std::vector<int> classes;  // empty = all digits 0..9
    int downsample = 1;        // 1 or 2
};

// Deterministically picks train_total/test_total samples balanced over the
// classes (totals must divide evenly), then crops 28->22 and scales pixels to
// [0, pi] angles. Train and test index sets are disjoint.
std::pair<Dataset, Dataset> balanced_subset(const RawDataset& raw, const SplitOptions& options,
                                            std::uint64_t seed);

// Standard file names under a data directory; ".gz" variants are found too.
struct DataFiles {
    std::string train_images, train_labels, test_images, test_labels;
};
DataFiles locate_mnist(const std::string& dir);  // throws if any file is missing

// Procedural stand-in digits for environments without the real dataset:
// class 0 renders a closed ring, class 1 a near-vertical stroke, both with
// jittered geometry and intensity. `side` is the square image size.
RawDataset synth_digits(int count, int side, std::uint64_t seed);

}  // namespace qfe
