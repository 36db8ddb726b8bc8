#pragma once

#include "resilinet/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace resilinet {

enum class Split { Train, Test };
std::string_view to_string(Split split);

/// Per-channel (x - mean) / std applied after scaling bytes to [0, 1]. Empty = identity.
struct Normalization {
    std::vector<float> mean;
    std::vector<float> std;
};

struct Dataset {
    Tensor images;  ///< [N, C, H, W], binary32
    std::vector<std::int32_t> labels;
    std::size_t num_classes = 0;
    Split split = Split::Train;

    std::size_t size() const noexcept { return labels.size(); }
    Shape sample_shape() const;
    /// Samples [begin, end) as one batch tensor.
    Tensor batch(std::size_t begin, std::size_t end) const;
    /// Samples at `indices`, in that order.
    Tensor gather(std::span<const std::size_t> indices) const;
    Dataset subset(std::span<const std::size_t> indices) const;
};

enum class DatasetFormat { Idx, Cifar10, Cifar100 };
DatasetFormat dataset_format_from_string(std::string_view name);
std::string_view to_string(DatasetFormat format);

/// IDX: files = {images (magic 0x00000803), labels (magic 0x00000801)}.
/// CIFAR: files = one or more binary batch files. CIFAR-100 records carry
/// coarse and fine label bytes; the fine label is used.
struct DatasetSource {
    DatasetFormat format = DatasetFormat::Idx;
    std::vector<std::filesystem::path> files;
};

Dataset load_dataset(const DatasetSource& source, std::size_t num_classes, Split split,
                     const Normalization& norm = {});

/// Raw IDX writers, used to export generated datasets.
void write_idx_images(const std::filesystem::path& path, std::size_t count, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

}  // namespace resilinet
