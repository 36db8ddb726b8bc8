#include "resilinet/dataset.hpp"

#include "resilinet/errors.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <iterator>

namespace resilinet {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset)
{
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

void check_label(std::int32_t label, std::size_t num_classes, const std::filesystem::path& path, std::size_t index)
{
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
        throw FormatError(fmt::format("'{}': label {} of sample {} is out of range for {} classes", path.string(), label,
                                      index, num_classes));
    }
}

void normalize(Tensor& images, const Normalization& norm)
{
    if (norm.mean.empty() && norm.std.empty()) return;
    const std::size_t c = images.dim(1);
    if (norm.mean.size() != c || norm.std.size() != c) {
        throw ConfigError(fmt::format("normalization needs {} mean/std entries", c));
    }
    const std::size_t plane = images.dim(2) * images.dim(3);
    for (std::size_t s = 0; s < images.dim(0); ++s) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            float* p = images.raw() + (s * c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - norm.mean[ch]) / norm.std[ch];
        }
    }
}

Dataset load_idx(const DatasetSource& src, std::size_t num_classes, Split split)
{
    if (src.files.size() != 2) throw ConfigError("IDX datasets need exactly two files: images and labels");
    const auto& img_path = src.files[0];
    const auto& lbl_path = src.files[1];
    const auto img = read_file(img_path);
    const auto lbl = read_file(lbl_path);
    if (img.size() < 16 || read_be32(img, 0) != kIdxImageMagic) {
        throw FormatError(fmt::format("'{}': magic number mismatch (expected 0x{:08x})", img_path.string(), kIdxImageMagic));
    }
    if (lbl.size() < 8 || read_be32(lbl, 0) != kIdxLabelMagic) {
        throw FormatError(fmt::format("'{}': magic number mismatch (expected 0x{:08x})", lbl_path.string(), kIdxLabelMagic));
    }
    const std::size_t n = read_be32(img, 4);
    const std::size_t rows = read_be32(img, 8);
    const std::size_t cols = read_be32(img, 12);
    if (n == 0 || rows == 0 || cols == 0) throw FormatError(fmt::format("'{}': empty image set", img_path.string()));
    if (img.size() != 16 + n * rows * cols) {
        throw FormatError(fmt::format("'{}': expected {} pixel bytes", img_path.string(), n * rows * cols));
    }
    if (read_be32(lbl, 4) != n || lbl.size() != 8 + n) {
        throw FormatError(fmt::format("'{}': label count does not match {} images", lbl_path.string(), n));
    }
    Dataset ds;
    ds.num_classes = num_classes;
    ds.split = split;
    ds.images = Tensor({n, 1, rows, cols});
    for (std::size_t i = 0; i < n * rows * cols; ++i) ds.images[i] = static_cast<float>(img[16 + i]) / 255.0f;
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = lbl[8 + i];
        check_label(ds.labels[i], num_classes, lbl_path, i);
    }
    return ds;
}

Dataset load_cifar(const DatasetSource& src, std::size_t num_classes, Split split)
{
    if (src.files.empty()) throw ConfigError("CIFAR datasets need at least one batch file");
    const std::size_t label_bytes = src.format == DatasetFormat::Cifar100 ? 2 : 1;
    const std::size_t record = label_bytes + kCifarPixels;
    std::vector<std::uint8_t> pixels;
    std::vector<std::int32_t> labels;
    for (const auto& path : src.files) {
        const auto bytes = read_file(path);
        if (bytes.empty() || bytes.size() % record != 0) {
            throw FormatError(fmt::format("'{}': size {} is not a multiple of the {}-byte record", path.string(),
                                          bytes.size(), record));
        }
        for (std::size_t off = 0; off < bytes.size(); off += record) {
            const std::int32_t label = bytes[off + label_bytes - 1];
            check_label(label, num_classes, path, labels.size());
            labels.push_back(label);
            pixels.insert(pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(off + label_bytes),
                          bytes.begin() + static_cast<std::ptrdiff_t>(off + record));
        }
    }
    Dataset ds;
    ds.num_classes = num_classes;
    ds.split = split;
    ds.images = Tensor({labels.size(), 3, kCifarSide, kCifarSide});
    for (std::size_t i = 0; i < pixels.size(); ++i) ds.images[i] = static_cast<float>(pixels[i]) / 255.0f;
    ds.labels = std::move(labels);
    return ds;
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Shape Dataset::sample_shape() const { return Shape(images.shape().begin() + 1, images.shape().end()); }

Tensor Dataset::batch(std::size_t begin, std::size_t end) const
{
    if (begin >= end || end > size()) throw ShapeError(fmt::format("batch [{}, {}) out of range", begin, end));
    Shape shape = images.shape();
    shape[0] = end - begin;
    const std::size_t stride = shape_size(sample_shape());
    std::vector<float> data(images.data().begin() + static_cast<std::ptrdiff_t>(begin * stride),
                            images.data().begin() + static_cast<std::ptrdiff_t>(end * stride));
    return Tensor(std::move(shape), std::move(data));
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const
{
    Shape shape = images.shape();
    shape[0] = indices.size();
    const std::size_t stride = shape_size(sample_shape());
    Tensor out(shape);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw ShapeError(fmt::format("sample index {} out of range", indices[i]));
        std::copy_n(images.raw() + indices[i] * stride, stride, out.raw() + i * stride);
    }
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out;
    out.images = gather(indices);
    out.num_classes = num_classes;
    out.split = split;
    out.labels.reserve(indices.size());
    for (const auto i : indices) out.labels.push_back(labels[i]);
    return out;
}

DatasetFormat dataset_format_from_string(std::string_view name)
{
    if (name == "idx") return DatasetFormat::Idx;
    if (name == "cifar10" || name == "cifar-binary" || name == "cifar-10") return DatasetFormat::Cifar10;
    if (name == "cifar100" || name == "cifar-100") return DatasetFormat::Cifar100;
    throw ConfigError(fmt::format("unknown dataset format '{}' (expected idx|cifar10|cifar100)", name));
}

std::string_view to_string(DatasetFormat format)
{
    switch (format) {
    case DatasetFormat::Idx: return "idx";
    case DatasetFormat::Cifar10: return "cifar10";
    case DatasetFormat::Cifar100: return "cifar100";
    }
    return "?";
}

Dataset load_dataset(const DatasetSource& source, std::size_t num_classes, Split split, const Normalization& norm)
{
    if (num_classes == 0) throw ConfigError("dataset needs a positive class count");
    Dataset ds = source.format == DatasetFormat::Idx ? load_idx(source, num_classes, split)
                                                     : load_cifar(source, num_classes, split);
    normalize(ds.images, norm);
    return ds;
}

void write_idx_images(const std::filesystem::path& path, std::size_t count, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels)
{
    if (pixels.size() != count * rows * cols) throw ShapeError("pixel buffer does not match IDX dimensions");
    std::vector<std::uint8_t> out;
    out.reserve(16 + pixels.size());
    put_be32(out, kIdxImageMagic);
    put_be32(out, static_cast<std::uint32_t>(count));
    put_be32(out, static_cast<std::uint32_t>(rows));
    put_be32(out, static_cast<std::uint32_t>(cols));
    out.insert(out.end(), pixels.begin(), pixels.end());
    write_file(path, out);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels)
{
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    put_be32(out, kIdxLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    write_file(path, out);
}

}  // namespace resilinet
