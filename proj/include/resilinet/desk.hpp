#pragma once

#include "resilinet/dataset.hpp"
#include "resilinet/model.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace resilinet {

/// Seven-segment digit glyphs rendered with random placement, stroke and noise.
/// Small enough to train a useful CNN in seconds on one core.
struct GlyphConfig {
    std::size_t count = 1000;
    std::size_t side = 16;
    std::uint64_t seed = 0;
    double segment_dropout = 0.08;  ///< chance to lose each lit segment
    double spurious_segment = 0.10; ///< chance to light one extra segment
    double noise_sigma = 0.15;
};

/// Raw bytes as they would appear in an IDX file pair.
struct GlyphSet {
    std::size_t count = 0;
    std::size_t side = 0;
    std::vector<std::uint8_t> pixels;  ///< count * side * side, row-major
    std::vector<std::uint8_t> labels;

    Dataset to_dataset(Split split) const;
    void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels) const;
};

GlyphSet make_glyphs(const GlyphConfig& cfg);

struct DeskCnnConfig {
    std::size_t in_channels = 1;
    std::size_t side = 16;
    std::size_t conv1 = 8;
    std::size_t conv2 = 16;
    std::size_t hidden = 64;
    std::size_t classes = 10;
    bool batch_norm = true;
};

/// conv3x3-[bn]-relu-pool2, conv3x3-[bn]-relu-pool2, flatten, fc-relu, fc (logits).
/// Initialised with init_uniform_fan_in.
ModelGraph make_desk_cnn(const DeskCnnConfig& cfg, std::uint64_t seed);

/// CONV/FC weights ~ U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), biases ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
/// one stream per layer. Batchnorm layers are reset to identity statistics.
void init_uniform_fan_in(ModelGraph& model, std::uint64_t seed);

}  // namespace resilinet
