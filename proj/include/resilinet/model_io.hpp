#pragma once

#include "resilinet/dataset.hpp"
#include "resilinet/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace resilinet {

/// Container layout, all integers little-endian:
///   "NNHM" | u32 version | u64 manifest bytes | manifest (JSON, UTF-8) | blob
/// The blob is the concatenation of every parameter tensor as binary32, in
/// manifest order; each manifest tensor entry carries its float offset and count.
inline constexpr std::uint32_t kContainerVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModelGraph& model);
ModelGraph deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelGraph& model, const std::filesystem::path& path);
ModelGraph load_model(const std::filesystem::path& path);

/// Detection interval per output channel of one CONV/FC layer.
struct ChannelIntervals {
    std::vector<float> lower;
    std::vector<float> upper;
};

/// Keyed by CONV/FC layer index of the profiled model.
struct IntervalTable {
    std::map<std::size_t, ChannelIntervals> layers;
};

/// CSV `layer_index,channel_index,lower,upper`; values printed with enough digits to round-trip.
void write_intervals_csv(const IntervalTable& table, const std::filesystem::path& path);
IntervalTable read_intervals_csv(const std::filesystem::path& path);

/// Top-1 accuracy in percent. Argmax ties (and NaN logits) resolve to the lowest class index.
double evaluate(const ModelGraph& model, const Dataset& ds);
std::size_t count_correct(const ModelGraph& model, const Dataset& ds);
std::size_t argmax_row(std::span<const float> logits);

/// Min/max of every raw CONV/FC output channel over the whole dataset (one clean pass).
IntervalTable profile_intervals(const ModelGraph& model, const Dataset& ds);

}  // namespace resilinet
