#pragma once

#include "resilinet/dataset.hpp"
#include "resilinet/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

namespace resilinet {

/// One non-negative score per output channel of every CONV/FC layer.
struct VulnerabilityReport {
    /// Keyed by layer index; entry c scores output channel c.
    std::map<std::size_t, std::vector<double>> layers;
    std::size_t samples = 0;
    std::uint64_t seed = 0;

    double score(ChannelId id) const;
};

/// `count` samples drawn without replacement from `ds` with a fixed seed, kept in
/// ascending index order. The whole set is returned when count >= ds.size().
Dataset calibration_subset(const Dataset& ds, std::size_t count, std::uint64_t seed);

/// Gradient-based channel vulnerability, averaged over the inputs of `calib`.
///
/// For each input with top class t and every other class i, the squared gradient of
/// (Z_i - Z_t) with respect to the channel's weights and bias is summed and divided by
/// (Z_i - Z_t)^2. Terms whose squared margin is below 1e-12 are skipped.
/// Deterministic for any worker count.
VulnerabilityReport channel_vulnerability(const ModelGraph& model, const Dataset& calib, std::size_t workers = 0);

enum class Direction { Most, Least };

/// Per layer, ceil(ratio * n) channels ordered by score (descending for Most, ascending
/// for Least), ties toward the lower channel index. Returned sorted by (layer, channel).
std::vector<ChannelId> select_channels(const VulnerabilityReport& report, double ratio, Direction direction);

/// CSV `layer_index,channel_index,score`.
void write_vulnerability_csv(const VulnerabilityReport& report, const std::filesystem::path& path);
VulnerabilityReport read_vulnerability_csv(const std::filesystem::path& path);

}  // namespace resilinet
