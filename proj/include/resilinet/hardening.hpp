#pragma once

#include "resilinet/engine.hpp"
#include "resilinet/model.hpp"
#include "resilinet/model_io.hpp"
#include "resilinet/vulnerability.hpp"

#include <span>

namespace resilinet {

/// Detection-interval membership, lo <= v <= hi. Any NaN operand gives false.
constexpr bool in_interval(float v, float lo, float hi) noexcept { return lo <= v && v <= hi; }

/// Correction of one duplicated position (after NaN zeroing):
///   both in interval: equal bits -> a, otherwise min(a, b);
///   one in interval -> that one; none -> 0.
float edac_pair(float a, float b, float lo, float hi) noexcept;
/// Non-replicated position. AllChannels zeroes out-of-interval values; DuplicatedOnly passes them through.
float edac_single(float v, float lo, float hi, IntervalScope scope) noexcept;
/// Majority by bitwise equality, minimum when all three differ. NaN replicas count as 0.
float vote(float a, float b, float c) noexcept;

/// Maps a [N, physical, ...] feature map to [N, logical, ...]. Never throws on values
/// and never emits NaN. `lower`/`upper` are ignored in voter mode.
Tensor edac_apply(const Tensor& in, const EdacGeometry& geometry, std::span<const float> lower,
                  std::span<const float> upper);

/// Channels at or above the per-layer `ratio` of most vulnerable ones, plus every
/// channel of the logit layer.
HardeningPlan make_hardening_plan(const ModelGraph& model, const VulnerabilityReport& report, double ratio,
                                  HardeningMode mode, IntervalScope scope);

/// Replicates the planned channels bitwise and inserts a correction layer right after
/// each CONV/FC layer. Replicas follow the original channels: duplicate k of a layer
/// with C channels and d planned channels sits at C + j (j = rank of k among the
/// planned channels); triplicate copies sit at C + j and C + d + j.
/// `intervals` must cover every CONV/FC layer in duplicate mode and is unused by the voter.
ModelGraph harden_model(const ModelGraph& model, const HardeningPlan& plan, const IntervalTable& intervals);

/// Parameters held by detection intervals.
std::uint64_t interval_param_count(const ModelGraph& model);

struct Overhead {
    ModelCost baseline;
    ModelCost hardened;
    double params_percent = 0.0;
    double macs_percent = 0.0;
};

Overhead overhead_report(const ModelGraph& baseline, const ModelGraph& hardened);

}  // namespace resilinet
