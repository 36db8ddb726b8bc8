#pragma once

#include "resilinet/dataset.hpp"
#include "resilinet/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace resilinet {

/// Toggles bit `bit` (0 = mantissa LSB, 31 = sign) of a binary32 value. Throws ConfigError for bit > 31.
float bitflip(float value, unsigned bit);

/// One planned flip. `element` indexes the layer's parameter tensors concatenated in slot order.
struct BitFlip {
    std::uint32_t layer = 0;
    std::uint64_t element = 0;
    std::uint8_t bit = 0;

    auto operator<=>(const BitFlip&) const = default;
};

using FlipPlan = std::vector<BitFlip>;

/// Stored binary32 elements of a layer: every parameter tensor, including batchnorm
/// running statistics and detection intervals.
std::uint64_t layer_param_count(const Layer& layer);

/// round-half-even(ber * params * 32). Throws ConfigError for ber outside (0, 1].
std::uint64_t flip_count(double ber, std::uint64_t params);

/// Per layer, flip_count(ber, P) distinct bits drawn uniformly from the layer's P * 32 bits.
/// Each layer draws from its own stream seeded by (seed, trial, layer); the stream does
/// not depend on `ber`, so the flips planned at a lower BER are a subset of those at a
/// higher one. Returned in ascending (layer, element, bit) order.
FlipPlan plan_flips(const ModelGraph& model, double ber, std::uint64_t seed, std::uint64_t trial);

/// Copy of `model` with the planned bits toggled. Throws ConfigError on out-of-range entries.
ModelGraph apply_flips(const ModelGraph& model, const FlipPlan& plan);
/// In-place variant; applying the same plan twice restores the original bits.
void apply_flips_inplace(ModelGraph& model, const FlipPlan& plan);

struct CampaignConfig {
    std::vector<double> bers;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::size_t workers = 0;  ///< 0 = automatic; never affects results
};

struct TrialResult {
    double ber = 0.0;
    std::size_t trial = 0;
    double accuracy = 0.0;  ///< percent
    double drop = 0.0;      ///< clean accuracy - accuracy, percentage points
};

struct BerSummary {
    double ber = 0.0;
    double mean_accuracy = 0.0;
    double mean_drop = 0.0;
    std::size_t trials = 0;
};

struct CampaignResult {
    double clean_accuracy = 0.0;
    std::uint64_t seed = 0;
    std::vector<TrialResult> trials;  ///< ordered by (ber index, trial)
    std::vector<BerSummary> summary;  ///< one row per configured BER, in config order

    const BerSummary& at(double ber) const;
};

/// For every BER and trial: plan, corrupt a private copy, evaluate on `ds`.
/// Deterministic in (config minus workers, model bits, dataset bits).
CampaignResult run_campaign(const ModelGraph& model, const Dataset& ds, const CampaignConfig& cfg);

/// Writes `<prefix>_trials.csv` (ber,trial,accuracy,drop) and `<prefix>_summary.csv`
/// (ber,mean_accuracy,mean_drop,trials,seed) into `dir`.
void write_campaign_csv(const CampaignResult& result, const std::filesystem::path& dir, const std::string& prefix);

}  // namespace resilinet
