#pragma once

#include "resilinet/dataset.hpp"
#include "resilinet/model.hpp"
#include "resilinet/training.hpp"
#include "resilinet/vulnerability.hpp"

namespace resilinet {

enum class ScoreSource { Vulnerability, L1 };
ScoreSource score_source_from_string(std::string_view name);
std::string_view to_string(ScoreSource source);

struct PruneConfig {
    double conv_ratio = 0.0;  ///< fraction of each Conv2D layer's channels removed
    double fc_ratio = 0.0;    ///< fraction of each non-logit FC layer's neurons removed
};

/// Sum of |w| over each channel's weights (bias excluded), in the report layout.
VulnerabilityReport l1_scores(const ModelGraph& model);

/// Output channels removed from layer `layer` under `cfg`: the floor(ratio * n) lowest
/// scores, ties removing the higher index first. Sorted ascending.
std::vector<std::size_t> channels_to_remove(const ModelGraph& model, const VulnerabilityReport& scores,
                                            std::size_t layer, const PruneConfig& cfg);

/// Structured pruning. Removed channels take their bias and batchnorm entries and the
/// matching input slices of the next CONV/FC layer (through Flatten as spatial blocks).
/// The logit layer is never pruned. Throws ConfigError for ratios outside [0, 1) or a
/// ratio that would leave a layer empty.
ModelGraph prune(const ModelGraph& model, const VulnerabilityReport& scores, const PruneConfig& cfg);

/// SGD fine-tuning (see train_sgd); returns the tuned copy.
ModelGraph fine_tune(const ModelGraph& model, const Dataset& train, const TrainConfig& cfg);

}  // namespace resilinet
