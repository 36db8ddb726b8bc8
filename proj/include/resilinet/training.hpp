#pragma once

#include "resilinet/dataset.hpp"
#include "resilinet/model.hpp"

#include <cstdint>
#include <functional>
#include <span>

namespace resilinet {

/// Mean softmax cross-entropy of `logits` [N, C] against `labels`; writes dLoss/dLogits
/// into `grad` when non-null. Computed in double, gradient stored as binary32.
double softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels, Tensor* grad = nullptr);

/// Mean cross-entropy over `ds` in inference mode.
double dataset_loss(const ModelGraph& model, const Dataset& ds);

struct TrainConfig {
    std::size_t epochs = 10;
    float lr = 0.001f;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

/// Called after every epoch with (epoch index, mean training loss of that epoch).
using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Plain minibatch SGD on softmax cross-entropy; no momentum or weight decay. The
/// sample order of each epoch is a Fisher-Yates shuffle from (seed, epoch). Batchnorm
/// layers normalise with batch statistics and update their running statistics.
/// Throws TrainingError when a batch loss is not finite.
void train_sgd(ModelGraph& model, const Dataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace resilinet
