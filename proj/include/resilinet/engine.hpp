#pragma once

#include "resilinet/model.hpp"
#include "resilinet/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace resilinet {

/// Inference uses batchnorm running statistics; training normalises with batch statistics.
enum class Phase { Inference, Training };

/// Batch statistics captured by a training-phase batchnorm forward.
struct BatchNormStats {
    std::vector<float> mean;
    std::vector<float> var;  ///< biased
    std::vector<float> inv_std;
    std::size_t count = 0;  ///< elements per channel (N * spatial)
};

/// Everything backward() needs from a forward pass.
struct ForwardCache {
    Phase phase = Phase::Inference;
    std::uint64_t fingerprint = 0;
    std::size_t batch_size = 0;
    /// inputs[i] is the input of layer i; inputs.back() is the model output.
    std::vector<Tensor> inputs;
    /// Flat input index of the selected element for every max-pool output.
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    std::vector<BatchNormStats> bn_stats;
};

/// Gradients mirroring ModelGraph::params. Non-trainable slots hold an empty tensor.
struct GradientSet {
    std::vector<std::vector<Tensor>> layers;

    static GradientSet zeros_like(const ModelGraph& model);
};

using LayerObserver = std::function<void(std::size_t layer, const Tensor& output)>;

/// Logits [N, num_classes] for a batch [N, ...input_shape].
///
/// Deterministic: the same parameter and input bits give the same output bits.
/// Non-finite parameters are executed, not rejected.
Tensor forward(const ModelGraph& model, const Tensor& batch);
Tensor forward(const ModelGraph& model, const Tensor& batch, ForwardCache& cache, Phase phase = Phase::Inference);
/// Inference forward that reports every layer's output to `observer`.
Tensor forward_observed(const ModelGraph& model, const Tensor& batch, const LayerObserver& observer);

/// Gradient of <output_grad, logits> with respect to every trainable parameter.
/// Throws if the cache was produced by a different model or parameter state.
GradientSet backward(const ModelGraph& model, const ForwardCache& cache, const Tensor& output_grad);

/// params -= lr * grads, elementwise in binary32.
void sgd_step(ModelGraph& model, const GradientSet& grads, float lr);

/// Momentum update of batchnorm running statistics from a training-phase cache.
void update_running_stats(ModelGraph& model, const ForwardCache& cache, float momentum = 0.1f);

struct ModelCost {
    std::uint64_t params = 0;
    std::uint64_t macs = 0;

    bool operator==(const ModelCost&) const = default;
};

/// Counted parameters (see is_counted_param) and per-sample multiply-accumulates of CONV/FC layers.
ModelCost count_params_macs(const ModelGraph& model);

}  // namespace resilinet
