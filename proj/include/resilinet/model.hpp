#pragma once

#include "resilinet/tensor.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace resilinet {

enum class LayerKind { Conv2D, FullyConnected, BatchNorm, ReLU, MaxPool, Flatten, Edac };

std::string_view to_string(LayerKind kind);
/// Throws FormatError("unknown layer kind ...").
LayerKind layer_kind_from_string(std::string_view name);

/// duplicate+EDAC or triplicate+voter.
enum class HardeningMode { Duplicate, Triplicate };

/// Whether non-replicated channels are range-checked against their detection interval.
enum class IntervalScope { AllChannels, DuplicatedOnly };

std::string_view to_string(HardeningMode mode);
std::string_view to_string(IntervalScope scope);
HardeningMode hardening_mode_from_string(std::string_view name);
IntervalScope interval_scope_from_string(std::string_view name);

struct Conv2DGeometry {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;

    bool operator==(const Conv2DGeometry&) const = default;
};

struct FullyConnectedGeometry {
    std::size_t in_features = 0;
    std::size_t out_features = 0;

    bool operator==(const FullyConnectedGeometry&) const = default;
};

struct BatchNormGeometry {
    std::size_t channels = 0;
    float eps = 1e-5f;

    bool operator==(const BatchNormGeometry&) const = default;
};

struct MaxPoolGeometry {
    std::size_t window = 2;
    std::size_t stride = 2;

    bool operator==(const MaxPoolGeometry&) const = default;
};

/// Correction layer placed after a CONV/FC layer whose output channels were replicated.
///
/// `groups[k]` lists the physical input channels that are replicas of logical
/// output channel k (1, 2 or 3 entries). Groups are disjoint and together cover
/// every physical channel.
struct EdacGeometry {
    HardeningMode mode = HardeningMode::Duplicate;
    IntervalScope scope = IntervalScope::AllChannels;
    std::size_t physical_channels = 0;
    std::vector<std::vector<std::size_t>> groups;

    std::size_t logical_channels() const noexcept { return groups.size(); }
    /// Duplicate mode stores one [lower, upper] pair per logical channel; the voter stores nothing.
    bool has_intervals() const noexcept { return mode == HardeningMode::Duplicate; }

    bool operator==(const EdacGeometry&) const = default;
};

using Geometry =
    std::variant<std::monostate, Conv2DGeometry, FullyConnectedGeometry, BatchNormGeometry, MaxPoolGeometry, EdacGeometry>;

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    Geometry geometry;
    bool has_bias = false;

    static LayerSpec conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride = 1,
                            std::size_t padding = 0, bool bias = true);
    static LayerSpec fully_connected(std::size_t in_features, std::size_t out_features, bool bias = true);
    static LayerSpec batch_norm(std::size_t channels, float eps = 1e-5f);
    static LayerSpec relu();
    static LayerSpec max_pool(std::size_t window, std::size_t stride);
    static LayerSpec flatten();
    static LayerSpec edac(EdacGeometry geometry);

    const Conv2DGeometry& conv() const { return std::get<Conv2DGeometry>(geometry); }
    const FullyConnectedGeometry& fc() const { return std::get<FullyConnectedGeometry>(geometry); }
    const BatchNormGeometry& bn() const { return std::get<BatchNormGeometry>(geometry); }
    const MaxPoolGeometry& pool() const { return std::get<MaxPoolGeometry>(geometry); }
    const EdacGeometry& edac() const { return std::get<EdacGeometry>(geometry); }
    Conv2DGeometry& conv() { return std::get<Conv2DGeometry>(geometry); }
    FullyConnectedGeometry& fc() { return std::get<FullyConnectedGeometry>(geometry); }
    BatchNormGeometry& bn() { return std::get<BatchNormGeometry>(geometry); }
    EdacGeometry& edac() { return std::get<EdacGeometry>(geometry); }
};

/// Parameter slot indices inside Layer::params.
namespace slot {
inline constexpr std::size_t weight = 0;
inline constexpr std::size_t bias = 1;
inline constexpr std::size_t gamma = 0;
inline constexpr std::size_t beta = 1;
inline constexpr std::size_t running_mean = 2;
inline constexpr std::size_t running_var = 3;
inline constexpr std::size_t lower = 0;
inline constexpr std::size_t upper = 1;
}  // namespace slot

struct Layer {
    LayerSpec spec;
    std::vector<Tensor> params;
};

/// Output channel of a CONV layer (a filter) or an FC layer (a neuron).
struct ChannelId {
    std::size_t layer = 0;
    std::size_t channel = 0;

    auto operator<=>(const ChannelId&) const = default;
};

/// Which channels of a baseline model get replicated, and how. Layer indices refer to the baseline.
struct HardeningPlan {
    HardeningMode mode = HardeningMode::Duplicate;
    IntervalScope scope = IntervalScope::AllChannels;
    std::vector<ChannelId> channels;

    bool operator==(const HardeningPlan&) const = default;
};

struct ModelGraph {
    /// Per-sample input shape: [C, H, W] for image models, [F] for vector models.
    Shape input_shape;
    std::size_t num_classes = 0;
    std::vector<Layer> layers;
    /// Present on models produced by harden_model.
    std::optional<HardeningPlan> hardening;
};

/// CONV and FC layers: the ones that own channels.
bool is_channel_layer(LayerKind kind) noexcept;
std::vector<std::size_t> channel_layers(const ModelGraph& model);
/// Index of the logit-producing CONV/FC layer (the last one). Throws if none.
std::size_t logit_layer(const ModelGraph& model);
/// Physical output channel count of a CONV/FC layer.
std::size_t output_channels(const LayerSpec& spec);

std::size_t param_slot_count(const LayerSpec& spec);
std::string_view param_name(LayerKind kind, std::size_t slot);
Shape param_shape(const LayerSpec& spec, std::size_t slot);
/// Receives gradients during training (weights, biases, batchnorm affine terms).
bool is_trainable(LayerKind kind, std::size_t slot) noexcept;
/// Contributes to the parameter count: trainable tensors plus EDAC detection intervals.
/// Batchnorm running statistics are state, not parameters.
bool is_counted_param(LayerKind kind, std::size_t slot) noexcept;
/// Zero-filled parameter tensors matching the spec.
std::vector<Tensor> make_params(const LayerSpec& spec);

/// Per-sample output shape after every layer (index i = output of layer i).
/// Throws ShapeError naming the offending layer.
std::vector<Shape> infer_shapes(const ModelGraph& model);
/// Shape algebra plus parameter-shape and class-count checks.
void validate(const ModelGraph& model);

/// Same structure and bit-identical parameters.
bool bitwise_equal(const ModelGraph& a, const ModelGraph& b);
bool operator==(const LayerSpec& a, const LayerSpec& b);

/// 64-bit digest of structure and parameter bits. Used to detect stale forward caches.
std::uint64_t model_fingerprint(const ModelGraph& model);

}  // namespace resilinet
