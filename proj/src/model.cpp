#include "resilinet/model.hpp"

#include "resilinet/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <type_traits>
#include <fmt/format.h>

namespace resilinet {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 7> kKindNames{{
    {LayerKind::Conv2D, "conv2d"},
    {LayerKind::FullyConnected, "fully_connected"},
    {LayerKind::BatchNorm, "batch_norm"},
    {LayerKind::ReLU, "relu"},
    {LayerKind::MaxPool, "max_pool"},
    {LayerKind::Flatten, "flatten"},
    {LayerKind::Edac, "edac"},
}};

std::string describe(std::size_t index, const LayerSpec& spec)
{
    return fmt::format("layer {} ({})", index, to_string(spec.kind));
}

}  // namespace

std::string_view to_string(LayerKind kind)
{
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

LayerKind layer_kind_from_string(std::string_view name)
{
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    throw FormatError(fmt::format("unknown layer kind '{}'", name));
}

std::string_view to_string(HardeningMode mode) { return mode == HardeningMode::Duplicate ? "duplicate" : "triplicate"; }

std::string_view to_string(IntervalScope scope)
{
    return scope == IntervalScope::AllChannels ? "all-channels" : "duplicated-only";
}

HardeningMode hardening_mode_from_string(std::string_view name)
{
    if (name == "duplicate") return HardeningMode::Duplicate;
    if (name == "triplicate") return HardeningMode::Triplicate;
    throw FormatError(fmt::format("unknown hardening mode '{}' (expected duplicate|triplicate)", name));
}

IntervalScope interval_scope_from_string(std::string_view name)
{
    if (name == "all-channels") return IntervalScope::AllChannels;
    if (name == "duplicated-only") return IntervalScope::DuplicatedOnly;
    throw FormatError(fmt::format("unknown interval scope '{}' (expected all-channels|duplicated-only)", name));
}

LayerSpec LayerSpec::conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                            std::size_t padding, bool bias)
{
    return {LayerKind::Conv2D, Conv2DGeometry{in_channels, out_channels, kernel, kernel, stride, padding}, bias};
}

LayerSpec LayerSpec::fully_connected(std::size_t in_features, std::size_t out_features, bool bias)
{
    return {LayerKind::FullyConnected, FullyConnectedGeometry{in_features, out_features}, bias};
}

LayerSpec LayerSpec::batch_norm(std::size_t channels, float eps)
{
    return {LayerKind::BatchNorm, BatchNormGeometry{channels, eps}, false};
}

LayerSpec LayerSpec::relu() { return {LayerKind::ReLU, std::monostate{}, false}; }

LayerSpec LayerSpec::max_pool(std::size_t window, std::size_t stride)
{
    return {LayerKind::MaxPool, MaxPoolGeometry{window, stride}, false};
}

LayerSpec LayerSpec::flatten() { return {LayerKind::Flatten, std::monostate{}, false}; }

LayerSpec LayerSpec::edac(EdacGeometry geometry) { return {LayerKind::Edac, std::move(geometry), false}; }

bool operator==(const LayerSpec& a, const LayerSpec& b)
{
    return a.kind == b.kind && a.has_bias == b.has_bias && a.geometry == b.geometry;
}

bool is_channel_layer(LayerKind kind) noexcept
{
    return kind == LayerKind::Conv2D || kind == LayerKind::FullyConnected;
}

std::vector<std::size_t> channel_layers(const ModelGraph& model)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (is_channel_layer(model.layers[i].spec.kind)) out.push_back(i);
    }
    return out;
}

std::size_t logit_layer(const ModelGraph& model)
{
    const auto layers = channel_layers(model);
    if (layers.empty()) throw ShapeError("model has no CONV/FC layer producing logits");
    return layers.back();
}

std::size_t output_channels(const LayerSpec& spec)
{
    switch (spec.kind) {
    case LayerKind::Conv2D: return spec.conv().out_channels;
    case LayerKind::FullyConnected: return spec.fc().out_features;
    default: throw ShapeError(fmt::format("{} layer has no output channels", to_string(spec.kind)));
    }
}

std::size_t param_slot_count(const LayerSpec& spec)
{
    switch (spec.kind) {
    case LayerKind::Conv2D:
    case LayerKind::FullyConnected: return spec.has_bias ? 2 : 1;
    case LayerKind::BatchNorm: return 4;
    case LayerKind::Edac: return spec.edac().has_intervals() ? 2 : 0;
    default: return 0;
    }
}

std::string_view param_name(LayerKind kind, std::size_t s)
{
    switch (kind) {
    case LayerKind::Conv2D:
    case LayerKind::FullyConnected: return s == slot::weight ? "weight" : "bias";
    case LayerKind::BatchNorm: {
        constexpr std::array<std::string_view, 4> names{"gamma", "beta", "running_mean", "running_var"};
        return names.at(s);
    }
    case LayerKind::Edac: return s == slot::lower ? "lower" : "upper";
    default: return "?";
    }
}

Shape param_shape(const LayerSpec& spec, std::size_t s)
{
    switch (spec.kind) {
    case LayerKind::Conv2D: {
        const auto& g = spec.conv();
        if (s == slot::weight) return {g.out_channels, g.in_channels, g.kernel_h, g.kernel_w};
        return {g.out_channels};
    }
    case LayerKind::FullyConnected: {
        const auto& g = spec.fc();
        if (s == slot::weight) return {g.out_features, g.in_features};
        return {g.out_features};
    }
    case LayerKind::BatchNorm: return {spec.bn().channels};
    case LayerKind::Edac: return {spec.edac().logical_channels()};
    default: throw ShapeError(fmt::format("{} layer has no parameters", to_string(spec.kind)));
    }
}

bool is_trainable(LayerKind kind, std::size_t s) noexcept
{
    switch (kind) {
    case LayerKind::Conv2D:
    case LayerKind::FullyConnected: return true;
    case LayerKind::BatchNorm: return s == slot::gamma || s == slot::beta;
    default: return false;
    }
}

bool is_counted_param(LayerKind kind, std::size_t s) noexcept
{
    return is_trainable(kind, s) || kind == LayerKind::Edac;
}

std::vector<Tensor> make_params(const LayerSpec& spec)
{
    std::vector<Tensor> params;
    for (std::size_t s = 0; s < param_slot_count(spec); ++s) params.emplace_back(param_shape(spec, s));
    if (spec.kind == LayerKind::BatchNorm) {
        for (auto& v : params[slot::gamma].data()) v = 1.0f;
        for (auto& v : params[slot::running_var].data()) v = 1.0f;
    }
    return params;
}

std::vector<Shape> infer_shapes(const ModelGraph& model)
{
    if (model.input_shape.empty()) throw ShapeError("model has no input shape");
    std::vector<Shape> shapes;
    shapes.reserve(model.layers.size());
    Shape cur = model.input_shape;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& spec = model.layers[i].spec;
        const auto fail = [&](const std::string& what) {
            return ShapeError(fmt::format("{}: {} (input shape {})", describe(i, spec), what, shape_to_string(cur)));
        };
        switch (spec.kind) {
        case LayerKind::Conv2D: {
            const auto& g = spec.conv();
            if (g.in_channels == 0 || g.out_channels == 0) throw fail("channel counts must be positive");
            if (g.stride == 0 || g.kernel_h == 0 || g.kernel_w == 0) throw fail("kernel and stride must be positive");
            if (cur.size() != 3) throw fail("expects a [C, H, W] input");
            if (cur[0] != g.in_channels) throw fail(fmt::format("expects {} input channels", g.in_channels));
            const std::size_t hp = cur[1] + 2 * g.padding;
            const std::size_t wp = cur[2] + 2 * g.padding;
            if (hp < g.kernel_h || wp < g.kernel_w) throw fail("kernel larger than padded input");
            cur = {g.out_channels, (hp - g.kernel_h) / g.stride + 1, (wp - g.kernel_w) / g.stride + 1};
            break;
        }
        case LayerKind::FullyConnected: {
            const auto& g = spec.fc();
            if (g.in_features == 0 || g.out_features == 0) throw fail("feature counts must be positive");
            if (cur.size() != 1 || cur[0] != g.in_features) {
                throw fail(fmt::format("expects a [{}] input", g.in_features));
            }
            cur = {g.out_features};
            break;
        }
        case LayerKind::BatchNorm:
            if (cur[0] != spec.bn().channels) throw fail(fmt::format("expects {} channels", spec.bn().channels));
            break;
        case LayerKind::ReLU: break;
        case LayerKind::MaxPool: {
            const auto& g = spec.pool();
            if (cur.size() != 3) throw fail("expects a [C, H, W] input");
            if (g.window == 0 || g.stride == 0) throw fail("window and stride must be positive");
            if (cur[1] < g.window || cur[2] < g.window) throw fail("window larger than input");
            cur = {cur[0], (cur[1] - g.window) / g.stride + 1, (cur[2] - g.window) / g.stride + 1};
            break;
        }
        case LayerKind::Flatten: cur = {shape_size(cur)}; break;
        case LayerKind::Edac: {
            const auto& g = spec.edac();
            if (cur[0] != g.physical_channels) {
                throw fail(fmt::format("expects {} physical channels", g.physical_channels));
            }
            std::vector<int> seen(g.physical_channels, 0);
            for (const auto& group : g.groups) {
                const std::size_t max_size = g.mode == HardeningMode::Duplicate ? 2 : 3;
                if (group.empty() || group.size() > max_size || (group.size() == 2 && max_size == 3)) {
                    throw fail(fmt::format("replica group of size {} is invalid in {} mode", group.size(),
                                           to_string(g.mode)));
                }
                for (const auto p : group) {
                    if (p >= g.physical_channels || seen[p]++) throw fail("replica groups overlap or exceed range");
                }
            }
            if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw fail("physical channel not in any group");
            cur[0] = g.logical_channels();
            break;
        }
        }
        shapes.push_back(cur);
    }
    return shapes;
}

void validate(const ModelGraph& model)
{
    const auto shapes = infer_shapes(model);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        const auto slots = param_slot_count(layer.spec);
        if (layer.params.size() != slots) {
            throw ShapeError(fmt::format("{}: expected {} parameter tensors, found {}", describe(i, layer.spec), slots,
                                         layer.params.size()));
        }
        for (std::size_t s = 0; s < slots; ++s) {
            const auto want = param_shape(layer.spec, s);
            if (layer.params[s].shape() != want) {
                throw ShapeError(fmt::format("{}: parameter '{}' has shape {}, expected {}", describe(i, layer.spec),
                                             param_name(layer.spec.kind, s), shape_to_string(layer.params[s].shape()),
                                             shape_to_string(want)));
            }
        }
    }
    if (model.num_classes == 0) throw ShapeError("model declares zero classes");
    const Shape& out = shapes.empty() ? model.input_shape : shapes.back();
    if (out.size() != 1 || out[0] != model.num_classes) {
        throw ShapeError(fmt::format("model output shape {} does not match {} classes", shape_to_string(out),
                                     model.num_classes));
    }
}

bool bitwise_equal(const ModelGraph& a, const ModelGraph& b)
{
    if (a.input_shape != b.input_shape || a.num_classes != b.num_classes || a.layers.size() != b.layers.size() ||
        a.hardening != b.hardening) {
        return false;
    }
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const auto& la = a.layers[i];
        const auto& lb = b.layers[i];
        if (!(la.spec == lb.spec) || la.params.size() != lb.params.size()) return false;
        for (std::size_t s = 0; s < la.params.size(); ++s) {
            if (!la.params[s].bitwise_equal(lb.params[s])) return false;
        }
    }
    return true;
}

namespace {

struct Fnv1a {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void add(std::uint64_t v)
    {
        h ^= v;
        h *= 0x100000001b3ULL;
    }
};

}  // namespace

std::uint64_t model_fingerprint(const ModelGraph& model)
{
    Fnv1a f;
    for (const auto d : model.input_shape) f.add(d);
    f.add(model.num_classes);
    for (const auto& layer : model.layers) {
        f.add(static_cast<std::uint64_t>(layer.spec.kind));
        f.add(layer.spec.has_bias);
        std::visit(
            [&f](const auto& g) {
                using G = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<G, Conv2DGeometry>) {
                    for (const auto v : {g.in_channels, g.out_channels, g.kernel_h, g.kernel_w, g.stride, g.padding}) f.add(v);
                } else if constexpr (std::is_same_v<G, FullyConnectedGeometry>) {
                    f.add(g.in_features);
                    f.add(g.out_features);
                } else if constexpr (std::is_same_v<G, BatchNormGeometry>) {
                    f.add(g.channels);
                    f.add(std::bit_cast<std::uint32_t>(g.eps));
                } else if constexpr (std::is_same_v<G, MaxPoolGeometry>) {
                    f.add(g.window);
                    f.add(g.stride);
                } else if constexpr (std::is_same_v<G, EdacGeometry>) {
                    f.add(static_cast<std::uint64_t>(g.mode));
                    f.add(static_cast<std::uint64_t>(g.scope));
                    for (const auto& group : g.groups) {
                        f.add(group.size());
                        for (const auto p : group) f.add(p);
                    }
                }
            },
            layer.spec.geometry);
        for (const auto& t : layer.params) {
            for (const auto d : t.shape()) f.add(d);
            for (const float v : t.data()) f.add(std::bit_cast<std::uint32_t>(v));
        }
    }
    return f.h;
}

}  // namespace resilinet
