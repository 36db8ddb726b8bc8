#include "resilinet/pruning.hpp"

#include "resilinet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace resilinet {

ScoreSource score_source_from_string(std::string_view name)
{
    if (name == "vulnerability") return ScoreSource::Vulnerability;
    if (name == "l1") return ScoreSource::L1;
    throw ConfigError(fmt::format("unknown score source '{}' (expected vulnerability|l1)", name));
}

std::string_view to_string(ScoreSource source) { return source == ScoreSource::L1 ? "l1" : "vulnerability"; }

VulnerabilityReport l1_scores(const ModelGraph& model)
{
    VulnerabilityReport report;
    for (const auto li : channel_layers(model)) {
        const auto& layer = model.layers[li];
        const std::size_t channels = output_channels(layer.spec);
        const Tensor& w = layer.params[slot::weight];
        const std::size_t row = w.size() / channels;
        auto& scores = report.layers[li];
        scores.assign(channels, 0.0);
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t e = 0; e < row; ++e) scores[c] += std::fabs(static_cast<double>(w[c * row + e]));
        }
    }
    return report;
}

namespace {

void check_ratio(double r, std::string_view what)
{
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError(fmt::format("{} pruning ratio {} is outside [0, 1)", what, r));
}

/// Keeps rows `keep` along dimension `axis` of a tensor whose dimension `axis` has `blocks`
/// blocks of `block` consecutive entries each (block = 1 except after Flatten).
Tensor keep_slices(const Tensor& t, std::size_t axis, const std::vector<std::size_t>& keep, std::size_t block)
{
    const auto& shape = t.shape();
    std::size_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
    std::size_t inner = 1;
    for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
    const std::size_t dim = shape[axis];
    Shape out_shape = shape;
    out_shape[axis] = keep.size() * block;
    Tensor out(out_shape);
    float* dst = out.raw();
    for (std::size_t o = 0; o < outer; ++o) {
        for (const auto k : keep) {
            const float* src = t.raw() + (o * dim + k * block) * inner;
            dst = std::copy_n(src, block * inner, dst);
        }
    }
    return out;
}

}  // namespace

std::vector<std::size_t> channels_to_remove(const ModelGraph& model, const VulnerabilityReport& scores,
                                            std::size_t layer, const PruneConfig& cfg)
{
    if (layer == logit_layer(model)) return {};
    const auto& spec = model.layers[layer].spec;
    const double ratio = spec.kind == LayerKind::Conv2D ? cfg.conv_ratio : cfg.fc_ratio;
    const std::size_t n = output_channels(spec);
    const auto it = scores.layers.find(layer);
    if (it == scores.layers.end() || it->second.size() != n) {
        throw ConfigError(fmt::format("scores do not cover the {} channels of layer {}", n, layer));
    }
    const auto& s = it->second;
    // Guard against 0.29 * 100 = 28.999999999999996 flooring to 28.
    const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    if (k >= n) throw ConfigError(fmt::format("pruning ratio {} would remove every channel of layer {}", ratio, layer));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s[a] != s[b]) return s[a] < s[b];
        return a > b;
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

ModelGraph prune(const ModelGraph& model, const VulnerabilityReport& scores, const PruneConfig& cfg)
{
    validate(model);
    check_ratio(cfg.conv_ratio, "conv");
    check_ratio(cfg.fc_ratio, "fc");
    for (const auto& layer : model.layers) {
        if (layer.spec.kind == LayerKind::Edac) throw ConfigError("pruning expects an unhardened model");
    }
    const auto layer_ids = channel_layers(model);
    std::map<std::size_t, std::vector<std::size_t>> removals;
    for (const auto li : layer_ids) removals[li] = channels_to_remove(model, scores, li, cfg);

    const auto shapes = infer_shapes(model);
    ModelGraph out = model;
    for (const auto li : layer_ids) {
        const auto& removed = removals[li];
        if (removed.empty()) continue;
        const std::size_t n = output_channels(out.layers[li].spec);
        std::vector<std::size_t> keep;
        for (std::size_t c = 0, r = 0; c < n; ++c) {
            if (r < removed.size() && removed[r] == c) {
                ++r;
            } else {
                keep.push_back(c);
            }
        }
        auto& layer = out.layers[li];
        for (auto& t : layer.params) t = keep_slices(t, 0, keep, 1);
        if (layer.spec.kind == LayerKind::Conv2D) {
            layer.spec.conv().out_channels = keep.size();
        } else {
            layer.spec.fc().out_features = keep.size();
        }
        // Walk forward to the consumer, trimming batchnorm entries on the way.
        std::size_t block = 1;
        for (std::size_t j = li + 1; j < out.layers.size(); ++j) {
            auto& next = out.layers[j];
            if (next.spec.kind == LayerKind::BatchNorm) {
                for (auto& t : next.params) t = keep_slices(t, 0, keep, 1);
                next.spec.bn().channels = keep.size();
            } else if (next.spec.kind == LayerKind::Flatten) {
                const auto& in = shapes[j - 1];
                block = shape_size(in) / in[0];
            } else if (next.spec.kind == LayerKind::Conv2D) {
                next.params[slot::weight] = keep_slices(next.params[slot::weight], 1, keep, 1);
                next.spec.conv().in_channels = keep.size();
                break;
            } else if (next.spec.kind == LayerKind::FullyConnected) {
                next.params[slot::weight] = keep_slices(next.params[slot::weight], 1, keep, block);
                next.spec.fc().in_features = keep.size() * block;
                break;
            }
        }
    }
    validate(out);
    return out;
}

ModelGraph fine_tune(const ModelGraph& model, const Dataset& train, const TrainConfig& cfg)
{
    ModelGraph out = model;
    train_sgd(out, train, cfg);
    return out;
}

}  // namespace resilinet
