#include "resilinet/hardening.hpp"

#include "resilinet/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fmt/format.h>
#include <set>

namespace resilinet {

namespace {

float zero_nan(float v) noexcept { return std::isnan(v) ? 0.0f : v; }

bool same_bits(float a, float b) noexcept { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); }

}  // namespace

float edac_pair(float a, float b, float lo, float hi) noexcept
{
    a = zero_nan(a);
    b = zero_nan(b);
    const bool a_in = in_interval(a, lo, hi);
    const bool b_in = in_interval(b, lo, hi);
    if (a_in && b_in) {
        if (same_bits(a, b)) return a;
        return b < a ? b : a;
    }
    if (a_in) return a;
    if (b_in) return b;
    return 0.0f;
}

float edac_single(float v, float lo, float hi, IntervalScope scope) noexcept
{
    v = zero_nan(v);
    if (scope == IntervalScope::DuplicatedOnly) return v;
    return in_interval(v, lo, hi) ? v : 0.0f;
}

float vote(float a, float b, float c) noexcept
{
    a = zero_nan(a);
    b = zero_nan(b);
    c = zero_nan(c);
    if (same_bits(a, b) || same_bits(a, c)) return a;
    if (same_bits(b, c)) return b;
    return std::min({a, b, c});
}

Tensor edac_apply(const Tensor& in, const EdacGeometry& geometry, std::span<const float> lower,
                  std::span<const float> upper)
{
    if (in.rank() < 2 || in.dim(1) != geometry.physical_channels) {
        throw ShapeError(fmt::format("correction layer expects {} input channels, got shape {}",
                                     geometry.physical_channels, shape_to_string(in.shape())));
    }
    const std::size_t logical = geometry.logical_channels();
    const bool checked = geometry.has_intervals();
    if (checked && (lower.size() != logical || upper.size() != logical)) {
        throw ShapeError(fmt::format("correction layer needs {} interval bounds", logical));
    }
    const std::size_t n = in.dim(0);
    const std::size_t physical = geometry.physical_channels;
    const std::size_t plane = n == 0 ? 0 : in.size() / (n * physical);
    Shape out_shape = in.shape();
    out_shape[1] = logical;
    Tensor out(out_shape);
    for (std::size_t s = 0; s < n; ++s) {
        const float* src = in.raw() + s * physical * plane;
        for (std::size_t k = 0; k < logical; ++k) {
            const auto& group = geometry.groups[k];
            float* dst = out.raw() + (s * logical + k) * plane;
            const float* a = src + group[0] * plane;
            switch (group.size()) {
            case 1:
                if (checked) {
                    for (std::size_t p = 0; p < plane; ++p) dst[p] = edac_single(a[p], lower[k], upper[k], geometry.scope);
                } else {
                    for (std::size_t p = 0; p < plane; ++p) dst[p] = zero_nan(a[p]);
                }
                break;
            case 2: {
                // Pairs only exist in duplicate mode, which always carries intervals (checked by infer_shapes).
                const float* b = src + group[1] * plane;
                for (std::size_t p = 0; p < plane; ++p) dst[p] = edac_pair(a[p], b[p], lower[k], upper[k]);
                break;
            }
            default: {
                const float* b = src + group[1] * plane;
                const float* c = src + group[2] * plane;
                for (std::size_t p = 0; p < plane; ++p) dst[p] = vote(a[p], b[p], c[p]);
                break;
            }
            }
        }
    }
    return out;
}

HardeningPlan make_hardening_plan(const ModelGraph& model, const VulnerabilityReport& report, double ratio,
                                  HardeningMode mode, IntervalScope scope)
{
    std::set<ChannelId> chosen;
    for (const auto& id : select_channels(report, ratio, Direction::Most)) chosen.insert(id);
    const auto last = logit_layer(model);
    for (std::size_t c = 0; c < output_channels(model.layers[last].spec); ++c) chosen.insert({last, c});
    return {mode, scope, {chosen.begin(), chosen.end()}};
}

namespace {

Tensor replicate_rows(const Tensor& t, std::size_t channels, const std::vector<std::size_t>& picked, std::size_t copies)
{
    const std::size_t row = t.size() / channels;
    Shape shape = t.shape();
    shape[0] = channels + copies * picked.size();
    Tensor out(shape);
    std::copy_n(t.raw(), t.size(), out.raw());
    float* dst = out.raw() + t.size();
    for (std::size_t copy = 0; copy < copies; ++copy) {
        for (const auto c : picked) {
            std::copy_n(t.raw() + c * row, row, dst);
            dst += row;
        }
    }
    return out;
}

}  // namespace

ModelGraph harden_model(const ModelGraph& model, const HardeningPlan& plan, const IntervalTable& intervals)
{
    validate(model);
    if (model.hardening) throw ConfigError("model is already hardened");
    const auto layer_ids = channel_layers(model);
    std::map<std::size_t, std::vector<std::size_t>> picked;
    for (const auto li : layer_ids) picked[li];
    for (const auto& id : plan.channels) {
        const auto it = picked.find(id.layer);
        if (it == picked.end()) throw ConfigError(fmt::format("hardening plan names layer {}, which has no channels", id.layer));
        if (id.channel >= output_channels(model.layers[id.layer].spec)) {
            throw ConfigError(fmt::format("hardening plan names missing channel {} of layer {}", id.channel, id.layer));
        }
        it->second.push_back(id.channel);
    }
    for (auto& [li, chans] : picked) {
        std::sort(chans.begin(), chans.end());
        if (std::adjacent_find(chans.begin(), chans.end()) != chans.end()) {
            throw ConfigError(fmt::format("hardening plan lists a channel of layer {} twice", li));
        }
    }
    const auto last = logit_layer(model);
    if (picked[last].size() != output_channels(model.layers[last].spec)) {
        throw ConfigError("hardening plan must replicate every channel of the logit layer");
    }
    const bool duplicate = plan.mode == HardeningMode::Duplicate;
    const std::size_t copies = duplicate ? 1 : 2;

    ModelGraph out;
    out.input_shape = model.input_shape;
    out.num_classes = model.num_classes;
    out.hardening = plan;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const Layer& layer = model.layers[i];
        if (layer.spec.kind == LayerKind::Edac) throw ConfigError("model already contains correction layers");
        if (!is_channel_layer(layer.spec.kind)) {
            out.layers.push_back(layer);
            continue;
        }
        const auto& chans = picked[i];
        const std::size_t channels = output_channels(layer.spec);
        const std::size_t physical = channels + copies * chans.size();

        Layer wide;
        wide.spec = layer.spec;
        if (layer.spec.kind == LayerKind::Conv2D) {
            wide.spec.conv().out_channels = physical;
        } else {
            wide.spec.fc().out_features = physical;
        }
        for (const auto& t : layer.params) wide.params.push_back(replicate_rows(t, channels, chans, copies));
        out.layers.push_back(std::move(wide));

        EdacGeometry g;
        g.mode = plan.mode;
        g.scope = plan.scope;
        g.physical_channels = physical;
        g.groups.resize(channels);
        for (std::size_t k = 0; k < channels; ++k) g.groups[k] = {k};
        for (std::size_t j = 0; j < chans.size(); ++j) {
            for (std::size_t copy = 0; copy < copies; ++copy) g.groups[chans[j]].push_back(channels + copy * chans.size() + j);
        }
        Layer edac;
        edac.spec = LayerSpec::edac(std::move(g));
        if (duplicate) {
            const auto it = intervals.layers.find(i);
            if (it == intervals.layers.end()) {
                throw ConfigError(fmt::format("no detection intervals for layer {}", i));
            }
            const auto& iv = it->second;
            if (iv.lower.size() != channels || iv.upper.size() != channels) {
                throw ConfigError(fmt::format("detection intervals of layer {} cover {} channels, expected {}", i,
                                              iv.lower.size(), channels));
            }
            edac.params.emplace_back(Shape{channels}, iv.lower);
            edac.params.emplace_back(Shape{channels}, iv.upper);
        }
        out.layers.push_back(std::move(edac));
    }
    validate(out);
    return out;
}

std::uint64_t interval_param_count(const ModelGraph& model)
{
    std::uint64_t n = 0;
    for (const auto& layer : model.layers) {
        if (layer.spec.kind != LayerKind::Edac) continue;
        for (const auto& t : layer.params) n += t.size();
    }
    return n;
}

Overhead overhead_report(const ModelGraph& baseline, const ModelGraph& hardened)
{
    Overhead o;
    o.baseline = count_params_macs(baseline);
    o.hardened = count_params_macs(hardened);
    const auto pct = [](std::uint64_t base, std::uint64_t h) {
        if (base == 0) return 0.0;
        return 100.0 * (static_cast<double>(h) - static_cast<double>(base)) / static_cast<double>(base);
    };
    o.params_percent = pct(o.baseline.params, o.hardened.params);
    o.macs_percent = pct(o.baseline.macs, o.hardened.macs);
    return o;
}

}  // namespace resilinet
