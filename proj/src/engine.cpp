#include "resilinet/engine.hpp"

#include "resilinet/errors.hpp"
#include "resilinet/hardening.hpp"

#include <cmath>
#include <fmt/format.h>

namespace resilinet {

namespace {

struct ConvDims {
    std::size_t cin, h, w, cout, kh, kw, stride, pad, ho, wo;
    std::size_t k() const { return cin * kh * kw; }
    std::size_t p() const { return ho * wo; }
};

ConvDims conv_dims(const Conv2DGeometry& g, const Tensor& in)
{
    const std::size_t h = in.dim(2);
    const std::size_t w = in.dim(3);
    return {g.in_channels,
            h,
            w,
            g.out_channels,
            g.kernel_h,
            g.kernel_w,
            g.stride,
            g.padding,
            (h + 2 * g.padding - g.kernel_h) / g.stride + 1,
            (w + 2 * g.padding - g.kernel_w) / g.stride + 1};
}

// Unfolds one sample [cin, h, w] into col [cin*kh*kw, ho*wo]. Padding positions
// hold explicit zeros so non-finite weights meet them as the hardware would.
void im2col(const float* in, const ConvDims& d, float* col)
{
    const std::size_t p = d.p();
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
                float* row = col + ((ci * d.kh + ky) * d.kw + kx) * p;
                for (std::size_t oy = 0; oy < d.ho; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) - static_cast<std::ptrdiff_t>(d.pad);
                    for (std::size_t ox = 0; ox < d.wo; ++ox) {
                        const auto ix =
                            static_cast<std::ptrdiff_t>(ox * d.stride + kx) - static_cast<std::ptrdiff_t>(d.pad);
                        const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(d.h) &&
                                            ix < static_cast<std::ptrdiff_t>(d.w);
                        row[oy * d.wo + ox] = inside ? in[(ci * d.h + iy) * d.w + ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_add(const float* col, const ConvDims& d, float* in_grad)
{
    const std::size_t p = d.p();
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
                const float* row = col + ((ci * d.kh + ky) * d.kw + kx) * p;
                for (std::size_t oy = 0; oy < d.ho; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) - static_cast<std::ptrdiff_t>(d.pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
                    for (std::size_t ox = 0; ox < d.wo; ++ox) {
                        const auto ix =
                            static_cast<std::ptrdiff_t>(ox * d.stride + kx) - static_cast<std::ptrdiff_t>(d.pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
                        in_grad[(ci * d.h + iy) * d.w + ix] += row[oy * d.wo + ox];
                    }
                }
            }
        }
    }
}

// Each output element accumulates in (ci, ky, kx) order and adds the bias last,
// independent of how many other output channels the layer has.
Tensor conv_forward(const Layer& layer, const Tensor& in)
{
    const auto& g = layer.spec.conv();
    const ConvDims d = conv_dims(g, in);
    const std::size_t n = in.dim(0);
    const std::size_t k = d.k();
    const std::size_t p = d.p();
    Tensor out({n, d.cout, d.ho, d.wo});
    std::vector<float> col(k * p);
    const float* w = layer.params[slot::weight].raw();
    const float* b = layer.spec.has_bias ? layer.params[slot::bias].raw() : nullptr;
    for (std::size_t s = 0; s < n; ++s) {
        im2col(in.raw() + s * d.cin * d.h * d.w, d, col.data());
        for (std::size_t co = 0; co < d.cout; ++co) {
            float* o = out.raw() + (s * d.cout + co) * p;
            const float* wrow = w + co * k;
            for (std::size_t kk = 0; kk < k; ++kk) {
                const float wv = wrow[kk];
                const float* c = col.data() + kk * p;
                for (std::size_t i = 0; i < p; ++i) o[i] += wv * c[i];
            }
            if (b) {
                const float bv = b[co];
                for (std::size_t i = 0; i < p; ++i) o[i] += bv;
            }
        }
    }
    return out;
}

Tensor conv_backward(const Layer& layer, const Tensor& in, const Tensor& grad_out, std::vector<Tensor>& grads,
                     bool need_input_grad)
{
    const auto& g = layer.spec.conv();
    const ConvDims d = conv_dims(g, in);
    const std::size_t n = in.dim(0);
    const std::size_t k = d.k();
    const std::size_t p = d.p();
    std::vector<float> col(k * p);
    std::vector<float> dcol(need_input_grad ? k * p : 0);
    Tensor in_grad = need_input_grad ? Tensor(in.shape()) : Tensor();
    const float* w = layer.params[slot::weight].raw();
    float* dw = grads[slot::weight].raw();
    float* db = layer.spec.has_bias ? grads[slot::bias].raw() : nullptr;
    for (std::size_t s = 0; s < n; ++s) {
        im2col(in.raw() + s * d.cin * d.h * d.w, d, col.data());
        const float* go = grad_out.raw() + s * d.cout * p;
        for (std::size_t co = 0; co < d.cout; ++co) {
            const float* gc = go + co * p;
            float* dwrow = dw + co * k;
            for (std::size_t kk = 0; kk < k; ++kk) {
                const float* c = col.data() + kk * p;
                float acc = 0.0f;
                for (std::size_t i = 0; i < p; ++i) acc += gc[i] * c[i];
                dwrow[kk] += acc;
            }
            if (db) {
                float acc = 0.0f;
                for (std::size_t i = 0; i < p; ++i) acc += gc[i];
                db[co] += acc;
            }
        }
        if (need_input_grad) {
            std::fill(dcol.begin(), dcol.end(), 0.0f);
            for (std::size_t co = 0; co < d.cout; ++co) {
                const float* gc = go + co * p;
                const float* wrow = w + co * k;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const float wv = wrow[kk];
                    float* dc = dcol.data() + kk * p;
                    for (std::size_t i = 0; i < p; ++i) dc[i] += wv * gc[i];
                }
            }
            col2im_add(dcol.data(), d, in_grad.raw() + s * d.cin * d.h * d.w);
        }
    }
    return in_grad;
}

Tensor fc_forward(const Layer& layer, const Tensor& in)
{
    const auto& g = layer.spec.fc();
    const std::size_t n = in.dim(0);
    Tensor out({n, g.out_features});
    const float* w = layer.params[slot::weight].raw();
    const float* b = layer.spec.has_bias ? layer.params[slot::bias].raw() : nullptr;
    for (std::size_t s = 0; s < n; ++s) {
        const float* x = in.raw() + s * g.in_features;
        float* o = out.raw() + s * g.out_features;
        for (std::size_t j = 0; j < g.out_features; ++j) {
            const float* wrow = w + j * g.in_features;
            float acc = 0.0f;
            for (std::size_t i = 0; i < g.in_features; ++i) acc += wrow[i] * x[i];
            o[j] = b ? acc + b[j] : acc;
        }
    }
    return out;
}

Tensor fc_backward(const Layer& layer, const Tensor& in, const Tensor& grad_out, std::vector<Tensor>& grads,
                   bool need_input_grad)
{
    const auto& g = layer.spec.fc();
    const std::size_t n = in.dim(0);
    const float* w = layer.params[slot::weight].raw();
    float* dw = grads[slot::weight].raw();
    float* db = layer.spec.has_bias ? grads[slot::bias].raw() : nullptr;
    Tensor in_grad = need_input_grad ? Tensor(in.shape()) : Tensor();
    for (std::size_t s = 0; s < n; ++s) {
        const float* x = in.raw() + s * g.in_features;
        const float* go = grad_out.raw() + s * g.out_features;
        for (std::size_t j = 0; j < g.out_features; ++j) {
            const float gj = go[j];
            float* dwrow = dw + j * g.in_features;
            for (std::size_t i = 0; i < g.in_features; ++i) dwrow[i] += gj * x[i];
            if (db) db[j] += gj;
        }
        if (need_input_grad) {
            float* dx = in_grad.raw() + s * g.in_features;
            for (std::size_t j = 0; j < g.out_features; ++j) {
                const float gj = go[j];
                const float* wrow = w + j * g.in_features;
                for (std::size_t i = 0; i < g.in_features; ++i) dx[i] += wrow[i] * gj;
            }
        }
    }
    return in_grad;
}

std::size_t spatial_size(const Tensor& t)
{
    std::size_t s = 1;
    for (std::size_t a = 2; a < t.rank(); ++a) s *= t.dim(a);
    return s;
}

Tensor bn_forward_inference(const Layer& layer, const Tensor& in)
{
    const auto& g = layer.spec.bn();
    const std::size_t n = in.dim(0);
    const std::size_t c = g.channels;
    const std::size_t sp = spatial_size(in);
    const float* gamma = layer.params[slot::gamma].raw();
    const float* beta = layer.params[slot::beta].raw();
    const float* mean = layer.params[slot::running_mean].raw();
    const float* var = layer.params[slot::running_var].raw();
    Tensor out(in.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
        const float scale = gamma[ch] / std::sqrt(var[ch] + g.eps);
        const float shift = beta[ch] - mean[ch] * scale;
        for (std::size_t s = 0; s < n; ++s) {
            const float* x = in.raw() + (s * c + ch) * sp;
            float* y = out.raw() + (s * c + ch) * sp;
            for (std::size_t i = 0; i < sp; ++i) y[i] = x[i] * scale + shift;
        }
    }
    return out;
}

Tensor bn_forward_training(const Layer& layer, const Tensor& in, BatchNormStats& stats)
{
    const auto& g = layer.spec.bn();
    const std::size_t n = in.dim(0);
    const std::size_t c = g.channels;
    const std::size_t sp = spatial_size(in);
    const float* gamma = layer.params[slot::gamma].raw();
    const float* beta = layer.params[slot::beta].raw();
    stats.count = n * sp;
    stats.mean.assign(c, 0.0f);
    stats.var.assign(c, 0.0f);
    stats.inv_std.assign(c, 0.0f);
    Tensor out(in.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const float* x = in.raw() + (s * c + ch) * sp;
            for (std::size_t i = 0; i < sp; ++i) sum += x[i];
        }
        const double mean = sum / static_cast<double>(stats.count);
        double sq = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const float* x = in.raw() + (s * c + ch) * sp;
            for (std::size_t i = 0; i < sp; ++i) {
                const double dlt = x[i] - mean;
                sq += dlt * dlt;
            }
        }
        stats.mean[ch] = static_cast<float>(mean);
        stats.var[ch] = static_cast<float>(sq / static_cast<double>(stats.count));
        stats.inv_std[ch] = 1.0f / std::sqrt(stats.var[ch] + g.eps);
        const float m = stats.mean[ch];
        const float r = stats.inv_std[ch];
        for (std::size_t s = 0; s < n; ++s) {
            const float* x = in.raw() + (s * c + ch) * sp;
            float* y = out.raw() + (s * c + ch) * sp;
            for (std::size_t i = 0; i < sp; ++i) y[i] = (x[i] - m) * r * gamma[ch] + beta[ch];
        }
    }
    return out;
}

Tensor bn_backward(const Layer& layer, const Tensor& in, const Tensor& grad_out, const BatchNormStats* stats,
                   std::vector<Tensor>& grads, bool need_input_grad)
{
    const auto& g = layer.spec.bn();
    const std::size_t n = in.dim(0);
    const std::size_t c = g.channels;
    const std::size_t sp = spatial_size(in);
    const float* gamma = layer.params[slot::gamma].raw();
    float* dgamma = grads[slot::gamma].raw();
    float* dbeta = grads[slot::beta].raw();
    Tensor in_grad = need_input_grad ? Tensor(in.shape()) : Tensor();
    for (std::size_t ch = 0; ch < c; ++ch) {
        float mean = 0.0f;
        float inv_std = 0.0f;
        if (stats) {
            mean = stats->mean[ch];
            inv_std = stats->inv_std[ch];
        } else {
            mean = layer.params[slot::running_mean][ch];
            inv_std = 1.0f / std::sqrt(layer.params[slot::running_var][ch] + g.eps);
        }
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const float* x = in.raw() + (s * c + ch) * sp;
            const float* dy = grad_out.raw() + (s * c + ch) * sp;
            for (std::size_t i = 0; i < sp; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += static_cast<double>(dy[i]) * ((x[i] - mean) * inv_std);
            }
        }
        dgamma[ch] += static_cast<float>(sum_dy_xhat);
        dbeta[ch] += static_cast<float>(sum_dy);
        if (!need_input_grad) continue;
        for (std::size_t s = 0; s < n; ++s) {
            const float* x = in.raw() + (s * c + ch) * sp;
            const float* dy = grad_out.raw() + (s * c + ch) * sp;
            float* dx = in_grad.raw() + (s * c + ch) * sp;
            if (stats) {
                const double m = static_cast<double>(stats->count);
                const double k = static_cast<double>(gamma[ch]) * inv_std / m;
                for (std::size_t i = 0; i < sp; ++i) {
                    const double xhat = (x[i] - mean) * inv_std;
                    dx[i] = static_cast<float>(k * (m * dy[i] - sum_dy - xhat * sum_dy_xhat));
                }
            } else {
                const float scale = gamma[ch] * inv_std;
                for (std::size_t i = 0; i < sp; ++i) dx[i] = dy[i] * scale;
            }
        }
    }
    return in_grad;
}

Tensor relu_forward(const Tensor& in)
{
    Tensor out(in.shape());
    const float* x = in.raw();
    float* y = out.raw();
    for (std::size_t i = 0; i < in.size(); ++i) y[i] = x[i] < 0.0f ? 0.0f : x[i];
    return out;
}

Tensor relu_backward(const Tensor& in, const Tensor& grad_out)
{
    Tensor g(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i) g[i] = in[i] > 0.0f ? grad_out[i] : 0.0f;
    return g;
}

// NaN wins the window so corruption propagates as IEEE arithmetic would.
Tensor pool_forward(const Layer& layer, const Tensor& in, std::vector<std::uint32_t>* argmax)
{
    const auto& g = layer.spec.pool();
    const std::size_t n = in.dim(0);
    const std::size_t c = in.dim(1);
    const std::size_t h = in.dim(2);
    const std::size_t w = in.dim(3);
    const std::size_t ho = (h - g.window) / g.stride + 1;
    const std::size_t wo = (w - g.window) / g.stride + 1;
    Tensor out({n, c, ho, wo});
    if (argmax) argmax->assign(out.size(), 0);
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t oy = 0; oy < ho; ++oy) {
            for (std::size_t ox = 0; ox < wo; ++ox, ++o) {
                std::size_t best_idx = base + (oy * g.stride) * w + ox * g.stride;
                float best = in[best_idx];
                for (std::size_t ky = 0; ky < g.window; ++ky) {
                    for (std::size_t kx = 0; kx < g.window; ++kx) {
                        const std::size_t idx = base + (oy * g.stride + ky) * w + ox * g.stride + kx;
                        const float v = in[idx];
                        if (!std::isnan(best) && (v > best || std::isnan(v))) {
                            best = v;
                            best_idx = idx;
                        }
                    }
                }
                out[o] = best;
                if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best_idx);
            }
        }
    }
    return out;
}

Tensor edac_forward(const Layer& layer, const Tensor& in)
{
    const auto& g = layer.spec.edac();
    std::span<const float> lower;
    std::span<const float> upper;
    if (g.has_intervals()) {
        lower = layer.params[slot::lower].data();
        upper = layer.params[slot::upper].data();
    }
    return edac_apply(in, g, lower, upper);
}

Shape batched(std::size_t n, const Shape& sample)
{
    Shape s{n};
    s.insert(s.end(), sample.begin(), sample.end());
    return s;
}

Tensor run_forward(const ModelGraph& model, const Tensor& batch, ForwardCache* cache, Phase phase,
                   const LayerObserver* observer)
{
    if (batch.rank() != model.input_shape.size() + 1 ||
        !std::equal(model.input_shape.begin(), model.input_shape.end(), batch.shape().begin() + 1)) {
        throw ShapeError(fmt::format("input batch shape {} does not match model input {} (layer 0, {})",
                                     shape_to_string(batch.shape()), shape_to_string(model.input_shape),
                                     model.layers.empty() ? "none" : to_string(model.layers[0].spec.kind)));
    }
    const auto shapes = infer_shapes(model);
    const std::size_t n = batch.dim(0);
    if (cache) {
        cache->phase = phase;
        cache->fingerprint = model_fingerprint(model);
        cache->batch_size = n;
        cache->inputs.clear();
        cache->inputs.reserve(model.layers.size() + 1);
        cache->pool_argmax.assign(model.layers.size(), {});
        cache->bn_stats.assign(model.layers.size(), {});
    }
    Tensor cur = batch;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        Tensor next;
        switch (layer.spec.kind) {
        case LayerKind::Conv2D: next = conv_forward(layer, cur); break;
        case LayerKind::FullyConnected: next = fc_forward(layer, cur); break;
        case LayerKind::BatchNorm:
            next = (phase == Phase::Training && cache) ? bn_forward_training(layer, cur, cache->bn_stats[i])
                                                       : bn_forward_inference(layer, cur);
            break;
        case LayerKind::ReLU: next = relu_forward(cur); break;
        case LayerKind::MaxPool: next = pool_forward(layer, cur, cache ? &cache->pool_argmax[i] : nullptr); break;
        case LayerKind::Flatten:
            next = cur;
            next.reshape({n, shape_size(shapes[i])});
            break;
        case LayerKind::Edac: next = edac_forward(layer, cur); break;
        }
        if (next.shape() != batched(n, shapes[i])) {
            throw ShapeError(fmt::format("layer {} ({}) produced {} but shape algebra expects {}", i,
                                         to_string(layer.spec.kind), shape_to_string(next.shape()),
                                         shape_to_string(batched(n, shapes[i]))));
        }
        if (observer) (*observer)(i, next);
        if (cache) cache->inputs.push_back(std::move(cur));
        cur = std::move(next);
    }
    if (cache) cache->inputs.push_back(cur);
    return cur;
}

}  // namespace

GradientSet GradientSet::zeros_like(const ModelGraph& model)
{
    GradientSet g;
    g.layers.resize(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        for (std::size_t s = 0; s < layer.params.size(); ++s) {
            g.layers[i].push_back(is_trainable(layer.spec.kind, s) ? Tensor(layer.params[s].shape()) : Tensor());
        }
    }
    return g;
}

Tensor forward(const ModelGraph& model, const Tensor& batch)
{
    return run_forward(model, batch, nullptr, Phase::Inference, nullptr);
}

Tensor forward(const ModelGraph& model, const Tensor& batch, ForwardCache& cache, Phase phase)
{
    return run_forward(model, batch, &cache, phase, nullptr);
}

Tensor forward_observed(const ModelGraph& model, const Tensor& batch, const LayerObserver& observer)
{
    return run_forward(model, batch, nullptr, Phase::Inference, &observer);
}

GradientSet backward(const ModelGraph& model, const ForwardCache& cache, const Tensor& output_grad)
{
    if (cache.inputs.size() != model.layers.size() + 1 || cache.fingerprint != model_fingerprint(model)) {
        throw Error("forward cache is stale or was produced by a different model");
    }
    if (output_grad.shape() != cache.inputs.back().shape()) {
        throw ShapeError(fmt::format("output gradient shape {} does not match model output {}",
                                     shape_to_string(output_grad.shape()), shape_to_string(cache.inputs.back().shape())));
    }
    GradientSet grads = GradientSet::zeros_like(model);
    Tensor g = output_grad;
    for (std::size_t idx = model.layers.size(); idx-- > 0;) {
        const auto& layer = model.layers[idx];
        const Tensor& in = cache.inputs[idx];
        const bool need_input_grad = idx > 0;
        Tensor next;
        switch (layer.spec.kind) {
        case LayerKind::Conv2D: next = conv_backward(layer, in, g, grads.layers[idx], need_input_grad); break;
        case LayerKind::FullyConnected: next = fc_backward(layer, in, g, grads.layers[idx], need_input_grad); break;
        case LayerKind::BatchNorm:
            next = bn_backward(layer, in, g, cache.phase == Phase::Training ? &cache.bn_stats[idx] : nullptr,
                               grads.layers[idx], need_input_grad);
            break;
        case LayerKind::ReLU: next = relu_backward(in, g); break;
        case LayerKind::MaxPool: {
            next = Tensor(in.shape());
            const auto& argmax = cache.pool_argmax[idx];
            for (std::size_t o = 0; o < argmax.size(); ++o) next[argmax[o]] += g[o];
            break;
        }
        case LayerKind::Flatten:
            next = std::move(g);
            next.reshape(in.shape());
            break;
        case LayerKind::Edac:
            throw Error(fmt::format("layer {}: backward through an EDAC layer is not supported", idx));
        }
        g = std::move(next);
    }
    return grads;
}

void sgd_step(ModelGraph& model, const GradientSet& grads, float lr)
{
    if (grads.layers.size() != model.layers.size()) throw ShapeError("gradient set does not mirror the model");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        auto& layer = model.layers[i];
        if (grads.layers[i].size() != layer.params.size()) {
            throw ShapeError(fmt::format("layer {}: gradient slot count mismatch", i));
        }
        for (std::size_t s = 0; s < layer.params.size(); ++s) {
            if (!is_trainable(layer.spec.kind, s)) continue;
            auto& p = layer.params[s];
            const auto& gt = grads.layers[i][s];
            if (gt.shape() != p.shape()) {
                throw ShapeError(fmt::format("layer {}: gradient for '{}' has shape {}, expected {}", i,
                                             param_name(layer.spec.kind, s), shape_to_string(gt.shape()),
                                             shape_to_string(p.shape())));
            }
            float* w = p.raw();
            const float* d = gt.raw();
            for (std::size_t e = 0; e < p.size(); ++e) w[e] = w[e] - lr * d[e];
        }
    }
}

void update_running_stats(ModelGraph& model, const ForwardCache& cache, float momentum)
{
    if (cache.phase != Phase::Training) return;
    for (std::size_t i = 0; i < model.layers.size() && i < cache.bn_stats.size(); ++i) {
        auto& layer = model.layers[i];
        const auto& st = cache.bn_stats[i];
        if (layer.spec.kind != LayerKind::BatchNorm || st.mean.empty()) continue;
        const float unbias = st.count > 1 ? static_cast<float>(st.count) / static_cast<float>(st.count - 1) : 1.0f;
        float* rm = layer.params[slot::running_mean].raw();
        float* rv = layer.params[slot::running_var].raw();
        for (std::size_t c = 0; c < st.mean.size(); ++c) {
            rm[c] = (1.0f - momentum) * rm[c] + momentum * st.mean[c];
            rv[c] = (1.0f - momentum) * rv[c] + momentum * st.var[c] * unbias;
        }
    }
}

ModelCost count_params_macs(const ModelGraph& model)
{
    ModelCost cost;
    if (model.layers.empty()) return cost;
    const auto shapes = infer_shapes(model);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        for (std::size_t s = 0; s < layer.params.size(); ++s) {
            if (is_counted_param(layer.spec.kind, s)) cost.params += layer.params[s].size();
        }
        if (layer.spec.kind == LayerKind::Conv2D) {
            const auto& g = layer.spec.conv();
            cost.macs += g.kernel_h * g.kernel_w * g.in_channels * g.out_channels * shapes[i][1] * shapes[i][2];
        } else if (layer.spec.kind == LayerKind::FullyConnected) {
            cost.macs += layer.spec.fc().in_features * layer.spec.fc().out_features;
        }
    }
    return cost;
}

}  // namespace resilinet
