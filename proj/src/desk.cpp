#include "resilinet/desk.hpp"

#include "resilinet/errors.hpp"
#include "resilinet/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace resilinet {

namespace {

struct Segment {
    double u0, v0, u1, v1;
};

// Glyph box spans u in [-3, 3], v in [-5, 5]; order a b c d e f g.
constexpr std::array<Segment, 7> kSegments{{
    {-3, -5, 3, -5},
    {3, -5, 3, 0},
    {3, 0, 3, 5},
    {-3, 5, 3, 5},
    {-3, 0, -3, 5},
    {-3, -5, -3, 0},
    {-3, 0, 3, 0},
}};

// Bit k set = segment k lit.
constexpr std::array<unsigned, 10> kDigits{
    0b0111111, 0b0000110, 0b1011011, 0b1001111, 0b1100110, 0b1101101, 0b1111101, 0b0000111, 0b1111111, 0b1101111,
};

double segment_distance(const Segment& s, double u, double v)
{
    const double du = s.u1 - s.u0;
    const double dv = s.v1 - s.v0;
    const double t = std::clamp(((u - s.u0) * du + (v - s.v0) * dv) / (du * du + dv * dv), 0.0, 1.0);
    return std::hypot(u - (s.u0 + t * du), v - (s.v0 + t * dv));
}

void render(const GlyphConfig& cfg, std::uint8_t digit, Rng& rng, std::uint8_t* out)
{
    unsigned lit = kDigits[digit];
    for (unsigned k = 0; k < 7; ++k) {
        if ((lit >> k & 1u) && uniform_unit(rng) < cfg.segment_dropout) {
            const unsigned without = lit & ~(1u << k);
            if (without != 0) lit = without;
        }
    }
    if (uniform_unit(rng) < cfg.spurious_segment) lit |= 1u << uniform_below(rng, 7);

    const double side = static_cast<double>(cfg.side);
    const double unit = side / 16.0;
    const double scale = uniform_real(rng, 0.85, 1.1) * unit;
    const double shear = uniform_real(rng, -0.25, 0.25);
    const double cx = (side - 1.0) / 2.0 + uniform_real(rng, -1.5, 1.5) * unit;
    const double cy = (side - 1.0) / 2.0 + uniform_real(rng, -1.5, 1.5) * unit;
    const double half_width = uniform_real(rng, 0.45, 0.8);
    const double peak = uniform_real(rng, 0.6, 1.0);

    for (std::size_t y = 0; y < cfg.side; ++y) {
        for (std::size_t x = 0; x < cfg.side; ++x) {
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            const double v = dy / scale;
            const double u = (dx - shear * dy) / scale;
            double d = 1e9;
            for (unsigned k = 0; k < 7; ++k) {
                if (lit >> k & 1u) d = std::min(d, segment_distance(kSegments[k], u, v));
            }
            const double ink = std::clamp(1.0 - (d - half_width) / 0.8, 0.0, 1.0) * peak;
            const double value = std::clamp(ink + cfg.noise_sigma * standard_normal(rng), 0.0, 1.0);
            out[y * cfg.side + x] = static_cast<std::uint8_t>(std::lround(value * 255.0));
        }
    }
}

}  // namespace

GlyphSet make_glyphs(const GlyphConfig& cfg)
{
    if (cfg.count == 0 || cfg.side < 8) throw ConfigError("glyph sets need count > 0 and side >= 8");
    GlyphSet set;
    set.count = cfg.count;
    set.side = cfg.side;
    set.pixels.resize(cfg.count * cfg.side * cfg.side);
    set.labels.resize(cfg.count);
    Rng order_rng(derive_seed(cfg.seed, {0x6c}));
    for (std::size_t i = 0; i < cfg.count; ++i) set.labels[i] = static_cast<std::uint8_t>(i % 10);
    shuffle(std::span(set.labels), order_rng);
    for (std::size_t i = 0; i < cfg.count; ++i) {
        Rng rng(derive_seed(cfg.seed, {0x67, i}));
        render(cfg, set.labels[i], rng, set.pixels.data() + i * cfg.side * cfg.side);
    }
    return set;
}

Dataset GlyphSet::to_dataset(Split split) const
{
    Dataset ds;
    ds.num_classes = 10;
    ds.split = split;
    ds.images = Tensor({count, 1, side, side});
    for (std::size_t i = 0; i < pixels.size(); ++i) ds.images[i] = static_cast<float>(pixels[i]) / 255.0f;
    ds.labels.assign(labels.begin(), labels.end());
    return ds;
}

void GlyphSet::write_idx(const std::filesystem::path& images, const std::filesystem::path& label_path) const
{
    write_idx_images(images, count, side, side, pixels);
    write_idx_labels(label_path, labels);
}

ModelGraph make_desk_cnn(const DeskCnnConfig& cfg, std::uint64_t seed)
{
    if (cfg.side % 4 != 0 || cfg.side < 4) throw ConfigError("desk CNN input side must be a positive multiple of 4");
    ModelGraph m;
    m.input_shape = {cfg.in_channels, cfg.side, cfg.side};
    m.num_classes = cfg.classes;
    const auto add = [&](LayerSpec spec) { m.layers.push_back({spec, make_params(spec)}); };
    add(LayerSpec::conv2d(cfg.in_channels, cfg.conv1, 3, 1, 1));
    if (cfg.batch_norm) add(LayerSpec::batch_norm(cfg.conv1));
    add(LayerSpec::relu());
    add(LayerSpec::max_pool(2, 2));
    add(LayerSpec::conv2d(cfg.conv1, cfg.conv2, 3, 1, 1));
    if (cfg.batch_norm) add(LayerSpec::batch_norm(cfg.conv2));
    add(LayerSpec::relu());
    add(LayerSpec::max_pool(2, 2));
    add(LayerSpec::flatten());
    const std::size_t spatial = (cfg.side / 4) * (cfg.side / 4);
    add(LayerSpec::fully_connected(cfg.conv2 * spatial, cfg.hidden));
    add(LayerSpec::relu());
    add(LayerSpec::fully_connected(cfg.hidden, cfg.classes));
    init_uniform_fan_in(m, seed);
    validate(m);
    return m;
}

void init_uniform_fan_in(ModelGraph& model, std::uint64_t seed)
{
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        auto& layer = model.layers[li];
        if (layer.spec.kind == LayerKind::BatchNorm) {
            layer.params = make_params(layer.spec);
            continue;
        }
        if (!is_channel_layer(layer.spec.kind)) continue;
        const Tensor& w = layer.params[slot::weight];
        const double fan_in = static_cast<double>(w.size() / w.dim(0));
        const double wb = std::sqrt(6.0 / fan_in);
        const double bb = 1.0 / std::sqrt(fan_in);
        Rng rng(derive_seed(seed, {0x1417, li}));
        for (auto& v : layer.params[slot::weight].data()) v = static_cast<float>(uniform_real(rng, -wb, wb));
        if (layer.spec.has_bias) {
            for (auto& v : layer.params[slot::bias].data()) v = static_cast<float>(uniform_real(rng, -bb, bb));
        }
    }
}

}  // namespace resilinet
