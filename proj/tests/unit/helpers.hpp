#pragma once

#include "resilinet/dataset.hpp"
#include "resilinet/model.hpp"
#include "resilinet/random.hpp"

#include <filesystem>
#include <string>

namespace testutil {

using namespace resilinet;

inline void fill_uniform(Tensor& t, Rng& rng, double lo, double hi)
{
    for (auto& v : t.data()) v = static_cast<float>(uniform_real(rng, lo, hi));
}

inline void add_layer(ModelGraph& m, LayerSpec spec) { m.layers.push_back({spec, make_params(spec)}); }

/// Random parameters everywhere; batchnorm gets positive variances.
inline void randomize(ModelGraph& m, std::uint64_t seed)
{
    Rng rng(seed);
    for (auto& layer : m.layers) {
        for (std::size_t s = 0; s < layer.params.size(); ++s) {
            auto& t = layer.params[s];
            if (layer.spec.kind == LayerKind::BatchNorm) {
                if (s == slot::gamma) fill_uniform(t, rng, 0.5, 1.5);
                else if (s == slot::running_var) fill_uniform(t, rng, 0.5, 2.0);
                else fill_uniform(t, rng, -0.5, 0.5);
            } else {
                fill_uniform(t, rng, -0.8, 0.8);
            }
        }
    }
}

/// A small random CNN; the layout varies with `seed`.
inline ModelGraph random_cnn(std::uint64_t seed, bool batch_norm = true)
{
    Rng rng(seed);
    ModelGraph m;
    const std::size_t in_c = 1 + uniform_below(rng, 2);
    const std::size_t side = 6 + 2 * uniform_below(rng, 2);
    m.input_shape = {in_c, side, side};
    m.num_classes = 2 + uniform_below(rng, 3);
    const std::size_t c1 = 2 + uniform_below(rng, 3);
    const std::size_t k = uniform_below(rng, 2) == 0 ? 3 : 2;
    const std::size_t pad = k == 3 ? uniform_below(rng, 2) : 0;
    add_layer(m, LayerSpec::conv2d(in_c, c1, k, 1, pad, uniform_below(rng, 4) != 0));
    if (batch_norm) add_layer(m, LayerSpec::batch_norm(c1));
    add_layer(m, LayerSpec::relu());
    const std::size_t s1 = side + 2 * pad - k + 1;
    std::size_t s2 = s1;
    if (uniform_below(rng, 2) == 0) {
        add_layer(m, LayerSpec::max_pool(2, 2));
        s2 = (s1 - 2) / 2 + 1;
    }
    const std::size_t c2 = 2 + uniform_below(rng, 3);
    const std::size_t stride = uniform_below(rng, 2) + 1;
    add_layer(m, LayerSpec::conv2d(c1, c2, 2, stride, 0));
    const std::size_t s3 = (s2 - 2) / stride + 1;
    add_layer(m, LayerSpec::relu());
    add_layer(m, LayerSpec::flatten());
    const std::size_t hidden = 3 + uniform_below(rng, 4);
    add_layer(m, LayerSpec::fully_connected(c2 * s3 * s3, hidden));
    add_layer(m, LayerSpec::relu());
    add_layer(m, LayerSpec::fully_connected(hidden, m.num_classes));
    randomize(m, seed ^ 0xabcdef);
    validate(m);
    return m;
}

/// FC-only model: in -> hidden -> classes.
inline ModelGraph random_mlp(std::size_t in, std::size_t hidden, std::size_t classes, std::uint64_t seed)
{
    ModelGraph m;
    m.input_shape = {in};
    m.num_classes = classes;
    add_layer(m, LayerSpec::fully_connected(in, hidden));
    add_layer(m, LayerSpec::relu());
    add_layer(m, LayerSpec::fully_connected(hidden, classes));
    randomize(m, seed);
    return m;
}

inline Tensor random_batch(const ModelGraph& m, std::size_t n, std::uint64_t seed)
{
    Shape shape{n};
    shape.insert(shape.end(), m.input_shape.begin(), m.input_shape.end());
    Tensor t(shape);
    Rng rng(seed);
    fill_uniform(t, rng, -1.0, 1.0);
    return t;
}

/// Labelled random dataset for `m`.
inline Dataset random_dataset(const ModelGraph& m, std::size_t n, std::uint64_t seed)
{
    Dataset ds;
    ds.images = random_batch(m, n, seed);
    ds.num_classes = m.num_classes;
    Rng rng(seed + 1);
    for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<std::int32_t>(uniform_below(rng, m.num_classes)));
    return ds;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("resilinet_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil
