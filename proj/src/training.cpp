#include "resilinet/training.hpp"

#include "resilinet/engine.hpp"
#include "resilinet/errors.hpp"
#include "resilinet/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace resilinet {

double softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels, Tensor* grad)
{
    if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
        throw ShapeError(fmt::format("logits {} do not match {} labels", shape_to_string(logits.shape()), labels.size()));
    }
    const std::size_t n = logits.dim(0);
    const std::size_t c = logits.dim(1);
    if (grad) *grad = Tensor(logits.shape());
    double total = 0.0;
    std::vector<double> p(c);
    for (std::size_t s = 0; s < n; ++s) {
        const float* z = logits.raw() + s * c;
        const auto label = static_cast<std::size_t>(labels[s]);
        if (label >= c) throw ShapeError(fmt::format("label {} out of range for {} classes", labels[s], c));
        double zmax = z[0];
        for (std::size_t k = 1; k < c; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
        double sum = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            p[k] = std::exp(static_cast<double>(z[k]) - zmax);
            sum += p[k];
        }
        total += std::log(sum) - (static_cast<double>(z[label]) - zmax);
        if (grad) {
            float* g = grad->raw() + s * c;
            for (std::size_t k = 0; k < c; ++k) {
                const double y = k == label ? 1.0 : 0.0;
                g[k] = static_cast<float>((p[k] / sum - y) / static_cast<double>(n));
            }
        }
    }
    return total / static_cast<double>(n);
}

double dataset_loss(const ModelGraph& model, const Dataset& ds)
{
    if (ds.size() == 0) throw ConfigError("loss of an empty dataset");
    constexpr std::size_t chunk = 256;
    double total = 0.0;
    for (std::size_t begin = 0; begin < ds.size(); begin += chunk) {
        const std::size_t end = std::min(ds.size(), begin + chunk);
        const Tensor logits = forward(model, ds.batch(begin, end));
        total += softmax_cross_entropy(logits, std::span(ds.labels).subspan(begin, end - begin)) *
                 static_cast<double>(end - begin);
    }
    return total / static_cast<double>(ds.size());
}

void train_sgd(ModelGraph& model, const Dataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    validate(model);
    if (ds.size() == 0) throw ConfigError("training needs a non-empty dataset");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(cfg.lr >= 0.0f) || !std::isfinite(cfg.lr)) throw ConfigError("learning rate must be finite and non-negative");
    std::vector<std::size_t> order(ds.size());
    std::vector<std::int32_t> labels;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(cfg.seed, {0x7a11, epoch}));
        shuffle(std::span(order), rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            const auto idx = std::span(order).subspan(begin, end - begin);
            labels.clear();
            for (const auto i : idx) labels.push_back(ds.labels[i]);
            ForwardCache cache;
            const Tensor logits = forward(model, ds.gather(idx), cache, Phase::Training);
            Tensor grad;
            const double loss = softmax_cross_entropy(logits, labels, &grad);
            if (!std::isfinite(loss)) {
                throw TrainingError(fmt::format("training loss became {} in epoch {} at sample offset {}", loss, epoch,
                                                begin));
            }
            epoch_loss += loss * static_cast<double>(idx.size());
            const GradientSet grads = backward(model, cache, grad);
            sgd_step(model, grads, cfg.lr);
            update_running_stats(model, cache);
        }
        if (on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(ds.size()));
    }
}

}  // namespace resilinet
