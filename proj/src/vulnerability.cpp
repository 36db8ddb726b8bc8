#include "resilinet/vulnerability.hpp"

#include "resilinet/engine.hpp"
#include "resilinet/errors.hpp"
#include "resilinet/model_io.hpp"
#include "resilinet/parallel.hpp"
#include "resilinet/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numeric>
#include <sstream>

namespace resilinet {

double VulnerabilityReport::score(ChannelId id) const
{
    const auto it = layers.find(id.layer);
    if (it == layers.end() || id.channel >= it->second.size()) {
        throw ConfigError(fmt::format("no score for channel {} of layer {}", id.channel, id.layer));
    }
    return it->second[id.channel];
}

Dataset calibration_subset(const Dataset& ds, std::size_t count, std::uint64_t seed)
{
    if (ds.size() == 0) throw ConfigError("calibration needs a non-empty dataset");
    if (count >= ds.size()) return ds;
    Rng rng(derive_seed(seed, {0xca11b}));
    const auto picked = sample_without_replacement(rng, ds.size(), count);
    std::vector<std::size_t> indices(picked.begin(), picked.end());
    std::sort(indices.begin(), indices.end());
    return ds.subset(indices);
}

namespace {

/// Squared-gradient mass per output channel, summed over weight row and bias entry.
void add_channel_mass(const Layer& layer, const std::vector<Tensor>& grads, double scale, std::vector<double>& out)
{
    const auto channels = output_channels(layer.spec);
    const Tensor& gw = grads[slot::weight];
    const std::size_t row = gw.size() / channels;
    for (std::size_t c = 0; c < channels; ++c) {
        double mass = 0.0;
        const float* w = gw.raw() + c * row;
        for (std::size_t e = 0; e < row; ++e) mass += static_cast<double>(w[e]) * static_cast<double>(w[e]);
        if (layer.spec.has_bias) {
            const double b = grads[slot::bias][c];
            mass += b * b;
        }
        out[c] += mass * scale;
    }
}

}  // namespace

VulnerabilityReport channel_vulnerability(const ModelGraph& model, const Dataset& calib, std::size_t workers)
{
    validate(model);
    if (model.num_classes < 2) throw ConfigError("channel vulnerability needs at least two classes");
    if (calib.size() == 0) throw ConfigError("channel vulnerability needs a non-empty calibration set");
    for (const auto& layer : model.layers) {
        if (layer.spec.kind == LayerKind::Edac) throw ConfigError("channel vulnerability expects an unhardened model");
    }
    const auto layer_ids = channel_layers(model);
    std::size_t total_channels = 0;
    for (const auto li : layer_ids) total_channels += output_channels(model.layers[li].spec);

    // One flat score vector per sample; reduced afterwards in sample order.
    std::vector<std::vector<double>> per_sample(calib.size());
    const std::size_t classes = model.num_classes;
    parallel_for(calib.size(), worker_count(workers), [&](std::size_t s) {
        const std::size_t idx[] = {s};
        ForwardCache cache;
        const Tensor logits = forward(model, calib.gather(idx), cache, Phase::Inference);
        const std::size_t t = argmax_row(logits.data());
        std::vector<double> acc(total_channels, 0.0);
        std::vector<double> layer_acc;
        for (std::size_t i = 0; i < classes; ++i) {
            if (i == t) continue;
            const double margin = static_cast<double>(logits[i]) - static_cast<double>(logits[t]);
            const double denom = margin * margin;
            if (!(denom >= 1e-12)) continue;
            Tensor og({1, classes}, 0.0f);
            og[i] = 1.0f;
            og[t] = -1.0f;
            const GradientSet grads = backward(model, cache, og);
            std::size_t offset = 0;
            for (const auto li : layer_ids) {
                const auto& layer = model.layers[li];
                const auto channels = output_channels(layer.spec);
                layer_acc.assign(channels, 0.0);
                add_channel_mass(layer, grads.layers[li], 1.0 / denom, layer_acc);
                for (std::size_t c = 0; c < channels; ++c) acc[offset + c] += layer_acc[c];
                offset += channels;
            }
        }
        per_sample[s] = std::move(acc);
    });

    std::vector<double> sum(total_channels, 0.0);
    for (const auto& v : per_sample) {
        for (std::size_t k = 0; k < total_channels; ++k) sum[k] += v[k];
    }
    VulnerabilityReport report;
    report.samples = calib.size();
    std::size_t offset = 0;
    for (const auto li : layer_ids) {
        const auto channels = output_channels(model.layers[li].spec);
        auto& scores = report.layers[li];
        scores.resize(channels);
        for (std::size_t c = 0; c < channels; ++c) scores[c] = sum[offset + c] / static_cast<double>(calib.size());
        offset += channels;
    }
    return report;
}

std::vector<ChannelId> select_channels(const VulnerabilityReport& report, double ratio, Direction direction)
{
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError(fmt::format("selection ratio {} is outside [0, 1]", ratio));
    std::vector<ChannelId> out;
    for (const auto& [layer, scores] : report.layers) {
        const std::size_t n = scores.size();
        // Guard against 0.3 * 10 = 3.0000000000000004 rounding up to 4.
        const auto k = std::min(n, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9)));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return direction == Direction::Most ? scores[a] > scores[b] : scores[a] < scores[b];
        });
        order.resize(k);
        std::sort(order.begin(), order.end());
        for (const auto c : order) out.push_back({layer, c});
    }
    return out;
}

void write_vulnerability_csv(const VulnerabilityReport& report, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << "layer_index,channel_index,score\n";
    for (const auto& [layer, scores] : report.layers) {
        for (std::size_t c = 0; c < scores.size(); ++c) out << fmt::format("{},{},{}\n", layer, c, scores[c]);
    }
    if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

VulnerabilityReport read_vulnerability_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != "layer_index,channel_index,score") {
        throw FormatError(fmt::format("'{}': missing vulnerability CSV header", path.string()));
    }
    VulnerabilityReport report;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f[3];
        for (auto& field : f) {
            if (!std::getline(ss, field, ',')) {
                throw FormatError(fmt::format("'{}':{}: expected 3 fields", path.string(), lineno));
            }
        }
        auto& scores = report.layers[std::stoul(f[0])];
        if (std::stoul(f[1]) != scores.size()) {
            throw FormatError(fmt::format("'{}':{}: channels must be listed in order", path.string(), lineno));
        }
        const double v = std::strtod(f[2].c_str(), nullptr);
        if (!(v >= 0.0)) throw FormatError(fmt::format("'{}':{}: score must be non-negative", path.string(), lineno));
        scores.push_back(v);
    }
    return report;
}

}  // namespace resilinet
