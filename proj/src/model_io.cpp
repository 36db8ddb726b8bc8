#include "resilinet/model_io.hpp"

#include "resilinet/engine.hpp"
#include "resilinet/errors.hpp"

#include <bit>
#include <cstdlib>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace resilinet {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "NNHM";
constexpr std::size_t kHeaderBytes = 4 + 4 + 8;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes)
{
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t offset, int bytes)
{
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t{in[offset + i]} << (8 * i);
    return v;
}

json layer_to_json(const LayerSpec& spec)
{
    json j{{"kind", to_string(spec.kind)}};
    switch (spec.kind) {
    case LayerKind::Conv2D: {
        const auto& g = spec.conv();
        j["in_channels"] = g.in_channels;
        j["out_channels"] = g.out_channels;
        j["kernel"] = {g.kernel_h, g.kernel_w};
        j["stride"] = g.stride;
        j["padding"] = g.padding;
        j["has_bias"] = spec.has_bias;
        break;
    }
    case LayerKind::FullyConnected:
        j["in_features"] = spec.fc().in_features;
        j["out_features"] = spec.fc().out_features;
        j["has_bias"] = spec.has_bias;
        break;
    case LayerKind::BatchNorm:
        j["channels"] = spec.bn().channels;
        j["eps"] = spec.bn().eps;
        break;
    case LayerKind::MaxPool:
        j["window"] = spec.pool().window;
        j["stride"] = spec.pool().stride;
        break;
    case LayerKind::Edac: {
        const auto& g = spec.edac();
        j["mode"] = to_string(g.mode);
        j["interval_scope"] = to_string(g.scope);
        j["physical_channels"] = g.physical_channels;
        j["groups"] = g.groups;
        break;
    }
    case LayerKind::ReLU:
    case LayerKind::Flatten: break;
    }
    return j;
}

LayerSpec layer_from_json(const json& j)
{
    const auto kind = layer_kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
    case LayerKind::Conv2D: {
        LayerSpec s = LayerSpec::conv2d(j.at("in_channels"), j.at("out_channels"), 1, j.at("stride"), j.at("padding"),
                                        j.at("has_bias"));
        s.conv().kernel_h = j.at("kernel").at(0);
        s.conv().kernel_w = j.at("kernel").at(1);
        return s;
    }
    case LayerKind::FullyConnected:
        return LayerSpec::fully_connected(j.at("in_features"), j.at("out_features"), j.at("has_bias"));
    case LayerKind::BatchNorm: return LayerSpec::batch_norm(j.at("channels"), j.at("eps").get<float>());
    case LayerKind::ReLU: return LayerSpec::relu();
    case LayerKind::MaxPool: return LayerSpec::max_pool(j.at("window"), j.at("stride"));
    case LayerKind::Flatten: return LayerSpec::flatten();
    case LayerKind::Edac: {
        EdacGeometry g;
        g.mode = hardening_mode_from_string(j.at("mode").get<std::string>());
        g.scope = interval_scope_from_string(j.at("interval_scope").get<std::string>());
        g.physical_channels = j.at("physical_channels");
        g.groups = j.at("groups").get<std::vector<std::vector<std::size_t>>>();
        return LayerSpec::edac(std::move(g));
    }
    }
    throw FormatError("unreachable layer kind");
}

json plan_to_json(const HardeningPlan& plan)
{
    json channels = json::array();
    for (const auto& c : plan.channels) channels.push_back({c.layer, c.channel});
    return {{"mode", to_string(plan.mode)}, {"interval_scope", to_string(plan.scope)}, {"channels", channels}};
}

HardeningPlan plan_from_json(const json& j)
{
    HardeningPlan plan;
    plan.mode = hardening_mode_from_string(j.at("mode").get<std::string>());
    plan.scope = interval_scope_from_string(j.at("interval_scope").get<std::string>());
    for (const auto& c : j.at("channels")) plan.channels.push_back({c.at(0), c.at(1)});
    return plan;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelGraph& model)
{
    validate(model);
    json manifest;
    manifest["format"] = kMagic;
    manifest["version"] = kContainerVersion;
    manifest["input_shape"] = model.input_shape;
    manifest["num_classes"] = model.num_classes;
    manifest["layers"] = json::array();
    manifest["tensors"] = json::array();
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        manifest["layers"].push_back(layer_to_json(layer.spec));
        for (std::size_t s = 0; s < layer.params.size(); ++s) {
            const auto& t = layer.params[s];
            manifest["tensors"].push_back({{"layer", i},
                                           {"name", param_name(layer.spec.kind, s)},
                                           {"shape", t.shape()},
                                           {"offset", offset},
                                           {"count", t.size()}});
            offset += t.size();
        }
    }
    manifest["hardening"] = model.hardening ? plan_to_json(*model.hardening) : json(nullptr);
    const std::string text = manifest.dump(1);

    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + text.size() + offset * 4);
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put_le(out, kContainerVersion, 4);
    put_le(out, text.size(), 8);
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& layer : model.layers) {
        for (const auto& t : layer.params) {
            for (const float v : t.data()) put_le(out, std::bit_cast<std::uint32_t>(v), 4);
        }
    }
    return out;
}

ModelGraph deserialize_model(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kHeaderBytes) throw FormatError("truncated header: file shorter than the NNHM header");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("not an NNHM container (bad magic)");
    const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
    if (version != kContainerVersion) {
        throw FormatError(fmt::format("version mismatch: container version {} is not supported (expected {})", version,
                                      kContainerVersion));
    }
    const std::uint64_t manifest_len = get_le(bytes, 8, 8);
    if (manifest_len > bytes.size() - kHeaderBytes) throw FormatError("truncated manifest");
    const auto* mbegin = reinterpret_cast<const char*>(bytes.data() + kHeaderBytes);
    json manifest;
    try {
        manifest = json::parse(mbegin, mbegin + manifest_len);
    } catch (const json::parse_error& e) {
        throw FormatError(fmt::format("manifest is not valid JSON: {}", e.what()));
    }
    const auto blob = bytes.subspan(kHeaderBytes + manifest_len);
    const std::uint64_t blob_floats = blob.size() / 4;

    ModelGraph model;
    try {
        model.input_shape = manifest.at("input_shape").get<Shape>();
        model.num_classes = manifest.at("num_classes");
        for (const auto& lj : manifest.at("layers")) {
            Layer layer;
            layer.spec = layer_from_json(lj);
            model.layers.push_back(std::move(layer));
        }
        for (const auto& tj : manifest.at("tensors")) {
            const std::size_t li = tj.at("layer");
            if (li >= model.layers.size()) throw FormatError(fmt::format("tensor refers to missing layer {}", li));
            auto& layer = model.layers[li];
            const std::size_t s = layer.params.size();
            if (s >= param_slot_count(layer.spec)) {
                throw FormatError(fmt::format("layer {} has more tensors than its kind allows", li));
            }
            const auto name = tj.at("name").get<std::string>();
            if (name != param_name(layer.spec.kind, s)) {
                throw FormatError(fmt::format("layer {}: expected tensor '{}', found '{}'", li,
                                              param_name(layer.spec.kind, s), name));
            }
            const auto shape = tj.at("shape").get<Shape>();
            const std::uint64_t offset = tj.at("offset");
            const std::uint64_t count = tj.at("count");
            if (shape.empty() || shape_size(shape) != count) {
                throw FormatError(fmt::format("shape/blob-length mismatch: layer {} tensor '{}' has shape {} but count {}",
                                              li, name, shape_to_string(shape), count));
            }
            if (shape != param_shape(layer.spec, s)) {
                throw FormatError(fmt::format("shape/blob-length mismatch: layer {} tensor '{}' shape {} does not match "
                                              "the layer geometry {}",
                                              li, name, shape_to_string(shape),
                                              shape_to_string(param_shape(layer.spec, s))));
            }
            if (offset > blob_floats || count > blob_floats - offset) {
                throw FormatError(fmt::format("truncated blob: layer {} tensor '{}' needs floats [{}, {}) but the blob "
                                              "holds {}",
                                              li, name, offset, offset + count, blob_floats));
            }
            std::vector<float> data(count);
            for (std::uint64_t e = 0; e < count; ++e) {
                data[e] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(blob, (offset + e) * 4, 4)));
            }
            layer.params.emplace_back(shape, std::move(data));
        }
        if (manifest.contains("hardening") && !manifest["hardening"].is_null()) {
            model.hardening = plan_from_json(manifest["hardening"]);
        }
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("malformed manifest: {}", e.what()));
    }
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (model.layers[i].params.size() != param_slot_count(model.layers[i].spec)) {
            throw FormatError(fmt::format("layer {} is missing parameter tensors", i));
        }
    }
    try {
        validate(model);
    } catch (const ShapeError& e) {
        throw FormatError(fmt::format("invalid model: {}", e.what()));
    }
    return model;
}

void save_model(const ModelGraph& model, const std::filesystem::path& path)
{
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write model to '{}'", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

ModelGraph load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open model '{}'", path.string()));
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return deserialize_model(bytes);
    } catch (const FormatError& e) {
        throw FormatError(fmt::format("'{}': {}", path.string(), e.what()));
    }
}

void write_intervals_csv(const IntervalTable& table, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << "layer_index,channel_index,lower,upper\n";
    for (const auto& [layer, iv] : table.layers) {
        for (std::size_t c = 0; c < iv.lower.size(); ++c) {
            out << fmt::format("{},{},{},{}\n", layer, c, iv.lower[c], iv.upper[c]);
        }
    }
    if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

IntervalTable read_intervals_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != "layer_index,channel_index,lower,upper") {
        throw FormatError(fmt::format("'{}': missing interval CSV header", path.string()));
    }
    IntervalTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f[4];
        for (auto& field : f) {
            if (!std::getline(ss, field, ',')) throw FormatError(fmt::format("'{}':{}: expected 4 fields", path.string(), lineno));
        }
        const std::size_t layer = std::stoul(f[0]);
        const std::size_t ch = std::stoul(f[1]);
        auto& iv = table.layers[layer];
        if (ch != iv.lower.size()) {
            throw FormatError(fmt::format("'{}':{}: channels must be listed in order", path.string(), lineno));
        }
        iv.lower.push_back(std::strtof(f[2].c_str(), nullptr));
        iv.upper.push_back(std::strtof(f[3].c_str(), nullptr));
    }
    return table;
}

std::size_t argmax_row(std::span<const float> logits)
{
    // NaN never wins; an all-NaN row predicts class 0.
    std::size_t best = 0;
    while (best < logits.size() && std::isnan(logits[best])) ++best;
    if (best == logits.size()) return 0;
    for (std::size_t i = best + 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return best;
}

namespace {
constexpr std::size_t kEvalChunk = 256;
}

std::size_t count_correct(const ModelGraph& model, const Dataset& ds)
{
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < ds.size(); begin += kEvalChunk) {
        const std::size_t end = std::min(ds.size(), begin + kEvalChunk);
        const Tensor logits = forward(model, ds.batch(begin, end));
        const std::size_t c = logits.dim(1);
        for (std::size_t i = 0; i < end - begin; ++i) {
            if (argmax_row(logits.data().subspan(i * c, c)) == static_cast<std::size_t>(ds.labels[begin + i])) ++correct;
        }
    }
    return correct;
}

double evaluate(const ModelGraph& model, const Dataset& ds)
{
    if (ds.size() == 0) return 0.0;
    return 100.0 * static_cast<double>(count_correct(model, ds)) / static_cast<double>(ds.size());
}

IntervalTable profile_intervals(const ModelGraph& model, const Dataset& ds)
{
    if (ds.size() == 0) throw ConfigError("cannot profile detection intervals on an empty dataset");
    IntervalTable table;
    for (const auto li : channel_layers(model)) {
        const auto c = output_channels(model.layers[li].spec);
        table.layers[li] = {std::vector<float>(c, std::numeric_limits<float>::infinity()),
                            std::vector<float>(c, -std::numeric_limits<float>::infinity())};
    }
    const LayerObserver observe = [&](std::size_t li, const Tensor& out) {
        if (!is_channel_layer(model.layers[li].spec.kind)) return;
        auto& iv = table.layers[li];
        const std::size_t n = out.dim(0);
        const std::size_t c = out.dim(1);
        const std::size_t plane = out.size() / (n * c);
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const float* p = out.raw() + (s * c + ch) * plane;
                float lo = iv.lower[ch];
                float hi = iv.upper[ch];
                for (std::size_t i = 0; i < plane; ++i) {
                    if (p[i] < lo) lo = p[i];
                    if (p[i] > hi) hi = p[i];
                }
                iv.lower[ch] = lo;
                iv.upper[ch] = hi;
            }
        }
    };
    for (std::size_t begin = 0; begin < ds.size(); begin += kEvalChunk) {
        forward_observed(model, ds.batch(begin, std::min(ds.size(), begin + kEvalChunk)), observe);
    }
    return table;
}

}  // namespace resilinet
