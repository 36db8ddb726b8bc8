#include "resilinet/config.hpp"

#include "resilinet/errors.hpp"

#include <fmt/format.h>
#include <fstream>
#include <initializer_list>

namespace resilinet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(fmt::format("unknown key '{}' in '{}'", key, where));
        }
    }
}

/// Rewrites a relative path string to an absolute one and returns it.
fs::path resolve(json& node, const fs::path& base)
{
    if (!node.is_string()) throw ConfigError("paths must be strings");
    fs::path p = node.get<std::string>();
    if (p.empty()) throw ConfigError("paths must not be empty");
    if (p.is_relative()) p = base / p;
    p = fs::absolute(p).lexically_normal();
    node = p.string();
    return p;
}

std::vector<fs::path> resolve_list(json& node, const fs::path& base)
{
    if (!node.is_array()) throw ConfigError("file lists must be arrays of paths");
    std::vector<fs::path> out;
    for (auto& item : node) out.push_back(resolve(item, base));
    return out;
}

/// Output names stay relative to the output directory and may not escape it.
std::string output_name(const json& node)
{
    const auto name = node.get<std::string>();
    const fs::path p(name);
    if (name.empty() || p.is_absolute() || p.has_parent_path()) {
        throw ConfigError(fmt::format("output name '{}' must be a plain file name", name));
    }
    return name;
}

template <typename T>
void read_if(const json& obj, const char* key, T& out)
{
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

double ratio_value(const json& obj, const char* key, double fallback)
{
    return obj.contains(key) ? obj.at(key).get<double>() : fallback;
}

TrainConfig parse_sgd(const json& j, TrainConfig cfg, std::string_view where)
{
    check_keys(j, where, {"epochs", "lr", "batch_size"});
    read_if(j, "epochs", cfg.epochs);
    read_if(j, "lr", cfg.lr);
    read_if(j, "batch_size", cfg.batch_size);
    if (cfg.batch_size == 0) throw ConfigError(fmt::format("{}.batch_size must be positive", where));
    if (!(cfg.lr >= 0.0f)) throw ConfigError(fmt::format("{}.lr must be non-negative", where));
    return cfg;
}

DatasetConfig parse_dataset(json& j, const fs::path& base)
{
    check_keys(j, "dataset", {"format", "num_classes", "train", "test", "normalization"});
    DatasetConfig d;
    if (j.contains("format")) d.format = dataset_format_from_string(j["format"].get<std::string>());
    read_if(j, "num_classes", d.num_classes);
    if (j.contains("train")) d.train = resolve_list(j["train"], base);
    if (j.contains("test")) d.test = resolve_list(j["test"], base);
    if (j.contains("normalization")) {
        const auto& n = j["normalization"];
        check_keys(n, "dataset.normalization", {"mean", "std"});
        d.normalization.mean = n.at("mean").get<std::vector<float>>();
        d.normalization.std = n.at("std").get<std::vector<float>>();
    }
    return d;
}

}  // namespace

void require_file(const fs::path& path, std::string_view what)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw ConfigError(fmt::format("{} '{}' does not exist", what, path.string()));
}

ExperimentConfig parse_config(const json& input, const fs::path& base_dir)
{
    ExperimentConfig cfg;
    cfg.document = input;
    json& doc = cfg.document;
    try {
        check_keys(doc, "config", {"schema_version", "seed", "output_dir", "model", "dataset", "train", "profile", "vuln",
                                   "harden", "prune", "inject", "report", "synth", "echo"});
        if (!doc.contains("schema_version") || doc["schema_version"] != kConfigSchemaVersion) {
            throw ConfigError(fmt::format("config needs \"schema_version\": {}", kConfigSchemaVersion));
        }
        if (doc.contains("seed")) {
            if (!doc["seed"].is_number_integer() || doc["seed"].get<std::int64_t>() < 0) throw ConfigError("seed must be a non-negative integer");
            cfg.seed = doc["seed"].get<std::uint64_t>();
        }
        if (!doc.contains("output_dir")) doc["output_dir"] = "out";
        cfg.output_dir = resolve(doc["output_dir"], base_dir);
        if (doc.contains("model")) cfg.model = resolve(doc["model"], base_dir);
        if (doc.contains("dataset")) cfg.dataset = parse_dataset(doc["dataset"], base_dir);

        if (doc.contains("train")) {
            auto& j = doc["train"];
            check_keys(j, "train", {"architecture", "epochs", "lr", "batch_size", "output_model"});
            TrainSection t;
            if (j.contains("architecture")) {
                const auto& a = j["architecture"];
                check_keys(a, "train.architecture",
                           {"in_channels", "side", "conv1", "conv2", "hidden", "classes", "batch_norm"});
                read_if(a, "in_channels", t.architecture.in_channels);
                read_if(a, "side", t.architecture.side);
                read_if(a, "conv1", t.architecture.conv1);
                read_if(a, "conv2", t.architecture.conv2);
                read_if(a, "hidden", t.architecture.hidden);
                read_if(a, "classes", t.architecture.classes);
                read_if(a, "batch_norm", t.architecture.batch_norm);
            }
            json sgd = json::object();
            for (const char* k : {"epochs", "lr", "batch_size"}) {
                if (j.contains(k)) sgd[k] = j[k];
            }
            t.sgd = parse_sgd(sgd, t.sgd, "train");
            if (j.contains("output_model")) t.output_model = output_name(j["output_model"]);
            cfg.train = t;
        }
        if (doc.contains("profile")) {
            auto& j = doc["profile"];
            check_keys(j, "profile", {"output"});
            ProfileSection p;
            if (j.contains("output")) p.output = output_name(j["output"]);
            cfg.profile = p;
        }
        if (doc.contains("vuln")) {
            auto& j = doc["vuln"];
            check_keys(j, "vuln", {"calibration_samples", "output"});
            VulnSection v;
            read_if(j, "calibration_samples", v.calibration_samples);
            if (v.calibration_samples == 0) throw ConfigError("vuln.calibration_samples must be positive");
            if (j.contains("output")) v.output = output_name(j["output"]);
            cfg.vuln = v;
        }
        if (doc.contains("harden")) {
            auto& j = doc["harden"];
            check_keys(j, "harden", {"intervals", "vulnerability", "ratio", "mode", "interval_scope", "output_model"});
            HardenSection h;
            h.vulnerability = resolve(j.at("vulnerability"), base_dir);
            if (j.contains("intervals")) h.intervals = resolve(j["intervals"], base_dir);
            h.ratio = ratio_value(j, "ratio", 0.0);
            if (!(h.ratio >= 0.0 && h.ratio <= 1.0)) throw ConfigError("harden.ratio must lie in [0, 1]");
            if (j.contains("mode")) h.mode = hardening_mode_from_string(j["mode"].get<std::string>());
            if (j.contains("interval_scope")) {
                h.interval_scope = interval_scope_from_string(j["interval_scope"].get<std::string>());
            }
            if (h.mode == HardeningMode::Duplicate && h.intervals.empty()) {
                throw ConfigError("harden.intervals is required in duplicate mode");
            }
            if (j.contains("output_model")) h.output_model = output_name(j["output_model"]);
            cfg.harden = h;
        }
        if (doc.contains("prune")) {
            auto& j = doc["prune"];
            check_keys(j, "prune",
                       {"scores", "vulnerability", "calibration_samples", "conv_ratio", "fc_ratio", "fine_tune",
                        "output_model"});
            PruneSection p;
            if (j.contains("scores")) p.scores = score_source_from_string(j["scores"].get<std::string>());
            if (j.contains("vulnerability")) p.vulnerability = resolve(j["vulnerability"], base_dir);
            read_if(j, "calibration_samples", p.calibration_samples);
            p.ratios.conv_ratio = ratio_value(j, "conv_ratio", 0.0);
            p.ratios.fc_ratio = ratio_value(j, "fc_ratio", 0.0);
            for (const double r : {p.ratios.conv_ratio, p.ratios.fc_ratio}) {
                if (!(r >= 0.0 && r < 1.0)) throw ConfigError("prune ratios must lie in [0, 1)");
            }
            p.fine_tune = parse_sgd(j.value("fine_tune", json::object()), TrainConfig{10, 0.001f, 32, 0}, "prune.fine_tune");
            if (j.contains("output_model")) p.output_model = output_name(j["output_model"]);
            cfg.prune = p;
        }
        if (doc.contains("inject")) {
            auto& j = doc["inject"];
            check_keys(j, "inject", {"bers", "trials", "workers", "prefix"});
            InjectSection s;
            s.bers = j.at("bers").get<std::vector<double>>();
            if (s.bers.empty()) throw ConfigError("inject.bers must not be empty");
            for (const double b : s.bers) {
                if (!(b > 0.0 && b <= 1.0)) throw ConfigError(fmt::format("BER {} is outside (0, 1]", b));
            }
            read_if(j, "trials", s.trials);
            if (s.trials == 0) throw ConfigError("inject.trials must be at least 1");
            read_if(j, "workers", s.workers);
            if (j.contains("prefix")) s.prefix = output_name(j["prefix"]);
            cfg.inject = s;
        }
        if (doc.contains("report")) {
            auto& j = doc["report"];
            check_keys(j, "report", {"variants", "timing_repeats", "output"});
            ReportSection r;
            for (auto& v : j.at("variants")) {
                check_keys(v, "report.variants[]", {"name", "model", "baseline", "hardening_ratio", "campaign"});
                ReportVariant rv;
                rv.name = v.at("name").get<std::string>();
                if (rv.name.empty() || rv.name.find_first_of(",\"\n") != std::string::npos) {
                    throw ConfigError(fmt::format("variant name '{}' must be non-empty without commas or quotes", rv.name));
                }
                rv.model = resolve(v.at("model"), base_dir);
                if (v.contains("baseline")) rv.baseline = resolve(v["baseline"], base_dir);
                rv.hardening_ratio = ratio_value(v, "hardening_ratio", 0.0);
                rv.campaign = resolve(v.at("campaign"), base_dir);
                r.variants.push_back(std::move(rv));
            }
            if (r.variants.empty()) throw ConfigError("report.variants must not be empty");
            read_if(j, "timing_repeats", r.timing_repeats);
            if (r.timing_repeats == 0) throw ConfigError("report.timing_repeats must be positive");
            if (j.contains("output")) r.output = output_name(j["output"]);
            cfg.report = r;
        }
        if (doc.contains("synth")) {
            auto& j = doc["synth"];
            check_keys(j, "synth", {"train_count", "test_count", "side"});
            SynthSection s;
            read_if(j, "train_count", s.train_count);
            read_if(j, "test_count", s.test_count);
            read_if(j, "side", s.side);
            cfg.synth = s;
        }
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    auto cfg = parse_config(doc, fs::absolute(path).parent_path());
    cfg.source = fs::absolute(path);
    return cfg;
}

}  // namespace resilinet
