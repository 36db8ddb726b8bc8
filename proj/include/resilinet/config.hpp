#pragma once

#include "resilinet/dataset.hpp"
#include "resilinet/desk.hpp"
#include "resilinet/model.hpp"
#include "resilinet/pruning.hpp"
#include "resilinet/training.hpp"

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace resilinet {

/// Config files are JSON objects with "schema_version": 1. Input paths are resolved
/// against the directory holding the config file; output file names against the
/// output directory. Unknown sections are rejected, except "echo", which holds
/// provenance written by the CLI and is ignored on input.
inline constexpr int kConfigSchemaVersion = 1;

struct DatasetConfig {
    DatasetFormat format = DatasetFormat::Idx;
    std::size_t num_classes = 10;
    std::vector<std::filesystem::path> train;
    std::vector<std::filesystem::path> test;
    Normalization normalization;
};

struct TrainSection {
    DeskCnnConfig architecture;
    TrainConfig sgd{8, 0.05f, 32, 0};
    std::string output_model = "baseline.nnhm";
};

struct ProfileSection {
    std::string output = "intervals.csv";
};

struct VulnSection {
    std::size_t calibration_samples = 1024;
    std::string output = "vulnerability.csv";
};

struct HardenSection {
    std::filesystem::path intervals;
    std::filesystem::path vulnerability;
    double ratio = 0.0;
    HardeningMode mode = HardeningMode::Duplicate;
    IntervalScope interval_scope = IntervalScope::AllChannels;
    std::string output_model = "hardened.nnhm";
};

struct PruneSection {
    ScoreSource scores = ScoreSource::Vulnerability;
    std::optional<std::filesystem::path> vulnerability;  ///< precomputed scores; recomputed when absent
    std::size_t calibration_samples = 1024;
    PruneConfig ratios;
    TrainConfig fine_tune;  ///< epochs 10, lr 0.001 by default
    std::string output_model = "pruned.nnhm";
};

struct InjectSection {
    std::vector<double> bers;
    std::size_t trials = 1000;
    std::size_t workers = 0;
    std::string prefix = "campaign";
};

struct ReportVariant {
    std::string name;
    std::filesystem::path model;
    std::optional<std::filesystem::path> baseline;
    double hardening_ratio = 0.0;
    std::filesystem::path campaign;  ///< a `<prefix>_summary.csv`
};

struct ReportSection {
    std::vector<ReportVariant> variants;
    std::size_t timing_repeats = 3;
    std::string output = "comparison.csv";
};

struct SynthSection {
    std::size_t train_count = 4000;
    std::size_t test_count = 1000;
    std::size_t side = 16;
};

struct ExperimentConfig {
    std::filesystem::path source;
    /// The parsed document with every path made absolute; written back as the config echo.
    nlohmann::json document;
    std::optional<std::uint64_t> seed;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> model;
    std::optional<DatasetConfig> dataset;
    std::optional<TrainSection> train;
    std::optional<ProfileSection> profile;
    std::optional<VulnSection> vuln;
    std::optional<HardenSection> harden;
    std::optional<PruneSection> prune;
    std::optional<InjectSection> inject;
    std::optional<ReportSection> report;
    std::optional<SynthSection> synth;
};

/// Throws ConfigError on syntax, schema or value errors (not on missing files).
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError unless `path` names an existing regular file.
void require_file(const std::filesystem::path& path, std::string_view what);

}  // namespace resilinet
