#pragma once

#include "resilinet/config.hpp"
#include "resilinet/dataset.hpp"
#include "resilinet/engine.hpp"
#include "resilinet/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace resilinet {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes the resolved config (itself a valid config file) plus an "echo" section with
/// the command, seed and SHA-256 of `artifacts` to `path`.
void write_config_echo(const std::filesystem::path& path, const ExperimentConfig& cfg, std::string_view command,
                       const std::vector<std::filesystem::path>& artifacts);

/// Best-of-`repeats` wall-clock milliseconds to run inference over all of `ds`.
double time_inference(const ModelGraph& model, const Dataset& ds, std::size_t repeats);

struct SummaryRow {
    double ber = 0.0;
    double mean_accuracy = 0.0;
    double mean_drop = 0.0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

struct VariantReport {
    std::string name;
    double hardening_ratio = 0.0;
    ModelCost cost;
    double param_overhead_percent = 0.0;  ///< vs the variant's baseline, 0 without one
    double mac_overhead_percent = 0.0;
    double inference_ms = 0.0;
    double time_overhead_percent = 0.0;
    std::vector<SummaryRow> campaign;
};

/// Columns: variant,hardening_ratio,ber,mean_accuracy,mean_drop,trials,seed,params,macs,
/// param_overhead_percent,mac_overhead_percent,inference_ms,time_overhead_percent.
/// One row per (variant, BER).
void write_comparison_csv(const std::vector<VariantReport>& variants, const std::filesystem::path& path);

}  // namespace resilinet
