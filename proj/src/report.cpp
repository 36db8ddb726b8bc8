#include "resilinet/report.hpp"

#include "resilinet/errors.hpp"
#include "resilinet/model_io.hpp"

#include <chrono>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <memory>
#include <openssl/evp.h>
#include <sstream>

namespace resilinet {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}' for hashing", path.string()));
    const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialisation failed");
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

void write_config_echo(const fs::path& path, const ExperimentConfig& cfg, std::string_view command,
                       const std::vector<fs::path>& artifacts)
{
    nlohmann::json doc = cfg.document;
    nlohmann::json hashes = nlohmann::json::object();
    for (const auto& a : artifacts) hashes[a.string()] = sha256_file(a);
    doc["echo"] = {{"command", command}, {"config_file", cfg.source.string()}, {"artifacts", hashes}};
    doc["echo"]["seed"] = cfg.seed ? nlohmann::json(*cfg.seed) : nlohmann::json(nullptr);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << doc.dump(2) << '\n';
    if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

double time_inference(const ModelGraph& model, const Dataset& ds, std::size_t repeats)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        count_correct(model, ds);
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

std::vector<SummaryRow> read_summary_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != "ber,mean_accuracy,mean_drop,trials,seed") {
        throw FormatError(fmt::format("'{}': not a campaign summary CSV", path.string()));
    }
    std::vector<SummaryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f[5];
        for (auto& field : f) {
            if (!std::getline(ss, field, ',')) throw FormatError(fmt::format("'{}': short summary row", path.string()));
        }
        rows.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stoul(f[3]), std::stoull(f[4])});
    }
    if (rows.empty()) throw FormatError(fmt::format("'{}': campaign summary has no rows", path.string()));
    return rows;
}

void write_comparison_csv(const std::vector<VariantReport>& variants, const fs::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << "variant,hardening_ratio,ber,mean_accuracy,mean_drop,trials,seed,params,macs,param_overhead_percent,"
           "mac_overhead_percent,inference_ms,time_overhead_percent\n";
    for (const auto& v : variants) {
        for (const auto& r : v.campaign) {
            out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", v.name, v.hardening_ratio, r.ber,
                               r.mean_accuracy, r.mean_drop, r.trials, r.seed, v.cost.params, v.cost.macs,
                               v.param_overhead_percent, v.mac_overhead_percent, v.inference_ms,
                               v.time_overhead_percent);
        }
    }
    if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace resilinet
