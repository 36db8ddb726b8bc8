#include "resilinet/fault.hpp"

#include "resilinet/errors.hpp"
#include "resilinet/model_io.hpp"
#include "resilinet/parallel.hpp"
#include "resilinet/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

namespace resilinet {

float bitflip(float value, unsigned bit)
{
    if (bit > 31) throw ConfigError(fmt::format("bit position {} is outside [0, 31]", bit));
    return std::bit_cast<float>(std::bit_cast<std::uint32_t>(value) ^ (std::uint32_t{1} << bit));
}

std::uint64_t layer_param_count(const Layer& layer)
{
    std::uint64_t n = 0;
    for (const auto& t : layer.params) n += t.size();
    return n;
}

std::uint64_t flip_count(double ber, std::uint64_t params)
{
    if (!(ber > 0.0 && ber <= 1.0)) throw ConfigError(fmt::format("BER {} is outside (0, 1]", ber));
    // nearbyint honours the default round-to-nearest-even mode.
    const double n = std::nearbyint(ber * static_cast<double>(params) * 32.0);
    const auto count = static_cast<std::uint64_t>(n);
    if (count > params * 32) throw ConfigError("flip count exceeds the number of bits");
    return count;
}

FlipPlan plan_flips(const ModelGraph& model, double ber, std::uint64_t seed, std::uint64_t trial)
{
    FlipPlan plan;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const std::uint64_t params = layer_param_count(model.layers[li]);
        if (params == 0) continue;
        const std::uint64_t n = flip_count(ber, params);
        if (n == 0) continue;
        Rng rng(derive_seed(seed, {trial, li}));
        for (const auto pos : sample_without_replacement(rng, params * 32, n)) {
            plan.push_back({static_cast<std::uint32_t>(li), pos / 32, static_cast<std::uint8_t>(pos % 32)});
        }
    }
    std::sort(plan.begin(), plan.end());
    return plan;
}

void apply_flips_inplace(ModelGraph& model, const FlipPlan& plan)
{
    for (const auto& f : plan) {
        if (f.layer >= model.layers.size()) throw ConfigError(fmt::format("flip targets missing layer {}", f.layer));
        if (f.bit > 31) throw ConfigError(fmt::format("flip targets bit {}", f.bit));
        auto& params = model.layers[f.layer].params;
        std::uint64_t e = f.element;
        std::size_t s = 0;
        while (s < params.size() && e >= params[s].size()) e -= params[s++].size();
        if (s == params.size()) {
            throw ConfigError(fmt::format("flip targets element {} beyond layer {}", f.element, f.layer));
        }
        float& v = params[s][static_cast<std::size_t>(e)];
        v = bitflip(v, f.bit);
    }
}

ModelGraph apply_flips(const ModelGraph& model, const FlipPlan& plan)
{
    ModelGraph out = model;
    apply_flips_inplace(out, plan);
    return out;
}

const BerSummary& CampaignResult::at(double ber) const
{
    for (const auto& s : summary) {
        if (s.ber == ber) return s;
    }
    throw ConfigError(fmt::format("campaign has no BER {}", ber));
}

CampaignResult run_campaign(const ModelGraph& model, const Dataset& ds, const CampaignConfig& cfg)
{
    validate(model);
    if (cfg.bers.empty()) throw ConfigError("campaign needs at least one BER");
    if (cfg.trials == 0) throw ConfigError("campaign needs at least one trial");
    if (ds.size() == 0) throw ConfigError("campaign needs a non-empty evaluation set");
    for (const double ber : cfg.bers) flip_count(ber, 1);

    CampaignResult result;
    result.seed = cfg.seed;
    const std::size_t clean_correct = count_correct(model, ds);
    const double n = static_cast<double>(ds.size());
    result.clean_accuracy = 100.0 * static_cast<double>(clean_correct) / n;

    const std::size_t tasks = cfg.bers.size() * cfg.trials;
    std::vector<std::size_t> correct(tasks);
    parallel_for(tasks, worker_count(cfg.workers), [&](std::size_t task) {
        const double ber = cfg.bers[task / cfg.trials];
        const std::size_t trial = task % cfg.trials;
        const FlipPlan plan = plan_flips(model, ber, cfg.seed, trial);
        correct[task] = plan.empty() ? clean_correct : count_correct(apply_flips(model, plan), ds);
    });

    result.trials.reserve(tasks);
    for (std::size_t b = 0; b < cfg.bers.size(); ++b) {
        BerSummary s;
        s.ber = cfg.bers[b];
        s.trials = cfg.trials;
        // Integer tallies keep accuracies and drops free of accumulated rounding.
        std::int64_t sum = 0;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            const auto c = static_cast<std::int64_t>(correct[b * cfg.trials + t]);
            const double acc = 100.0 * static_cast<double>(c) / n;
            const double drop = 100.0 * static_cast<double>(static_cast<std::int64_t>(clean_correct) - c) / n;
            result.trials.push_back({s.ber, t, acc, drop});
            sum += c;
        }
        const double total = n * static_cast<double>(cfg.trials);
        const auto clean_sum = static_cast<std::int64_t>(clean_correct * cfg.trials);
        s.mean_accuracy = 100.0 * static_cast<double>(sum) / total;
        s.mean_drop = 100.0 * static_cast<double>(clean_sum - sum) / total;
        result.summary.push_back(s);
    }
    return result;
}

void write_campaign_csv(const CampaignResult& result, const std::filesystem::path& dir, const std::string& prefix)
{
    const auto open = [&](const std::string& name) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
        return out;
    };
    {
        auto out = open(prefix + "_trials.csv");
        out << "ber,trial,accuracy,drop\n";
        for (const auto& t : result.trials) out << fmt::format("{},{},{},{}\n", t.ber, t.trial, t.accuracy, t.drop);
        if (!out) throw IoError("write failed for trial CSV");
    }
    auto out = open(prefix + "_summary.csv");
    out << "ber,mean_accuracy,mean_drop,trials,seed\n";
    for (const auto& s : result.summary) {
        out << fmt::format("{},{},{},{},{}\n", s.ber, s.mean_accuracy, s.mean_drop, s.trials, result.seed);
    }
    if (!out) throw IoError("write failed for summary CSV");
}

}  // namespace resilinet
