#include "resilinet/cli.hpp"

#include "resilinet/config.hpp"
#include "resilinet/desk.hpp"
#include "resilinet/errors.hpp"
#include "resilinet/fault.hpp"
#include "resilinet/hardening.hpp"
#include "resilinet/model_io.hpp"
#include "resilinet/pruning.hpp"
#include "resilinet/random.hpp"
#include "resilinet/report.hpp"
#include "resilinet/training.hpp"
#include "resilinet/vulnerability.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fstream>
#include <iostream>

namespace resilinet {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::string model;
};

/// Shared state of one invocation: the config plus what the command read.
class Run {
public:
    Run(std::string command, const Options& opt) : command_(std::move(command))
    {
        cfg_ = load_config(opt.config);
        if (!opt.output_dir.empty()) {
            cfg_.output_dir = fs::absolute(opt.output_dir).lexically_normal();
            cfg_.document["output_dir"] = cfg_.output_dir.string();
        }
        if (opt.seed) {
            cfg_.seed = opt.seed;
            cfg_.document["seed"] = *opt.seed;
        }
    }

    const ExperimentConfig& cfg() const { return cfg_; }

    std::uint64_t seed() const
    {
        if (!cfg_.seed) throw ConfigError(fmt::format("'{}' is stochastic and needs a \"seed\"", command_));
        return *cfg_.seed;
    }

    const DatasetConfig& dataset() const
    {
        if (!cfg_.dataset) throw ConfigError(fmt::format("'{}' needs a \"dataset\" section", command_));
        return *cfg_.dataset;
    }

    /// Checks that a split is configured and its files exist; remembers them as artifacts.
    void need_split(Split split)
    {
        const auto& files = split == Split::Train ? dataset().train : dataset().test;
        if (files.empty()) throw ConfigError(fmt::format("'{}' needs dataset.{}", command_, to_string(split)));
        for (const auto& f : files) need_file(f, fmt::format("dataset.{} file", to_string(split)));
    }

    void need_model()
    {
        if (!cfg_.model) throw ConfigError(fmt::format("'{}' needs \"model\"", command_));
        need_file(*cfg_.model, "model");
    }

    void need_file(const fs::path& path, std::string_view what)
    {
        require_file(path, what);
        artifacts_.push_back(path);
    }

    Dataset load(Split split) const
    {
        const auto& d = dataset();
        return load_dataset({d.format, split == Split::Train ? d.train : d.test}, d.num_classes, split, d.normalization);
    }

    ModelGraph model() const { return load_model(*cfg_.model); }

    /// Creates the output directory; call only after all validation passed.
    fs::path out(std::string_view name = {}) const
    {
        fs::create_directories(cfg_.output_dir);
        return name.empty() ? cfg_.output_dir : cfg_.output_dir / name;
    }

    /// `<stem>_config_echo.json`; the stem defaults to the command name.
    void echo(std::string_view stem = {}) const
    {
        write_config_echo(out(fmt::format("{}_config_echo.json", stem.empty() ? command_ : stem)), cfg_, command_,
                          artifacts_);
    }

private:
    std::string command_;
    ExperimentConfig cfg_;
    std::vector<fs::path> artifacts_;
};

template <typename T>
const T& section(const std::optional<T>& s, std::string_view name)
{
    if (!s) throw ConfigError(fmt::format("config needs a \"{}\" section", name));
    return *s;
}

void cmd_synth(Run& run)
{
    const std::uint64_t seed = run.seed();
    const SynthSection s = run.cfg().synth.value_or(SynthSection{});
    const auto train = make_glyphs({s.train_count, s.side, derive_seed(seed, {1})});
    const auto test = make_glyphs({s.test_count, s.side, derive_seed(seed, {2})});
    train.write_idx(run.out("train-images-idx3-ubyte"), run.out("train-labels-idx1-ubyte"));
    test.write_idx(run.out("t10k-images-idx3-ubyte"), run.out("t10k-labels-idx1-ubyte"));
    run.echo();
    fmt::print("wrote {} train and {} test glyphs ({}x{}) to {}\n", s.train_count, s.test_count, s.side, s.side,
               run.out().string());
}

void cmd_train(Run& run)
{
    const std::uint64_t seed = run.seed();
    run.need_split(Split::Train);
    const bool has_test = !run.dataset().test.empty();
    if (has_test) run.need_split(Split::Test);
    TrainSection t = run.cfg().train.value_or(TrainSection{});
    const Dataset train = run.load(Split::Train);
    const Shape sample = train.sample_shape();
    if (sample.size() != 3 || sample[1] != sample[2]) throw ConfigError("training expects square [C, H, W] images");
    const auto* arch = run.cfg().document.contains("train") ? &run.cfg().document["train"] : nullptr;
    const auto mismatch = [&](const char* key, std::size_t want) {
        if (arch && arch->contains("architecture") && (*arch)["architecture"].contains(key) &&
            (*arch)["architecture"][key].get<std::size_t>() != want) {
            throw ConfigError(fmt::format("train.architecture.{} does not match the dataset ({})", key, want));
        }
    };
    mismatch("in_channels", sample[0]);
    mismatch("side", sample[1]);
    mismatch("classes", train.num_classes);
    t.architecture.in_channels = sample[0];
    t.architecture.side = sample[1];
    t.architecture.classes = train.num_classes;
    t.sgd.seed = seed;

    ModelGraph model = make_desk_cnn(t.architecture, derive_seed(seed, {0x1417}));
    const Dataset test = has_test ? run.load(Split::Test) : Dataset{};
    std::ofstream log(run.out("train_log.csv"), std::ios::trunc);
    log << "epoch,loss,test_accuracy\n";
    train_sgd(model, train, t.sgd, [&](std::size_t epoch, double loss) {
        const double acc = has_test ? evaluate(model, test) : 0.0;
        log << fmt::format("{},{},{}\n", epoch, loss, acc);
        fmt::print("epoch {:>3}  loss {:.5f}{}\n", epoch, loss, has_test ? fmt::format("  test {:.2f}%", acc) : "");
    });
    save_model(model, run.out(t.output_model));
    run.echo();
    const auto cost = count_params_macs(model);
    fmt::print("saved {} ({} params, {} MACs)\n", run.out(t.output_model).string(), cost.params, cost.macs);
}

void cmd_profile(Run& run)
{
    run.need_model();
    run.need_split(Split::Train);
    const auto s = run.cfg().profile.value_or(ProfileSection{});
    const auto table = profile_intervals(run.model(), run.load(Split::Train));
    write_intervals_csv(table, run.out(s.output));
    run.echo();
    fmt::print("profiled {} layers into {}\n", table.layers.size(), run.out(s.output).string());
}

void cmd_vuln(Run& run)
{
    const std::uint64_t seed = run.seed();
    run.need_model();
    run.need_split(Split::Train);
    const auto s = run.cfg().vuln.value_or(VulnSection{});
    const auto calib = calibration_subset(run.load(Split::Train), s.calibration_samples, seed);
    auto report = channel_vulnerability(run.model(), calib);
    report.seed = seed;
    write_vulnerability_csv(report, run.out(s.output));
    run.echo();
    fmt::print("scored channels of {} layers on {} calibration samples into {}\n", report.layers.size(), report.samples,
               run.out(s.output).string());
}

void cmd_harden(Run& run)
{
    const auto& h = section(run.cfg().harden, "harden");
    run.need_model();
    run.need_file(h.vulnerability, "harden.vulnerability");
    if (h.mode == HardeningMode::Duplicate) run.need_file(h.intervals, "harden.intervals");
    const ModelGraph base = run.model();
    const auto report = read_vulnerability_csv(h.vulnerability);
    const IntervalTable intervals = h.mode == HardeningMode::Duplicate ? read_intervals_csv(h.intervals) : IntervalTable{};
    const auto plan = make_hardening_plan(base, report, h.ratio, h.mode, h.interval_scope);
    const auto hardened = harden_model(base, plan, intervals);
    save_model(hardened, run.out(h.output_model));
    run.echo();
    const auto o = overhead_report(base, hardened);
    fmt::print("hardened {} channels ({}, {}): params {} -> {} (+{:.3f}%), MACs {} -> {} (+{:.3f}%)\n",
               plan.channels.size(), to_string(plan.mode), to_string(plan.scope), o.baseline.params, o.hardened.params,
               o.params_percent, o.baseline.macs, o.hardened.macs, o.macs_percent);
}

void cmd_prune(Run& run)
{
    const std::uint64_t seed = run.seed();
    const auto& p = section(run.cfg().prune, "prune");
    run.need_model();
    run.need_split(Split::Train);
    if (p.vulnerability) run.need_file(*p.vulnerability, "prune.vulnerability");
    const ModelGraph base = run.model();
    const Dataset train = run.load(Split::Train);
    VulnerabilityReport scores;
    if (p.scores == ScoreSource::L1) {
        scores = l1_scores(base);
    } else if (p.vulnerability) {
        scores = read_vulnerability_csv(*p.vulnerability);
    } else {
        scores = channel_vulnerability(base, calibration_subset(train, p.calibration_samples, seed));
    }
    const ModelGraph pruned = prune(base, scores, p.ratios);
    TrainConfig ft = p.fine_tune;
    ft.seed = seed;
    const double loss_before = dataset_loss(pruned, train);
    const ModelGraph tuned = fine_tune(pruned, train, ft);
    const double loss_after = dataset_loss(tuned, train);
    save_model(tuned, run.out(p.output_model));
    run.echo();
    const auto before = count_params_macs(base);
    const auto after = count_params_macs(tuned);
    fmt::print("pruned by {} (conv {}, fc {}): params {} -> {}, MACs {} -> {}; train loss {:.5f} -> {:.5f}\n",
               to_string(p.scores), p.ratios.conv_ratio, p.ratios.fc_ratio, before.params, after.params, before.macs,
               after.macs, loss_before, loss_after);
}

void cmd_inject(Run& run)
{
    const std::uint64_t seed = run.seed();
    const auto& s = section(run.cfg().inject, "inject");
    run.need_model();
    run.need_split(Split::Test);
    const auto result = run_campaign(run.model(), run.load(Split::Test), {s.bers, s.trials, seed, s.workers});
    write_campaign_csv(result, run.out(), s.prefix);
    run.echo(s.prefix);
    fmt::print("clean accuracy {:.2f}%\n", result.clean_accuracy);
    for (const auto& row : result.summary) {
        fmt::print("ber {:<8} mean accuracy {:8.3f}%  mean drop {:8.3f}  ({} trials)\n", row.ber, row.mean_accuracy,
                   row.mean_drop, row.trials);
    }
}

void cmd_report(Run& run)
{
    const auto& r = section(run.cfg().report, "report");
    run.need_split(Split::Test);
    for (const auto& v : r.variants) {
        run.need_file(v.model, "report variant model");
        run.need_file(v.campaign, "report variant campaign");
        if (v.baseline) run.need_file(*v.baseline, "report variant baseline");
    }
    const Dataset test = run.load(Split::Test);
    std::vector<VariantReport> reports;
    for (const auto& v : r.variants) {
        const ModelGraph model = load_model(v.model);
        VariantReport rep;
        rep.name = v.name;
        rep.hardening_ratio = v.hardening_ratio;
        rep.cost = count_params_macs(model);
        rep.inference_ms = time_inference(model, test, r.timing_repeats);
        if (v.baseline) {
            const ModelGraph base = load_model(*v.baseline);
            const auto o = overhead_report(base, model);
            rep.param_overhead_percent = o.params_percent;
            rep.mac_overhead_percent = o.macs_percent;
            const double base_ms = time_inference(base, test, r.timing_repeats);
            rep.time_overhead_percent = 100.0 * (rep.inference_ms - base_ms) / base_ms;
        }
        rep.campaign = read_summary_csv(v.campaign);
        write_comparison_csv({rep}, run.out(fmt::format("report_{}.csv", v.name)));
        reports.push_back(std::move(rep));
    }
    write_comparison_csv(reports, run.out(r.output));
    run.echo();
    for (const auto& rep : reports) {
        fmt::print("{:<20} params {:>9} (+{:.2f}%)  MACs {:>10} (+{:.2f}%)  inference {:.2f} ms\n", rep.name,
                   rep.cost.params, rep.param_overhead_percent, rep.cost.macs, rep.mac_overhead_percent,
                   rep.inference_ms);
    }
}

void print_stats(const ModelGraph& model)
{
    const auto shapes = infer_shapes(model);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        std::uint64_t n = 0;
        for (const auto& t : model.layers[i].params) n += t.size();
        fmt::print("{:>3}  {:<16} out {:<14} stored {}\n", i, to_string(model.layers[i].spec.kind),
                   shape_to_string(shapes[i]), n);
    }
    const auto cost = count_params_macs(model);
    fmt::print("params {}\nmacs {}\n", cost.params, cost.macs);
    if (model.hardening) {
        fmt::print("hardening {} {} ({} channels)\n", to_string(model.hardening->mode), to_string(model.hardening->scope),
                   model.hardening->channels.size());
    }
}

}  // namespace

int cli_main(int argc, char** argv)
{
    CLI::App app{"resilinet: channel hardening, pruning and bitflip campaigns for small CNNs"};
    app.require_subcommand(1);
    Options opt;

    struct Command {
        const char* name;
        const char* help;
        void (*fn)(Run&);
    };
    const Command commands[] = {
        {"synth", "generate the seven-segment glyph dataset as IDX files", cmd_synth},
        {"train", "train the desk-scale CNN with SGD", cmd_train},
        {"profile", "profile per-channel detection intervals on the training split", cmd_profile},
        {"vuln", "score channel vulnerability on a calibration subset", cmd_vuln},
        {"harden", "duplicate/triplicate vulnerable channels and insert correction layers", cmd_harden},
        {"prune", "prune channels by vulnerability or L1 norm, then fine-tune", cmd_prune},
        {"inject", "run a bitflip fault-injection campaign", cmd_inject},
        {"report", "merge campaigns with overhead and timing measurements", cmd_report},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("-c,--config", opt.config, "experiment config (JSON)")->required();
        sub->add_option("-o,--output-dir", opt.output_dir, "override the config's output_dir");
        sub->add_option("-s,--seed", opt.seed, "override the config's seed");
        subs.emplace_back(sub, &c);
    }
    auto* stats = app.add_subcommand("stats", "print layer table, parameter and MAC counts of a model");
    stats->add_option("-c,--config", opt.config, "experiment config naming \"model\"");
    stats->add_option("-m,--model", opt.model, "model container (.nnhm)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (stats->parsed()) {
            if (opt.model.empty() == opt.config.empty()) throw ConfigError("stats needs exactly one of --model or --config");
            fs::path path = opt.model;
            if (path.empty()) {
                const auto cfg = load_config(opt.config);
                if (!cfg.model) throw ConfigError("config has no \"model\"");
                path = *cfg.model;
            }
            require_file(path, "model");
            print_stats(load_model(path));
            return 0;
        }
        for (const auto& [sub, c] : subs) {
            if (!sub->parsed()) continue;
            Run run(c->name, opt);
            c->fn(run);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace resilinet
