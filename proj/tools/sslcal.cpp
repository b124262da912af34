// Command-line front end: train, sweep, analyze, dynamics, rank.
//
// Results go to files under --out; stdout gets a one-line JSON summary.
// Failures print {"error": ..., "kind": ...} on stderr and exit nonzero.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sslcal/calibration.hpp"
#include "sslcal/config.hpp"
#include "sslcal/error.hpp"
#include "sslcal/report.hpp"
#include "sslcal/sweep.hpp"
#include "sslcal/text.hpp"
#include "sslcal/train.hpp"

using namespace sslcal;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "config file (key = value)");
    cmd->add_option("--override", c.overrides, "key=value, applied after the config file")->take_all();
    cmd->add_option("--out", c.out, "output directory (defaults to output.dir)");
}

RunConfig load_config(const Common& c) {
    RunConfig cfg;
    if (!c.config.empty()) cfg = config_from_map(read_config_file(c.config));
    for (const auto& o : c.overrides) {
        const auto [k, v] = parse_override(o);
        apply_override(cfg, k, v);
    }
    if (!c.out.empty()) cfg.out_dir = c.out;
    cfg.validate();
    return cfg;
}

json paths_json(const std::vector<std::filesystem::path>& paths) {
    json j = json::array();
    for (const auto& p : paths) j.push_back(p.string());
    return j;
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::Io, "cannot open '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

int error_exit(const std::string& kind, const std::string& what, int code) {
    std::cerr << json{{"error", what}, {"kind", kind}}.dump() << '\n';
    return code;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return 2;
        case ErrorKind::Config: return 3;
        case ErrorKind::Io: return 4;
        case ErrorKind::Divergence: return 5;
    }
    return 1;
}

int run_train(const Common& common, std::optional<std::uint64_t> seed_opt) {
    const RunConfig cfg = load_config(common);
    const std::uint64_t seed = seed_opt.value_or(cfg.seeds.front());
    const RunLog log = train(cfg, seed);
    const auto files = emit_reports(log, cfg, cfg.out_dir);
    if (log.diverged) fail(ErrorKind::Divergence, log.diagnostic);
    json out = {{"command", "train"}, {"config_hash", log.config_hash}, {"seed", seed}, {"files", paths_json(files)}};
    if (const auto* best = log.best())
        out["best"] = {{"iteration", best->iteration}, {"error", best->test_error}, {"ece", best->ece}};
    std::cout << out.dump() << '\n';
    return 0;
}

int run_sweep(const Common& common, const std::vector<std::uint64_t>& seeds_opt, const std::string& variants_path,
              const std::vector<std::string>& variant_texts, bool per_run) {
    const RunConfig cfg = load_config(common);
    std::vector<Variant> variants;
    if (!variants_path.empty()) variants = read_variants_file(variants_path);
    for (const auto& t : variant_texts) variants.push_back(parse_variant(t));
    if (variants.empty()) variants.push_back(Variant{"base", {}});
    const auto seeds = seeds_opt.empty() ? cfg.seeds : seeds_opt;

    std::vector<std::vector<RunLog>> logs;
    const SweepReport report = sweep(cfg, seeds, variants, per_run ? &logs : nullptr);
    auto files = emit_sweep_reports(report, cfg, cfg.out_dir);
    if (per_run) {
        for (std::size_t v = 0; v < variants.size(); ++v) {
            RunConfig vc = cfg;
            for (const auto& [k, val] : variants[v].overrides) apply_override(vc, k, val);
            for (const auto& log : logs[v]) {
                const auto more = emit_reports(log, vc, std::filesystem::path(cfg.out_dir) / variants[v].name);
                files.insert(files.end(), more.begin(), more.end());
            }
        }
    }
    json rows = json::array();
    for (const auto& v : report.variants)
        rows.push_back({{"name", v.name}, {"error", v.error.mean}, {"ece", v.ece.mean},
                        {"agreement", v.agreement.mean}, {"friedman_rank", v.friedman_rank}});
    std::cout << json{{"command", "sweep"}, {"variants", rows}, {"files", paths_json(files)}}.dump() << '\n';
    return 0;
}

int run_analyze(const Common& common, std::optional<std::uint64_t> seed_opt, const std::string& checkpoint) {
    const RunConfig cfg = load_config(common);
    const std::uint64_t seed = seed_opt.value_or(cfg.seeds.front());
    const MlpParams params = load_params(checkpoint);
    require(params.input_dim() == cfg.data.dim && params.num_classes() == cfg.data.num_classes,
            "checkpoint shape does not match the config");
    const Dataset data = dataset_for_run(cfg, seed);
    const Evaluation ev = evaluate(params, data.test, cfg.n_bins);

    const std::string prefix = "analysis_" + config_hash(cfg) + "_seed" + std::to_string(seed);
    const std::filesystem::path dir = cfg.out_dir;
    std::vector<std::filesystem::path> files = {dir / (prefix + "_summary.json"), dir / (prefix + "_reliability.csv"),
                                                dir / (prefix + "_logit_hist.csv")};
    json summary = {{"checkpoint", checkpoint}, {"config_hash", config_hash(cfg)}, {"seed", seed},
                    {"report", to_json(ev.report)}, {"logit_stats", to_json(ev.logits)}};
    write_file(files[0], summary.dump(2) + "\n");
    write_file(files[1], reliability_csv(ev.report.bins));
    write_file(files[2], logit_hist_csv(ev.logits));
    std::cout << json{{"command", "analyze"}, {"error", ev.report.error_rate}, {"ece", ev.report.ece},
                      {"aece", ev.report.aece}, {"cece", ev.report.cece}, {"files", paths_json(files)}}
                     .dump()
              << '\n';
    return 0;
}

int run_dynamics(const std::string& out, std::size_t resolution) {
    const std::string csv = dynamics_csv(simplex_dynamics(resolution));
    if (out.empty()) {
        std::cout << csv;
        return 0;
    }
    const auto path = std::filesystem::path(out) / ("dynamics_" + std::to_string(resolution) + ".csv");
    write_file(path, csv);
    std::cout << json{{"command", "dynamics"}, {"files", {path.string()}}}.dump() << '\n';
    return 0;
}

int run_rank(const std::string& out, const std::string& scores_path) {
    const ScoreTable table = parse_scores_csv(read_text(scores_path));
    const auto ranks = friedman_rank(table.scores, table.lower_is_better);
    const std::string csv = ranks_csv(table.methods, ranks);
    if (out.empty()) {
        std::cout << csv;
        return 0;
    }
    const auto path = std::filesystem::path(out) / "ranks.csv";
    write_file(path, csv);
    std::cout << json{{"command", "rank"}, {"files", {path.string()}}}.dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibration of pseudo-label semi-supervised training on synthetic data"};
    app.require_subcommand(1);

    Common train_opts, sweep_opts, analyze_opts;
    std::optional<std::uint64_t> train_seed, analyze_seed;
    std::vector<std::uint64_t> sweep_seeds;
    std::string variants_path, checkpoint, dyn_out, rank_out, scores_path;
    std::vector<std::string> variant_texts;
    std::size_t resolution = kReportDynamicsResolution;
    bool per_run = false;

    auto* train_cmd = app.add_subcommand("train", "train one config with one seed");
    add_common(train_cmd, train_opts);
    train_cmd->add_option("--seed", train_seed, "run seed (defaults to the first of train.seeds)");

    auto* sweep_cmd = app.add_subcommand("sweep", "run every variant for every seed and aggregate");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--seed", sweep_seeds, "seed (repeatable; defaults to train.seeds)")->take_all();
    sweep_cmd->add_option("--variants", variants_path, "variants file, one 'name: key=value ...' per line");
    sweep_cmd->add_option("--variant", variant_texts, "inline variant (repeatable)")->take_all();
    sweep_cmd->add_flag("--per-run", per_run, "also write the per-run reports");

    auto* analyze_cmd = app.add_subcommand("analyze", "re-derive calibration reports from a stored checkpoint");
    add_common(analyze_cmd, analyze_opts);
    analyze_cmd->add_option("--seed", analyze_seed, "seed of the run that produced the checkpoint");
    analyze_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

    auto* dyn_cmd = app.add_subcommand("dynamics", "2-class entropy and min-entropy table");
    dyn_cmd->add_option("--out", dyn_out, "output directory (stdout when omitted)");
    dyn_cmd->add_option("--resolution", resolution, "grid points in (0, 1)")->check(CLI::Range(3, 1000000));

    auto* rank_cmd = app.add_subcommand("rank", "Friedman rank from a scores CSV");
    rank_cmd->add_option("--scores", scores_path, "CSV: method,<setting>...; ':max' marks higher-is-better")
        ->required();
    rank_cmd->add_option("--out", rank_out, "output directory (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_exit("usage", e.what(), 64);
    }

    try {
        if (train_cmd->parsed()) return run_train(train_opts, train_seed);
        if (sweep_cmd->parsed()) return run_sweep(sweep_opts, sweep_seeds, variants_path, variant_texts, per_run);
        if (analyze_cmd->parsed()) return run_analyze(analyze_opts, analyze_seed, checkpoint);
        if (dyn_cmd->parsed()) return run_dynamics(dyn_out, resolution);
        if (rank_cmd->parsed()) return run_rank(rank_out, scores_path);
    } catch (const Error& e) {
        return error_exit(to_string(e.kind()), e.what(), exit_code(e.kind()));
    } catch (const std::exception& e) {
        return error_exit("internal", e.what(), 1);
    }
    return 1;
}
