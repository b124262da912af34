#include "sslcal/sweep.hpp"

#include <cmath>
#include <fstream>

#include "sslcal/calibration.hpp"
#include "sslcal/error.hpp"
#include "sslcal/text.hpp"

namespace sslcal {

Variant parse_variant(const std::string& text) {
    Variant v;
    const auto colon = text.find(':');
    v.name = std::string(trim(std::string_view(text).substr(0, colon)));
    if (v.name.empty()) fail(ErrorKind::Config, "variant needs a name: '" + text + "'");
    if (colon == std::string::npos) return v;
    std::string rest = text.substr(colon + 1);
    for (char& c : rest)
        if (c == '\t') c = ' ';
    for (const auto& tok : split(rest, ' ')) {
        if (tok.empty()) continue;
        v.overrides.push_back(parse_override(tok));
    }
    return v;
}

std::vector<Variant> read_variants_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::Io, "cannot open variants file '" + path + "'");
    std::vector<Variant> out;
    std::string line;
    while (std::getline(is, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        out.push_back(parse_variant(line));
    }
    return out;
}

RunSummary summarize(const RunLog& log, std::size_t total_iterations) {
    RunSummary s;
    s.seed = log.seed;
    s.diverged = log.diverged;
    if (const auto* best = log.best()) {
        s.best_iteration = best->iteration;
        s.error = best->test_error;
        s.ece = best->ece;
        s.aece = best->aece;
        s.cece = best->cece;
        s.mean_max_logit_distance = best->mean_max_logit_distance;
    }
    double sum = 0.0, lo = 1.0;
    std::size_t n = 0;
    for (const auto& e : log.evals) {
        if (!e.agreement_ratio || 5 * e.iteration <= total_iterations) continue;
        sum += *e.agreement_ratio;
        lo = std::min(lo, *e.agreement_ratio);
        ++n;
    }
    s.agreement = n ? sum / static_cast<double>(n) : 0.0;
    s.min_agreement = lo;
    s.within_margin_fraction = log.final_unlabeled.within_margin_fraction();
    return s;
}

Stat mean_std(const std::vector<double>& v) {
    Stat s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() < 2) return s;
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return s;
}

VariantSummary aggregate(const std::string& name, const std::string& hash, const std::vector<RunSummary>& runs) {
    VariantSummary v;
    v.name = name;
    v.config_hash = hash;
    v.runs = runs;
    auto collect = [&](auto field) {
        std::vector<double> xs;
        for (const auto& r : runs) xs.push_back(r.*field);
        return mean_std(xs);
    };
    v.error = collect(&RunSummary::error);
    v.ece = collect(&RunSummary::ece);
    v.aece = collect(&RunSummary::aece);
    v.cece = collect(&RunSummary::cece);
    v.agreement = collect(&RunSummary::agreement);
    v.logit_distance = collect(&RunSummary::mean_max_logit_distance);
    return v;
}

void assign_friedman_ranks(SweepReport& report) {
    if (report.variants.empty()) return;
    const std::size_t n_runs = report.variants.front().runs.size();
    for (const auto& v : report.variants)
        require(v.runs.size() == n_runs, "every variant needs the same number of runs");
    if (n_runs == 0) return;
    Matrix scores(report.variants.size(), 2 * n_runs);
    for (std::size_t i = 0; i < report.variants.size(); ++i)
        for (std::size_t s = 0; s < n_runs; ++s) {
            scores(i, 2 * s) = report.variants[i].runs[s].error;
            scores(i, 2 * s + 1) = report.variants[i].runs[s].ece;
        }
    const auto ranks = friedman_rank(scores, std::vector<bool>(scores.cols(), true));
    for (std::size_t i = 0; i < ranks.size(); ++i) report.variants[i].friedman_rank = ranks[i];
}

SweepReport sweep(const RunConfig& base, const std::vector<std::uint64_t>& seeds, const std::vector<Variant>& variants,
                  std::vector<std::vector<RunLog>>* logs) {
    require(!seeds.empty(), "sweep needs at least one seed");
    require(!variants.empty(), "sweep needs at least one variant");
    std::vector<RunConfig> configs;
    for (const auto& v : variants) {
        RunConfig c = base;
        for (const auto& [k, val] : v.overrides) apply_override(c, k, val);
        c.validate();
        configs.push_back(std::move(c));
    }

    const std::size_t n_seeds = seeds.size();
    const auto jobs = static_cast<std::int64_t>(variants.size() * n_seeds);
    std::vector<RunLog> all(static_cast<std::size_t>(jobs));
    std::vector<std::string> errors(all.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t j = 0; j < jobs; ++j) {
        const auto idx = static_cast<std::size_t>(j);
        try {
            all[idx] = train(configs[idx / n_seeds], seeds[idx % n_seeds]);
        } catch (const std::exception& e) {
            errors[idx] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) fail(ErrorKind::InvalidArgument, "sweep run failed: " + e);

    SweepReport report;
    report.seeds = seeds;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        std::vector<RunSummary> runs;
        for (std::size_t s = 0; s < n_seeds; ++s) runs.push_back(summarize(all[v * n_seeds + s], configs[v].iterations));
        report.variants.push_back(aggregate(variants[v].name, config_hash(configs[v]), runs));
    }
    assign_friedman_ranks(report);
    if (logs) {
        logs->assign(variants.size(), {});
        for (std::size_t v = 0; v < variants.size(); ++v)
            for (std::size_t s = 0; s < n_seeds; ++s) (*logs)[v].push_back(std::move(all[v * n_seeds + s]));
    }
    return report;
}

}  // namespace sslcal
