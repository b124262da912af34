#include "sslcal/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sslcal/error.hpp"
#include "sslcal/text.hpp"

namespace sslcal {

using nlohmann::json;

namespace {

std::string num(double v) { return format_double(v); }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

json to_json(const LossBreakdown& b) {
    return {{"supervised_ce", b.supervised_ce}, {"pseudo_ce_U1", b.pseudo_ce_U1},
            {"min_entropy_U2", b.min_entropy_U2}, {"penalty", b.penalty},
            {"total", b.total}, {"n_labeled", b.n_labeled},
            {"n_U1", b.n_U1}, {"n_U2", b.n_U2},
            {"n_unlabeled", b.n_unlabeled}};
}

json to_json(const CalibrationReport& r) {
    json bins = json::array();
    for (const auto& b : r.bins)
        bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count},
                        {"mean_confidence", b.mean_confidence}, {"accuracy", b.accuracy}});
    return {{"ece", r.ece}, {"aece", r.aece}, {"cece", r.cece}, {"error_rate", r.error_rate},
            {"n_samples", r.n_samples}, {"bins", bins}};
}

json to_json(const LogitStats& s) {
    json classes = json::array();
    for (std::size_t c = 0; c < s.per_class.size(); ++c) {
        const auto& cs = s.per_class[c];
        classes.push_back({{"target_class", c}, {"n_samples", cs.n_samples}, {"min_logit", cs.min_logit},
                           {"max_logit", cs.max_logit}, {"max_logit_distance", cs.max_logit_distance}});
    }
    return {{"bin_width", s.bin_width}, {"min_logit", s.min_logit}, {"max_logit", s.max_logit},
            {"range", s.range()}, {"mean_max_distance", s.mean_max_distance},
            {"max_max_distance", s.max_max_distance}, {"per_class", classes}};
}

json to_json(const EvalRecord& e) {
    return {{"iteration", e.iteration},
            {"train_loss", to_json(e.train_loss)},
            {"test_error", e.test_error},
            {"ece", e.ece},
            {"aece", e.aece},
            {"cece", e.cece},
            {"agreement_ratio", opt(e.agreement_ratio)},
            {"selected_fraction", e.selected_fraction},
            {"pseudo_label_accuracy", e.pseudo_label_accuracy},
            {"mean_max_logit_distance", e.mean_max_logit_distance},
            {"max_max_logit_distance", e.max_max_logit_distance},
            {"thresholds", e.thresholds}};
}

json to_json(const RunLog& log, const RunConfig& config) {
    json evals = json::array();
    for (const auto& e : log.evals) evals.push_back(to_json(e));
    json j = {{"config_hash", log.config_hash},
              {"config", to_map(config)},
              {"seed", log.seed},
              {"status", log.diverged ? "diverged" : "ok"},
              {"diagnostic", log.diagnostic},
              {"evals", evals},
              {"final_unlabeled",
               {{"n_selected", log.final_unlabeled.n_selected},
                {"n_agree", log.final_unlabeled.n_agree},
                {"n_agree_within_margin", log.final_unlabeled.n_agree_within_margin},
                {"within_margin_fraction", log.final_unlabeled.within_margin_fraction()}}}};
    if (const auto* best = log.best()) j["best"] = to_json(*best);
    else j["best"] = nullptr;
    j["best_report"] = log.best_report ? to_json(*log.best_report) : json(nullptr);
    j["best_logit_stats"] = log.best_logit_stats ? to_json(*log.best_logit_stats) : json(nullptr);
    return j;
}

json to_json(const SweepReport& report) {
    json variants = json::array();
    for (const auto& v : report.variants) {
        json runs = json::array();
        for (const auto& r : v.runs)
            runs.push_back({{"seed", r.seed}, {"diverged", r.diverged}, {"best_iteration", r.best_iteration},
                            {"error", r.error}, {"ece", r.ece}, {"aece", r.aece}, {"cece", r.cece},
                            {"agreement", r.agreement}, {"min_agreement", r.min_agreement},
                            {"mean_max_logit_distance", r.mean_max_logit_distance},
                            {"within_margin_fraction", r.within_margin_fraction}});
        variants.push_back({{"name", v.name}, {"config_hash", v.config_hash}, {"error", stat_json(v.error)},
                            {"ece", stat_json(v.ece)}, {"aece", stat_json(v.aece)}, {"cece", stat_json(v.cece)},
                            {"agreement", stat_json(v.agreement)},
                            {"logit_distance", stat_json(v.logit_distance)},
                            {"friedman_rank", v.friedman_rank}, {"runs", runs}});
    }
    return {{"seeds", report.seeds}, {"variants", variants}};
}

std::string timeseries_csv(const RunLog& log) {
    std::ostringstream os;
    os << kTimeseriesHeader << '\n';
    for (const auto& e : log.evals) {
        const auto& b = e.train_loss;
        double t_mean = 0.0, t_min = 0.0, t_max = 0.0;
        if (!e.thresholds.empty()) {
            for (double t : e.thresholds) t_mean += t;
            t_mean /= static_cast<double>(e.thresholds.size());
            t_min = *std::min_element(e.thresholds.begin(), e.thresholds.end());
            t_max = *std::max_element(e.thresholds.begin(), e.thresholds.end());
        }
        os << e.iteration << ',' << num(b.supervised_ce) << ',' << num(b.pseudo_ce_U1) << ','
           << num(b.min_entropy_U2) << ',' << num(b.penalty) << ',' << num(b.total) << ',' << b.n_U1 << ','
           << b.n_U2 << ',' << num(e.test_error) << ',' << num(e.ece) << ',' << num(e.aece) << ',' << num(e.cece)
           << ',' << (e.agreement_ratio ? num(*e.agreement_ratio) : "") << ',' << num(e.selected_fraction) << ','
           << num(e.pseudo_label_accuracy) << ',' << num(e.mean_max_logit_distance) << ','
           << num(e.max_max_logit_distance) << ',' << num(t_mean) << ',' << num(t_min) << ',' << num(t_max)
           << '\n';
    }
    return os.str();
}

std::string reliability_csv(const ReliabilityBins& bins) {
    std::ostringstream os;
    os << kReliabilityHeader << '\n';
    for (std::size_t b = 0; b < bins.size(); ++b)
        os << b << ',' << num(bins[b].lower) << ',' << num(bins[b].upper) << ',' << bins[b].count << ','
           << num(bins[b].mean_confidence) << ',' << num(bins[b].accuracy) << '\n';
    return os.str();
}

std::string logit_hist_csv(const LogitStats& stats) {
    std::ostringstream os;
    os << kLogitHistHeader << '\n';
    for (std::size_t c = 0; c < stats.per_class.size(); ++c)
        for (std::size_t k = 0; k < stats.per_class[c].histograms.size(); ++k)
            for (const auto& [bin, count] : stats.per_class[c].histograms[k])
                os << c << ',' << k << ',' << num(static_cast<double>(bin) * stats.bin_width) << ','
                   << num(static_cast<double>(bin + 1) * stats.bin_width) << ',' << count << '\n';
    return os.str();
}

std::string dynamics_csv(const std::vector<DynamicsRow>& rows) {
    std::ostringstream os;
    os << kDynamicsHeader << '\n';
    for (const auto& r : rows)
        os << num(r.p) << ',' << num(r.shannon) << ',' << num(r.min_entropy) << ',' << num(r.abs_dshannon) << ','
           << num(r.abs_dmin_entropy) << '\n';
    return os.str();
}

std::string ranks_csv(const std::vector<std::string>& methods, const std::vector<double>& ranks) {
    std::ostringstream os;
    os << kRanksHeader << '\n';
    for (std::size_t i = 0; i < methods.size(); ++i) os << methods[i] << ',' << num(ranks[i]) << '\n';
    return os.str();
}

std::string sweep_variants_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "variant,n_seeds,error_mean,error_std,ece_mean,ece_std,aece_mean,aece_std,cece_mean,cece_std,"
          "agreement_mean,agreement_std,logit_distance_mean,logit_distance_std,friedman_rank\n";
    for (const auto& v : report.variants) {
        os << v.name << ',' << v.runs.size();
        for (const Stat* s : {&v.error, &v.ece, &v.aece, &v.cece, &v.agreement, &v.logit_distance})
            os << ',' << num(s->mean) << ',' << num(s->std);
        os << ',' << num(v.friedman_rank) << '\n';
    }
    return os.str();
}

std::string sweep_runs_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "variant,seed,diverged,best_iteration,error,ece,aece,cece,agreement,min_agreement,"
          "mean_max_logit_distance,within_margin_fraction\n";
    for (const auto& v : report.variants)
        for (const auto& r : v.runs)
            os << v.name << ',' << r.seed << ',' << (r.diverged ? 1 : 0) << ',' << r.best_iteration << ','
               << num(r.error) << ',' << num(r.ece) << ',' << num(r.aece) << ',' << num(r.cece) << ','
               << num(r.agreement) << ',' << num(r.min_agreement) << ',' << num(r.mean_max_logit_distance) << ','
               << num(r.within_margin_fraction) << '\n';
    return os.str();
}

std::string run_prefix(const RunLog& log) {
    return "run_" + (log.config_hash.empty() ? std::string("unhashed") : log.config_hash) + "_seed" +
           std::to_string(log.seed);
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    os << contents;
    if (!os) fail(ErrorKind::Io, "write failed: '" + path.string() + "'");
}

std::vector<std::filesystem::path> emit_reports(const RunLog& log, const RunConfig& config,
                                                const std::filesystem::path& out_dir) {
    const std::string prefix = run_prefix(log);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& suffix, const std::string& body) {
        auto p = out_dir / (prefix + suffix);
        write_file(p, body);
        written.push_back(p);
    };
    put("_summary.json", to_json(log, config).dump(2) + "\n");
    put("_timeseries.csv", timeseries_csv(log));
    put("_reliability.csv", log.best_report ? reliability_csv(log.best_report->bins) : reliability_csv({}));
    put("_logit_hist.csv", log.best_logit_stats ? logit_hist_csv(*log.best_logit_stats) : logit_hist_csv({}));
    put("_dynamics.csv", dynamics_csv(simplex_dynamics(kReportDynamicsResolution)));
    if (log.best_params) {
        std::ostringstream os;
        save_params(*log.best_params, os);
        put("_best.ckpt", os.str());
    }
    return written;
}

std::vector<std::filesystem::path> emit_sweep_reports(const SweepReport& report, const RunConfig& base,
                                                      const std::filesystem::path& out_dir) {
    std::string key = config_hash(base);
    for (const auto& v : report.variants) key += v.name + v.config_hash;
    for (auto s : report.seeds) key += "," + std::to_string(s);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", fnv1a(key));
    const std::string prefix = std::string("sweep_") + buf;
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& suffix, const std::string& body) {
        auto p = out_dir / (prefix + suffix);
        write_file(p, body);
        written.push_back(p);
    };
    put("_summary.json", to_json(report).dump(2) + "\n");
    put("_variants.csv", sweep_variants_csv(report));
    put("_runs.csv", sweep_runs_csv(report));
    return written;
}

ScoreTable parse_scores_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    ScoreTable t;
    bool header = true;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (trim(line).empty() || trim(line).front() == '#') continue;
        auto cells = split(line, ',');
        if (header) {
            if (cells.size() < 2) fail(ErrorKind::InvalidArgument, "scores CSV needs a method column and a setting");
            for (std::size_t i = 1; i < cells.size(); ++i) {
                std::string name = cells[i];
                bool lower = true;
                if (name.size() > 4 && name.ends_with(":max")) {
                    lower = false;
                    name.resize(name.size() - 4);
                } else if (name.size() > 4 && name.ends_with(":min")) {
                    name.resize(name.size() - 4);
                }
                t.settings.push_back(name);
                t.lower_is_better.push_back(lower);
            }
            header = false;
            continue;
        }
        if (cells.size() != t.settings.size() + 1)
            fail(ErrorKind::InvalidArgument, "scores CSV row for '" + cells[0] + "' has the wrong number of cells");
        t.methods.push_back(cells[0]);
        std::vector<double> r;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            if (cells[i].empty()) fail(ErrorKind::InvalidArgument, "missing score for '" + cells[0] + "'");
            r.push_back(parse_double(cells[i]));
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) fail(ErrorKind::InvalidArgument, "scores CSV has no method rows");
    t.scores = Matrix(rows.size(), t.settings.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) t.scores(i, j) = rows[i][j];
    return t;
}

}  // namespace sslcal
