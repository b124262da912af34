#pragma once

// JSON and CSV exports. File names derive from the config hash and seed, so
// re-emitting the same log rewrites byte-identical files.
//
// CSV files are UTF-8, comma separated, dot decimal, with a header row:
//   *_timeseries.csv   one row per evaluation (TIMESERIES_HEADER)
//   *_reliability.csv  reliability bins of the best checkpoint
//   *_logit_hist.csv   per target class / logit coordinate histogram bins
//   *_dynamics.csv     2-class entropy vs min-entropy table

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslcal/calibration.hpp"
#include "sslcal/config.hpp"
#include "sslcal/sweep.hpp"
#include "sslcal/train.hpp"

namespace sslcal {

inline constexpr const char* kTimeseriesHeader =
    "iteration,supervised_ce,pseudo_ce_U1,min_entropy_U2,penalty,total,n_U1,n_U2,test_error,ece,aece,cece,"
    "agreement_ratio,selected_fraction,pseudo_label_accuracy,mean_max_logit_distance,max_max_logit_distance,"
    "threshold_mean,threshold_min,threshold_max";
inline constexpr const char* kReliabilityHeader = "bin,lower,upper,count,mean_confidence,accuracy";
inline constexpr const char* kLogitHistHeader = "target_class,logit_index,bin_lower,bin_upper,count";
inline constexpr const char* kDynamicsHeader = "p,shannon_entropy,min_entropy,abs_dshannon_dp,abs_dmin_entropy_dp";
inline constexpr const char* kRanksHeader = "method,friedman_rank";

/// Resolution of the dynamics table written next to every run.
inline constexpr std::size_t kReportDynamicsResolution = 99;

nlohmann::json to_json(const LossBreakdown& b);
nlohmann::json to_json(const CalibrationReport& r);
nlohmann::json to_json(const LogitStats& s);
nlohmann::json to_json(const EvalRecord& e);
nlohmann::json to_json(const RunLog& log, const RunConfig& config);
nlohmann::json to_json(const SweepReport& report);

std::string timeseries_csv(const RunLog& log);
std::string reliability_csv(const ReliabilityBins& bins);
std::string logit_hist_csv(const LogitStats& stats);
std::string dynamics_csv(const std::vector<DynamicsRow>& rows);
std::string ranks_csv(const std::vector<std::string>& methods, const std::vector<double>& ranks);
std::string sweep_variants_csv(const SweepReport& report);
std::string sweep_runs_csv(const SweepReport& report);

/// "run_<hash>_seed<seed>".
std::string run_prefix(const RunLog& log);

/// Writes summary JSON, time series, reliability, logit histogram and dynamics
/// CSVs, plus the best checkpoint when present. Returns the written paths.
std::vector<std::filesystem::path> emit_reports(const RunLog& log, const RunConfig& config,
                                                const std::filesystem::path& out_dir);

/// Writes sweep summary JSON plus per-variant and per-run CSVs.
std::vector<std::filesystem::path> emit_sweep_reports(const SweepReport& report, const RunConfig& base,
                                                      const std::filesystem::path& out_dir);

/// Writes `contents` to `path`, creating parent directories; throws Error(Io) with the path on failure.
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Reads a scores CSV: header "method,<setting>...", one row per method. A
/// setting name ending in ":max" is higher-is-better; all others lower-is-better.
struct ScoreTable {
    std::vector<std::string> methods;
    std::vector<std::string> settings;
    std::vector<bool> lower_is_better;
    Matrix scores;
};
ScoreTable parse_scores_csv(const std::string& text);

}  // namespace sslcal
