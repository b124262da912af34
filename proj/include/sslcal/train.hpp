#pragma once

// The pseudo-label training loop and its evaluation log.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sslcal/calibration.hpp"
#include "sslcal/config.hpp"
#include "sslcal/dataset.hpp"
#include "sslcal/model.hpp"
#include "sslcal/objective.hpp"

namespace sslcal {

/// Divergence guard: any logit beyond this magnitude aborts the run.
inline constexpr double kMaxLogitMagnitude = 1e4;

/// Slack added to the margin when checking that agreeing samples respect it.
inline constexpr double kMarginSlack = 0.5;

struct EvalRecord {
    std::size_t iteration = 0;
    LossBreakdown train_loss;        // mean over the iterations since the previous record
    double test_error = 0.0;
    double ece = 0.0;
    double aece = 0.0;
    double cece = 0.0;
    std::optional<double> agreement_ratio;  // over the same window
    double selected_fraction = 0.0;         // selected / unlabeled samples in the window
    double pseudo_label_accuracy = 0.0;     // selected pseudo-labels vs hidden labels (diagnostic)
    double mean_max_logit_distance = 0.0;   // test set, mean of max_k d_k
    double max_max_logit_distance = 0.0;
    std::vector<double> thresholds;         // per-class threshold snapshot
};

/// Pseudo-label statistics over the whole unlabeled set with the final parameters.
struct UnlabeledSnapshot {
    std::size_t n_selected = 0;
    std::size_t n_agree = 0;
    std::size_t n_agree_within_margin = 0;  // agreeing samples with max_k d_k <= m + slack
    double within_margin_fraction() const {
        return n_agree == 0 ? 1.0 : static_cast<double>(n_agree_within_margin) / static_cast<double>(n_agree);
    }
};

struct RunLog {
    std::string config_hash;
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string diagnostic;  // set when diverged

    std::vector<EvalRecord> evals;
    std::size_t best_index = 0;  // minimum test error, earliest on ties

    std::optional<CalibrationReport> best_report;
    std::optional<LogitStats> best_logit_stats;
    std::optional<MlpParams> best_params;
    std::optional<MlpParams> final_params;
    UnlabeledSnapshot final_unlabeled;

    const EvalRecord* best() const { return evals.empty() ? nullptr : &evals[best_index]; }
};

/// Runs one seed. The dataset is generated from config.data with its seed mixed with `seed`.
RunLog train(const RunConfig& config, std::uint64_t seed);

/// Runs one seed on a caller-supplied dataset. Unlabeled labels are read only for diagnostics.
RunLog train(const RunConfig& config, std::uint64_t seed, const Dataset& data);

/// Dataset used by train(config, seed).
Dataset dataset_for_run(const RunConfig& config, std::uint64_t seed);

/// Test-set evaluation of `params` (error, calibration, logit statistics).
struct Evaluation {
    CalibrationReport report;
    LogitStats logits;
};
Evaluation evaluate(const MlpParams& params, const LabeledSet& test, std::size_t n_bins);

}  // namespace sslcal
