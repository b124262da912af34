#pragma once

// Calibration metrics and analysis tables.
//
// Equal-width bins are (lower, upper] with the first bin closed at 0, so a
// confidence of exactly 0 lands in bin 0 and a confidence equal to a boundary
// b/n lands in the bin below it.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sslcal/matrix.hpp"
#include "sslcal/pseudo_label.hpp"

namespace sslcal {

inline constexpr std::size_t kDefaultBins = 15;
inline constexpr double kLogitHistogramWidth = 0.5;

struct ReliabilityBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double mean_confidence = 0.0;  // 0 for empty bins
    double accuracy = 0.0;         // 0 for empty bins
};

using ReliabilityBins = std::vector<ReliabilityBin>;

/// Equal-width bin index of a confidence in [0, 1].
std::size_t equal_width_bin(double confidence, std::size_t n_bins);

double ece(std::span<const double> confidences, const std::vector<bool>& correct, std::size_t n_bins = kDefaultBins);

/// ECE with equal-mass bins; samples tied on a quantile boundary go to the lower bin.
double adaptive_ece(std::span<const double> confidences, const std::vector<bool>& correct,
                    std::size_t n_bins = kDefaultBins);

/// Mean over classes of the equal-width binned |freq_k - mean p_k| statistic.
double classwise_ece(const Matrix& probs, std::span<const std::size_t> labels, std::size_t n_bins = kDefaultBins);

ReliabilityBins reliability(std::span<const double> confidences, const std::vector<bool>& correct,
                            std::size_t n_bins = kDefaultBins);

struct CalibrationReport {
    double ece = 0.0;
    double aece = 0.0;
    double cece = 0.0;
    double error_rate = 0.0;
    std::size_t n_samples = 0;
    ReliabilityBins bins;
};

/// Confidence = max softmax probability, correctness = argmax_tiebreak == label.
CalibrationReport calibration_report(const Matrix& probs, std::span<const std::size_t> labels,
                                     std::size_t n_bins = kDefaultBins);

/// Mean rank per method (rows) across settings (columns); ties share the average rank.
std::vector<double> friedman_rank(const Matrix& scores, const std::vector<bool>& lower_is_better);

struct ClassLogitStats {
    std::size_t n_samples = 0;
    /// Per logit coordinate: histogram bin index -> count; bin j covers [j w, (j+1) w).
    std::vector<std::map<std::int64_t, std::size_t>> histograms;
    double min_logit = 0.0;
    double max_logit = 0.0;
    double max_logit_distance = 0.0;
};

struct LogitStats {
    double bin_width = kLogitHistogramWidth;
    std::vector<ClassLogitStats> per_class;  // indexed by target class
    double min_logit = 0.0;
    double max_logit = 0.0;
    double range() const { return max_logit - min_logit; }
    double mean_max_distance = 0.0;  // mean over samples of max_k d_k
    double max_max_distance = 0.0;
};

LogitStats logit_stats(const Matrix& logits, std::span<const std::size_t> labels,
                       double bin_width = kLogitHistogramWidth);

/// |agree| / (|agree| + |disagree|) per window; nullopt when nothing was selected.
std::optional<double> agreement_ratio(std::span<const PseudoLabelDecision> window);
std::vector<std::optional<double>> agreement_ratio(const std::vector<std::vector<PseudoLabelDecision>>& windows);

struct DynamicsRow {
    double p = 0.0;
    double shannon = 0.0;
    double min_entropy = 0.0;
    double abs_dshannon = 0.0;
    double abs_dmin_entropy = 0.0;
};

/// Analytic entropy and min-entropy values for the 2-class point (p, 1 - p).
DynamicsRow simplex_point(double p);

/// p = i / (resolution + 1), i = 1..resolution, excluding p = 0.5.
std::vector<DynamicsRow> simplex_dynamics(std::size_t resolution);

}  // namespace sslcal
