#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sslcal/config.hpp"
#include "sslcal/train.hpp"

namespace sslcal {

/// A named set of config overrides applied on top of the sweep's base config.
struct Variant {
    std::string name;
    std::vector<std::pair<std::string, std::string>> overrides;
};

/// Parses "name: key=value key=value ..." (a bare name means no overrides).
Variant parse_variant(const std::string& text);

/// One variant per non-empty, non-comment line.
std::vector<Variant> read_variants_file(const std::string& path);

/// Best-checkpoint summary of one (variant, seed) run.
struct RunSummary {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::size_t best_iteration = 0;
    double error = 0.0;
    double ece = 0.0;
    double aece = 0.0;
    double cece = 0.0;
    double agreement = 0.0;                // mean agreement ratio over windows after 20% of training
    double min_agreement = 0.0;            // minimum over those windows (1 when none were defined)
    double mean_max_logit_distance = 0.0;  // test set, best checkpoint
    double within_margin_fraction = 1.0;   // final unlabeled snapshot
};

RunSummary summarize(const RunLog& log, std::size_t total_iterations);

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (0 for a single value)
};

Stat mean_std(const std::vector<double>& values);

struct VariantSummary {
    std::string name;
    std::string config_hash;
    std::vector<RunSummary> runs;  // in seed order
    Stat error, ece, aece, cece, agreement, logit_distance;
    double friedman_rank = 0.0;
};

struct SweepReport {
    std::vector<std::uint64_t> seeds;
    std::vector<VariantSummary> variants;
};

/// Runs every (variant, seed) pair. Runs execute in parallel; results are merged in (variant, seed) order.
/// When `logs` is non-null it receives every RunLog, variant-major.
SweepReport sweep(const RunConfig& base, const std::vector<std::uint64_t>& seeds, const std::vector<Variant>& variants,
                  std::vector<std::vector<RunLog>>* logs = nullptr);

/// Aggregates already-computed runs (used by sweep and by tests).
VariantSummary aggregate(const std::string& name, const std::string& hash, const std::vector<RunSummary>& runs);

/// Friedman ranks over settings {error, ece} x seeds, lower is better.
void assign_friedman_ranks(SweepReport& report);

}  // namespace sslcal
