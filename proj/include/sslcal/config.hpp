#pragma once

// Run configuration and its flat `key = value` text form.
//
// Files hold one `key = value` per line; `#` starts a comment; a `[section]`
// header prefixes the following keys with `section.`. Unknown keys are errors.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sslcal/augment.hpp"
#include "sslcal/dataset.hpp"
#include "sslcal/model.hpp"
#include "sslcal/objective.hpp"
#include "sslcal/pseudo_label.hpp"

namespace sslcal {

struct RunConfig {
    DatasetSpec data;

    std::vector<std::size_t> hidden = {64, 64};
    Activation activation = Activation::Tanh;

    AugmentConfig augment;

    ThresholdStrategy threshold_strategy = ThresholdStrategy::Fixed;
    double tau = 0.95;
    double ema_decay = 0.999;

    ObjectiveConfig objective;

    double learning_rate = 0.03;
    double momentum = 0.9;
    bool cosine_schedule = true;
    double warmup_fraction = 0.025;

    std::size_t iterations = 4000;
    std::size_t eval_interval = 100;
    std::size_t batch_size = 16;   // labeled batch B
    std::size_t mu = 4;            // unlabeled batch is mu * B
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

    std::size_t n_bins = 15;
    std::string out_dir = "out";

    std::vector<std::size_t> widths() const;
    void validate() const;
};

using ConfigMap = std::map<std::string, std::string>;

/// Sets one dotted key. Throws Error(Config) for unknown keys or bad values.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key=value` (as given to --override).
std::pair<std::string, std::string> parse_override(const std::string& text);

ConfigMap read_config_text(std::istream& is);
ConfigMap read_config_file(const std::string& path);

RunConfig config_from_map(const ConfigMap& map, RunConfig base = {});

/// Every key with its current value, sorted by key.
ConfigMap to_map(const RunConfig& cfg);
std::string to_text(const RunConfig& cfg);

/// Stable hex digest of to_text(cfg); used for report file names.
std::string config_hash(const RunConfig& cfg);

}  // namespace sslcal
