#pragma once

// Pseudo-label selection and the weak/strong agreement partition.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sslcal/matrix.hpp"

namespace sslcal {

struct PseudoLabelDecision {
    std::size_t pseudo_class = 0;       // argmax of the weak view
    bool selected = false;              // weak max prob >= threshold of pseudo_class
    bool agree = false;                 // weak argmax == strong argmax
    double weak_max_prob = 0.0;
    std::size_t strong_pred_class = 0;

    friend bool operator==(const PseudoLabelDecision&, const PseudoLabelDecision&) = default;
};

enum class ThresholdStrategy {
    None,           // nothing is ever selected: supervised-only training
    Fixed,          // constant tau
    ClassAdaptive,  // tau scaled by normalized per-class learning effect
    SelfAdaptive,   // EMA of the model's own confidence
};

const char* to_string(ThresholdStrategy s);
ThresholdStrategy parse_threshold_strategy(const std::string& s);

struct ThresholdState {
    ThresholdStrategy strategy = ThresholdStrategy::Fixed;
    double tau = 0.95;
    double ema_decay = 0.999;

    std::vector<double> class_counts;   // class-adaptive: confident predictions per class
    double global_tau = 0.0;            // self-adaptive: EMA of mean max prob
    std::vector<double> class_ema;      // self-adaptive: EMA of mean prob vector

    /// Fresh state for `num_classes` classes (self-adaptive starts at 1/K and uniform).
    static ThresholdState make(ThresholdStrategy strategy, std::size_t num_classes, double tau = 0.95,
                               double ema_decay = 0.999);

    std::size_t num_classes() const { return class_counts.size(); }

    /// Selection threshold applied to samples pseudo-labelled as class c.
    double threshold(std::size_t c) const;
    std::vector<double> thresholds() const;

    friend bool operator==(const ThresholdState&, const ThresholdState&) = default;
};

PseudoLabelDecision decide(std::span<const double> weak_probs, std::span<const double> strong_probs,
                           const ThresholdState& state);

/// Row-wise decide() over a batch of probability rows.
std::vector<PseudoLabelDecision> decide_batch(const Matrix& weak_probs, const Matrix& strong_probs,
                                              const ThresholdState& state);

ThresholdState update_fixed(const ThresholdState& state);

/// Adds this batch's confident predictions (weak max >= base tau) to the per-class counts.
ThresholdState update_class_adaptive(const ThresholdState& state, std::span<const PseudoLabelDecision> batch);

/// One EMA step on the batch of weak-view probabilities.
ThresholdState update_self_adaptive(const ThresholdState& state, const Matrix& weak_probs);

/// Dispatches to the update rule of state.strategy.
ThresholdState update_thresholds(const ThresholdState& state, std::span<const PseudoLabelDecision> batch,
                                 const Matrix& weak_probs);

struct Partition {
    std::vector<std::size_t> disagree;  // selected, weak/strong argmax differ
    std::vector<std::size_t> agree;     // selected, weak/strong argmax equal
};

Partition partition(std::span<const PseudoLabelDecision> decisions);

}  // namespace sslcal
