#include "sslcal/pseudo_label.hpp"

#include <algorithm>

#include "sslcal/core_math.hpp"
#include "sslcal/error.hpp"

namespace sslcal {

const char* to_string(ThresholdStrategy s) {
    switch (s) {
        case ThresholdStrategy::None: return "none";
        case ThresholdStrategy::Fixed: return "fixed";
        case ThresholdStrategy::ClassAdaptive: return "class_adaptive";
        case ThresholdStrategy::SelfAdaptive: return "self_adaptive";
    }
    return "unknown";
}

ThresholdStrategy parse_threshold_strategy(const std::string& s) {
    if (s == "none") return ThresholdStrategy::None;
    if (s == "fixed") return ThresholdStrategy::Fixed;
    if (s == "class_adaptive") return ThresholdStrategy::ClassAdaptive;
    if (s == "self_adaptive") return ThresholdStrategy::SelfAdaptive;
    fail(ErrorKind::Config, "unknown threshold strategy '" + s + "'");
}

ThresholdState ThresholdState::make(ThresholdStrategy strategy, std::size_t num_classes, double tau,
                                    double ema_decay) {
    require(num_classes >= 2, "need at least two classes");
    if (!(tau >= 0.0 && tau <= 1.0)) fail(ErrorKind::Config, "threshold.tau must be in [0,1]");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) fail(ErrorKind::Config, "threshold.ema_decay must be in [0,1)");
    ThresholdState s;
    s.strategy = strategy;
    s.tau = tau;
    s.ema_decay = ema_decay;
    s.class_counts.assign(num_classes, 0.0);
    s.global_tau = 1.0 / static_cast<double>(num_classes);
    s.class_ema.assign(num_classes, 1.0 / static_cast<double>(num_classes));
    return s;
}

double ThresholdState::threshold(std::size_t c) const {
    require(c < num_classes(), "class index out of range");
    switch (strategy) {
        case ThresholdStrategy::None: return 1.0;
        case ThresholdStrategy::Fixed: return tau;
        case ThresholdStrategy::ClassAdaptive: {
            const double top = *std::max_element(class_counts.begin(), class_counts.end());
            return top > 0.0 ? tau * (class_counts[c] / top) : tau;
        }
        case ThresholdStrategy::SelfAdaptive: {
            const double top = *std::max_element(class_ema.begin(), class_ema.end());
            return global_tau * (class_ema[c] / top);
        }
    }
    return tau;
}

std::vector<double> ThresholdState::thresholds() const {
    std::vector<double> t(num_classes());
    for (std::size_t c = 0; c < t.size(); ++c) t[c] = threshold(c);
    return t;
}

PseudoLabelDecision decide(std::span<const double> weak_probs, std::span<const double> strong_probs,
                           const ThresholdState& state) {
    require(weak_probs.size() == strong_probs.size(), "weak/strong class count mismatch");
    require(weak_probs.size() == state.num_classes(), "threshold state class count mismatch");
    PseudoLabelDecision d;
    d.pseudo_class = argmax_tiebreak(weak_probs);
    d.weak_max_prob = weak_probs[d.pseudo_class];
    d.strong_pred_class = argmax_tiebreak(strong_probs);
    d.selected = state.strategy != ThresholdStrategy::None && d.weak_max_prob >= state.threshold(d.pseudo_class);
    d.agree = d.pseudo_class == d.strong_pred_class;
    return d;
}

std::vector<PseudoLabelDecision> decide_batch(const Matrix& weak_probs, const Matrix& strong_probs,
                                              const ThresholdState& state) {
    require(weak_probs.rows() == strong_probs.rows(), "weak/strong batch size mismatch");
    std::vector<PseudoLabelDecision> out(weak_probs.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = decide(weak_probs.row(i), strong_probs.row(i), state);
    return out;
}

ThresholdState update_fixed(const ThresholdState& state) { return state; }

ThresholdState update_class_adaptive(const ThresholdState& state, std::span<const PseudoLabelDecision> batch) {
    ThresholdState next = state;
    for (const auto& d : batch) {
        require(d.pseudo_class < next.class_counts.size(), "pseudo class out of range");
        if (d.weak_max_prob >= state.tau) next.class_counts[d.pseudo_class] += 1.0;
    }
    return next;
}

ThresholdState update_self_adaptive(const ThresholdState& state, const Matrix& weak_probs) {
    if (weak_probs.rows() == 0) return state;
    const std::size_t k = state.num_classes();
    require(weak_probs.cols() == k, "threshold state class count mismatch");
    double mean_max = 0.0;
    std::vector<double> mean_probs(k, 0.0);
    for (std::size_t i = 0; i < weak_probs.rows(); ++i) {
        const auto row = weak_probs.row(i);
        mean_max += *std::max_element(row.begin(), row.end());
        for (std::size_t c = 0; c < k; ++c) mean_probs[c] += row[c];
    }
    const double n = static_cast<double>(weak_probs.rows());
    ThresholdState next = state;
    const double lam = state.ema_decay;
    next.global_tau = lam * state.global_tau + (1.0 - lam) * (mean_max / n);
    for (std::size_t c = 0; c < k; ++c) next.class_ema[c] = lam * state.class_ema[c] + (1.0 - lam) * (mean_probs[c] / n);
    return next;
}

ThresholdState update_thresholds(const ThresholdState& state, std::span<const PseudoLabelDecision> batch,
                                 const Matrix& weak_probs) {
    switch (state.strategy) {
        case ThresholdStrategy::ClassAdaptive: return update_class_adaptive(state, batch);
        case ThresholdStrategy::SelfAdaptive: return update_self_adaptive(state, weak_probs);
        case ThresholdStrategy::None:
        case ThresholdStrategy::Fixed: return update_fixed(state);
    }
    return state;
}

Partition partition(std::span<const PseudoLabelDecision> decisions) {
    Partition p;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (!decisions[i].selected) continue;
        (decisions[i].agree ? p.agree : p.disagree).push_back(i);
    }
    return p;
}

}  // namespace sslcal
