#pragma once

// Loss terms over logit batches and their exact logit-gradients.
//
// Every unlabeled term is normalized by the full unlabeled batch size (the
// number of decisions), not by the number of selected samples, so the weight
// of the penalty does not drift as the selection ratio changes.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sslcal/matrix.hpp"
#include "sslcal/pseudo_label.hpp"

namespace sslcal {

struct LossGrad {
    double loss = 0.0;
    Matrix grad;  // dLoss/dLogits, same shape as the logits
};

enum class PenaltySet {
    AgreeOnly,      // selected samples whose weak/strong argmax agree
    AgreeAndDisagree,  // every selected sample
};

const char* to_string(PenaltySet s);
PenaltySet parse_penalty_set(const std::string& s);

struct MarginConfig {
    double margin = 10.0;
    double lambda = 0.1;
    PenaltySet apply_set = PenaltySet::AgreeOnly;

    void validate() const;
};

enum class UnsupervisedLoss { CrossEntropy, LabelSmoothing, Focal };

const char* to_string(UnsupervisedLoss l);
UnsupervisedLoss parse_unsupervised_loss(const std::string& s);

struct ObjectiveConfig {
    MarginConfig penalty;
    UnsupervisedLoss unsupervised = UnsupervisedLoss::CrossEntropy;
    double label_smoothing_eps = 0.1;
    double focal_gamma = 2.0;

    void validate() const;
};

struct LossBreakdown {
    double supervised_ce = 0.0;
    double pseudo_ce_U1 = 0.0;     // unsupervised term over selected, disagreeing samples
    double min_entropy_U2 = 0.0;   // unsupervised term over selected, agreeing samples
    double penalty = 0.0;
    double total = 0.0;
    std::size_t n_labeled = 0;
    std::size_t n_U1 = 0;
    std::size_t n_U2 = 0;
    std::size_t n_unlabeled = 0;
};

/// Mean over the batch of -ln softmax(l)[y]. Throws on an empty batch or a bad label.
LossGrad supervised_ce(const Matrix& logits, std::span<const std::size_t> labels);

/// Sum over selected samples of -ln softmax(l)[pseudo_class], divided by the batch size.
LossGrad pseudo_ce_masked(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions);

/// Splits pseudo_ce_masked into the disagreeing part and the min-entropy of the agreeing part.
LossBreakdown decompose(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions);

/// d_k = max_j l_j - l_k.
std::vector<double> logit_distances(std::span<const double> logits);

/// lambda * sum_i sum_k max(0, d_ik - m) over the configured set, divided by the batch size.
LossGrad margin_penalty(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions,
                        const MarginConfig& cfg);

/// Cross-entropy against (1 - eps) onehot + eps / K on selected samples.
LossGrad ls_pseudo_ce(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions, double eps);

/// -(1 - p_t)^gamma ln p_t on selected samples.
LossGrad focal_pseudo_ce(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions, double gamma);

struct TotalLoss {
    LossBreakdown breakdown;
    Matrix grad_labeled;
    Matrix grad_unlabeled;
};

/// Supervised CE + unsupervised term + margin penalty, with gradients for both batches.
TotalLoss total_loss(const Matrix& labeled_logits, std::span<const std::size_t> labels, const Matrix& strong_logits,
                     std::span<const PseudoLabelDecision> decisions, const ObjectiveConfig& cfg);

}  // namespace sslcal
