#include "sslcal/objective.hpp"

#include <cmath>

#include "sslcal/core_math.hpp"
#include "sslcal/error.hpp"

namespace sslcal {

const char* to_string(PenaltySet s) { return s == PenaltySet::AgreeOnly ? "U2_only" : "U1_and_U2"; }

PenaltySet parse_penalty_set(const std::string& s) {
    if (s == "U2_only") return PenaltySet::AgreeOnly;
    if (s == "U1_and_U2") return PenaltySet::AgreeAndDisagree;
    fail(ErrorKind::Config, "unknown penalty.apply_set '" + s + "' (expected U2_only or U1_and_U2)");
}

const char* to_string(UnsupervisedLoss l) {
    switch (l) {
        case UnsupervisedLoss::CrossEntropy: return "none";
        case UnsupervisedLoss::LabelSmoothing: return "ls";
        case UnsupervisedLoss::Focal: return "fl";
    }
    return "unknown";
}

UnsupervisedLoss parse_unsupervised_loss(const std::string& s) {
    if (s == "none") return UnsupervisedLoss::CrossEntropy;
    if (s == "ls") return UnsupervisedLoss::LabelSmoothing;
    if (s == "fl") return UnsupervisedLoss::Focal;
    fail(ErrorKind::Config, "unknown baseline.loss '" + s + "' (expected none, ls or fl)");
}

void MarginConfig::validate() const {
    if (!(margin > 0.0)) fail(ErrorKind::Config, "penalty.margin must be > 0");
    if (!(lambda >= 0.0)) fail(ErrorKind::Config, "penalty.lambda must be >= 0");
}

void ObjectiveConfig::validate() const {
    penalty.validate();
    if (!(label_smoothing_eps >= 0.0 && label_smoothing_eps < 1.0))
        fail(ErrorKind::Config, "baseline.label_smoothing_eps must be in [0,1)");
    if (!(focal_gamma >= 0.0)) fail(ErrorKind::Config, "baseline.focal_gamma must be >= 0");
}

namespace {

void check_aligned(const Matrix& logits, std::span<const PseudoLabelDecision> decisions) {
    require(logits.rows() == decisions.size(), "decisions must align with the logit batch");
    for (const auto& d : decisions) require(d.pseudo_class < logits.cols(), "pseudo class out of range");
}

// Per-sample loss on one logit row against class `target`; writes the unscaled
// gradient into `grad`.
using SampleTerm = double (*)(std::span<const double> logits, std::size_t target, double param,
                              std::span<double> grad);

double ce_term(std::span<const double> l, std::size_t t, double, std::span<double> grad) {
    softmax_into(l, grad);
    const double loss = log_sum_exp(l) - l[t];
    grad[t] -= 1.0;
    return loss;
}

double ls_term(std::span<const double> l, std::size_t t, double eps, std::span<double> grad) {
    softmax_into(l, grad);
    const double lse = log_sum_exp(l);
    const double off = eps / static_cast<double>(l.size());
    double loss = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) {
        const double q = (k == t ? 1.0 - eps : 0.0) + off;
        loss += q * (lse - l[k]);
        grad[k] -= q;
    }
    return loss;
}

double focal_term(std::span<const double> l, std::size_t t, double gamma, std::span<double> grad) {
    softmax_into(l, grad);
    const double log_p = l[t] - log_sum_exp(l);
    const double p = grad[t];
    double rest = 0.0;  // 1 - p without cancellation
    for (std::size_t k = 0; k < l.size(); ++k)
        if (k != t) rest += grad[k];
    const double weight = gamma == 0.0 ? 1.0 : std::pow(rest, gamma);
    const double loss = -weight * log_p;
    // dL/dl_j = c (delta_tj - s_j) with c = gamma (1-p)^(gamma-1) p ln p - (1-p)^gamma.
    double c = -weight;
    if (gamma != 0.0 && rest > 0.0) c += gamma * std::pow(rest, gamma - 1.0) * p * log_p;
    for (std::size_t k = 0; k < l.size(); ++k) grad[k] = c * ((k == t ? 1.0 : 0.0) - grad[k]);
    return loss;
}

struct MaskedResult {
    LossGrad lg;
    double disagree_sum = 0.0;
    double agree_sum = 0.0;
};

MaskedResult masked_term(const Matrix& logits, std::span<const PseudoLabelDecision> decisions, SampleTerm term,
                         double param) {
    check_aligned(logits, decisions);
    MaskedResult r;
    r.lg.grad = Matrix(logits.rows(), logits.cols());
    if (decisions.empty()) return r;
    const double scale = 1.0 / static_cast<double>(decisions.size());
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (!decisions[i].selected) continue;
        auto g = r.lg.grad.row(i);
        const double v = term(logits.row(i), decisions[i].pseudo_class, param, g) * scale;
        for (double& x : g) x *= scale;
        (decisions[i].agree ? r.agree_sum : r.disagree_sum) += v;
    }
    r.lg.loss = r.disagree_sum + r.agree_sum;
    return r;
}

bool in_penalty_set(const PseudoLabelDecision& d, PenaltySet set) {
    return d.selected && (d.agree || set == PenaltySet::AgreeAndDisagree);
}

}  // namespace

LossGrad supervised_ce(const Matrix& logits, std::span<const std::size_t> labels) {
    require(logits.rows() > 0, "supervised_ce: empty batch");
    require(labels.size() == logits.rows(), "supervised_ce: label count mismatch");
    LossGrad r;
    r.grad = Matrix(logits.rows(), logits.cols());
    const double scale = 1.0 / static_cast<double>(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        require(labels[i] < logits.cols(), "supervised_ce: label out of range");
        auto g = r.grad.row(i);
        r.loss += ce_term(logits.row(i), labels[i], 0.0, g) * scale;
        for (double& x : g) x *= scale;
    }
    return r;
}

LossGrad pseudo_ce_masked(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions) {
    return masked_term(strong_logits, decisions, ce_term, 0.0).lg;
}

LossGrad ls_pseudo_ce(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions, double eps) {
    require(eps >= 0.0 && eps < 1.0, "label smoothing eps must be in [0,1)");
    return masked_term(strong_logits, decisions, ls_term, eps).lg;
}

LossGrad focal_pseudo_ce(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions, double gamma) {
    require(gamma >= 0.0, "focal gamma must be >= 0");
    return masked_term(strong_logits, decisions, focal_term, gamma).lg;
}

LossBreakdown decompose(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions) {
    check_aligned(strong_logits, decisions);
    LossBreakdown b;
    b.n_unlabeled = decisions.size();
    if (decisions.empty()) return b;
    const double scale = 1.0 / static_cast<double>(decisions.size());
    std::vector<double> probs(strong_logits.cols());
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto& d = decisions[i];
        if (!d.selected) continue;
        const auto l = strong_logits.row(i);
        if (d.agree) {
            // The pseudo-label is the strong view's own argmax: the term is its min-entropy.
            softmax_into(l, probs);
            b.min_entropy_U2 += min_entropy(probs) * scale;
            ++b.n_U2;
        } else {
            b.pseudo_ce_U1 += (log_sum_exp(l) - l[d.pseudo_class]) * scale;
            ++b.n_U1;
        }
    }
    b.total = b.pseudo_ce_U1 + b.min_entropy_U2;
    return b;
}

std::vector<double> logit_distances(std::span<const double> logits) {
    const double top = logits[argmax_tiebreak(logits)];
    std::vector<double> d(logits.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = top - logits[k];
    return d;
}

LossGrad margin_penalty(const Matrix& strong_logits, std::span<const PseudoLabelDecision> decisions,
                        const MarginConfig& cfg) {
    cfg.validate();
    check_aligned(strong_logits, decisions);
    LossGrad r;
    r.grad = Matrix(strong_logits.rows(), strong_logits.cols());
    if (decisions.empty() || cfg.lambda == 0.0) return r;
    const double scale = cfg.lambda / static_cast<double>(decisions.size());
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (!in_penalty_set(decisions[i], cfg.apply_set)) continue;
        const auto l = strong_logits.row(i);
        const std::size_t winner = argmax_tiebreak(l);
        auto g = r.grad.row(i);
        double sample = 0.0;
        for (std::size_t k = 0; k < l.size(); ++k) {
            const double excess = l[winner] - l[k] - cfg.margin;
            if (excess > 0.0) {
                sample += excess;
                g[winner] += scale;
                g[k] -= scale;
            }
        }
        r.loss += sample * scale;
    }
    return r;
}

TotalLoss total_loss(const Matrix& labeled_logits, std::span<const std::size_t> labels, const Matrix& strong_logits,
                     std::span<const PseudoLabelDecision> decisions, const ObjectiveConfig& cfg) {
    cfg.validate();
    TotalLoss out;
    auto sup = supervised_ce(labeled_logits, labels);

    SampleTerm term = ce_term;
    double param = 0.0;
    if (cfg.unsupervised == UnsupervisedLoss::LabelSmoothing) {
        term = ls_term;
        param = cfg.label_smoothing_eps;
    } else if (cfg.unsupervised == UnsupervisedLoss::Focal) {
        term = focal_term;
        param = cfg.focal_gamma;
    }
    auto unsup = masked_term(strong_logits, decisions, term, param);
    auto pen = margin_penalty(strong_logits, decisions, cfg.penalty);

    auto& b = out.breakdown;
    b.supervised_ce = sup.loss;
    b.pseudo_ce_U1 = unsup.disagree_sum;
    b.min_entropy_U2 = unsup.agree_sum;
    b.penalty = pen.loss;
    b.total = b.supervised_ce + b.pseudo_ce_U1 + b.min_entropy_U2 + b.penalty;
    b.n_labeled = labeled_logits.rows();
    b.n_unlabeled = decisions.size();
    for (const auto& d : decisions) {
        if (!d.selected) continue;
        ++(d.agree ? b.n_U2 : b.n_U1);
    }

    out.grad_labeled = std::move(sup.grad);
    out.grad_unlabeled = std::move(unsup.lg.grad);
    auto& gu = out.grad_unlabeled.data();
    const auto& gp = pen.grad.data();
    for (std::size_t i = 0; i < gu.size(); ++i) gu[i] += gp[i];
    return out;
}

}  // namespace sslcal
