#include "sslcal/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sslcal/augment.hpp"
#include "sslcal/core_math.hpp"
#include "sslcal/error.hpp"
#include "sslcal/pseudo_label.hpp"

namespace sslcal {

namespace {

// Endless stream of reshuffled passes over [0, n).
class EpochSampler {
public:
    EpochSampler(std::size_t n, std::uint64_t seed, StreamPurpose purpose) : n_(n), seed_(seed), purpose_(purpose) {
        require(n > 0, "cannot sample batches from an empty set");
        reshuffle();
    }

    std::vector<std::size_t> next(std::size_t batch) {
        std::vector<std::size_t> out;
        out.reserve(batch);
        while (out.size() < batch) {
            if (pos_ == n_) {
                ++epoch_;
                reshuffle();
            }
            out.push_back(perm_[pos_++]);
        }
        return out;
    }

private:
    void reshuffle() {
        perm_.resize(n_);
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        auto rng = RngStream{seed_, purpose_, epoch_, 0}.engine();
        // Fisher-Yates with explicit draws; std::shuffle's algorithm is unspecified.
        for (std::size_t i = n_; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(perm_[i - 1], perm_[j]);
        }
        pos_ = 0;
    }

    std::size_t n_;
    std::uint64_t seed_;
    StreamPurpose purpose_;
    std::uint64_t epoch_ = 0;
    std::size_t pos_ = 0;
    std::vector<std::size_t> perm_;
};

Matrix gather(const Matrix& x, const std::vector<std::size_t>& ids) {
    Matrix out(ids.size(), x.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) std::copy_n(x.row(ids[r]).begin(), x.cols(), out.row(r).begin());
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) softmax_into(logits.row(r), p.row(r));
    return p;
}

// Empty string when the logits are usable.
std::string logit_problem(const Matrix& logits) {
    for (double v : logits.data()) {
        if (!std::isfinite(v)) return "non-finite logit";
        if (std::abs(v) > kMaxLogitMagnitude) return "logit magnitude above 1e4";
    }
    return {};
}

struct Window {
    LossBreakdown sum;
    std::size_t iterations = 0;
    std::size_t unlabeled = 0;
    std::size_t selected = 0;
    std::size_t agree = 0;
    std::size_t pseudo_correct = 0;

    void add(const LossBreakdown& b, const std::vector<PseudoLabelDecision>& decisions,
             const std::vector<std::size_t>& hidden_labels) {
        sum.supervised_ce += b.supervised_ce;
        sum.pseudo_ce_U1 += b.pseudo_ce_U1;
        sum.min_entropy_U2 += b.min_entropy_U2;
        sum.penalty += b.penalty;
        sum.total += b.total;
        sum.n_labeled += b.n_labeled;
        sum.n_U1 += b.n_U1;
        sum.n_U2 += b.n_U2;
        sum.n_unlabeled += b.n_unlabeled;
        ++iterations;
        unlabeled += decisions.size();
        for (std::size_t i = 0; i < decisions.size(); ++i) {
            if (!decisions[i].selected) continue;
            ++selected;
            agree += decisions[i].agree ? 1 : 0;
            pseudo_correct += decisions[i].pseudo_class == hidden_labels[i] ? 1 : 0;
        }
    }

    LossBreakdown mean() const {
        if (iterations == 0) return {};
        const double n = static_cast<double>(iterations);
        LossBreakdown m = sum;
        m.supervised_ce /= n;
        m.pseudo_ce_U1 /= n;
        m.min_entropy_U2 /= n;
        m.penalty /= n;
        m.total /= n;
        return m;
    }
};

}  // namespace

Evaluation evaluate(const MlpParams& params, const LabeledSet& test, std::size_t n_bins) {
    const Matrix logits = predict_logits(params, test.x);
    Evaluation ev;
    ev.report = calibration_report(softmax_rows(logits), test.y, n_bins);
    ev.logits = logit_stats(logits, test.y);
    return ev;
}

Dataset dataset_for_run(const RunConfig& config, std::uint64_t seed) {
    DatasetSpec spec = config.data;
    spec.seed = splitmix64(config.data.seed ^ splitmix64(seed));
    return generate_dataset(spec);
}

RunLog train(const RunConfig& config, std::uint64_t seed) { return train(config, seed, dataset_for_run(config, seed)); }

RunLog train(const RunConfig& config, std::uint64_t seed, const Dataset& data) {
    config.validate();
    const std::size_t k = config.data.num_classes;
    require(data.labeled.x.cols() == config.data.dim && data.unlabeled.x.cols() == config.data.dim,
            "dataset dimension does not match the config");

    RunLog log;
    log.config_hash = config_hash(config);
    log.seed = seed;

    MlpParams params = init_params(config.widths(), config.activation, RngStream{seed, StreamPurpose::Init}.hash());
    SgdState opt;
    opt.learning_rate = config.learning_rate;
    opt.momentum = config.momentum;
    opt.scheduled = config.cosine_schedule;
    opt.schedule.total_steps = config.iterations;
    opt.schedule.warmup_steps =
        static_cast<std::size_t>(std::llround(config.warmup_fraction * static_cast<double>(config.iterations)));

    ThresholdState thresholds = ThresholdState::make(config.threshold_strategy, k, config.tau, config.ema_decay);
    EpochSampler labeled_sampler(data.labeled.x.rows(), seed, StreamPurpose::LabeledBatch);
    std::optional<EpochSampler> unlabeled_sampler;
    if (data.unlabeled.x.rows() > 0) unlabeled_sampler.emplace(data.unlabeled.x.rows(), seed, StreamPurpose::UnlabeledBatch);

    const std::size_t unlabeled_batch = config.mu * config.batch_size;
    double best_error = INFINITY;
    Window window;

    auto record = [&](std::size_t iteration) {
        Evaluation ev = evaluate(params, data.test, config.n_bins);
        EvalRecord rec;
        rec.iteration = iteration;
        rec.train_loss = window.mean();
        rec.test_error = ev.report.error_rate;
        rec.ece = ev.report.ece;
        rec.aece = ev.report.aece;
        rec.cece = ev.report.cece;
        if (window.selected > 0)
            rec.agreement_ratio = static_cast<double>(window.agree) / static_cast<double>(window.selected);
        if (window.unlabeled > 0)
            rec.selected_fraction = static_cast<double>(window.selected) / static_cast<double>(window.unlabeled);
        if (window.selected > 0)
            rec.pseudo_label_accuracy =
                static_cast<double>(window.pseudo_correct) / static_cast<double>(window.selected);
        rec.mean_max_logit_distance = ev.logits.mean_max_distance;
        rec.max_max_logit_distance = ev.logits.max_max_distance;
        rec.thresholds = thresholds.thresholds();
        log.evals.push_back(std::move(rec));
        if (ev.report.error_rate < best_error) {
            best_error = ev.report.error_rate;
            log.best_index = log.evals.size() - 1;
            log.best_report = std::move(ev.report);
            log.best_logit_stats = std::move(ev.logits);
            log.best_params = params;
        }
        window = Window{};
    };

    auto abort_run = [&](std::size_t iteration, const std::string& why) {
        log.diverged = true;
        std::ostringstream os;
        os << "diverged at iteration " << iteration << ": " << why;
        log.diagnostic = os.str();
    };

    record(0);
    for (std::size_t t = 0; t < config.iterations; ++t) {
        const auto lab_ids = labeled_sampler.next(config.batch_size);
        Matrix xl = weak_augment_batch(gather(data.labeled.x, lab_ids), lab_ids, config.augment, seed, t,
                                       StreamPurpose::LabeledAugment);
        std::vector<std::size_t> yl(lab_ids.size());
        for (std::size_t i = 0; i < lab_ids.size(); ++i) yl[i] = data.labeled.y[lab_ids[i]];

        std::vector<std::size_t> unl_ids;
        if (unlabeled_sampler) unl_ids = unlabeled_sampler->next(unlabeled_batch);
        const Matrix xu = gather(data.unlabeled.x, unl_ids);
        const Matrix xw = weak_augment_batch(xu, unl_ids, config.augment, seed, t);
        const Matrix xs = strong_augment_batch(xu, unl_ids, config.augment, seed, t);

        auto fl = forward(params, xl);
        const Matrix weak_logits = predict_logits(params, xw);
        auto fs = forward(params, xs);
        for (const Matrix* m : std::initializer_list<const Matrix*>{&fl.logits, &weak_logits, &fs.logits}) {
            if (auto why = logit_problem(*m); !why.empty()) {
                abort_run(t, why);
                break;
            }
        }
        if (log.diverged) break;

        const Matrix weak_probs = softmax_rows(weak_logits);
        const Matrix strong_probs = softmax_rows(fs.logits);
        const auto decisions = decide_batch(weak_probs, strong_probs, thresholds);
        const auto loss = total_loss(fl.logits, yl, fs.logits, decisions, config.objective);
        if (!std::isfinite(loss.breakdown.total)) {
            abort_run(t, "non-finite loss");
            break;
        }

        auto grads = backward(params, fl.cache, loss.grad_labeled);
        if (!unl_ids.empty()) grads.add(backward(params, fs.cache, loss.grad_unlabeled));
        sgd_step(params, grads, opt);
        thresholds = update_thresholds(thresholds, decisions, weak_probs);

        std::vector<std::size_t> hidden(unl_ids.size());
        for (std::size_t i = 0; i < unl_ids.size(); ++i) hidden[i] = data.unlabeled.y[unl_ids[i]];
        window.add(loss.breakdown, decisions, hidden);

        if ((t + 1) % config.eval_interval == 0 || t + 1 == config.iterations) record(t + 1);
    }

    log.final_params = params;
    if (!log.diverged && data.unlabeled.x.rows() > 0) {
        std::vector<std::size_t> all(data.unlabeled.x.rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
        const Matrix wl = predict_logits(params, weak_augment_batch(data.unlabeled.x, all, config.augment, seed,
                                                                   config.iterations));
        const Matrix sl = predict_logits(params, strong_augment_batch(data.unlabeled.x, all, config.augment, seed,
                                                                     config.iterations));
        const auto decisions = decide_batch(softmax_rows(wl), softmax_rows(sl), thresholds);
        const double limit = config.objective.penalty.margin + kMarginSlack;
        for (std::size_t i = 0; i < decisions.size(); ++i) {
            if (!decisions[i].selected) continue;
            ++log.final_unlabeled.n_selected;
            if (!decisions[i].agree) continue;
            ++log.final_unlabeled.n_agree;
            const auto d = logit_distances(sl.row(i));
            if (*std::max_element(d.begin(), d.end()) <= limit) ++log.final_unlabeled.n_agree_within_margin;
        }
    }
    return log;
}

}  // namespace sslcal
