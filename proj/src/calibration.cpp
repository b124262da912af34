#include "sslcal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sslcal/core_math.hpp"
#include "sslcal/error.hpp"

namespace sslcal {

namespace {

void check_inputs(std::span<const double> conf, const std::vector<bool>& correct, std::size_t n_bins) {
    require(!conf.empty(), "calibration metric on an empty sample");
    require(conf.size() == correct.size(), "confidence/correctness length mismatch");
    require(n_bins >= 1, "need at least one bin");
    for (double c : conf) require(c >= 0.0 && c <= 1.0, "confidence outside [0,1]");
}

struct BinSums {
    std::size_t count = 0;
    double conf = 0.0;
    double hits = 0.0;
};

double weighted_gap(const std::vector<BinSums>& bins, std::size_t n) {
    double total = 0.0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        const double cnt = static_cast<double>(b.count);
        total += (cnt / static_cast<double>(n)) * std::abs(b.hits / cnt - b.conf / cnt);
    }
    return total;
}

std::vector<BinSums> equal_width_sums(std::span<const double> conf, const std::vector<bool>& correct,
                                      std::size_t n_bins) {
    std::vector<BinSums> bins(n_bins);
    for (std::size_t i = 0; i < conf.size(); ++i) {
        auto& b = bins[equal_width_bin(conf[i], n_bins)];
        ++b.count;
        b.conf += conf[i];
        b.hits += correct[i] ? 1.0 : 0.0;
    }
    return bins;
}

}  // namespace

std::size_t equal_width_bin(double c, std::size_t n_bins) {
    const double n = static_cast<double>(n_bins);
    auto b = static_cast<std::int64_t>(std::ceil(c * n)) - 1;
    b = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(n_bins) - 1);
    // Snap against the exact boundaries b/n so rounding in c*n cannot move a sample.
    while (b > 0 && c <= static_cast<double>(b) / n) --b;
    while (b + 1 < static_cast<std::int64_t>(n_bins) && c > static_cast<double>(b + 1) / n) ++b;
    return static_cast<std::size_t>(b);
}

double ece(std::span<const double> conf, const std::vector<bool>& correct, std::size_t n_bins) {
    check_inputs(conf, correct, n_bins);
    return weighted_gap(equal_width_sums(conf, correct, n_bins), conf.size());
}

double adaptive_ece(std::span<const double> conf, const std::vector<bool>& correct, std::size_t n_bins) {
    check_inputs(conf, correct, n_bins);
    const std::size_t n = conf.size();
    std::vector<double> sorted(conf.begin(), conf.end());
    std::sort(sorted.begin(), sorted.end());
    // Upper edge of bin b-1 is the value at the end of the b-th equal-mass slice.
    std::vector<double> edges;
    for (std::size_t b = 1; b < n_bins; ++b) {
        const std::size_t cut = b * n / n_bins;
        edges.push_back(cut == 0 ? -1.0 : sorted[cut - 1]);
    }
    std::vector<BinSums> bins(n_bins);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(edges.begin(), edges.end(), conf[i]);
        auto& b = bins[static_cast<std::size_t>(it - edges.begin())];
        ++b.count;
        b.conf += conf[i];
        b.hits += correct[i] ? 1.0 : 0.0;
    }
    return weighted_gap(bins, n);
}

double classwise_ece(const Matrix& probs, std::span<const std::size_t> labels, std::size_t n_bins) {
    require(probs.rows() > 0, "calibration metric on an empty sample");
    require(labels.size() == probs.rows(), "label count mismatch");
    const std::size_t k = probs.cols();
    std::vector<double> conf(probs.rows());
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<bool> is_c(probs.rows());
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            conf[i] = std::clamp(probs(i, c), 0.0, 1.0);
            is_c[i] = labels[i] == c;
        }
        std::vector<BinSums> bins(n_bins);
        for (std::size_t i = 0; i < conf.size(); ++i) {
            auto& b = bins[equal_width_bin(conf[i], n_bins)];
            ++b.count;
            b.conf += conf[i];
            b.hits += is_c[i] ? 1.0 : 0.0;
        }
        total += weighted_gap(bins, conf.size());
    }
    return total / static_cast<double>(k);
}

ReliabilityBins reliability(std::span<const double> conf, const std::vector<bool>& correct, std::size_t n_bins) {
    check_inputs(conf, correct, n_bins);
    const auto sums = equal_width_sums(conf, correct, n_bins);
    ReliabilityBins out(n_bins);
    const double n = static_cast<double>(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        out[b].lower = static_cast<double>(b) / n;
        out[b].upper = static_cast<double>(b + 1) / n;
        out[b].count = sums[b].count;
        if (sums[b].count > 0) {
            const double cnt = static_cast<double>(sums[b].count);
            out[b].mean_confidence = sums[b].conf / cnt;
            out[b].accuracy = sums[b].hits / cnt;
        }
    }
    return out;
}

CalibrationReport calibration_report(const Matrix& probs, std::span<const std::size_t> labels, std::size_t n_bins) {
    require(probs.rows() > 0, "calibration report on an empty sample");
    require(labels.size() == probs.rows(), "label count mismatch");
    const std::size_t n = probs.rows();
    std::vector<double> conf(n);
    std::vector<bool> correct(n);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = probs.row(i);
        const std::size_t pred = argmax_tiebreak(row);
        conf[i] = std::clamp(row[pred], 0.0, 1.0);
        correct[i] = pred == labels[i];
        errors += correct[i] ? 0 : 1;
    }
    CalibrationReport r;
    r.n_samples = n;
    r.error_rate = static_cast<double>(errors) / static_cast<double>(n);
    r.ece = ece(conf, correct, n_bins);
    r.aece = adaptive_ece(conf, correct, n_bins);
    r.cece = classwise_ece(probs, labels, n_bins);
    r.bins = reliability(conf, correct, n_bins);
    return r;
}

std::vector<double> friedman_rank(const Matrix& scores, const std::vector<bool>& lower_is_better) {
    require(scores.rows() > 0 && scores.cols() > 0, "friedman_rank: empty score matrix");
    require(lower_is_better.size() == scores.cols(), "friedman_rank: one direction flag per setting");
    const std::size_t m = scores.rows(), s = scores.cols();
    std::vector<double> total(m, 0.0);
    std::vector<std::size_t> order(m);
    std::vector<double> key(m);
    for (std::size_t j = 0; j < s; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            require(std::isfinite(scores(i, j)), "friedman_rank: missing or non-finite score");
            key[i] = lower_is_better[j] ? scores(i, j) : -scores(i, j);
        }
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key[a] < key[b]; });
        for (std::size_t lo = 0; lo < m;) {
            std::size_t hi = lo;
            while (hi + 1 < m && key[order[hi + 1]] == key[order[lo]]) ++hi;
            // Positions lo..hi (0-based) share ranks lo+1..hi+1.
            const double avg = (static_cast<double>(lo + hi) + 2.0) / 2.0;
            for (std::size_t q = lo; q <= hi; ++q) total[order[q]] += avg;
            lo = hi + 1;
        }
    }
    for (double& t : total) t /= static_cast<double>(s);
    return total;
}

LogitStats logit_stats(const Matrix& logits, std::span<const std::size_t> labels, double bin_width) {
    require(labels.size() == logits.rows(), "label count mismatch");
    require(bin_width > 0.0, "histogram bin width must be positive");
    const std::size_t k = logits.cols();
    LogitStats st;
    st.bin_width = bin_width;
    st.per_class.resize(k);
    for (auto& c : st.per_class) c.histograms.resize(k);
    bool first = true;
    std::vector<bool> class_seen(k, false);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        require(labels[i] < k, "label out of range");
        auto& cs = st.per_class[labels[i]];
        const auto row = logits.row(i);
        const auto [lo_it, hi_it] = std::minmax_element(row.begin(), row.end());
        const double lo = *lo_it, hi = *hi_it;
        if (!class_seen[labels[i]]) {
            cs.min_logit = lo;
            cs.max_logit = hi;
            class_seen[labels[i]] = true;
        }
        cs.min_logit = std::min(cs.min_logit, lo);
        cs.max_logit = std::max(cs.max_logit, hi);
        cs.max_logit_distance = std::max(cs.max_logit_distance, hi - lo);
        ++cs.n_samples;
        for (std::size_t c = 0; c < k; ++c)
            ++cs.histograms[c][static_cast<std::int64_t>(std::floor(row[c] / bin_width))];
        if (first) {
            st.min_logit = lo;
            st.max_logit = hi;
            first = false;
        }
        st.min_logit = std::min(st.min_logit, lo);
        st.max_logit = std::max(st.max_logit, hi);
        st.mean_max_distance += hi - lo;
        st.max_max_distance = std::max(st.max_max_distance, hi - lo);
    }
    if (logits.rows() > 0) st.mean_max_distance /= static_cast<double>(logits.rows());
    return st;
}

std::optional<double> agreement_ratio(std::span<const PseudoLabelDecision> window) {
    std::size_t agree = 0, selected = 0;
    for (const auto& d : window) {
        if (!d.selected) continue;
        ++selected;
        agree += d.agree ? 1 : 0;
    }
    if (selected == 0) return std::nullopt;
    return static_cast<double>(agree) / static_cast<double>(selected);
}

std::vector<std::optional<double>> agreement_ratio(const std::vector<std::vector<PseudoLabelDecision>>& windows) {
    std::vector<std::optional<double>> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(agreement_ratio(std::span<const PseudoLabelDecision>(w)));
    return out;
}

DynamicsRow simplex_point(double p) {
    require(p > 0.0 && p < 1.0, "simplex_point needs p in (0,1)");
    const double q = 1.0 - p;
    DynamicsRow r;
    r.p = p;
    r.shannon = -p * std::log(p) - q * std::log(q);
    r.min_entropy = -std::log(std::max(p, q));
    r.abs_dshannon = std::abs(std::log(q / p));
    r.abs_dmin_entropy = p > 0.5 ? 1.0 / p : 1.0 / q;
    return r;
}

std::vector<DynamicsRow> simplex_dynamics(std::size_t resolution) {
    require(resolution >= 3, "dynamics grid resolution must be >= 3");
    std::vector<DynamicsRow> rows;
    for (std::size_t i = 1; i <= resolution; ++i) {
        const double p = static_cast<double>(i) / static_cast<double>(resolution + 1);
        if (p == 0.5) continue;
        rows.push_back(simplex_point(p));
    }
    return rows;
}

}  // namespace sslcal
