#pragma once

// Brute-force reference computations shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sslcal/matrix.hpp"

namespace oracle {

// Equal-width bin membership tested directly against every interval (lo, hi].
inline double ece(const std::vector<double>& conf, const std::vector<bool>& correct, std::size_t n_bins) {
    const double n = static_cast<double>(conf.size());
    double total = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double lo = static_cast<double>(b) / static_cast<double>(n_bins);
        const double hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
        double cnt = 0.0, c = 0.0, a = 0.0;
        for (std::size_t i = 0; i < conf.size(); ++i) {
            const bool inside = (conf[i] > lo || (b == 0 && conf[i] >= 0.0)) && conf[i] <= hi;
            if (!inside) continue;
            cnt += 1.0;
            c += conf[i];
            a += correct[i] ? 1.0 : 0.0;
        }
        if (cnt > 0.0) total += cnt / n * std::abs(a / cnt - c / cnt);
    }
    return total;
}

// Equal-mass bins by sorted rank; every value goes where its first occurrence in sorted order falls.
inline double adaptive_ece(const std::vector<double>& conf, const std::vector<bool>& correct, std::size_t n_bins) {
    const std::size_t n = conf.size();
    std::vector<double> sorted = conf;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cnt(n_bins, 0.0), c(n_bins, 0.0), a(n_bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t first = static_cast<std::size_t>(std::find(sorted.begin(), sorted.end(), conf[i]) - sorted.begin());
        std::size_t b = 0;
        while (b + 1 < n_bins && first >= (b + 1) * n / n_bins) ++b;
        cnt[b] += 1.0;
        c[b] += conf[i];
        a[b] += correct[i] ? 1.0 : 0.0;
    }
    double total = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b)
        if (cnt[b] > 0.0) total += cnt[b] / static_cast<double>(n) * std::abs(a[b] / cnt[b] - c[b] / cnt[b]);
    return total;
}

inline double classwise_ece(const sslcal::Matrix& probs, const std::vector<std::size_t>& labels, std::size_t n_bins) {
    double total = 0.0;
    for (std::size_t k = 0; k < probs.cols(); ++k) {
        std::vector<double> conf(probs.rows());
        std::vector<bool> hit(probs.rows());
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            conf[i] = probs(i, k);
            hit[i] = labels[i] == k;
        }
        total += ece(conf, hit, n_bins);
    }
    return total / static_cast<double>(probs.cols());
}

// rank = 1 + #strictly better + (#tied others) / 2
inline std::vector<double> friedman(const sslcal::Matrix& s, const std::vector<bool>& lower_is_better) {
    std::vector<double> out(s.rows(), 0.0);
    for (std::size_t j = 0; j < s.cols(); ++j)
        for (std::size_t i = 0; i < s.rows(); ++i) {
            double better = 0.0, tied = 0.0;
            for (std::size_t o = 0; o < s.rows(); ++o) {
                if (o == i) continue;
                if (s(o, j) == s(i, j)) tied += 1.0;
                else if ((s(o, j) < s(i, j)) == lower_is_better[j]) better += 1.0;
            }
            out[i] += 1.0 + better + tied / 2.0;
        }
    for (double& v : out) v /= static_cast<double>(s.cols());
    return out;
}

}  // namespace oracle
