#include "sslcal/core_math.hpp"

#include <algorithm>
#include <cmath>

#include "sslcal/error.hpp"

namespace sslcal {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
        case ErrorKind::Divergence: return "divergence";
    }
    return "unknown";
}

namespace {

double checked_max(std::span<const double> v) {
    require(!v.empty(), "empty vector");
    double m = v[0];
    for (double x : v) {
        require(std::isfinite(x), "non-finite logit");
        m = std::max(m, x);
    }
    return m;
}

}  // namespace

void softmax_into(std::span<const double> logits, std::span<double> out) {
    require(out.size() == logits.size(), "softmax output size mismatch");
    const double m = checked_max(logits);
    double z = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - m);
        z += out[k];
    }
    for (double& p : out) p /= z;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    softmax_into(logits, out);
    return out;
}

double log_sum_exp(std::span<const double> logits) {
    const double m = checked_max(logits);
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    return m + std::log(z);
}

double shannon_entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double min_entropy(std::span<const double> probs) {
    require(!probs.empty(), "empty probability vector");
    const double pmax = *std::max_element(probs.begin(), probs.end());
    // -log(1) is -0.0; normalise so vertices report +0.
    return pmax >= 1.0 ? 0.0 : -std::log(pmax);
}

std::size_t argmax_tiebreak(std::span<const double> values) {
    require(!values.empty(), "argmax of empty vector");
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k)
        if (values[k] > values[best]) best = k;
    return best;
}

bool is_simplex(std::span<const double> p, double tol) {
    double s = 0.0;
    for (double x : p) {
        if (!(x >= 0.0 && x <= 1.0)) return false;
        s += x;
    }
    return std::abs(s - 1.0) <= tol;
}

}  // namespace sslcal
