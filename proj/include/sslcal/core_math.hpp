#pragma once

// Simplex primitives shared by every loss and metric. All logs are natural logs.

#include <cstddef>
#include <span>
#include <vector>

namespace sslcal {

/// Softmax with max-subtraction. Throws on empty or non-finite input.
std::vector<double> softmax(std::span<const double> logits);

/// Writes softmax(logits) into `out` (same length). Same contract as softmax().
void softmax_into(std::span<const double> logits, std::span<double> out);

/// ln sum exp(logits), stable.
double log_sum_exp(std::span<const double> logits);

/// -sum p ln p with 0 ln 0 = 0.
double shannon_entropy(std::span<const double> probs);

/// -ln max_k p_k. A lower bound of shannon_entropy().
double min_entropy(std::span<const double> probs);

/// Index of the maximum, lowest index on ties. Throws on empty input.
std::size_t argmax_tiebreak(std::span<const double> values);

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

/// True when `p` is a valid point on the probability simplex (|sum - 1| <= tol).
bool is_simplex(std::span<const double> p, double tol = 1e-12);

}  // namespace sslcal
