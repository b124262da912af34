#pragma once

// Feature-space stand-ins for the weak and strong image augmentations.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sslcal/matrix.hpp"

namespace sslcal {

enum class StreamPurpose : std::uint64_t {
    WeakAugment = 1,
    StrongAugment = 2,
    LabeledBatch = 3,
    UnlabeledBatch = 4,
    Init = 5,
    Dataset = 6,
    Diagnostics = 7,
    LabeledAugment = 8,
};

/// Key of a deterministic random stream: same key, same draws.
struct RngStream {
    std::uint64_t seed = 0;
    StreamPurpose purpose = StreamPurpose::WeakAugment;
    std::uint64_t iteration = 0;
    std::uint64_t sample = 0;

    std::uint64_t hash() const;
    std::mt19937_64 engine() const { return std::mt19937_64(hash()); }
};

std::uint64_t splitmix64(std::uint64_t x);

struct AugmentConfig {
    double weak_noise_sigma = 0.05;
    double strong_noise_sigma = 0.15;
    double strong_mask_prob = 0.2;
    double strong_scale_lo = 0.8;
    double strong_scale_hi = 1.25;

    /// Throws Error(Config) when an invariant is violated.
    void validate() const;
};

/// x + N(0, weak_sigma^2 I).
std::vector<double> weak_augment(std::span<const double> x, const AugmentConfig& cfg, const RngStream& stream);

/// Per coordinate: zero with prob mask_prob, else scale by U[lo, hi]; then add N(0, strong_sigma^2).
std::vector<double> strong_augment(std::span<const double> x, const AugmentConfig& cfg, const RngStream& stream);

/// Row-wise augmentation of a batch; row r uses the stream {seed, purpose, iteration, sample_ids[r]}.
Matrix weak_augment_batch(const Matrix& x, std::span<const std::size_t> sample_ids, const AugmentConfig& cfg,
                          std::uint64_t seed, std::uint64_t iteration,
                          StreamPurpose purpose = StreamPurpose::WeakAugment);
Matrix strong_augment_batch(const Matrix& x, std::span<const std::size_t> sample_ids, const AugmentConfig& cfg,
                            std::uint64_t seed, std::uint64_t iteration);

}  // namespace sslcal
