#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sslcal/augment.hpp"
#include "sslcal/error.hpp"

using namespace sslcal;

TEST_CASE("zero-strength augmentations are the identity") {
    const std::vector<double> x = {1.5, -2.0, 0.25};
    AugmentConfig cfg;
    cfg.weak_noise_sigma = 0.0;
    cfg.strong_noise_sigma = 0.0;
    cfg.strong_mask_prob = 0.0;
    cfg.strong_scale_lo = cfg.strong_scale_hi = 1.0;
    CHECK(weak_augment(x, cfg, {1, StreamPurpose::WeakAugment, 0, 0}) == x);
    CHECK(strong_augment(x, cfg, {1, StreamPurpose::StrongAugment, 0, 0}) == x);
}

TEST_CASE("same key gives the same draws, different keys differ") {
    const std::vector<double> x = {1.0, 2.0};
    AugmentConfig cfg;
    const RngStream key{42, StreamPurpose::StrongAugment, 7, 3};
    CHECK(strong_augment(x, cfg, key) == strong_augment(x, cfg, key));
    CHECK(weak_augment(x, cfg, key) == weak_augment(x, cfg, key));
    CHECK(weak_augment(x, cfg, key) != weak_augment(x, cfg, {42, StreamPurpose::StrongAugment, 7, 4}));
    CHECK(RngStream{1, StreamPurpose::WeakAugment, 0, 0}.hash() != RngStream{1, StreamPurpose::StrongAugment, 0, 0}.hash());
}

TEST_CASE("weak noise has the configured standard deviation") {
    AugmentConfig cfg;
    cfg.weak_noise_sigma = 0.1;
    const std::vector<double> zero(1, 0.0);
    double ss = 0.0, s = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double v = weak_augment(zero, cfg, {5, StreamPurpose::WeakAugment, 0, static_cast<std::uint64_t>(i)})[0];
        s += v;
        ss += v * v;
    }
    const double sd = std::sqrt((ss - s * s / n) / (n - 1));
    CHECK(sd >= 0.09);
    CHECK(sd <= 0.11);
}

TEST_CASE("strong mask fraction") {
    AugmentConfig cfg;
    cfg.strong_mask_prob = 0.3;
    cfg.strong_noise_sigma = 0.0;
    cfg.weak_noise_sigma = 0.0;
    const std::vector<double> ones(100, 1.0);
    std::size_t zeros = 0, total = 0;
    for (std::uint64_t i = 0; i < 1000; ++i)
        for (double v : strong_augment(ones, cfg, {9, StreamPurpose::StrongAugment, 0, i})) {
            zeros += v == 0.0;
            ++total;
            if (v != 0.0) {
                CHECK(v >= cfg.strong_scale_lo);
                CHECK(v <= cfg.strong_scale_hi);
            }
        }
    CHECK(std::abs(static_cast<double>(zeros) / static_cast<double>(total) - 0.3) <= 0.01);
}

TEST_CASE("mask_prob 1 leaves only noise") {
    AugmentConfig cfg;
    cfg.strong_mask_prob = 1.0;
    cfg.strong_noise_sigma = 0.0;
    cfg.weak_noise_sigma = 0.0;
    for (double v : strong_augment(std::vector<double>{3.0, -4.0, 5.0}, cfg, {1, StreamPurpose::StrongAugment, 0, 0}))
        CHECK(v == 0.0);
}

TEST_CASE("batch augmentation equals per-row augmentation") {
    std::mt19937_64 rng(2);
    const Matrix x = testing::random_matrix(600, 3, rng);
    std::vector<std::size_t> ids(600);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 1000 + 3 * i;
    AugmentConfig cfg;
    const Matrix w = weak_augment_batch(x, ids, cfg, 17, 4);
    const Matrix s = strong_augment_batch(x, ids, cfg, 17, 4);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto wr = weak_augment(x.row(r), cfg, {17, StreamPurpose::WeakAugment, 4, ids[r]});
        const auto sr = strong_augment(x.row(r), cfg, {17, StreamPurpose::StrongAugment, 4, ids[r]});
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(w(r, c) == wr[c]);
            CHECK(s(r, c) == sr[c]);
        }
    }
}

TEST_CASE("config validation") {
    AugmentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.strong_noise_sigma = 0.01;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = AugmentConfig{};
    cfg.strong_mask_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = AugmentConfig{};
    cfg.strong_scale_lo = 1.1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = AugmentConfig{};
    cfg.strong_scale_hi = 0.9;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
