#include "sslcal/augment.hpp"

#include <cstdint>

#include "sslcal/error.hpp"

namespace sslcal {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t RngStream::hash() const {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = splitmix64(h ^ iteration);
    return splitmix64(h ^ sample);
}

void AugmentConfig::validate() const {
    auto bad = [](const char* what) { fail(ErrorKind::Config, what); };
    if (!(weak_noise_sigma >= 0.0)) bad("augment.weak_sigma must be >= 0");
    if (!(strong_noise_sigma >= weak_noise_sigma)) bad("augment.strong_sigma must be >= augment.weak_sigma");
    if (!(strong_mask_prob >= 0.0 && strong_mask_prob <= 1.0)) bad("augment.mask_prob must be in [0,1]");
    if (!(strong_scale_lo > 0.0 && strong_scale_lo <= 1.0 && strong_scale_hi >= 1.0))
        bad("augment scale range must satisfy 0 < lo <= 1 <= hi");
}

std::vector<double> weak_augment(std::span<const double> x, const AugmentConfig& cfg, const RngStream& stream) {
    std::vector<double> out(x.begin(), x.end());
    if (cfg.weak_noise_sigma == 0.0) return out;
    auto rng = stream.engine();
    std::normal_distribution<double> noise(0.0, cfg.weak_noise_sigma);
    for (double& v : out) v += noise(rng);
    return out;
}

std::vector<double> strong_augment(std::span<const double> x, const AugmentConfig& cfg, const RngStream& stream) {
    std::vector<double> out(x.begin(), x.end());
    auto rng = stream.engine();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> scale(cfg.strong_scale_lo, cfg.strong_scale_hi);
    for (double& v : out) {
        // Always draw both numbers so the stream layout is independent of the outcome.
        const double u = unit(rng);
        const double s = scale(rng);
        v = u < cfg.strong_mask_prob ? 0.0 : v * s;
    }
    if (cfg.strong_noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.strong_noise_sigma);
        for (double& v : out) v += noise(rng);
    }
    return out;
}

namespace {

template <class Fn>
Matrix augment_rows(const Matrix& x, std::span<const std::size_t> ids, const AugmentConfig& cfg,
                    std::uint64_t seed, std::uint64_t iteration, StreamPurpose purpose, Fn fn) {
    require(ids.size() == x.rows(), "sample id count must match batch rows");
    Matrix out(x.rows(), x.cols());
    const auto rows = static_cast<std::int64_t>(x.rows());
#pragma omp parallel for schedule(static) if (rows >= 256)
    for (std::int64_t ri = 0; ri < rows; ++ri) {
        const auto r = static_cast<std::size_t>(ri);
        const auto y = fn(x.row(r), cfg, RngStream{seed, purpose, iteration, ids[r]});
        std::copy(y.begin(), y.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace

Matrix weak_augment_batch(const Matrix& x, std::span<const std::size_t> ids, const AugmentConfig& cfg,
                          std::uint64_t seed, std::uint64_t iteration, StreamPurpose purpose) {
    return augment_rows(x, ids, cfg, seed, iteration, purpose, weak_augment);
}

Matrix strong_augment_batch(const Matrix& x, std::span<const std::size_t> ids, const AugmentConfig& cfg,
                            std::uint64_t seed, std::uint64_t iteration) {
    return augment_rows(x, ids, cfg, seed, iteration, StreamPurpose::StrongAugment, strong_augment);
}

}  // namespace sslcal
