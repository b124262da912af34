#include "sslcal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sslcal/augment.hpp"
#include "sslcal/error.hpp"

namespace sslcal {

void DatasetSpec::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorKind::Config, what); };
    if (num_classes < 2) bad("data.classes must be >= 2");
    if (dim < 2) bad("data.dim must be >= 2");
    if (components < 1) bad("data.components must be >= 1");
    if (!(sigma > 0.0)) bad("data.sigma must be > 0");
    if (!(separation > 0.0)) bad("data.separation must be > 0");
    if (!(spread >= 0.0)) bad("data.spread must be >= 0");
    if (num_test < 1) bad("data.test must be >= 1");
    if (long_tail) {
        if (gamma_labeled == 0 || gamma_unlabeled == 0) bad("long-tail gamma values must be nonzero");
        if (head_labeled < num_classes || head_unlabeled < num_classes)
            bad("long-tail head counts must be >= data.classes");
    } else if (labels_per_class < 1) {
        bad("data.labels_per_class must be >= 1");
    }
}

std::vector<std::size_t> longtail_counts(std::size_t num_classes, std::size_t head, long long gamma) {
    require(num_classes >= 2, "longtail_counts: need at least two classes");
    require(head >= num_classes, "longtail_counts: head count must be >= number of classes");
    require(gamma != 0, "longtail_counts: gamma must be nonzero");
    const double ratio = std::abs(static_cast<double>(gamma));
    std::vector<std::size_t> counts(num_classes);
    for (std::size_t k = 0; k < num_classes; ++k) {
        const double e = -static_cast<double>(k) / static_cast<double>(num_classes - 1);
        const double n = std::round(static_cast<double>(head) * std::pow(ratio, e));
        counts[k] = std::max<std::size_t>(1, static_cast<std::size_t>(n));
    }
    if (gamma < 0) std::reverse(counts.begin(), counts.end());
    return counts;
}

Matrix component_means(const DatasetSpec& spec) {
    const std::size_t k = spec.num_classes, c = spec.components;
    Matrix means(k * c, spec.dim);
    const double pi = std::numbers::pi;
    const double ratio = spec.spread / spec.separation;
    const double gap = 2.0 * pi / static_cast<double>(k) / (static_cast<double>(c - 1) * ratio + 1.0);
    const double step = gap * ratio;
    const double radius = spec.separation * spec.sigma / (2.0 * std::sin(gap / 2.0));
    for (std::size_t cls = 0; cls < k; ++cls) {
        for (std::size_t j = 0; j < c; ++j) {
            const double offset = (static_cast<double>(j) - static_cast<double>(c - 1) / 2.0) * step;
            const double a = 2.0 * pi * static_cast<double>(cls) / static_cast<double>(k) + offset;
            means(cls * c + j, 0) = radius * std::cos(a);
            means(cls * c + j, 1) = radius * std::sin(a);
        }
    }
    return means;
}

namespace {

LabeledSet sample_classes(const DatasetSpec& spec, const Matrix& means, const std::vector<std::size_t>& counts,
                          std::mt19937_64& rng) {
    std::size_t total = 0;
    for (auto n : counts) total += n;
    LabeledSet set{Matrix(total, spec.dim), {}};
    set.y.reserve(total);
    std::normal_distribution<double> noise(0.0, spec.sigma);
    std::uniform_int_distribution<std::size_t> pick(0, spec.components - 1);
    std::size_t row = 0;
    for (std::size_t cls = 0; cls < counts.size(); ++cls) {
        for (std::size_t i = 0; i < counts[cls]; ++i, ++row) {
            const auto mean = means.row(cls * spec.components + pick(rng));
            for (std::size_t d = 0; d < spec.dim; ++d) set.x(row, d) = mean[d] + noise(rng);
            set.y.push_back(cls);
        }
    }
    return set;
}

std::vector<std::size_t> balanced_counts(std::size_t k, std::size_t total) {
    std::vector<std::size_t> counts(k, total / k);
    for (std::size_t i = 0; i < total % k; ++i) ++counts[i];
    return counts;
}

}  // namespace

Dataset generate_dataset(const DatasetSpec& spec) {
    spec.validate();
    const Matrix means = component_means(spec);
    const std::size_t k = spec.num_classes;

    std::vector<std::size_t> labeled_counts, unlabeled_counts;
    if (spec.long_tail) {
        labeled_counts = longtail_counts(k, spec.head_labeled, spec.gamma_labeled);
        unlabeled_counts = longtail_counts(k, spec.head_unlabeled, spec.gamma_unlabeled);
    } else {
        labeled_counts.assign(k, spec.labels_per_class);
        unlabeled_counts = balanced_counts(k, spec.num_unlabeled);
    }

    // Separate streams per split so resizing one split leaves the others unchanged.
    Dataset ds;
    auto rng_l = RngStream{spec.seed, StreamPurpose::Dataset, 0, 0}.engine();
    auto rng_u = RngStream{spec.seed, StreamPurpose::Dataset, 1, 0}.engine();
    auto rng_t = RngStream{spec.seed, StreamPurpose::Dataset, 2, 0}.engine();
    ds.labeled = sample_classes(spec, means, labeled_counts, rng_l);
    ds.unlabeled = sample_classes(spec, means, unlabeled_counts, rng_u);
    ds.test = sample_classes(spec, means, balanced_counts(k, spec.num_test), rng_t);
    return ds;
}

}  // namespace sslcal
