#pragma once

// Synthetic class-conditional Gaussian mixtures, balanced or long-tailed.
//
// Geometry: all component means lie on one circle in the first two feature
// dimensions. Each class owns an arc of `components` consecutive means;
// neighbouring classes' arcs are separated by a chord of `separation * sigma`,
// and within an arc the angular step is `spread / separation` of that gap.
// Every component is an isotropic Gaussian with standard deviation `sigma`.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sslcal/matrix.hpp"

namespace sslcal {

struct DatasetSpec {
    std::size_t num_classes = 4;
    std::size_t dim = 2;
    std::size_t components = 3;
    double separation = 3.0;
    double sigma = 1.0;
    double spread = 2.5;
    std::size_t labels_per_class = 4;
    std::size_t num_unlabeled = 2000;
    std::size_t num_test = 1000;
    std::uint64_t seed = 0;

    bool long_tail = false;
    long long gamma_labeled = 10;
    long long gamma_unlabeled = -10;
    std::size_t head_labeled = 150;
    std::size_t head_unlabeled = 300;

    void validate() const;
};

struct LabeledSet {
    Matrix x;
    std::vector<std::size_t> y;
};

struct Dataset {
    LabeledSet labeled;
    /// Unlabeled features; `y` holds the hidden true labels, for diagnostics only.
    LabeledSet unlabeled;
    LabeledSet test;
};

/// Mixture component means, row c * components + j belongs to class c.
Matrix component_means(const DatasetSpec& spec);

Dataset generate_dataset(const DatasetSpec& spec);

/// n_k = round(N |gamma|^(-(k-1)/(K-1))), reversed for gamma < 0, floor of 1.
std::vector<std::size_t> longtail_counts(std::size_t num_classes, std::size_t head, long long gamma);

}  // namespace sslcal
