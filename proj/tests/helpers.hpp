#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "sslcal/matrix.hpp"

namespace testing {

inline sslcal::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    sslcal::Matrix m(rows, cols);
    for (double& v : m.data()) v = n(rng);
    return m;
}

inline std::vector<double> dirichlet(std::size_t k, double alpha, std::mt19937_64& rng) {
    std::gamma_distribution<double> g(alpha, 1.0);
    std::vector<double> p(k);
    double s = 0.0;
    for (double& v : p) s += (v = g(rng));
    for (double& v : p) v /= s;
    return p;
}

// Central differences of f at x, one coordinate at a time.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// max_i |a_i - b_i| / max(1, |b|_inf)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double scale = 1.0, worst = 0.0;
    for (double v : b) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst / scale;
}

}  // namespace testing
