#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "sslcal/error.hpp"
#include "sslcal/model.hpp"

using namespace sslcal;

namespace {

std::vector<double> flatten(const MlpParams& p) {
    std::vector<double> v;
    for (const auto& l : p.layers) {
        v.insert(v.end(), l.weight.data().begin(), l.weight.data().end());
        v.insert(v.end(), l.bias.begin(), l.bias.end());
    }
    return v;
}

std::vector<double> flatten(const GradAccumulator& g) {
    std::vector<double> v;
    for (const auto& l : g.layers) {
        v.insert(v.end(), l.weight.data().begin(), l.weight.data().end());
        v.insert(v.end(), l.bias.begin(), l.bias.end());
    }
    return v;
}

MlpParams unflatten(MlpParams p, const std::vector<double>& v) {
    std::size_t i = 0;
    for (auto& l : p.layers) {
        for (double& w : l.weight.data()) w = v[i++];
        for (double& b : l.bias) b = v[i++];
    }
    return p;
}

}  // namespace

TEST_CASE("init_params") {
    const auto a = init_params({2, 16, 4}, Activation::Tanh, 7);
    const auto b = init_params({2, 16, 4}, Activation::Tanh, 7);
    CHECK(a == b);
    CHECK_FALSE(a == init_params({2, 16, 4}, Activation::Tanh, 8));
    for (const auto& l : a.layers)
        for (double v : l.bias) CHECK(v == 0.0);
    CHECK(a.layers[0].weight.rows() == 16);
    CHECK(a.layers[0].weight.cols() == 2);
    CHECK(a.layers[1].weight.rows() == 4);
    CHECK_THROWS_AS(init_params({2}, Activation::Tanh, 1), Error);
    CHECK_THROWS_AS(init_params({2, 16, 1}, Activation::Tanh, 1), Error);
}

TEST_CASE("init_params weight scale is 1/sqrt(fan_in)") {
    const auto p = init_params({400, 300, 2}, Activation::Relu, 1);
    double ss = 0.0;
    for (double w : p.layers[0].weight.data()) ss += w * w;
    const double var = ss / static_cast<double>(p.layers[0].weight.size());
    CHECK(var == doctest::Approx(1.0 / 400.0).epsilon(0.02));
}

TEST_CASE("forward examples") {
    auto zero = init_params({3, 8, 5}, Activation::Tanh, 2);
    for (auto& l : zero.layers) std::fill(l.weight.data().begin(), l.weight.data().end(), 0.0);
    std::mt19937_64 rng(1);
    const auto out = forward(zero, testing::random_matrix(4, 3, rng)).logits;
    for (double v : out.data()) CHECK(v == 0.0);

    auto lin = init_params({2, 2}, Activation::Tanh, 2);
    lin.layers[0].weight = Matrix(2, 2);
    lin.layers[0].weight(0, 0) = lin.layers[0].weight(1, 1) = 1.0;
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    x(0, 1) = -1.0;
    const auto l = forward(lin, x).logits;
    CHECK(l(0, 0) == 1.0);
    CHECK(l(0, 1) == -1.0);

    CHECK_THROWS_AS(forward(lin, Matrix(1, 3)), Error);
}

TEST_CASE("adding c to the output bias adds c to every logit") {
    std::mt19937_64 rng(4);
    auto p = init_params({2, 16, 16, 3}, Activation::Tanh, 5);
    const Matrix x = testing::random_matrix(10, 2, rng);
    const Matrix before = predict_logits(p, x);
    for (double& b : p.layers.back().bias) b += 2.5;
    const Matrix after = predict_logits(p, x);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(after.data()[i] == doctest::Approx(before.data()[i] + 2.5).epsilon(1e-14));
}

TEST_CASE("backward examples") {
    std::mt19937_64 rng(6);
    const auto p = init_params({2, 8, 3}, Activation::Relu, 3);
    const Matrix x = testing::random_matrix(4, 2, rng);
    const auto f = forward(p, x);
    const auto g = backward(p, f.cache, Matrix(4, 3));
    CHECK(g.squared_norm() == 0.0);

    auto lin = init_params({2, 3}, Activation::Tanh, 3);
    Matrix one(1, 2);
    one(0, 0) = 0.5;
    one(0, 1) = -2.0;
    Matrix dl(1, 3);
    dl(0, 0) = 1.0;
    dl(0, 1) = -3.0;
    dl(0, 2) = 0.25;
    const auto gl = backward(lin, forward(lin, one).cache, dl);
    for (std::size_t o = 0; o < 3; ++o) {
        CHECK(gl.layers[0].bias[o] == dl(0, o));
        for (std::size_t i = 0; i < 2; ++i) CHECK(gl.layers[0].weight(o, i) == dl(0, o) * one(0, i));
    }
}

TEST_CASE("backward matches central finite differences") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto act = trial % 2 == 0 ? Activation::Tanh : Activation::Relu;
        const auto params = init_params({3, 7, 5, 4}, act, 100 + trial);
        const Matrix x = testing::random_matrix(6, 3, rng);
        const Matrix c = testing::random_matrix(6, 4, rng);
        // Loss = sum(c .* logits) + 0.5 sum(logits^2), logit gradient c + logits.
        auto loss = [&](const std::vector<double>& theta) {
            const Matrix l = predict_logits(unflatten(params, theta), x);
            double s = 0.0;
            for (std::size_t i = 0; i < l.size(); ++i) s += c.data()[i] * l.data()[i] + 0.5 * l.data()[i] * l.data()[i];
            return s;
        };
        const auto f = forward(params, x);
        Matrix dl = c;
        for (std::size_t i = 0; i < dl.size(); ++i) dl.data()[i] += f.logits.data()[i];
        const auto analytic = flatten(backward(params, f.cache, dl));
        const auto numeric = testing::numeric_gradient(loss, flatten(params));
        CHECK(testing::relative_error(analytic, numeric) < 1e-6);
    }
}

TEST_CASE("sgd_step examples") {
    auto scalar = [] {
        MlpParams p;
        p.widths = {1, 1};
        p.layers.push_back({Matrix(1, 1), {0.0}});
        return p;
    };
    auto grad_of = [](double g) {
        GradAccumulator a;
        a.layers.push_back({Matrix(1, 1, g), {g}});
        return a;
    };

    auto p = scalar();
    SgdState s;
    s.learning_rate = 0.1;
    s.momentum = 0.0;
    sgd_step(p, grad_of(1.0), s);
    CHECK(p.layers[0].weight(0, 0) == doctest::Approx(-0.1));

    p = scalar();
    s = SgdState{};
    sgd_step(p, grad_of(0.0), s);
    CHECK(p.layers[0].weight(0, 0) == 0.0);

    p = scalar();
    s = SgdState{};
    s.learning_rate = 1.0;
    s.momentum = 0.9;
    sgd_step(p, grad_of(1.0), s);
    sgd_step(p, grad_of(1.0), s);
    CHECK(p.layers[0].weight(0, 0) == doctest::Approx(-2.9).epsilon(1e-15));
}

TEST_CASE("learning-rate schedule") {
    SgdState s;
    s.learning_rate = 0.2;
    s.scheduled = true;
    s.schedule = {1000, 100};
    CHECK(s.rate_at(0) == doctest::Approx(0.2 / 100.0));
    CHECK(s.rate_at(99) == doctest::Approx(0.2));
    CHECK(s.rate_at(100) == doctest::Approx(0.2));
    const double progress = 450.0 / 900.0;
    CHECK(s.rate_at(550) == doctest::Approx(0.2 * std::cos(7.0 * std::numbers::pi * progress / 16.0)));
    double prev = s.rate_at(100);
    for (std::size_t t = 101; t < 1000; ++t) {
        const double r = s.rate_at(t);
        CHECK(r <= prev);
        CHECK(r > 0.0);
        prev = r;
    }
    s.scheduled = false;
    CHECK(s.rate_at(5) == 0.2);
}

TEST_CASE("checkpoint round trip") {
    auto p = init_params({2, 5, 3}, Activation::Relu, 12);
    p.layers[0].bias[1] = 1.0 / 3.0;
    std::stringstream ss;
    save_params(p, ss);
    const auto q = load_params(ss);
    CHECK(p == q);

    std::stringstream bad("not-a-checkpoint 1\n");
    CHECK_THROWS_AS(load_params(bad), Error);
    std::stringstream truncated;
    save_params(p, truncated);
    std::string text = truncated.str();
    std::stringstream cut(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_params(cut), Error);
    CHECK_THROWS_AS(load_params("/nonexistent/dir/x.ckpt"), Error);
}
