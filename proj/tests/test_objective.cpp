#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <array>
#include <functional>
#include <random>

#include "helpers.hpp"
#include "sslcal/core_math.hpp"
#include "sslcal/error.hpp"
#include "sslcal/objective.hpp"

using namespace sslcal;

namespace {

// -ln(exp(l_t) / sum exp(l)) straight from the definition.
double naive_ce(std::span<const double> l, std::size_t t) {
    double z = 0.0;
    for (double v : l) z += std::exp(v);
    return -std::log(std::exp(l[t]) / z);
}

Matrix row(std::vector<double> v) {
    Matrix m(1, v.size());
    std::copy(v.begin(), v.end(), m.row(0).begin());
    return m;
}

PseudoLabelDecision pick(std::size_t cls, bool selected = true, bool agree = true) {
    PseudoLabelDecision d;
    d.pseudo_class = cls;
    d.strong_pred_class = agree ? cls : cls + 1;
    d.selected = selected;
    d.agree = agree;
    return d;
}

// Random decisions consistent with the strong logits: agree means the pseudo-class is the strong argmax.
std::vector<PseudoLabelDecision> random_decisions(const Matrix& logits, std::mt19937_64& rng) {
    std::vector<PseudoLabelDecision> ds(logits.rows());
    std::uniform_int_distribution<std::size_t> cls(0, logits.cols() - 1);
    std::bernoulli_distribution coin(0.6);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ds[i].strong_pred_class = argmax_tiebreak(logits.row(i));
        ds[i].pseudo_class = coin(rng) ? ds[i].strong_pred_class : cls(rng);
        ds[i].agree = ds[i].pseudo_class == ds[i].strong_pred_class;
        ds[i].selected = coin(rng);
    }
    return ds;
}

bool near_kink(const Matrix& logits, double margin) {
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto r = logits.row(i);
        std::vector<double> s(r.begin(), r.end());
        std::sort(s.rbegin(), s.rend());
        if (s[0] - s[1] < 1e-3) return true;
        for (double d : logit_distances(r))
            if (std::abs(d - margin) < 1e-3) return true;
    }
    return false;
}

void check_gradient(const std::function<LossGrad(const Matrix&)>& op, const Matrix& at) {
    const auto analytic = op(at).grad.data();
    auto f = [&](const std::vector<double>& v) {
        Matrix m(at.rows(), at.cols());
        m.data() = v;
        return op(m).loss;
    };
    const auto numeric = testing::numeric_gradient(f, at.data());
    CHECK(testing::relative_error(analytic, numeric) < 1e-6);
}

}  // namespace

TEST_CASE("supervised_ce examples") {
    const auto r = supervised_ce(Matrix(1, 4), std::vector<std::size_t>{2});
    CHECK(r.loss == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(supervised_ce(row({50.0, 0.0, 0.0}), std::vector<std::size_t>{0}).loss < 1e-20);
    CHECK_THROWS_AS(supervised_ce(Matrix(0, 3), std::vector<std::size_t>{}), Error);
    CHECK_THROWS_AS(supervised_ce(Matrix(1, 3), std::vector<std::size_t>{3}), Error);

    std::mt19937_64 rng(1);
    const Matrix l = testing::random_matrix(5, 3, rng, 2.0);
    const std::vector<std::size_t> y = {0, 2, 1, 1, 0};
    double expect = 0.0;
    for (std::size_t i = 0; i < 5; ++i) expect += naive_ce(l.row(i), y[i]) / 5.0;
    CHECK(supervised_ce(l, y).loss == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("pseudo_ce_masked examples") {
    const Matrix four(3, 4);
    std::vector<PseudoLabelDecision> none(3, pick(0, false));
    auto r = pseudo_ce_masked(four, none);
    CHECK(r.loss == 0.0);
    for (double g : r.grad.data()) CHECK(g == 0.0);

    std::vector<PseudoLabelDecision> one = none;
    one[1] = pick(2);
    CHECK(pseudo_ce_masked(four, one).loss == doctest::Approx(std::log(4.0) / 3.0).epsilon(1e-15));

    const Matrix l = row({1.0, -0.5, 2.0});
    Matrix batch(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 3; ++k) batch(i, k) = l(0, k) * static_cast<double>(i + 1);
    const std::vector<PseudoLabelDecision> fixture = {pick(0), pick(1, false), pick(2, true, false)};
    const double expect = (naive_ce(batch.row(0), 0) + naive_ce(batch.row(2), 2)) / 3.0;
    r = pseudo_ce_masked(batch, fixture);
    CHECK(r.loss == doctest::Approx(expect).epsilon(1e-14));
    for (std::size_t k = 0; k < 3; ++k) CHECK(r.grad(1, k) == 0.0);
}

TEST_CASE("decomposition examples") {
    std::mt19937_64 rng(2);
    const Matrix l = testing::random_matrix(6, 3, rng, 3.0);
    std::vector<PseudoLabelDecision> agree(6);
    for (std::size_t i = 0; i < 6; ++i) agree[i] = pick(argmax_tiebreak(l.row(i)));
    auto b = decompose(l, agree);
    CHECK(b.pseudo_ce_U1 == 0.0);
    CHECK(b.n_U2 == 6);
    CHECK(b.min_entropy_U2 == doctest::Approx(pseudo_ce_masked(l, agree).loss).epsilon(1e-13));

    std::vector<PseudoLabelDecision> disagree(6);
    for (std::size_t i = 0; i < 6; ++i) disagree[i] = pick((argmax_tiebreak(l.row(i)) + 1) % 3, true, false);
    b = decompose(l, disagree);
    CHECK(b.min_entropy_U2 == 0.0);
    CHECK(b.n_U1 == 6);
}

TEST_CASE("decomposition identity on random batches") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1200; ++trial) {
        const std::size_t k = std::array<std::size_t, 3>{2, 3, 10}[trial % 3];
        const std::size_t n = std::array<std::size_t, 3>{1, 8, 64}[(trial / 3) % 3];
        const Matrix l = testing::random_matrix(n, k, rng, 4.0);
        const auto ds = random_decisions(l, rng);
        const auto b = decompose(l, ds);
        CHECK(std::abs(b.pseudo_ce_U1 + b.min_entropy_U2 - pseudo_ce_masked(l, ds).loss) < 1e-10);
    }
}

TEST_CASE("logit_distances") {
    CHECK(logit_distances(std::vector<double>{5, 1, 0}) == std::vector<double>{0, 4, 5});
    CHECK(logit_distances(std::vector<double>{2, 2, 2}) == std::vector<double>{0, 0, 0});
    CHECK(logit_distances(std::vector<double>{3, 3, 0}) == std::vector<double>{0, 0, 3});
}

TEST_CASE("margin penalty examples") {
    const Matrix l = row({5.0, 1.0, 0.0});
    const std::vector<PseudoLabelDecision> d = {pick(0)};
    MarginConfig cfg{2.0, 1.0, PenaltySet::AgreeOnly};
    auto r = margin_penalty(l, d, cfg);
    CHECK(r.loss == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(r.grad(0, 0) == 2.0);
    CHECK(r.grad(0, 1) == -1.0);
    CHECK(r.grad(0, 2) == -1.0);
    check_gradient([&](const Matrix& m) { return margin_penalty(m, d, cfg); }, l);

    cfg.margin = 10.0;
    CHECK(margin_penalty(l, d, cfg).loss == 0.0);

    cfg.margin = 0.0;
    CHECK_THROWS_AS(margin_penalty(l, d, cfg), Error);
}

TEST_CASE("margin penalty respects the apply set") {
    const Matrix l = row({9.0, 0.0});
    const std::vector<PseudoLabelDecision> disagree = {pick(1, true, false)};
    CHECK(margin_penalty(l, disagree, {2.0, 1.0, PenaltySet::AgreeOnly}).loss == 0.0);
    CHECK(margin_penalty(l, disagree, {2.0, 1.0, PenaltySet::AgreeAndDisagree}).loss == 7.0);
    CHECK(margin_penalty(l, std::vector{pick(0, false)}, {2.0, 1.0, PenaltySet::AgreeAndDisagree}).loss == 0.0);
}

TEST_CASE("margin penalty properties") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> shift(0.0, 20.0);
    for (int trial = 0; trial < 300; ++trial) {
        const Matrix l = testing::random_matrix(8, 4, rng, 6.0);
        auto ds = random_decisions(l, rng);
        const MarginConfig cfg{3.0, 0.7, trial % 2 ? PenaltySet::AgreeOnly : PenaltySet::AgreeAndDisagree};
        const auto r = margin_penalty(l, ds, cfg);

        bool any_violation = false;
        for (std::size_t i = 0; i < l.rows(); ++i) {
            if (!ds[i].selected || (!ds[i].agree && cfg.apply_set == PenaltySet::AgreeOnly)) continue;
            for (double dk : logit_distances(l.row(i))) any_violation |= dk > cfg.margin;
        }
        CHECK((r.loss > 0.0) == any_violation);

        Matrix shifted = l;
        for (std::size_t i = 0; i < l.rows(); ++i) {
            const double c = shift(rng);
            for (double& v : shifted.row(i)) v += c;
        }
        CHECK(margin_penalty(shifted, ds, cfg).loss == doctest::Approx(r.loss).epsilon(1e-9));

        for (std::size_t i = 0; i < l.rows(); ++i) {
            double s = 0.0;
            for (double g : r.grad.row(i)) s += g;
            CHECK(std::abs(s) < 1e-15);
        }
    }
}

TEST_CASE("label smoothing and focal examples") {
    std::mt19937_64 rng(5);
    const Matrix l = testing::random_matrix(4, 3, rng, 2.0);
    const std::vector<PseudoLabelDecision> ds = {pick(0), pick(1, false), pick(2, true, false), pick(1)};
    const auto base = pseudo_ce_masked(l, ds);
    CHECK(ls_pseudo_ce(l, ds, 0.0).loss == doctest::Approx(base.loss).epsilon(1e-14));
    CHECK(focal_pseudo_ce(l, ds, 0.0).loss == doctest::Approx(base.loss).epsilon(1e-14));
    CHECK_THROWS_AS(ls_pseudo_ce(l, ds, 1.0), Error);
    CHECK_THROWS_AS(focal_pseudo_ce(l, ds, -1.0), Error);

    // K=2, eps=0.5, pseudo-class 0: target [0.75, 0.25].
    const Matrix two = row({0.3, -0.4});
    const double expect = 0.75 * naive_ce(two.row(0), 0) + 0.25 * naive_ce(two.row(0), 1);
    CHECK(ls_pseudo_ce(two, std::vector{pick(0)}, 0.5).loss == doctest::Approx(expect).epsilon(1e-14));

    CHECK(focal_pseudo_ce(row({0.0, 0.0}), std::vector{pick(0)}, 2.0).loss == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-14));
    CHECK(focal_pseudo_ce(row({0.0, 0.0}), std::vector{pick(0)}, 2.0).loss == doctest::Approx(0.1733).epsilon(1e-3));
    CHECK(focal_pseudo_ce(row({800.0, 0.0}), std::vector{pick(0)}, 2.0).loss == 0.0);
}

TEST_CASE("every loss gradient matches finite differences") {
    std::mt19937_64 rng(6);
    int checked = 0;
    while (checked < 25) {
        const std::size_t k = 2 + static_cast<std::size_t>(checked % 4);
        const Matrix l = testing::random_matrix(5, k, rng, 3.0);
        const MarginConfig cfg{1.5, 0.8, checked % 2 ? PenaltySet::AgreeOnly : PenaltySet::AgreeAndDisagree};
        if (near_kink(l, cfg.margin)) continue;
        ++checked;
        const auto ds = random_decisions(l, rng);
        std::vector<std::size_t> y(5);
        for (auto& v : y) v = rng() % k;
        check_gradient([&](const Matrix& m) { return supervised_ce(m, y); }, l);
        check_gradient([&](const Matrix& m) { return pseudo_ce_masked(m, ds); }, l);
        check_gradient([&](const Matrix& m) { return margin_penalty(m, ds, cfg); }, l);
        check_gradient([&](const Matrix& m) { return ls_pseudo_ce(m, ds, 0.2); }, l);
        check_gradient([&](const Matrix& m) { return focal_pseudo_ce(m, ds, 2.0); }, l);
        check_gradient([&](const Matrix& m) { return focal_pseudo_ce(m, ds, 0.5); }, l);
    }
}

TEST_CASE("total_loss recomposes its parts") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix ll = testing::random_matrix(4, 3, rng, 2.0);
        const Matrix ls = testing::random_matrix(8, 3, rng, 8.0);
        const std::vector<std::size_t> y = {0, 1, 2, 1};
        const auto ds = random_decisions(ls, rng);
        ObjectiveConfig cfg;
        cfg.penalty = {2.0, 0.3, PenaltySet::AgreeOnly};
        const auto t = total_loss(ll, y, ls, ds, cfg);
        const double sup = supervised_ce(ll, y).loss;
        const double uns = pseudo_ce_masked(ls, ds).loss;
        const double pen = margin_penalty(ls, ds, cfg.penalty).loss;
        CHECK(std::abs(t.breakdown.total - (sup + uns + pen)) < 1e-12);
        CHECK(std::abs(t.breakdown.pseudo_ce_U1 + t.breakdown.min_entropy_U2 - uns) < 1e-12);
        const auto pg = margin_penalty(ls, ds, cfg.penalty).grad.data();
        const auto ug = pseudo_ce_masked(ls, ds).grad.data();
        for (std::size_t i = 0; i < pg.size(); ++i) CHECK(t.grad_unlabeled.data()[i] == doctest::Approx(pg[i] + ug[i]));

        cfg.penalty.lambda = 0.0;
        CHECK(total_loss(ll, y, ls, ds, cfg).breakdown.penalty == 0.0);
    }
    const Matrix ll = testing::random_matrix(2, 3, rng);
    const std::vector<std::size_t> y = {0, 1};
    const std::vector<PseudoLabelDecision> unselected(4, pick(0, false));
    const auto t = total_loss(ll, y, Matrix(4, 3), unselected, ObjectiveConfig{});
    CHECK(t.breakdown.total == supervised_ce(ll, y).loss);
}
