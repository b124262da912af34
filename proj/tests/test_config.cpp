#include <doctest.h>

#include <sstream>

#include "sslcal/config.hpp"
#include "sslcal/error.hpp"

using namespace sslcal;

TEST_CASE("config text with sections and comments") {
    std::istringstream is(R"(# canonical
[data]
classes = 3   # three classes
separation = 5.5

[train]
iterations = 10
seeds = 4,5
threshold.strategy = class_adaptive
)");
    const auto map = read_config_text(is);
    CHECK(map.at("data.classes") == "3");
    CHECK(map.at("data.separation") == "5.5");
    CHECK(map.at("train.seeds") == "4,5");
    CHECK(map.count("train.threshold.strategy") == 1);

    std::istringstream ok(R"(data.classes = 3
[penalty]
lambda = 0.5
apply_set = U1_and_U2
)");
    const auto cfg = config_from_map(read_config_text(ok));
    CHECK(cfg.data.num_classes == 3);
    CHECK(cfg.objective.penalty.lambda == 0.5);
    CHECK(cfg.objective.penalty.apply_set == PenaltySet::AgreeAndDisagree);
}

TEST_CASE("overrides") {
    RunConfig cfg;
    apply_override(cfg, "model.hidden", "32,16,8");
    CHECK(cfg.hidden == std::vector<std::size_t>{32, 16, 8});
    CHECK(cfg.widths() == std::vector<std::size_t>{2, 32, 16, 8, 4});
    apply_override(cfg, "threshold.strategy", "self_adaptive");
    CHECK(cfg.threshold_strategy == ThresholdStrategy::SelfAdaptive);
    apply_override(cfg, "baseline.loss", "fl");
    CHECK(cfg.objective.unsupervised == UnsupervisedLoss::Focal);
    apply_override(cfg, "optim.cosine", "false");
    CHECK_FALSE(cfg.cosine_schedule);

    const auto [k, v] = parse_override(" penalty.margin = 4 ");
    CHECK(k == "penalty.margin");
    CHECK(v == "4");
    CHECK_THROWS_AS(parse_override("novalue"), Error);
    CHECK_THROWS_AS(apply_override(cfg, "no.such.key", "1"), Error);
    CHECK_THROWS_AS(apply_override(cfg, "train.iterations", "-3"), Error);
    CHECK_THROWS_AS(apply_override(cfg, "train.iterations", "ten"), Error);
    CHECK_THROWS_AS(apply_override(cfg, "optim.cosine", "maybe"), Error);
    CHECK_THROWS_AS(apply_override(cfg, "threshold.strategy", "magic"), Error);
    try {
        apply_override(cfg, "no.such.key", "1");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
    }
}

TEST_CASE("text form round-trips every key") {
    RunConfig cfg;
    apply_override(cfg, "data.sigma", "0.3");
    apply_override(cfg, "penalty.margin", "6");
    apply_override(cfg, "train.seeds", "7,8,9");
    apply_override(cfg, "model.activation", "relu");
    std::istringstream is(to_text(cfg));
    const RunConfig back = config_from_map(read_config_text(is));
    CHECK(to_text(back) == to_text(cfg));
    CHECK(to_map(cfg).size() >= 40);
}

TEST_CASE("config hash") {
    RunConfig a;
    RunConfig b = a;
    b.seeds = {11, 12};
    b.out_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.objective.penalty.margin = 4.0;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("validation") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.mu = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RunConfig{};
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RunConfig{};
    cfg.seeds.clear();
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RunConfig{};
    cfg.objective.penalty.margin = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RunConfig{};
    cfg.tau = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK_THROWS_AS(read_config_file("/nonexistent/config.cfg"), Error);
}
