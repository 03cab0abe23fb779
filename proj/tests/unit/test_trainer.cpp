#include <doctest.h>

#include "support.hpp"
#include "topnrank/errors.hpp"
#include "topnrank/rng.hpp"
#include "topnrank/synthetic.hpp"
#include "topnrank/trainer.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <sstream>

using namespace topnrank;

TEST_CASE("defaults match the reference experiment settings") {
    TrainConfig c;
    CHECK(c.k == 10);
    CHECK(c.top_n == 20);
    CHECK(c.lambda == 0.1);
    CHECK(c.smoothing.scale == 7.0);
    CHECK(c.batch_fraction == 0.10);
    CHECK(c.max_iters == 30);
    CHECK(c.epsilon == 0.1);
    CHECK(c.truncated);
    CHECK(c.algorithm == Algorithm::fast_relu);
    CHECK(c.smoothing.kind == SmoothingKind::rectifier);
    CHECK(c.resolved_init_width() == relu_init_width(10));
}

TEST_CASE("config validation") {
    TrainConfig c;
    c.smoothing.kind = SmoothingKind::sigmoid;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.algorithm = Algorithm::generic;
    CHECK_NOTHROW(c.validate());
    c.learning_rate = 0.0;
    CHECK_THROWS(c.validate());
    c = TrainConfig{};
    c.batch_fraction = 1.5;
    CHECK_THROWS(c.validate());
    c = TrainConfig{};
    c.k = 0;
    CHECK_THROWS(c.validate());
    CHECK(parse_algorithm("fast-relu") == Algorithm::fast_relu);
    CHECK(parse_algorithm("generic") == Algorithm::generic);
    CHECK(to_string(Algorithm::fast_relu) == "fast-relu");
    CHECK_THROWS(parse_algorithm("quick"));
}

TEST_CASE("zero iterations returns the initial model") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.max_iters = 0;
    auto r = train(ds, c);
    CHECK(r.log.iterations.empty());
    CHECK(r.log.stop_reason == StopReason::max_iters);
    auto init = init_model(ds.n_users(), ds.n_items(), c.k, {c.resolved_init_width(), derive_seed(c.seed, 0)});
    CHECK(r.model == init);
}

TEST_CASE("huge epsilon converges after one iteration") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.epsilon = 1e300;
    auto r = train(ds, c);
    CHECK(r.log.iterations.size() == 1);
    CHECK(r.log.stop_reason == StopReason::converged);
}

TEST_CASE("training is deterministic given the seed") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.batch_fraction = 0.3;
    auto a = train(ds, c);
    auto b = train(ds, c);
    CHECK(a.model == b.model);
    c.seed = 2;
    auto other = train(ds, c);
    CHECK_FALSE(other.model == a.model);
}

TEST_CASE("batch size and parameter delta bookkeeping") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.batch_fraction = 0.26;
    c.max_iters = 3;
    c.epsilon = 0.0;
    auto r = train(ds, c);
    REQUIRE(r.log.iterations.size() == 3);
    for (const auto& it : r.log.iterations) {
        CHECK(it.batch_size == 5);
        CHECK(it.param_delta > 0.0);
        CHECK(std::isfinite(it.batch_loss));
        CHECK(std::isnan(it.full_loss));
        CHECK(it.counters.score_evals > 0);
    }

    // the delta of a single iteration equals the squared distance between the models
    c.max_iters = 1;
    auto one = train(ds, c);
    auto init = init_model(ds.n_users(), ds.n_items(), c.k, {c.resolved_init_width(), derive_seed(c.seed, 0)});
    double sq = 0.0;
    auto before = topnrank::testing::parameters(init);
    auto after = topnrank::testing::parameters(one.model);
    for (std::size_t p = 0; p < before.size(); ++p) sq += (after[p] - before[p]) * (after[p] - before[p]);
    CHECK(one.log.iterations[0].param_delta == doctest::Approx(sq).epsilon(1e-10));
}

TEST_CASE("batch is at least one user") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.batch_fraction = 1e-6;
    c.max_iters = 2;
    auto r = train(ds, c);
    CHECK(r.log.iterations[0].batch_size == 1);
}

TEST_CASE("users without training data are skipped by sampling") {
    std::vector<std::vector<Interaction>> lists{{make_interaction(0, 5.0), make_interaction(1, 2.0)}, {}};
    auto ds = InteractionDataset::from_lists(lists, 2);
    TrainConfig c;
    c.k = 2;
    c.batch_fraction = 1.0;
    c.max_iters = 2;
    auto r = train(ds, c);
    CHECK(r.log.iterations[0].batch_size == 1);
    auto empty = InteractionDataset::from_lists({{}, {}}, 2);
    CHECK_THROWS_AS(train(empty, c), DataError);
}

TEST_CASE("divergence reports the iteration") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.learning_rate = 1e9;
    c.init_width = 5.0;
    c.epsilon = 0.0;
    try {
        train(ds, c);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        REQUIRE(e.iteration());
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}

TEST_CASE("generic and fast training agree with rectifier smoothing") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.max_iters = 5;
    c.epsilon = 0.0;
    auto fast = train(ds, c);
    c.algorithm = Algorithm::generic;
    auto generic = train(ds, c);
    CHECK(topnrank::testing::relative_error(topnrank::testing::parameters(fast.model),
                                            topnrank::testing::parameters(generic.model)) < 1e-9);
}

TEST_CASE("full loss tracking and training log text") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.track_full_loss = true;
    c.max_iters = 4;
    c.epsilon = 0.0;
    auto r = train(ds, c);
    CHECK(std::isfinite(r.log.initial_full_loss));
    for (const auto& it : r.log.iterations) CHECK(std::isfinite(it.full_loss));
    std::ostringstream out;
    write_training_log(out, r.log);
    const auto text = out.str();
    CHECK(text.rfind("iteration\tbatch_size\tbatch_loss\tfull_loss\tparam_delta\tseconds\tstop_reason\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(text.find("max_iters\n") != std::string::npos);
}

TEST_CASE("sigmoid training runs through the generic path") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.smoothing.kind = SmoothingKind::sigmoid;
    c.algorithm = Algorithm::generic;
    c.track_full_loss = true;
    auto r = train(ds, c);
    CHECK(r.log.iterations.back().full_loss < r.log.initial_full_loss);
}

TEST_CASE("benchmark rows and table") {
    BenchmarkOptions opts;
    opts.n_users = 5;
    opts.trials = 3;
    std::vector<std::size_t> sizes{10, 20};
    auto rows = benchmark_scaling(sizes, opts);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK(r.trial_seconds.size() == 3);
        CHECK(r.median_seconds >= 0.0);
        CHECK(r.min_seconds <= r.median_seconds);
        CHECK(r.min_seconds == *std::min_element(r.trial_seconds.begin(), r.trial_seconds.end()));
    }
    CHECK(rows[0].algorithm == Algorithm::generic);
    // two rank evaluations, the user pass and the item pass each touch every ordered pair
    CHECK(rows[0].counters.pair_evals == 4u * 5u * 10u * 9u);
    opts.trials = 1;
    auto single = benchmark_scaling(sizes, opts);
    CHECK(single[0].median_seconds == single[0].trial_seconds[0]);
    CHECK(single[0].min_seconds == single[0].trial_seconds[0]);
    std::ostringstream out;
    write_scaling_table(out, rows);
    const auto table = out.str();
    CHECK(std::count(table.begin(), table.end(), '\n') == 5);
    opts.trials = 0;
    CHECK_THROWS(benchmark_scaling(sizes, opts));
}

TEST_CASE("one item per user costs the same for both trainers") {
    BenchmarkOptions opts;
    opts.n_users = 50;
    opts.trials = 1;
    std::vector<std::size_t> sizes{1};
    auto rows = benchmark_scaling(sizes, opts);
    CHECK(rows[0].counters.pair_evals == 0);
    CHECK(rows[0].counters.score_evals == rows[1].counters.score_evals);
}
