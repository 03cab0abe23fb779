#include <doctest.h>

#include "topnrank/eval.hpp"
#include "topnrank/rng.hpp"
#include "topnrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>
#include <sstream>

using namespace topnrank;

namespace {

std::vector<ScoredItem> by_order(const std::vector<int>& relevance) {
    std::vector<ScoredItem> items;
    for (std::size_t r = 0; r < relevance.size(); ++r)
        items.push_back({r, 1.0 - 0.1 * double(r), relevance[r] ? 1.0 : -1.0, relevance[r]});
    return items;
}

} // namespace

TEST_CASE("perfect ranking scores one") {
    CHECK(*ndcg_at_n(by_order({1, 1, 0, 0}), 3) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("three item example") {
    const double v = *ndcg_at_n(by_order({1, 0, 1}), 3);
    CHECK(v == doctest::Approx(0.9197207891481874).epsilon(1e-13));
    CHECK(v == doctest::Approx((1 / std::log(2.0) + 1 / std::log(4.0)) / (1 / std::log(2.0) + 1 / std::log(3.0)))
                   .epsilon(1e-15));
    CHECK(*ndcg_at_n(by_order({1, 0, 1}), 3, 2.0) == doctest::Approx(v).epsilon(1e-15));
}

TEST_CASE("no relevant item is undefined") {
    CHECK_FALSE(ndcg_at_n(by_order({0, 0, 0}), 2));
    CHECK_THROWS(ndcg_at_n(by_order({1}), 0));
    CHECK_THROWS(ndcg_at_n(by_order({1}), 1, 1.0));
}

TEST_CASE("ties fall back to item order") {
    std::vector<ScoredItem> tied{{5, 0.2, 1.0, 0}, {2, 0.2, 1.0, 1}, {9, 0.2, 1.0, 0}};
    CHECK(*ndcg_at_n(tied, 1) == 1.0);
    tied[1].item = 7;
    CHECK(*ndcg_at_n(tied, 1) == 0.0);
}

TEST_CASE("invariant under positive affine score maps") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<ScoredItem> items;
        for (std::size_t i = 0; i < 8; ++i) items.push_back({i, u(rng), 1.0, int(rng() % 2)});
        items[0].relevance = 1;
        auto moved = items;
        const double a = 0.1 + 5 * std::abs(u(rng)), b = 10 * u(rng);
        for (auto& x : moved) x.score = a * x.score + b;
        for (std::size_t n : {1u, 3u, 8u}) CHECK(*ndcg_at_n(items, n) == doctest::Approx(*ndcg_at_n(moved, n)).epsilon(1e-14));
    }
}

TEST_CASE("moving a relevant item above an irrelevant one never hurts") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<int> rel(6);
        for (auto& r : rel) r = int(rng() % 2);
        rel[rng() % 6] = 1;
        for (std::size_t p = 0; p + 1 < rel.size(); ++p) {
            if (!(rel[p] == 0 && rel[p + 1] == 1)) continue;
            auto swapped = rel;
            std::swap(swapped[p], swapped[p + 1]);
            for (std::size_t n = 1; n <= 6; ++n)
                CHECK(*ndcg_at_n(by_order(swapped), n) >= *ndcg_at_n(by_order(rel), n) - 1e-15);
        }
    }
}

TEST_CASE("evaluate_model averages and excludes") {
    std::vector<std::vector<Interaction>> lists{
        {make_interaction(0, 5.0), make_interaction(1, 2.0), make_interaction(2, 4.0)},
        {make_interaction(0, 1.0), make_interaction(1, 2.0)},
        {}};
    auto test = InteractionDataset::from_lists(lists, 3);
    LatentFactorModel m(3, 3, 1);
    m.user_factors(0, 0) = 1.0;
    m.item_factors(0, 0) = 0.9;
    m.item_factors(1, 0) = 0.5;
    m.item_factors(2, 0) = 0.1;
    std::vector<std::size_t> cutoffs{3};
    auto r = evaluate_model(m, test, cutoffs);
    CHECK(r.user_count == 1);
    CHECK(r.excluded_count == 2);
    CHECK(r.mean[0] == doctest::Approx(0.9197207891481874).epsilon(1e-13));
    CHECK(std::isnan(r.stddev[0]));

    LatentFactorModel wrong(3, 4, 1);
    CHECK_THROWS(evaluate_model(wrong, test, cutoffs));
}

TEST_CASE("identical scores are deterministic") {
    auto ds = make_planted_dataset({});
    LatentFactorModel flat(ds.n_users(), ds.n_items(), 2);
    for (auto& x : flat.user_factors.data()) x = 1.0;
    for (auto& x : flat.item_factors.data()) x = 0.5;
    auto a = evaluate_model(flat, ds);
    auto b = evaluate_model(flat, ds);
    CHECK(a.mean == b.mean);
}

TEST_CASE("the planted model beats a random model") {
    PlantedSpec spec;
    spec.n_users = 60;
    spec.n_items = 80;
    spec.items_per_user = 30;
    auto ds = make_planted_dataset(spec);
    // the generator draws user factors, then item factors, from the same stream
    detail::Rng rng(spec.seed);
    const double sd = 1.0 / std::sqrt(double(spec.rank));
    std::normal_distribution<double> user_normal(0.0, sd), item_normal(0.0, sd);
    LatentFactorModel truth(spec.n_users, spec.n_items, spec.rank);
    for (auto& x : truth.user_factors.data()) x = user_normal(rng);
    for (auto& x : truth.item_factors.data()) x = item_normal(rng);
    auto random = init_model(spec.n_users, spec.n_items, spec.rank, {1.0, 77});
    std::vector<std::size_t> ten{10};
    CHECK(evaluate_model(truth, ds, ten).mean[0] > evaluate_model(random, ds, ten).mean[0]);
}

TEST_CASE("aggregation over splits") {
    MetricsReport a, b;
    a.cutoffs = b.cutoffs = {1, 3};
    a.per_split = {{0.5, 0.6}};
    b.per_split = {{0.7, 0.8}};
    a.split_users = {10};
    b.split_users = {12};
    a.user_count = 10;
    b.user_count = 12;
    std::vector<MetricsReport> both{a, b};
    auto r = aggregate_reports(both);
    CHECK(r.mean[0] == doctest::Approx(0.6));
    CHECK(r.stddev[0] == doctest::Approx(std::sqrt(0.02)));
    CHECK(r.user_count == 22);
    CHECK(r.per_split.size() == 2);
    b.cutoffs = {1};
    std::vector<MetricsReport> mismatched{a, b};
    CHECK_THROWS(aggregate_reports(mismatched));
}

TEST_CASE("experiments are repeatable and one repeat is one run") {
    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.max_iters = 5;
    auto a = run_experiment(ds, c, 2);
    auto b = run_experiment(ds, c, 2);
    CHECK(a.mean == b.mean);
    CHECK(a.per_split.size() == 2);
    CHECK(a.split_seeds.size() == 2);
    CHECK(a.split_seeds[0] != a.split_seeds[1]);

    auto one = run_experiment(ds, c, 1);
    auto split = split_half(ds, split_seed(c.seed, 0));
    auto cfg = c;
    cfg.seed = repeat_train_seed(c.seed, 0);
    auto direct = evaluate_model(train(split.train, cfg).model, split.test);
    CHECK(one.mean == direct.mean);
    CHECK(std::isnan(one.stddev[0]));
    CHECK_THROWS(run_experiment(ds, c, 0));
}

TEST_CASE("ablation variants and outputs") {
    auto variants = ablation_variants(TrainConfig{});
    REQUIRE(variants.size() == 4);
    CHECK(variants[0].name == "Top-N-Rank.ReLU");
    CHECK(variants[1].name == "non-Top-N.ReLU");
    CHECK(variants[2].name == "Top-N-Rank.sgm");
    CHECK(variants[3].name == "non-Top-N.sgm");
    CHECK_FALSE(variants[1].config.truncated);
    CHECK(variants[2].config.smoothing.kind == SmoothingKind::sigmoid);
    CHECK(variants[2].config.algorithm == Algorithm::generic);
    for (const auto& v : variants) CHECK_NOTHROW(v.config.validate());

    auto ds = make_planted_dataset({});
    TrainConfig c;
    c.max_iters = 3;
    auto results = run_ablation(ds, c, 1);
    std::ostringstream tsv;
    write_ablation_tsv(tsv, results, "run.json");
    const auto text = tsv.str();
    CHECK(text.rfind("# manifest: run.json\nalgorithm\tNDCG@1", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    // single split: stddev columns are empty
    CHECK(text.find("\t\t\t\t\n") != std::string::npos);

    auto doc = nlohmann::json::parse(ablation_json(results, "run.json"));
    CHECK(doc["variants"].size() == 4);
    CHECK(doc["manifest"] == "run.json");
    CHECK(doc["variants"][0]["metrics"].size() == 5);
}

TEST_CASE("metrics serializations") {
    MetricsReport r;
    r.cutoffs = {1, 3, 5, 10, 20};
    r.mean = {0.5, 0.5, 0.5, 0.5, 0.5};
    r.stddev = {0.1, 0.1, 0.1, 0.1, 0.1};
    r.user_count = 4;
    std::ostringstream out;
    write_metrics_tsv(out, r, "m.json");
    CHECK(out.str() ==
          "# manifest: m.json\ncutoff\tmean\tstddev\tn_users\tn_excluded\n"
          "1\t0.500000\t0.100000\t4\t0\n3\t0.500000\t0.100000\t4\t0\n5\t0.500000\t0.100000\t4\t0\n"
          "10\t0.500000\t0.100000\t4\t0\n20\t0.500000\t0.100000\t4\t0\n");
    auto doc = nlohmann::json::parse(metrics_json(r, "m.json"));
    CHECK(doc["metrics"][3]["cutoff"] == 10);
    CHECK(doc["n_users"] == 4);
}
