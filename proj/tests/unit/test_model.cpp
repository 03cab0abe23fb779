#include <doctest.h>

#include "topnrank/model.hpp"

#include <cmath>
#include <stdexcept>

using namespace topnrank;

TEST_CASE("initialization width closed forms") {
    // 2 / 70^(1/4) and 2 / sqrt(7)
    CHECK(relu_init_width(10) == doctest::Approx(0.691441569283882).epsilon(1e-14));
    CHECK(relu_init_width(7) == doctest::Approx(2.0 / std::sqrt(7.0)).epsilon(1e-14));
    CHECK(relu_init_width(7) == doctest::Approx(0.7559289460184544).epsilon(1e-14));
    CHECK_THROWS(relu_init_width(0));
}

TEST_CASE("three standard deviations of a fresh score equal one") {
    for (std::size_t k : {1u, 5u, 10u, 64u}) {
        const double b = relu_init_width(k);
        const double variance = 7.0 * double(k) * std::pow(b, 4) / 144.0;
        CHECK(3.0 * std::sqrt(variance) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("init is seeded, bounded and finite") {
    auto a = init_model(30, 40, 6, {0.5, 11});
    auto b = init_model(30, 40, 6, {0.5, 11});
    auto c = init_model(30, 40, 6, {0.5, 12});
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.k() == 6);
    CHECK(a.n_users() == 30);
    CHECK(a.n_items() == 40);
    for (auto x : a.user_factors.data()) CHECK((x >= 0.0 && x < 0.5));
    for (auto x : a.item_factors.data()) CHECK((x >= 0.0 && x < 0.5));
    CHECK_THROWS(init_model(2, 2, 2, {0.0, 1}));
    CHECK_THROWS(init_model(2, 2, 2, {-1.0, 1}));
}

TEST_CASE("predict_score is the row dot product") {
    LatentFactorModel m(2, 3, 2);
    m.user_factors(0, 0) = 1.0;
    m.user_factors(0, 1) = -2.0;
    m.item_factors(2, 0) = 0.5;
    m.item_factors(2, 1) = 0.25;
    CHECK(predict_score(m, 0, 2) == 0.0);
    m.item_factors(2, 1) = 1.0;
    CHECK(predict_score(m, 0, 2) == -1.5);
    CHECK_THROWS_AS(predict_score(m, 2, 0), std::out_of_range);
    CHECK_THROWS_AS(predict_score(m, 0, 3), std::out_of_range);
    std::vector<std::size_t> items{2, 0};
    auto scores = predict_scores_for(m, 0, items);
    CHECK(scores == std::vector<double>{-1.5, 0.0});
}

TEST_CASE("scores are linear in a user row") {
    auto m = init_model(4, 9, 5, {0.7, 3});
    std::vector<std::size_t> items{0, 1, 2, 3, 4, 5, 6, 7, 8};
    auto before = predict_scores_for(m, 2, items);
    for (double c : {-3.0, 0.0, 0.5, 2.0}) {
        auto scaled = m;
        for (auto& x : scaled.user(2)) x *= c;
        auto after = predict_scores_for(scaled, 2, items);
        for (std::size_t i = 0; i < items.size(); ++i) CHECK(after[i] == doctest::Approx(c * before[i]).epsilon(1e-14));
    }
}

TEST_CASE("vector helpers") {
    std::vector<double> a{1.0, 2.0, 3.0}, b{4.0, -5.0, 6.0};
    CHECK(dot(a, b) == 12.0);
    CHECK(squared_norm(a) == 14.0);
    axpy(2.0, a, b);
    CHECK(b == std::vector<double>{6.0, -1.0, 12.0});
}
