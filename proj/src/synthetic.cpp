#include "topnrank/synthetic.hpp"

#include "topnrank/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace topnrank {

namespace {

std::vector<std::size_t> sample_distinct(std::size_t population, std::size_t count, detail::Rng& rng) {
    std::vector<std::size_t> all(population);
    std::iota(all.begin(), all.end(), std::size_t{0});
    // partial Fisher-Yates
    for (std::size_t p = 0; p < count; ++p) {
        std::uniform_int_distribution<std::size_t> pick(p, population - 1);
        std::swap(all[p], all[pick(rng)]);
    }
    all.resize(count);
    return all;
}

std::vector<double> gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, detail::Rng& rng) {
    std::normal_distribution<double> normal(0.0, stddev);
    std::vector<double> m(rows * cols);
    for (auto& x : m) x = normal(rng);
    return m;
}

double row_dot(const std::vector<double>& a, std::size_t i, const std::vector<double>& b, std::size_t j,
               std::size_t cols) {
    double s = 0.0;
    for (std::size_t t = 0; t < cols; ++t) s += a[i * cols + t] * b[j * cols + t];
    return s;
}

} // namespace

InteractionDataset make_uniform_dataset(std::size_t n_users, std::size_t n_items, std::size_t items_per_user,
                                        std::uint64_t seed) {
    if (items_per_user > n_items) throw std::invalid_argument("items_per_user exceeds n_items");
    detail::Rng rng(seed);
    std::uniform_int_distribution<int> stars(1, 5);
    std::vector<std::vector<Interaction>> per_user(n_users);
    for (auto& list : per_user)
        for (auto i : sample_distinct(n_items, items_per_user, rng))
            list.push_back(make_interaction(i, static_cast<double>(stars(rng))));
    return InteractionDataset::from_lists(std::move(per_user), n_items);
}

InteractionDataset make_planted_dataset(const PlantedSpec& spec) {
    if (spec.items_per_user > spec.n_items) throw std::invalid_argument("items_per_user exceeds n_items");
    if (spec.rank == 0) throw std::invalid_argument("rank must be at least 1");
    detail::Rng rng(spec.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.rank));
    auto users = gaussian_matrix(spec.n_users, spec.rank, scale, rng);
    auto items = gaussian_matrix(spec.n_items, spec.rank, scale, rng);
    std::normal_distribution<double> noise(0.0, spec.noise);

    std::vector<std::vector<Interaction>> per_user(spec.n_users);
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        for (auto i : sample_distinct(spec.n_items, spec.items_per_user, rng)) {
            const double z = row_dot(users, u, items, i, spec.rank) + noise(rng);
            const double rating = std::clamp(std::round(3.0 + 2.0 * z), 1.0, 5.0);
            per_user[u].push_back(make_interaction(i, rating));
        }
    }
    return InteractionDataset::from_lists(std::move(per_user), spec.n_items);
}

std::vector<RawRating> make_movielens_like(const MovieLensLikeSpec& spec) {
    if (spec.min_per_user > spec.n_items) throw std::invalid_argument("min_per_user exceeds n_items");
    if (spec.rank == 0) throw std::invalid_argument("rank must be at least 1");
    detail::Rng rng(spec.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.rank));
    auto user_factors = gaussian_matrix(spec.n_users, spec.rank, scale, rng);
    auto item_factors = gaussian_matrix(spec.n_items, spec.rank, scale, rng);
    std::normal_distribution<double> unit(0.0, 1.0);

    std::vector<double> user_bias(spec.n_users), item_bias(spec.n_items), popularity(spec.n_items);
    for (auto& b : user_bias) b = 0.3 * unit(rng);
    // popular items are rated more often and slightly better
    std::vector<std::size_t> rank_of(spec.n_items);
    std::iota(rank_of.begin(), rank_of.end(), std::size_t{0});
    std::shuffle(rank_of.begin(), rank_of.end(), rng);
    for (std::size_t i = 0; i < spec.n_items; ++i) {
        popularity[i] = 1.0 / std::pow(static_cast<double>(rank_of[i]) + 10.0, 0.9);
        item_bias[i] = 0.4 * unit(rng) - 0.15 * std::log(static_cast<double>(rank_of[i]) + 1.0) + 0.6;
    }

    // activity: min + exponential tail with the requested mean
    const double tail_mean = std::max(1.0, spec.mean_per_user - static_cast<double>(spec.min_per_user));
    std::exponential_distribution<double> tail(1.0 / tail_mean);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<RawRating> ratings;
    std::int64_t clock = 874724710;
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        const auto count = std::min<std::size_t>(
            spec.n_items, spec.min_per_user + static_cast<std::size_t>(std::floor(tail(rng))));
        // weighted sampling without replacement: top-count keys u^(1/w)
        std::vector<std::pair<double, std::size_t>> keys(spec.n_items);
        for (std::size_t i = 0; i < spec.n_items; ++i)
            keys[i] = {std::log(std::max(uniform(rng), 1e-300)) / popularity[i], i};
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(),
                          [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t r = 0; r < count; ++r) {
            const auto i = keys[r].second;
            const double z = user_bias[u] + item_bias[i] + 2.0 * row_dot(user_factors, u, item_factors, i, spec.rank) +
                             spec.noise * unit(rng);
            const double stars = std::clamp(std::round(3.8 + 1.1 * z), 1.0, 5.0);
            clock += 1 + static_cast<std::int64_t>(uniform(rng) * 600.0);
            ratings.push_back(RawRating{std::to_string(u + 1), std::to_string(i + 1), stars, clock, 0});
        }
    }
    return ratings;
}

} // namespace topnrank
