#pragma once

#include "topnrank/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace topnrank {

/// Every user rates exactly `items_per_user` distinct items drawn uniformly
/// from `n_items`, with uniformly random star ratings 1..5.
InteractionDataset make_uniform_dataset(std::size_t n_users, std::size_t n_items, std::size_t items_per_user,
                                        std::uint64_t seed);

/// Small dataset with planted low-rank preferences: a user's rating of an item
/// increases with the dot product of hidden rank-`rank` factors.
struct PlantedSpec {
    std::size_t n_users = 20;
    std::size_t n_items = 30;
    std::size_t rank = 2;
    std::size_t items_per_user = 15;
    double noise = 0.1;
    std::uint64_t seed = 3;
};

InteractionDataset make_planted_dataset(const PlantedSpec& spec);

/// Ratings with the shape of MovieLens-100K: 943 users, 1682 items, at least
/// 20 ratings per user, popularity-skewed item choice and 1..5 stars driven by
/// a hidden low-rank preference model.
struct MovieLensLikeSpec {
    std::size_t n_users = 943;
    std::size_t n_items = 1682;
    std::size_t min_per_user = 20;
    double mean_per_user = 106.0;
    std::size_t rank = 8;
    double noise = 0.5;
    std::uint64_t seed = 100;
};

std::vector<RawRating> make_movielens_like(const MovieLensLikeSpec& spec = {});

} // namespace topnrank
