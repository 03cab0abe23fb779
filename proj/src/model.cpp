#include "topnrank/model.hpp"

#include "topnrank/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace topnrank {

double predict_score(const LatentFactorModel& model, std::size_t u, std::size_t i) {
    if (u >= model.n_users())
        throw std::out_of_range("user index " + std::to_string(u) + " >= " + std::to_string(model.n_users()));
    if (i >= model.n_items())
        throw std::out_of_range("item index " + std::to_string(i) + " >= " + std::to_string(model.n_items()));
    return dot(model.user(u), model.item(i));
}

std::vector<double> predict_scores_for(const LatentFactorModel& model, std::size_t u, std::span<const std::size_t> items) {
    std::vector<double> scores;
    scores.reserve(items.size());
    for (auto i : items) scores.push_back(predict_score(model, u, i));
    return scores;
}

double relu_init_width(std::size_t k) {
    if (k == 0) throw std::invalid_argument("factor dimension k must be at least 1");
    return 2.0 / std::pow(7.0 * static_cast<double>(k), 0.25);
}

LatentFactorModel init_model(std::size_t n_users, std::size_t n_items, std::size_t k, const InitSpec& spec) {
    if (!(spec.width > 0.0) || !std::isfinite(spec.width))
        throw std::invalid_argument("initialization width must be positive and finite");
    if (k == 0) throw std::invalid_argument("factor dimension k must be at least 1");
    LatentFactorModel model(n_users, n_items, k);
    detail::Rng rng(spec.seed);
    std::uniform_real_distribution<double> uniform(0.0, spec.width);
    // generate_canonical may round up to the bound
    const double below = std::nextafter(spec.width, 0.0);
    auto draw = [&] { return std::min(uniform(rng), below); };
    for (auto& x : model.user_factors.data()) x = draw();
    for (auto& x : model.item_factors.data()) x = draw();
    return model;
}

} // namespace topnrank
