#pragma once

// Test-only oracles. Nothing here calls into the loss/gradient code paths it
// is used to check.

#include "topnrank/dataset.hpp"
#include "topnrank/model.hpp"
#include "topnrank/objective.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <vector>

namespace topnrank::testing {

struct Instance {
    InteractionDataset dataset;
    LatentFactorModel model;
    std::vector<std::size_t> users;
};

/// Random small instance: every user observes between 1 and max_per_user
/// distinct items with random ratings; factors uniform on [0, width).
inline Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t k,
                                std::size_t max_per_user, double width = 0.8, bool negative_gain = false) {
    std::uniform_int_distribution<std::size_t> count(1, std::min(max_per_user, m));
    std::uniform_int_distribution<int> stars(1, 5);
    std::vector<std::vector<Interaction>> lists(n);
    for (auto& list : lists) {
        std::vector<std::size_t> items(m);
        for (std::size_t i = 0; i < m; ++i) items[i] = i;
        std::shuffle(items.begin(), items.end(), rng);
        items.resize(count(rng));
        for (auto i : items)
            list.push_back(make_interaction(i, stars(rng), ImplicitOptions{4.0, negative_gain}));
    }
    Instance inst;
    inst.dataset = InteractionDataset::from_lists(std::move(lists), m);
    inst.model = LatentFactorModel(n, m, k);
    std::uniform_real_distribution<double> u01(0.0, width);
    for (auto& x : inst.model.user_factors.data()) x = u01(rng);
    for (auto& x : inst.model.item_factors.data()) x = u01(rng);
    for (std::size_t u = 0; u < n; ++u) inst.users.push_back(u);
    return inst;
}

inline double ref_h(const SmoothingSpec& s, double x) {
    if (s.kind == SmoothingKind::rectifier) return std::max(0.0, x);
    return 1.0 / (1.0 + std::exp(-s.scale * x));
}

/// Straight transcription of the smoothed loss, one user at a time.
inline double reference_loss(const LatentFactorModel& model, const InteractionDataset& data,
                             const std::vector<std::size_t>& users, const ObjectiveSpec& spec) {
    double loss = 0.0;
    std::set<std::size_t> touched_users, touched_items;
    for (auto u : users) {
        auto list = data.user(u);
        std::vector<double> f;
        for (const auto& x : list) {
            double s = 0.0;
            for (std::size_t t = 0; t < model.k(); ++t) s += model.user_factors(u, t) * model.item_factors(x.item, t);
            f.push_back(s);
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < list.size(); ++j)
                if (j != i) r += ref_h(spec.smoothing, f[j] - f[i]);
            const double trunc = spec.truncated ? ref_h(spec.smoothing, double(spec.top_n) - r) : 1.0;
            const double g = list[i].weight * (std::pow(2.0, list[i].relevance) - 1.0);
            loss -= trunc * g / std::log(r + 2.0);
        }
        touched_users.insert(u);
        for (const auto& x : list) touched_items.insert(x.item);
    }
    double reg = 0.0;
    for (auto u : touched_users)
        for (std::size_t t = 0; t < model.k(); ++t) reg += model.user_factors(u, t) * model.user_factors(u, t);
    for (auto i : touched_items)
        for (std::size_t t = 0; t < model.k(); ++t) reg += model.item_factors(i, t) * model.item_factors(i, t);
    return loss + spec.lambda * reg;
}

/// Smallest distance of any rectifier kink (a score difference or N - R) from 0.
inline double kink_margin(const LatentFactorModel& model, const InteractionDataset& data,
                          const std::vector<std::size_t>& users, const ObjectiveSpec& spec) {
    double margin = std::numeric_limits<double>::infinity();
    if (spec.smoothing.kind != SmoothingKind::rectifier) return margin;
    for (auto u : users) {
        auto list = data.user(u);
        std::vector<double> f;
        for (const auto& x : list) f.push_back(dot(model.user(u), model.item(x.item)));
        for (std::size_t i = 0; i < f.size(); ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < f.size(); ++j) {
                if (j == i) continue;
                margin = std::min(margin, std::abs(f[j] - f[i]));
                r += std::max(0.0, f[j] - f[i]);
            }
            if (spec.truncated) margin = std::min(margin, std::abs(double(spec.top_n) - r));
        }
    }
    return margin;
}

/// Central differences of `loss` over every user and item parameter.
/// Returns the gradient flattened as [user rows..., item rows...].
inline std::vector<double> finite_difference_gradient(LatentFactorModel model,
                                                      const std::function<double(const LatentFactorModel&)>& loss,
                                                      double step = 1e-5) {
    std::vector<double> grad;
    for (auto* matrix : {&model.user_factors, &model.item_factors}) {
        for (auto& x : matrix->data()) {
            const double saved = x;
            x = saved + step;
            const double up = loss(model);
            x = saved - step;
            const double down = loss(model);
            x = saved;
            grad.push_back((up - down) / (2.0 * step));
        }
    }
    return grad;
}

/// Gradient in the same flattened layout; untouched rows are zero.
inline std::vector<double> flatten(const LossGradient& g, const LatentFactorModel& model) {
    const std::size_t k = model.k();
    std::vector<double> out((model.n_users() + model.n_items()) * k, 0.0);
    for (const auto& [u, v] : g.user_grads)
        for (std::size_t t = 0; t < k; ++t) out[u * k + t] = v[t];
    const std::size_t offset = model.n_users() * k;
    for (const auto& [i, v] : g.item_grads)
        for (std::size_t t = 0; t < k; ++t) out[offset + i * k + t] = v[t];
    return out;
}

inline std::vector<double> parameters(const LatentFactorModel& model) {
    std::vector<double> out(model.user_factors.data().begin(), model.user_factors.data().end());
    out.insert(out.end(), model.item_factors.data().begin(), model.item_factors.data().end());
    return out;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

} // namespace topnrank::testing
