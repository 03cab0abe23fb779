#include "topnrank/fast_trainer.hpp"

#include "topnrank/errors.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace topnrank {

namespace {

void require_rectifier(const ObjectiveSpec& spec) {
    spec.validate();
    if (spec.smoothing.kind != SmoothingKind::rectifier)
        throw std::invalid_argument("the linear-time trainer requires rectifier smoothing");
}

std::vector<RankTerm> sorted_terms(const SortedUserView& view, std::span<const Interaction> list,
                                   const ObjectiveSpec& spec) {
    const auto ranks = fast_smoothed_ranks(view);
    std::vector<RankTerm> terms(view.size());
    for (std::size_t p = 0; p < view.size(); ++p) {
        const auto& x = list[view.order[p]];
        terms[p] = rank_term(spec, ranks[p], gain(x.weight, x.relevance));
    }
    return terms;
}

} // namespace

SortedUserView build_sorted_view(const LatentFactorModel& model, std::size_t u, std::span<const Interaction> list,
                                 OpCounters* counters, bool factor_prefix) {
    const std::size_t m = list.size();
    const std::size_t k = model.k();
    SortedUserView view;
    view.user = u;
    view.k = k;

    struct Key {
        double score;
        std::size_t item;
        std::size_t position;
    };
    std::vector<Key> keys(m);
    for (std::size_t p = 0; p < m; ++p) {
        const double f = dot(model.user(u), model.item(list[p].item));
        check_score(u, f);
        keys[p] = {f, list[p].item, p};
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.item < b.item;
    });

    view.order.resize(m);
    view.items.resize(m);
    view.scores.resize(m);
    view.prefix_score_sums.assign(m + 1, 0.0);
    for (std::size_t p = 0; p < m; ++p) {
        view.order[p] = keys[p].position;
        view.items[p] = keys[p].item;
        view.scores[p] = keys[p].score;
        view.prefix_score_sums[p + 1] = view.prefix_score_sums[p] + view.scores[p];
    }
    if (factor_prefix) {
        view.prefix_factor_sums.assign((m + 1) * k, 0.0);
        for (std::size_t p = 0; p < m; ++p) {
            const auto item = model.item(view.items[p]);
            for (std::size_t t = 0; t < k; ++t)
                view.prefix_factor_sums[(p + 1) * k + t] = view.prefix_factor_sums[p * k + t] + item[t];
        }
    }

    view.tie_begin.resize(m);
    view.tie_end.resize(m);
    for (std::size_t p = 0; p < m;) {
        std::size_t q = p + 1;
        while (q < m && view.scores[q] == view.scores[p]) ++q;
        for (std::size_t r = p; r < q; ++r) {
            view.tie_begin[r] = p;
            view.tie_end[r] = q;
        }
        p = q;
    }

    if (counters) {
        counters->score_evals += m;
        if (factor_prefix) counters->vector_ops += m;
    }
    return view;
}

std::vector<double> fast_smoothed_ranks(const SortedUserView& view) {
    std::vector<double> ranks(view.size());
    for (std::size_t p = 0; p < view.size(); ++p) {
        const std::size_t above = view.tie_begin[p];
        ranks[p] = above == 0 ? 0.0
                              : view.prefix_score_sums[above] - static_cast<double>(above) * view.scores[p];
    }
    return ranks;
}

std::vector<double> fast_user_gradient(const SortedUserView& view, const LatentFactorModel& model,
                                       std::span<const Interaction> list, const ObjectiveSpec& spec,
                                       OpCounters* counters) {
    require_rectifier(spec);
    const std::size_t k = view.k;
    const auto terms = sorted_terms(view, list, spec);
    std::vector<double> grad(k, 0.0);
    // running sum of the item rows in strictly higher tie blocks; the top
    // block has no higher item, so its inner sums are empty
    std::vector<double> above_sum(k, 0.0), block_sum(k, 0.0);
    for (std::size_t begin = 0; begin < view.size();) {
        const std::size_t end = view.tie_end[begin];
        const double count = static_cast<double>(begin);
        std::fill(block_sum.begin(), block_sum.end(), 0.0);
        for (std::size_t p = begin; p < end; ++p) {
            const auto item = model.item(view.items[p]);
            const double c = terms[p].slope;
            if (begin > 0 && c != 0.0)
                for (std::size_t t = 0; t < k; ++t) grad[t] += c * (above_sum[t] - count * item[t]);
            axpy(1.0, item, block_sum);
        }
        axpy(1.0, block_sum, above_sum);
        begin = end;
    }
    axpy(2.0 * spec.lambda, model.user(view.user), grad);
    if (counters) counters->vector_ops += 2 * view.size() + 1;
    return grad;
}

void fast_item_updates(const SortedUserView& view, LatentFactorModel& model, std::span<const Interaction> list,
                       const ObjectiveSpec& spec, double learning_rate, OpCounters* counters) {
    require_rectifier(spec);
    const std::size_t m = view.size();
    const std::size_t k = view.k;
    const auto terms = sorted_terms(view, list, spec);

    std::vector<double> suffix_slopes(m + 1, 0.0);
    for (std::size_t p = m; p-- > 0;) suffix_slopes[p] = suffix_slopes[p + 1] + terms[p].slope;

    const auto user = model.user(view.user);
    for (std::size_t p = 0; p < m; ++p) {
        const double own = terms[p].slope * static_cast<double>(view.tie_begin[p]);
        const double coef = suffix_slopes[view.tie_end[p]] - own;
        auto row = model.item(view.items[p]);
        const double decay = 1.0 - 2.0 * learning_rate * spec.lambda;
        for (std::size_t t = 0; t < k; ++t) row[t] = row[t] * decay - learning_rate * coef * user[t];
    }
    if (counters) counters->vector_ops += 2 * m;
}

void sgd_step_fast(LatentFactorModel& model, const InteractionDataset& dataset, std::span<const std::size_t> batch,
                   const ObjectiveSpec& spec, double learning_rate, OpCounters* counters) {
    require_rectifier(spec);
    for (auto u : batch) {
        if (u >= dataset.n_users()) throw std::out_of_range("user index " + std::to_string(u) + " out of range");
        auto list = dataset.user(u);
        if (list.empty()) throw DataError("user " + dataset.users().id(u) + " has no training interactions");

        auto view = build_sorted_view(model, u, list, counters, false);
        auto grad = fast_user_gradient(view, model, list, spec, counters);
        axpy(-learning_rate, grad, model.user(u));
        if (counters) counters->vector_ops += 1;

        // re-sort against the updated user row before touching items
        auto updated = build_sorted_view(model, u, list, counters, false);
        fast_item_updates(updated, model, list, spec, learning_rate, counters);
    }
}

double fast_objective_value(const LatentFactorModel& model, const InteractionDataset& dataset,
                            std::span<const std::size_t> users, const ObjectiveSpec& spec) {
    require_rectifier(spec);
    double loss = 0.0;
    std::set<std::size_t> touched_users, touched_items;
    for (auto u : users) {
        auto list = dataset.user(u);
        if (list.empty()) throw DataError("user " + dataset.users().id(u) + " has no training interactions");
        auto view = build_sorted_view(model, u, list, nullptr, false);
        for (const auto& term : sorted_terms(view, list, spec)) loss += term.loss;
        touched_users.insert(u);
        for (const auto& x : list) touched_items.insert(x.item);
    }
    for (auto u : touched_users) loss += spec.lambda * squared_norm(model.user(u));
    for (auto i : touched_items) loss += spec.lambda * squared_norm(model.item(i));
    return loss;
}

} // namespace topnrank
