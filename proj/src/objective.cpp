#include "topnrank/objective.hpp"

#include "topnrank/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace topnrank {

void SmoothingSpec::validate() const {
    if (kind == SmoothingKind::sigmoid && !(scale >= 1.0 && std::isfinite(scale)))
        throw std::invalid_argument("sigmoid scaling constant C must be finite and >= 1");
}

std::string to_string(SmoothingKind kind) {
    return kind == SmoothingKind::sigmoid ? "sigmoid" : "relu";
}

SmoothingKind parse_smoothing_kind(const std::string& name) {
    if (name == "relu" || name == "rectifier") return SmoothingKind::rectifier;
    if (name == "sigmoid" || name == "sgm") return SmoothingKind::sigmoid;
    throw std::invalid_argument("unknown smoothing '" + name + "' (expected relu or sigmoid)");
}

namespace {

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

double smooth_value(const SmoothingSpec& spec, double x) {
    if (spec.kind == SmoothingKind::rectifier) return x > 0.0 ? x : 0.0;
    return logistic(spec.scale * x);
}

double smooth_derivative(const SmoothingSpec& spec, double x) {
    if (spec.kind == SmoothingKind::rectifier) return x > 0.0 ? 1.0 : 0.0;
    const double g = logistic(spec.scale * x);
    return spec.scale * g * (1.0 - g);
}

double smoothed_rank(const SmoothingSpec& spec, std::span<const double> scores, std::size_t i) {
    if (i >= scores.size()) throw std::out_of_range("position out of range");
    double rank = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (j != i) rank += smooth_value(spec, scores[j] - scores[i]);
    return rank;
}

std::vector<std::size_t> exact_ranks(std::span<const double> scores, std::span<const std::size_t> items) {
    if (scores.size() != items.size()) throw std::invalid_argument("scores and items differ in length");
    std::vector<std::size_t> ranks(scores.size(), 0);
    for (std::size_t i = 0; i < scores.size(); ++i)
        for (std::size_t j = 0; j < scores.size(); ++j)
            if (scores[j] > scores[i] || (scores[j] == scores[i] && items[j] < items[i])) ++ranks[i];
    return ranks;
}

double wdcg_at_n_exact(std::span<const ScoredItem> items, std::size_t top_n) {
    std::vector<double> scores;
    std::vector<std::size_t> ids;
    for (const auto& x : items) {
        scores.push_back(x.score);
        ids.push_back(x.item);
    }
    auto ranks = exact_ranks(scores, ids);
    double total = 0.0;
    for (std::size_t p = 0; p < items.size(); ++p)
        if (ranks[p] < top_n)
            total += gain(items[p].weight, items[p].relevance) / std::log(static_cast<double>(ranks[p]) + 2.0);
    return total;
}

void ObjectiveSpec::validate() const {
    if (top_n == 0) throw std::invalid_argument("truncation cutoff N must be at least 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
    smoothing.validate();
}

RankTerm rank_term(const ObjectiveSpec& spec, double rank, double gain_value) {
    if (gain_value == 0.0) return {};
    const double log_term = std::log(rank + 2.0);
    const double n = static_cast<double>(spec.top_n);
    const double trunc = spec.truncated ? smooth_value(spec.smoothing, n - rank) : 1.0;
    const double trunc_slope = spec.truncated ? smooth_derivative(spec.smoothing, n - rank) : 0.0;
    RankTerm term;
    term.loss = -trunc * gain_value / log_term;
    term.slope = gain_value * (trunc_slope / log_term + trunc / ((rank + 2.0) * log_term * log_term));
    return term;
}

void check_score(std::size_t user, double score) {
    if (!std::isfinite(score) || std::abs(score) > kDivergenceBound) throw DivergenceError(user, score);
}

namespace {

struct UserPass {
    std::vector<double> scores;
    std::vector<double> ranks;
    std::vector<RankTerm> terms;
    double data_loss = 0.0;
};

UserPass evaluate_user(const LatentFactorModel& model, std::size_t u, std::span<const Interaction> list,
                       const ObjectiveSpec& spec, OpCounters* counters) {
    const std::size_t m = list.size();
    UserPass pass;
    pass.scores.resize(m);
    for (std::size_t p = 0; p < m; ++p) {
        pass.scores[p] = dot(model.user(u), model.item(list[p].item));
        check_score(u, pass.scores[p]);
    }
    pass.ranks.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) pass.ranks[i] += smooth_value(spec.smoothing, pass.scores[j] - pass.scores[i]);
    pass.terms.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        pass.terms[i] = rank_term(spec, pass.ranks[i], gain(list[i].weight, list[i].relevance));
        pass.data_loss += pass.terms[i].loss;
    }
    if (counters) {
        counters->score_evals += m;
        counters->pair_evals += m * (m - 1);
    }
    return pass;
}

// d(data loss)/d(user row): sum_i c_i sum_{j != i} h'(f_j - f_i) (item_j - item_i)
void add_user_data_gradient(const UserPass& pass, const LatentFactorModel& model, std::span<const Interaction> list,
                            const ObjectiveSpec& spec, std::span<double> grad, OpCounters* counters) {
    const std::size_t m = list.size();
    const std::size_t k = model.k();
    for (std::size_t i = 0; i < m; ++i) {
        const auto item_i = model.item(list[i].item);
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double coef =
                pass.terms[i].slope * smooth_derivative(spec.smoothing, pass.scores[j] - pass.scores[i]);
            const auto item_j = model.item(list[j].item);
            for (std::size_t t = 0; t < k; ++t) grad[t] += coef * (item_j[t] - item_i[t]);
        }
    }
    if (counters) {
        counters->pair_evals += m * (m - 1);
        counters->vector_ops += m * (m - 1);
    }
}

// d(data loss)/d(item rows), one k-vector per position of `list`.
std::vector<std::vector<double>> item_data_gradients(const UserPass& pass, const LatentFactorModel& model,
                                                     std::size_t u, std::span<const Interaction> list,
                                                     const ObjectiveSpec& spec, OpCounters* counters) {
    const std::size_t m = list.size();
    const std::size_t k = model.k();
    const auto user = model.user(u);
    std::vector<std::vector<double>> grads(m, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double coef =
                pass.terms[i].slope * smooth_derivative(spec.smoothing, pass.scores[j] - pass.scores[i]);
            // R_i grows with f_j and shrinks with f_i
            axpy(coef, user, grads[j]);
            axpy(-coef, user, grads[i]);
        }
    }
    if (counters) {
        counters->pair_evals += m * (m - 1);
        counters->vector_ops += 2 * m * (m - 1);
    }
    return grads;
}

std::span<const Interaction> checked_user(const InteractionDataset& dataset, std::size_t u) {
    if (u >= dataset.n_users()) throw std::out_of_range("user index " + std::to_string(u) + " out of range");
    auto list = dataset.user(u);
    if (list.empty()) throw DataError("user " + dataset.users().id(u) + " has no training interactions");
    return list;
}

} // namespace

LossGradient loss_and_gradient(const LatentFactorModel& model, const InteractionDataset& dataset,
                               std::span<const std::size_t> users, const ObjectiveSpec& spec) {
    spec.validate();
    if (users.empty()) throw std::invalid_argument("empty user batch");
    const std::size_t k = model.k();
    LossGradient out;
    for (auto u : users) {
        auto list = checked_user(dataset, u);
        auto pass = evaluate_user(model, u, list, spec, nullptr);
        out.loss += pass.data_loss;

        auto& ug = out.user_grads.try_emplace(u, k, 0.0).first->second;
        add_user_data_gradient(pass, model, list, spec, ug, nullptr);

        auto item_grads = item_data_gradients(pass, model, u, list, spec, nullptr);
        for (std::size_t p = 0; p < list.size(); ++p) {
            auto& ig = out.item_grads.try_emplace(list[p].item, k, 0.0).first->second;
            axpy(1.0, item_grads[p], ig);
        }
    }
    for (auto& [u, g] : out.user_grads) {
        out.loss += spec.lambda * squared_norm(model.user(u));
        axpy(2.0 * spec.lambda, model.user(u), g);
    }
    for (auto& [i, g] : out.item_grads) {
        out.loss += spec.lambda * squared_norm(model.item(i));
        axpy(2.0 * spec.lambda, model.item(i), g);
    }
    return out;
}

double objective_value(const LatentFactorModel& model, const InteractionDataset& dataset,
                       std::span<const std::size_t> users, const ObjectiveSpec& spec) {
    spec.validate();
    double loss = 0.0;
    std::set<std::size_t> touched_users, touched_items;
    for (auto u : users) {
        auto list = checked_user(dataset, u);
        loss += evaluate_user(model, u, list, spec, nullptr).data_loss;
        touched_users.insert(u);
        for (const auto& x : list) touched_items.insert(x.item);
    }
    for (auto u : touched_users) loss += spec.lambda * squared_norm(model.user(u));
    for (auto i : touched_items) loss += spec.lambda * squared_norm(model.item(i));
    return loss;
}

void sgd_step_generic(LatentFactorModel& model, const InteractionDataset& dataset, std::span<const std::size_t> batch,
                      const ObjectiveSpec& spec, double learning_rate, OpCounters* counters) {
    spec.validate();
    const std::size_t k = model.k();
    std::vector<double> grad(k);
    for (auto u : batch) {
        auto list = checked_user(dataset, u);

        auto pass = evaluate_user(model, u, list, spec, counters);
        std::fill(grad.begin(), grad.end(), 0.0);
        add_user_data_gradient(pass, model, list, spec, grad, counters);
        axpy(2.0 * spec.lambda, model.user(u), grad);
        axpy(-learning_rate, grad, model.user(u));

        // item gradients all see the updated user row and the pre-step item rows
        auto after = evaluate_user(model, u, list, spec, counters);
        auto item_grads = item_data_gradients(after, model, u, list, spec, counters);
        for (std::size_t p = 0; p < list.size(); ++p) {
            auto row = model.item(list[p].item);
            axpy(2.0 * spec.lambda, row, item_grads[p]);
            axpy(-learning_rate, item_grads[p], row);
        }
        if (counters) counters->vector_ops += 2 + 2 * list.size();
    }
}

} // namespace topnrank
