#pragma once

#include "topnrank/dataset.hpp"
#include "topnrank/model.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace topnrank {

enum class SmoothingKind { sigmoid, rectifier };

/// Surrogate h for the rank indicator 1(f_i < f_j) ~ h(f_j - f_i).
struct SmoothingSpec {
    SmoothingKind kind = SmoothingKind::rectifier;
    /// Sigmoid scaling constant C, h(x) = 1 / (1 + exp(-C x)). Ignored by the rectifier.
    double scale = 7.0;

    void validate() const;
    bool operator==(const SmoothingSpec&) const = default;
};

std::string to_string(SmoothingKind kind);
SmoothingKind parse_smoothing_kind(const std::string& name);

double smooth_value(const SmoothingSpec& spec, double x);
/// h'(x). The rectifier derivative is 1 for x > 0 and 0 otherwise (including x = 0).
double smooth_derivative(const SmoothingSpec& spec, double x);

/// Sum over j != i of h(scores[j] - scores[i]). The self term is excluded.
double smoothed_rank(const SmoothingSpec& spec, std::span<const double> scores, std::size_t i);

/// Integer ranks from the exact indicator: the number of items scored strictly
/// higher, with equal scores ordered by ascending item index.
std::vector<std::size_t> exact_ranks(std::span<const double> scores, std::span<const std::size_t> items);

struct ScoredItem {
    std::size_t item = 0;
    double score = 0.0;
    double weight = 1.0;
    int relevance = 0;
};

/// w * (2^y - 1)
inline double gain(double weight, int relevance) {
    return weight * (static_cast<double>(1u << relevance) - 1.0);
}

/// Exact weighted DCG truncated at `top_n` (natural log discount, ranks start at 0).
double wdcg_at_n_exact(std::span<const ScoredItem> items, std::size_t top_n);

struct ObjectiveSpec {
    std::size_t top_n = 20;
    double lambda = 0.1;
    SmoothingSpec smoothing;
    /// false drops the h(N - R) factor (the untruncated variant).
    bool truncated = true;

    void validate() const;
};

/// Contribution of one observed item to the smoothed loss and the derivative
/// of that contribution with respect to the item's smoothed rank.
struct RankTerm {
    double loss = 0.0;
    double slope = 0.0;
};

/// loss = -T(R) * g / ln(R + 2) with T(R) = h(N - R) when truncated, 1 otherwise.
RankTerm rank_term(const ObjectiveSpec& spec, double rank, double gain_value);

/// Work counters for the complexity witness.
struct OpCounters {
    std::uint64_t score_evals = 0;   ///< dot products f_ui
    std::uint64_t pair_evals = 0;    ///< h or h' evaluations on item pairs
    std::uint64_t vector_ops = 0;    ///< k-vector additions / scalings

    std::uint64_t total() const { return score_evals + pair_evals + vector_ops; }
    OpCounters& operator+=(const OpCounters& o) {
        score_evals += o.score_evals;
        pair_evals += o.pair_evals;
        vector_ops += o.vector_ops;
        return *this;
    }
    bool operator==(const OpCounters&) const = default;
};

/// Scores above this magnitude abort training with DivergenceError.
inline constexpr double kDivergenceBound = 1e6;

/// Throws DivergenceError when `score` is non-finite or beyond kDivergenceBound.
void check_score(std::size_t user, double score);

struct LossGradient {
    double loss = 0.0;
    std::map<std::size_t, std::vector<double>> user_grads;
    std::map<std::size_t, std::vector<double>> item_grads;
};

/// Smoothed, regularized loss over a batch of users and its exact gradient.
///
/// For each user the smoothed rank of an observed item is the sum of
/// h(f_j - f_i) over the user's other observed items, and the loss is
///   -sum_i T(R_i) w_i (2^y_i - 1) / ln(R_i + 2) + lambda * ||touched rows||^2.
/// Computed by the direct double loop over item pairs, O(k m^2) per user; this
/// is the reference the linear-time rectifier path is checked against.
LossGradient loss_and_gradient(const LatentFactorModel& model, const InteractionDataset& dataset,
                               std::span<const std::size_t> users, const ObjectiveSpec& spec);

/// Loss only, same definition as loss_and_gradient.
double objective_value(const LatentFactorModel& model, const InteractionDataset& dataset,
                       std::span<const std::size_t> users, const ObjectiveSpec& spec);

/// One pass of the generic trainer over `batch`: for each user, step the user
/// row on its gradient, then step every observed item row on gradients taken
/// after the user update.
void sgd_step_generic(LatentFactorModel& model, const InteractionDataset& dataset,
                        std::span<const std::size_t> batch, const ObjectiveSpec& spec, double learning_rate,
                        OpCounters* counters = nullptr);

} // namespace topnrank
