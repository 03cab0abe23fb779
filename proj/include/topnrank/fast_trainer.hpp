#pragma once

#include "topnrank/dataset.hpp"
#include "topnrank/model.hpp"
#include "topnrank/objective.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace topnrank {

/// A user's observed items sorted by descending predicted score (ties by
/// ascending item index) with running sums over that order.
///
/// Under the rectifier only strictly higher-scored items contribute to an
/// item's smoothed rank, so every rank and every inner gradient sum is a
/// difference of prefix sums: O(1) for ranks, O(k) for factor sums.
struct SortedUserView {
    std::size_t user = 0;
    std::size_t k = 0;
    /// order[p] = position in the user's interaction list of the p-th highest item.
    std::vector<std::size_t> order;
    std::vector<std::size_t> items;
    std::vector<double> scores;
    /// prefix_score_sums[p] = sum of scores[0..p), size m + 1.
    std::vector<double> prefix_score_sums;
    /// Row p (p = 0..m) holds the sum of the first p item rows in sorted
    /// order. Empty when the view was built without factor prefixes.
    std::vector<double> prefix_factor_sums;
    /// Sorted positions [tie_begin[p], tie_end[p]) share scores[p].
    std::vector<std::size_t> tie_begin;
    std::vector<std::size_t> tie_end;

    std::size_t size() const { return order.size(); }
    std::span<const double> factor_prefix(std::size_t p) const {
        return std::span{prefix_factor_sums}.subspan(p * k, k);
    }
};

/// The trainer itself skips the factor prefixes (`factor_prefix = false`):
/// the user gradient walks the tie blocks with a running sum instead, which
/// keeps the per-user working set at O(m + k).
SortedUserView build_sorted_view(const LatentFactorModel& model, std::size_t u, std::span<const Interaction> list,
                                 OpCounters* counters = nullptr, bool factor_prefix = true);

/// Rectifier-smoothed ranks in sorted order: R_p = S_b - b * f_p where b is
/// the number of strictly higher-scored items and S_b their score sum.
std::vector<double> fast_smoothed_ranks(const SortedUserView& view);

/// Gradient of the user's loss term with respect to its user row (regularizer
/// included), in O(k m). Requires rectifier smoothing. Item i contributes
/// c_i (S_b - b * item_i), where S_b sums the b item rows strictly above it.
std::vector<double> fast_user_gradient(const SortedUserView& view, const LatentFactorModel& model,
                                       std::span<const Interaction> list, const ObjectiveSpec& spec,
                                       OpCounters* counters = nullptr);

/// Steps every observed item row of the user on its gradient, in O(k m).
/// `view` must be built from the current (already updated) user row.
///
/// The item at sorted position p loses b_p * c_p * user from its own rank
/// (b_p items above it) and gains sum of c_q * user over the items q strictly
/// below it, whose ranks grow with its score; c is dLoss/dRank. Suffix sums of
/// c make the second term O(1) per item.
void fast_item_updates(const SortedUserView& view, LatentFactorModel& model, std::span<const Interaction> list,
                       const ObjectiveSpec& spec, double learning_rate, OpCounters* counters = nullptr);

/// One pass of the linear-time rectifier trainer over `batch`. Produces the
/// same parameters as sgd_step_generic with rectifier smoothing.
void sgd_step_fast(LatentFactorModel& model, const InteractionDataset& dataset, std::span<const std::size_t> batch,
                   const ObjectiveSpec& spec, double learning_rate, OpCounters* counters = nullptr);

/// objective_value for rectifier smoothing in O(m (k + log m)) per user.
double fast_objective_value(const LatentFactorModel& model, const InteractionDataset& dataset,
                            std::span<const std::size_t> users, const ObjectiveSpec& spec);

} // namespace topnrank
