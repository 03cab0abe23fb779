#pragma once

#include "topnrank/dataset.hpp"
#include "topnrank/model.hpp"
#include "topnrank/objective.hpp"
#include "topnrank/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topnrank {

inline const std::vector<std::size_t> kDefaultCutoffs{1, 3, 5, 10, 20};

/// NDCG@cutoff over one user's rated test items.
///
/// Items are ranked by descending score (ties by ascending item index); the
/// item at rank r (from 0) contributes w (2^y - 1) / log(r + 2). The ideal
/// ordering sorts by descending gain. Returns nullopt when the ideal DCG is
/// not positive (no relevant item), since the ratio is undefined.
std::optional<double> ndcg_at_n(std::span<const ScoredItem> items, std::size_t cutoff,
                                double log_base = std::numbers::e);

/// The user's interactions scored by `model`.
std::vector<ScoredItem> score_interactions(const LatentFactorModel& model, std::size_t u,
                                           std::span<const Interaction> list);

/// NDCG at each cutoff, averaged over users; with several splits, means and
/// standard deviations are taken over the per-split averages.
struct MetricsReport {
    std::vector<std::size_t> cutoffs;
    std::vector<double> mean;
    /// Sample standard deviation over splits; NaN with a single split.
    std::vector<double> stddev;
    /// per_split[s][c]: average NDCG@cutoffs[c] on split s.
    std::vector<std::vector<double>> per_split;
    std::vector<std::size_t> split_users;
    std::vector<std::size_t> split_excluded;
    std::vector<std::uint64_t> split_seeds;
    /// Included / excluded user evaluations, summed over splits.
    std::size_t user_count = 0;
    std::size_t excluded_count = 0;
};

/// Users with no test item or no relevant test item are excluded and counted.
MetricsReport evaluate_model(const LatentFactorModel& model, const InteractionDataset& test,
                             std::span<const std::size_t> cutoffs = kDefaultCutoffs);

MetricsReport aggregate_reports(std::span<const MetricsReport> splits);

/// Seeds used by repeat `r` of an experiment seeded with `seed`.
std::uint64_t split_seed(std::uint64_t seed, std::size_t repeat);
std::uint64_t repeat_train_seed(std::uint64_t seed, std::size_t repeat);

/// Repeated split / train / evaluate. The dataset should already be filtered.
MetricsReport run_experiment(const InteractionDataset& dataset, const TrainConfig& config, std::size_t repeats = 5,
                             std::span<const std::size_t> cutoffs = kDefaultCutoffs);

struct Variant {
    std::string name;
    TrainConfig config;
};

/// The four truncation x smoothing variants derived from `base`:
/// Top-N-Rank.ReLU, non-Top-N.ReLU, Top-N-Rank.sgm, non-Top-N.sgm.
std::vector<Variant> ablation_variants(const TrainConfig& base);

struct VariantResult {
    std::string name;
    TrainConfig config;
    MetricsReport report;
};

/// Every variant sees the same splits and initial models.
std::vector<VariantResult> run_ablation(const InteractionDataset& dataset, const TrainConfig& base,
                                        std::size_t repeats = 5,
                                        std::span<const std::size_t> cutoffs = kDefaultCutoffs);

/// Rows: cutoff, mean, stddev, n_users, n_excluded. Lines starting with '#' are comments.
void write_metrics_tsv(std::ostream& out, const MetricsReport& report, const std::string& manifest = {});
std::string metrics_json(const MetricsReport& report, const std::string& manifest = {});

/// One row per variant with NDCG@cutoff means, then the matching stddev columns.
void write_ablation_tsv(std::ostream& out, std::span<const VariantResult> results, const std::string& manifest = {});
std::string ablation_json(std::span<const VariantResult> results, const std::string& manifest = {});

} // namespace topnrank
