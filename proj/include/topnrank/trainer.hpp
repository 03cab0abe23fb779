#pragma once

#include "topnrank/dataset.hpp"
#include "topnrank/model.hpp"
#include "topnrank/objective.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topnrank {

enum class Algorithm { generic, fast_relu };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

/// Hyperparameters of the mini-batch SGD driver. Defaults are the reference
/// experimental settings except the learning rate, tuned on MovieLens-layout data.
struct TrainConfig {
    std::size_t k = 10;
    std::size_t top_n = 20;
    double learning_rate = 0.05;
    double lambda = 0.1;
    double batch_fraction = 0.10;
    std::size_t max_iters = 30;
    double epsilon = 0.1;
    std::uint64_t seed = 1;
    SmoothingSpec smoothing{};
    bool truncated = true;
    Algorithm algorithm = Algorithm::fast_relu;
    /// Width of the U(0, b) initialization; nullopt uses relu_init_width(k).
    std::optional<double> init_width;
    /// Also record the loss over all training users after every iteration.
    bool track_full_loss = false;

    void validate() const;
    ObjectiveSpec objective() const;
    double resolved_init_width() const;
};

enum class StopReason { max_iters, converged };
std::string to_string(StopReason reason);

struct IterationRecord {
    std::size_t iteration = 0;
    /// Loss over the iteration's batch, evaluated before the batch updates.
    double batch_loss = 0.0;
    /// Loss over all training users after the iteration (NaN unless tracked).
    double full_loss = 0.0;
    /// Sum of squared parameter changes over the whole model during the iteration.
    double param_delta = 0.0;
    double seconds = 0.0;
    std::size_t batch_size = 0;
    OpCounters counters;
};

struct TrainingLog {
    std::vector<IterationRecord> iterations;
    StopReason stop_reason = StopReason::max_iters;
    /// Loss over all training users before the first iteration (NaN unless tracked).
    double initial_full_loss = 0.0;
};

/// Delimited text, one row per iteration; the stop reason fills the last column of the final row.
void write_training_log(std::ostream& out, const TrainingLog& log);

struct TrainResult {
    LatentFactorModel model;
    TrainingLog log;
};

/// Mini-batch SGD until max_iters iterations or until an iteration moves the
/// parameters by less than epsilon (squared Euclidean distance). Each
/// iteration samples max(1, round(batch_fraction * n)) users with training
/// interactions, without replacement. Deterministic given config.seed.
TrainResult train(const InteractionDataset& dataset, const TrainConfig& config);
/// Same, starting from `initial` instead of a fresh U(0, b) model.
TrainResult train(const InteractionDataset& dataset, const TrainConfig& config, LatentFactorModel initial);

/// Runs one iteration of the configured algorithm over `batch`.
void sgd_step(LatentFactorModel& model, const InteractionDataset& dataset, std::span<const std::size_t> batch,
              const TrainConfig& config, OpCounters* counters = nullptr);

/// Loss over `users`, dispatching to the linear-time evaluator for rectifier smoothing.
double batch_objective(const LatentFactorModel& model, const InteractionDataset& dataset,
                       std::span<const std::size_t> users, const ObjectiveSpec& spec);

struct BenchmarkOptions {
    std::size_t n_users = 200;
    std::size_t k = 10;
    std::size_t trials = 5;
    std::uint64_t seed = 7;
    std::vector<Algorithm> algorithms{Algorithm::generic, Algorithm::fast_relu};
    /// A trial repeats the iteration until this much time is measured and
    /// reports the mean; 0 times exactly one iteration per trial.
    double min_trial_seconds = 0.05;
};

struct ScalingRow {
    Algorithm algorithm = Algorithm::fast_relu;
    std::size_t items_per_user = 0;
    double median_seconds = 0.0;
    /// Best trial. Stalls on a shared machine only ever add time, so ratios use this.
    double min_seconds = 0.0;
    std::vector<double> trial_seconds;
    OpCounters counters;
};

/// Per-iteration cost of both trainers on synthetic data where every one of
/// n_users users rates exactly m items (for each m in `items_per_user`); the
/// whole user set forms the batch. Each trial times every (size, algorithm)
/// pair from a fresh model; rows report the median over trials.
std::vector<ScalingRow> benchmark_scaling(std::span<const std::size_t> items_per_user,
                                          const BenchmarkOptions& options = {});

void write_scaling_table(std::ostream& out, std::span<const ScalingRow> rows);

} // namespace topnrank
