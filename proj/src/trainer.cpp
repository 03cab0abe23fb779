#include "topnrank/trainer.hpp"

#include "topnrank/errors.hpp"
#include "topnrank/fast_trainer.hpp"
#include "topnrank/rng.hpp"
#include "topnrank/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace topnrank {

std::string to_string(Algorithm algorithm) {
    return algorithm == Algorithm::generic ? "generic" : "fast-relu";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "generic") return Algorithm::generic;
    if (name == "fast-relu" || name == "fast_relu") return Algorithm::fast_relu;
    throw std::invalid_argument("unknown algorithm '" + name + "' (expected generic or fast-relu)");
}

std::string to_string(StopReason reason) {
    return reason == StopReason::converged ? "converged" : "max_iters";
}

void TrainConfig::validate() const {
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning rate must be positive and finite");
    if (!(batch_fraction > 0.0 && batch_fraction <= 1.0))
        throw std::invalid_argument("batch fraction must be in (0, 1]");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
    if (init_width && !(*init_width > 0.0)) throw std::invalid_argument("initialization width must be positive");
    if (algorithm == Algorithm::fast_relu && smoothing.kind != SmoothingKind::rectifier)
        throw std::invalid_argument("the fast-relu algorithm requires relu smoothing");
    objective().validate();
}

ObjectiveSpec TrainConfig::objective() const {
    ObjectiveSpec spec;
    spec.top_n = top_n;
    spec.lambda = lambda;
    spec.smoothing = smoothing;
    spec.truncated = truncated;
    return spec;
}

double TrainConfig::resolved_init_width() const {
    return init_width.value_or(relu_init_width(k));
}

void sgd_step(LatentFactorModel& model, const InteractionDataset& dataset, std::span<const std::size_t> batch,
              const TrainConfig& config, OpCounters* counters) {
    const auto spec = config.objective();
    if (config.algorithm == Algorithm::fast_relu)
        sgd_step_fast(model, dataset, batch, spec, config.learning_rate, counters);
    else
        sgd_step_generic(model, dataset, batch, spec, config.learning_rate, counters);
}

double batch_objective(const LatentFactorModel& model, const InteractionDataset& dataset,
                       std::span<const std::size_t> users, const ObjectiveSpec& spec) {
    if (spec.smoothing.kind == SmoothingKind::rectifier) return fast_objective_value(model, dataset, users, spec);
    return objective_value(model, dataset, users, spec);
}

namespace {

/// Copies of the rows a batch is about to touch, for the parameter-change sum.
class RowSnapshot {
public:
    RowSnapshot(const LatentFactorModel& model)
        : user_seen_(model.n_users(), 0), item_seen_(model.n_items(), 0) {}

    void capture(const LatentFactorModel& model, const InteractionDataset& dataset,
                 std::span<const std::size_t> batch) {
        for (auto u : batch) {
            if (!user_seen_[u]) {
                user_seen_[u] = 1;
                users_.push_back(u);
                auto row = model.user(u);
                user_rows_.insert(user_rows_.end(), row.begin(), row.end());
            }
            for (const auto& x : dataset.user(u)) {
                if (item_seen_[x.item]) continue;
                item_seen_[x.item] = 1;
                items_.push_back(x.item);
                auto row = model.item(x.item);
                item_rows_.insert(item_rows_.end(), row.begin(), row.end());
            }
        }
    }

    /// Squared distance to the captured rows; also resets the snapshot.
    double distance_and_reset(const LatentFactorModel& model) {
        const std::size_t k = model.k();
        double total = 0.0;
        for (std::size_t r = 0; r < users_.size(); ++r) {
            auto row = model.user(users_[r]);
            for (std::size_t t = 0; t < k; ++t) {
                const double d = row[t] - user_rows_[r * k + t];
                total += d * d;
            }
            user_seen_[users_[r]] = 0;
        }
        for (std::size_t r = 0; r < items_.size(); ++r) {
            auto row = model.item(items_[r]);
            for (std::size_t t = 0; t < k; ++t) {
                const double d = row[t] - item_rows_[r * k + t];
                total += d * d;
            }
            item_seen_[items_[r]] = 0;
        }
        users_.clear();
        items_.clear();
        user_rows_.clear();
        item_rows_.clear();
        return total;
    }

private:
    std::vector<char> user_seen_, item_seen_;
    std::vector<std::size_t> users_, items_;
    std::vector<double> user_rows_, item_rows_;
};

} // namespace

TrainResult train(const InteractionDataset& dataset, const TrainConfig& config) {
    config.validate();
    auto model = init_model(dataset.n_users(), dataset.n_items(), config.k,
                            InitSpec{config.resolved_init_width(), derive_seed(config.seed, 0)});
    return train(dataset, config, std::move(model));
}

TrainResult train(const InteractionDataset& dataset, const TrainConfig& config, LatentFactorModel initial) {
    config.validate();
    if (initial.n_users() != dataset.n_users() || initial.n_items() != dataset.n_items() || initial.k() != config.k)
        throw std::invalid_argument("initial model shape does not match dataset and config");

    std::vector<std::size_t> eligible;
    for (std::size_t u = 0; u < dataset.n_users(); ++u)
        if (!dataset.user(u).empty()) eligible.push_back(u);
    if (eligible.empty()) throw DataError("no user has training interactions; batch would be empty");
    const auto batch_size = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.batch_fraction * static_cast<double>(eligible.size()))), 1,
        eligible.size());

    const auto spec = config.objective();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    TrainResult result{std::move(initial), {}};
    auto& model = result.model;
    auto& log = result.log;
    log.initial_full_loss = config.track_full_loss ? batch_objective(model, dataset, eligible, spec) : nan;

    detail::Rng rng(derive_seed(config.seed, 1));
    RowSnapshot snapshot(model);
    std::vector<std::size_t> batch;
    for (std::size_t it = 0; it < config.max_iters; ++it) {
        batch.clear();
        std::sample(eligible.begin(), eligible.end(), std::back_inserter(batch), batch_size, rng);
        std::shuffle(batch.begin(), batch.end(), rng);

        IterationRecord record;
        record.iteration = it;
        record.batch_size = batch.size();
        try {
            record.batch_loss = batch_objective(model, dataset, batch, spec);
            snapshot.capture(model, dataset, batch);
            const auto start = std::chrono::steady_clock::now();
            sgd_step(model, dataset, batch, config, &record.counters);
            record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            record.param_delta = snapshot.distance_and_reset(model);
            record.full_loss = config.track_full_loss ? batch_objective(model, dataset, eligible, spec) : nan;
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.user(), e.score(), it);
        }
        log.iterations.push_back(record);
        if (!std::isfinite(record.param_delta)) throw DivergenceError(batch.front(), record.param_delta, it);
        if (record.param_delta < config.epsilon) {
            log.stop_reason = StopReason::converged;
            return result;
        }
    }
    log.stop_reason = StopReason::max_iters;
    return result;
}

void write_training_log(std::ostream& out, const TrainingLog& log) {
    out << "iteration\tbatch_size\tbatch_loss\tfull_loss\tparam_delta\tseconds\tstop_reason\n";
    out << std::setprecision(17);
    for (std::size_t r = 0; r < log.iterations.size(); ++r) {
        const auto& it = log.iterations[r];
        out << it.iteration << '\t' << it.batch_size << '\t' << it.batch_loss << '\t';
        if (std::isfinite(it.full_loss)) out << it.full_loss;
        out << '\t' << it.param_delta << '\t' << it.seconds << '\t'
            << (r + 1 == log.iterations.size() ? to_string(log.stop_reason) : "") << '\n';
    }
}

std::vector<ScalingRow> benchmark_scaling(std::span<const std::size_t> items_per_user,
                                          const BenchmarkOptions& options) {
    if (options.trials == 0) throw std::invalid_argument("trials must be at least 1");
    if (options.n_users == 0) throw std::invalid_argument("n_users must be at least 1");
    if (options.algorithms.empty()) throw std::invalid_argument("no algorithm to benchmark");
    std::vector<InteractionDataset> datasets;
    std::vector<ScalingRow> rows;
    for (auto m : items_per_user) {
        if (m == 0) throw std::invalid_argument("items per user must be at least 1");
        datasets.push_back(make_uniform_dataset(options.n_users, 2 * m, m, derive_seed(options.seed, m)));
        for (auto algorithm : options.algorithms) {
            ScalingRow row;
            row.algorithm = algorithm;
            row.items_per_user = m;
            rows.push_back(std::move(row));
        }
    }
    std::vector<std::size_t> batch(options.n_users);
    for (std::size_t u = 0; u < batch.size(); ++u) batch[u] = u;

    // trial-major order, so a slow stretch on a shared machine hits every size
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        for (auto& row : rows) {
            const auto& dataset = datasets[static_cast<std::size_t>(&row - rows.data()) / options.algorithms.size()];
            TrainConfig config;
            config.k = options.k;
            config.algorithm = row.algorithm;
            config.smoothing.kind = SmoothingKind::rectifier;
            const auto start_model = init_model(options.n_users, dataset.n_items(), options.k,
                                                InitSpec{relu_init_width(options.k), derive_seed(options.seed, trial)});
            // short iterations are repeated from the same start until the clock has
            // something to measure; the copy stays outside the timed region
            double total = 0.0;
            std::size_t reps = 0;
            do {
                auto model = start_model;
                OpCounters counters;
                const auto start = std::chrono::steady_clock::now();
                sgd_step(model, dataset, batch, config, &counters);
                total += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                if (trial == 0 && reps == 0) row.counters = counters;
                ++reps;
            } while (total < options.min_trial_seconds);
            row.trial_seconds.push_back(total / double(reps));
        }
    }
    for (auto& row : rows) {
        auto sorted = row.trial_seconds;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        row.median_seconds = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        row.min_seconds = sorted.front();
    }
    return rows;
}

void write_scaling_table(std::ostream& out, std::span<const ScalingRow> rows) {
    out << "algorithm\titems_per_user\tmedian_seconds\tmin_seconds\tscore_evals\tpair_evals\tvector_ops\ttotal_ops"
           "\ttime_ratio\tops_ratio\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const ScalingRow* prev = nullptr;
        for (std::size_t q = r; q-- > 0;)
            if (rows[q].algorithm == row.algorithm) {
                prev = &rows[q];
                break;
            }
        out << to_string(row.algorithm) << '\t' << row.items_per_user << '\t' << std::setprecision(6)
            << row.median_seconds << '\t' << row.min_seconds << '\t' << row.counters.score_evals << '\t' << row.counters.pair_evals << '\t'
            << row.counters.vector_ops << '\t' << row.counters.total() << '\t';
        if (prev && prev->min_seconds > 0.0) out << std::setprecision(4) << row.min_seconds / prev->min_seconds;
        out << '\t';
        if (prev && prev->counters.total() > 0)
            out << std::setprecision(4)
                << static_cast<double>(row.counters.total()) / static_cast<double>(prev->counters.total());
        out << '\n';
    }
}

} // namespace topnrank
