#include "topnrank/eval.hpp"

#include "topnrank/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace topnrank {

std::optional<double> ndcg_at_n(std::span<const ScoredItem> items, std::size_t cutoff, double log_base) {
    if (cutoff == 0) throw std::invalid_argument("cutoff must be at least 1");
    if (!(log_base > 1.0)) throw std::invalid_argument("log base must be > 1");
    const double log_scale = std::log(log_base);
    auto discount = [&](std::size_t rank) { return std::log(static_cast<double>(rank) + 2.0) / log_scale; };

    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (items[a].score != items[b].score) return items[a].score > items[b].score;
        return items[a].item < items[b].item;
    });
    std::vector<double> ideal(items.size());
    for (std::size_t p = 0; p < items.size(); ++p) ideal[p] = gain(items[p].weight, items[p].relevance);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    const std::size_t depth = std::min(cutoff, items.size());
    double dcg = 0.0, idcg = 0.0;
    for (std::size_t r = 0; r < depth; ++r) {
        const auto& x = items[order[r]];
        dcg += gain(x.weight, x.relevance) / discount(r);
        idcg += ideal[r] / discount(r);
    }
    if (!(idcg > 0.0)) return std::nullopt;
    return dcg / idcg;
}

std::vector<ScoredItem> score_interactions(const LatentFactorModel& model, std::size_t u,
                                           std::span<const Interaction> list) {
    std::vector<ScoredItem> scored;
    scored.reserve(list.size());
    for (const auto& x : list) scored.push_back({x.item, predict_score(model, u, x.item), x.weight, x.relevance});
    return scored;
}

MetricsReport evaluate_model(const LatentFactorModel& model, const InteractionDataset& test,
                             std::span<const std::size_t> cutoffs) {
    if (cutoffs.empty()) throw std::invalid_argument("at least one cutoff is required");
    if (model.n_items() != test.n_items() || model.n_users() != test.n_users())
        throw std::invalid_argument("model and test split do not share the user/item index space");

    MetricsReport report;
    report.cutoffs.assign(cutoffs.begin(), cutoffs.end());
    std::vector<double> sums(cutoffs.size(), 0.0);
    std::size_t included = 0, excluded = 0;
    for (std::size_t u = 0; u < test.n_users(); ++u) {
        auto list = test.user(u);
        if (list.empty()) {
            ++excluded;
            continue;
        }
        auto scored = score_interactions(model, u, list);
        std::vector<double> values;
        for (auto c : cutoffs) {
            auto v = ndcg_at_n(scored, c);
            if (!v) break;
            values.push_back(*v);
        }
        // the ideal DCG is positive at every cutoff or at none
        if (values.size() != cutoffs.size()) {
            ++excluded;
            continue;
        }
        ++included;
        for (std::size_t c = 0; c < cutoffs.size(); ++c) sums[c] += values[c];
    }

    std::vector<double> means(cutoffs.size(), std::numeric_limits<double>::quiet_NaN());
    if (included > 0)
        for (std::size_t c = 0; c < cutoffs.size(); ++c) means[c] = sums[c] / static_cast<double>(included);
    report.mean = means;
    report.stddev.assign(cutoffs.size(), std::numeric_limits<double>::quiet_NaN());
    report.per_split = {means};
    report.split_users = {included};
    report.split_excluded = {excluded};
    report.user_count = included;
    report.excluded_count = excluded;
    return report;
}

MetricsReport aggregate_reports(std::span<const MetricsReport> splits) {
    if (splits.empty()) throw std::invalid_argument("no splits to aggregate");
    MetricsReport out;
    out.cutoffs = splits.front().cutoffs;
    for (const auto& s : splits) {
        if (s.cutoffs != out.cutoffs) throw std::invalid_argument("splits were evaluated at different cutoffs");
        out.per_split.insert(out.per_split.end(), s.per_split.begin(), s.per_split.end());
        out.split_users.insert(out.split_users.end(), s.split_users.begin(), s.split_users.end());
        out.split_excluded.insert(out.split_excluded.end(), s.split_excluded.begin(), s.split_excluded.end());
        out.split_seeds.insert(out.split_seeds.end(), s.split_seeds.begin(), s.split_seeds.end());
        out.user_count += s.user_count;
        out.excluded_count += s.excluded_count;
    }
    const std::size_t n = out.per_split.size();
    const std::size_t nc = out.cutoffs.size();
    out.mean.assign(nc, 0.0);
    out.stddev.assign(nc, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < nc; ++c) {
        double sum = 0.0;
        for (const auto& row : out.per_split) sum += row[c];
        out.mean[c] = sum / static_cast<double>(n);
        if (n > 1) {
            double sq = 0.0;
            for (const auto& row : out.per_split) sq += (row[c] - out.mean[c]) * (row[c] - out.mean[c]);
            out.stddev[c] = std::sqrt(sq / static_cast<double>(n - 1));
        }
    }
    return out;
}

std::uint64_t split_seed(std::uint64_t seed, std::size_t repeat) { return derive_seed(seed, 1000 + repeat); }
std::uint64_t repeat_train_seed(std::uint64_t seed, std::size_t repeat) { return derive_seed(seed, 2000 + repeat); }

MetricsReport run_experiment(const InteractionDataset& dataset, const TrainConfig& config, std::size_t repeats,
                             std::span<const std::size_t> cutoffs) {
    if (repeats == 0) throw std::invalid_argument("repeats must be at least 1");
    config.validate();
    std::vector<MetricsReport> splits;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto seed = split_seed(config.seed, r);
        auto split = split_half(dataset, seed);
        auto repeat_config = config;
        repeat_config.seed = repeat_train_seed(config.seed, r);
        auto trained = train(split.train, repeat_config);
        auto report = evaluate_model(trained.model, split.test, cutoffs);
        report.split_seeds = {seed};
        splits.push_back(std::move(report));
    }
    return aggregate_reports(splits);
}

std::vector<Variant> ablation_variants(const TrainConfig& base) {
    std::vector<Variant> variants;
    for (bool relu : {true, false}) {
        for (bool truncated : {true, false}) {
            auto config = base;
            config.truncated = truncated;
            config.smoothing.kind = relu ? SmoothingKind::rectifier : SmoothingKind::sigmoid;
            config.algorithm = relu ? Algorithm::fast_relu : Algorithm::generic;
            std::string name = std::string(truncated ? "Top-N-Rank" : "non-Top-N") + (relu ? ".ReLU" : ".sgm");
            variants.push_back({std::move(name), config});
        }
    }
    // table order: Top-N-Rank.ReLU, non-Top-N.ReLU, Top-N-Rank.sgm, non-Top-N.sgm
    return variants;
}

std::vector<VariantResult> run_ablation(const InteractionDataset& dataset, const TrainConfig& base,
                                        std::size_t repeats, std::span<const std::size_t> cutoffs) {
    std::vector<VariantResult> results;
    for (auto& v : ablation_variants(base))
        results.push_back({v.name, v.config, run_experiment(dataset, v.config, repeats, cutoffs)});
    return results;
}

namespace {

std::string number(double x) {
    if (!std::isfinite(x)) return "";
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << x;
    return s.str();
}

nlohmann::json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t c = 0; c < r.cutoffs.size(); ++c)
        rows.push_back({{"cutoff", r.cutoffs[c]}, {"mean", json_number(r.mean[c])}, {"stddev", json_number(r.stddev[c])}});
    nlohmann::json per_split = nlohmann::json::array();
    for (std::size_t s = 0; s < r.per_split.size(); ++s) {
        nlohmann::json values = nlohmann::json::array();
        for (auto v : r.per_split[s]) values.push_back(json_number(v));
        nlohmann::json entry{{"ndcg", values}};
        if (s < r.split_users.size()) entry["n_users"] = r.split_users[s];
        if (s < r.split_excluded.size()) entry["n_excluded"] = r.split_excluded[s];
        if (s < r.split_seeds.size()) entry["seed"] = r.split_seeds[s];
        per_split.push_back(entry);
    }
    return {{"cutoffs", r.cutoffs},
            {"metrics", rows},
            {"splits", per_split},
            {"n_users", r.user_count},
            {"n_excluded", r.excluded_count}};
}

} // namespace

void write_metrics_tsv(std::ostream& out, const MetricsReport& report, const std::string& manifest) {
    if (!manifest.empty()) out << "# manifest: " << manifest << '\n';
    out << "cutoff\tmean\tstddev\tn_users\tn_excluded\n";
    for (std::size_t c = 0; c < report.cutoffs.size(); ++c)
        out << report.cutoffs[c] << '\t' << number(report.mean[c]) << '\t' << number(report.stddev[c]) << '\t'
            << report.user_count << '\t' << report.excluded_count << '\n';
}

std::string metrics_json(const MetricsReport& report, const std::string& manifest) {
    auto doc = report_to_json(report);
    if (!manifest.empty()) doc["manifest"] = manifest;
    return doc.dump(2);
}

void write_ablation_tsv(std::ostream& out, std::span<const VariantResult> results, const std::string& manifest) {
    if (!manifest.empty()) out << "# manifest: " << manifest << '\n';
    if (results.empty()) return;
    const auto& cutoffs = results.front().report.cutoffs;
    out << "algorithm";
    for (auto c : cutoffs) out << "\tNDCG@" << c;
    for (auto c : cutoffs) out << "\tstddev@" << c;
    out << '\n';
    for (const auto& r : results) {
        out << r.name;
        for (auto v : r.report.mean) out << '\t' << number(v);
        for (auto v : r.report.stddev) out << '\t' << number(v);
        out << '\n';
    }
}

std::string ablation_json(std::span<const VariantResult> results, const std::string& manifest) {
    nlohmann::json doc;
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& r : results) {
        auto entry = report_to_json(r.report);
        entry["name"] = r.name;
        entry["smoothing"] = to_string(r.config.smoothing.kind);
        entry["truncated"] = r.config.truncated;
        entry["algorithm"] = to_string(r.config.algorithm);
        variants.push_back(entry);
    }
    doc["variants"] = variants;
    if (!manifest.empty()) doc["manifest"] = manifest;
    return doc.dump(2);
}

} // namespace topnrank
