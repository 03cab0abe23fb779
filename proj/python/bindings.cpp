#include "topnrank/checkpoint.hpp"
#include "topnrank/dataset.hpp"
#include "topnrank/errors.hpp"
#include "topnrank/eval.hpp"
#include "topnrank/objective.hpp"
#include "topnrank/synthetic.hpp"
#include "topnrank/trainer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace py = pybind11;
using namespace topnrank;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

void assign(Matrix& m, const Array& a) {
    if (a.ndim() != 2 || std::size_t(a.shape(0)) != m.rows() || std::size_t(a.shape(1)) != m.cols())
        throw std::invalid_argument("expected an array of shape (" + std::to_string(m.rows()) + ", " +
                                    std::to_string(m.cols()) + ")");
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
}

std::vector<std::size_t> all_users(const InteractionDataset& ds) {
    std::vector<std::size_t> users;
    for (std::size_t u = 0; u < ds.n_users(); ++u)
        if (!ds.user(u).empty()) users.push_back(u);
    return users;
}

py::dict counters_dict(const OpCounters& c) {
    py::dict d;
    d["score_evals"] = c.score_evals;
    d["pair_evals"] = c.pair_evals;
    d["vector_ops"] = c.vector_ops;
    d["total"] = c.total();
    return d;
}

py::dict report_dict(const MetricsReport& r) {
    py::dict d;
    d["cutoffs"] = r.cutoffs;
    d["mean"] = r.mean;
    d["stddev"] = r.stddev;
    d["per_split"] = r.per_split;
    d["split_seeds"] = r.split_seeds;
    d["user_count"] = r.user_count;
    d["excluded_count"] = r.excluded_count;
    return d;
}

py::dict log_dict(const TrainingLog& log) {
    py::list rows;
    for (const auto& it : log.iterations) {
        py::dict row;
        row["iteration"] = it.iteration;
        row["batch_size"] = it.batch_size;
        row["batch_loss"] = it.batch_loss;
        row["full_loss"] = it.full_loss;
        row["param_delta"] = it.param_delta;
        row["seconds"] = it.seconds;
        row["counters"] = counters_dict(it.counters);
        rows.append(row);
    }
    py::dict d;
    d["iterations"] = rows;
    d["stop_reason"] = to_string(log.stop_reason);
    d["initial_full_loss"] = log.initial_full_loss;
    return d;
}

const std::map<std::string, std::function<void(TrainConfig&, py::handle)>>& config_setters() {
    static const std::map<std::string, std::function<void(TrainConfig&, py::handle)>> setters{
        {"k", [](TrainConfig& c, py::handle v) { c.k = v.cast<std::size_t>(); }},
        {"top_n", [](TrainConfig& c, py::handle v) { c.top_n = v.cast<std::size_t>(); }},
        {"lr", [](TrainConfig& c, py::handle v) { c.learning_rate = v.cast<double>(); }},
        {"learning_rate", [](TrainConfig& c, py::handle v) { c.learning_rate = v.cast<double>(); }},
        {"lambda_", [](TrainConfig& c, py::handle v) { c.lambda = v.cast<double>(); }},
        {"batch_frac", [](TrainConfig& c, py::handle v) { c.batch_fraction = v.cast<double>(); }},
        {"max_iters", [](TrainConfig& c, py::handle v) { c.max_iters = v.cast<std::size_t>(); }},
        {"epsilon", [](TrainConfig& c, py::handle v) { c.epsilon = v.cast<double>(); }},
        {"seed", [](TrainConfig& c, py::handle v) { c.seed = v.cast<std::uint64_t>(); }},
        {"smoothing", [](TrainConfig& c, py::handle v) { c.smoothing.kind = parse_smoothing_kind(v.cast<std::string>()); }},
        {"sigmoid_c", [](TrainConfig& c, py::handle v) { c.smoothing.scale = v.cast<double>(); }},
        {"truncate", [](TrainConfig& c, py::handle v) { c.truncated = v.cast<bool>(); }},
        {"algorithm", [](TrainConfig& c, py::handle v) { c.algorithm = parse_algorithm(v.cast<std::string>()); }},
        {"init_width", [](TrainConfig& c, py::handle v) { c.init_width = v.is_none() ? std::nullopt : std::optional<double>(v.cast<double>()); }},
        {"track_full_loss", [](TrainConfig& c, py::handle v) { c.track_full_loss = v.cast<bool>(); }},
    };
    return setters;
}

} // namespace

PYBIND11_MODULE(_topnrank, m) {
    m.doc() = "Top-N truncated list-wise ranking with linear-time rectifier training";
    m.attr("__version__") = TOPNRANK_VERSION;

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

    py::class_<InteractionDataset>(m, "Dataset")
        .def_static(
            "from_ratings",
            [](const std::vector<std::tuple<std::string, std::string, double>>& rows, double threshold,
               std::size_t min_count) {
                std::vector<RawRating> raw;
                raw.reserve(rows.size());
                for (const auto& [u, i, r] : rows) raw.push_back({u, i, r, std::nullopt, 0});
                return to_implicit(filter_sparse_users(raw, min_count), {threshold});
            },
            py::arg("rows"), py::arg("threshold") = 4.0, py::arg("min_count") = 1,
            "Implicit dataset from (user, item, rating) rows; users with fewer than min_count ratings are dropped.")
        .def_static(
            "from_file",
            [](const std::filesystem::path& path, double threshold, std::size_t min_count) {
                return to_implicit(filter_sparse_users(load_ratings(path), min_count), {threshold});
            },
            py::arg("path"), py::arg("threshold") = 4.0, py::arg("min_count") = 10)
        .def_property_readonly("n_users", &InteractionDataset::n_users)
        .def_property_readonly("n_items", &InteractionDataset::n_items)
        .def_property_readonly("n_interactions", &InteractionDataset::n_interactions)
        .def_property_readonly("user_ids", [](const InteractionDataset& d) {
            return std::vector<std::string>(d.users().ids().begin(), d.users().ids().end());
        })
        .def_property_readonly("item_ids", [](const InteractionDataset& d) {
            return std::vector<std::string>(d.items().ids().begin(), d.items().ids().end());
        })
        .def(
            "user",
            [](const InteractionDataset& d, std::size_t u) {
                py::list out;
                for (const auto& x : d.user(u)) out.append(py::make_tuple(x.item, x.rating, x.weight, x.relevance));
                return out;
            },
            py::arg("u"), "The user's (item, rating, weight, relevance) tuples, sorted by item.")
        .def(
            "split",
            [](const InteractionDataset& d, std::uint64_t seed) {
                auto s = split_half(d, seed);
                return py::make_tuple(std::move(s.train), std::move(s.test));
            },
            py::arg("seed"), "Random per-user halves as (train, test); both keep the full id space.")
        .def("__len__", &InteractionDataset::n_interactions);

    py::class_<LatentFactorModel>(m, "Model")
        .def(py::init<std::size_t, std::size_t, std::size_t>(), py::arg("n_users"), py::arg("n_items"), py::arg("k"))
        .def_property_readonly("n_users", &LatentFactorModel::n_users)
        .def_property_readonly("n_items", &LatentFactorModel::n_items)
        .def_property_readonly("k", &LatentFactorModel::k)
        .def_property(
            "user_factors", [](const LatentFactorModel& mdl) { return to_array(mdl.user_factors); },
            [](LatentFactorModel& mdl, const Array& a) { assign(mdl.user_factors, a); }, "Copy of the user matrix.")
        .def_property(
            "item_factors", [](const LatentFactorModel& mdl) { return to_array(mdl.item_factors); },
            [](LatentFactorModel& mdl, const Array& a) { assign(mdl.item_factors, a); }, "Copy of the item matrix.")
        .def("score", &predict_score, py::arg("u"), py::arg("i"))
        .def("copy", [](const LatentFactorModel& mdl) { return mdl; })
        .def(py::self == py::self);

    m.def("init_model",
          [](std::size_t n_users, std::size_t n_items, std::size_t k, std::optional<double> width, std::uint64_t seed) {
              return init_model(n_users, n_items, k, {width.value_or(relu_init_width(k)), seed});
          },
          py::arg("n_users"), py::arg("n_items"), py::arg("k"), py::arg("width") = py::none(), py::arg("seed") = 0,
          "Entries uniform on [0, width); the default width scales with k.");
    m.def("relu_init_width", &relu_init_width, py::arg("k"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](const py::kwargs& kwargs) {
            TrainConfig c;
            const auto& setters = config_setters();
            for (const auto& [key, value] : kwargs) {
                const auto name = key.cast<std::string>();
                const auto it = setters.find(name);
                if (it == setters.end()) throw py::type_error("unknown TrainConfig field '" + name + "'");
                it->second(c, value);
            }
            if (c.smoothing.kind == SmoothingKind::sigmoid && !kwargs.contains("algorithm"))
                c.algorithm = Algorithm::generic;
            c.validate();
            return c;
        }))
        .def_readwrite("k", &TrainConfig::k)
        .def_readwrite("top_n", &TrainConfig::top_n)
        .def_readwrite("lr", &TrainConfig::learning_rate)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("batch_frac", &TrainConfig::batch_fraction)
        .def_readwrite("max_iters", &TrainConfig::max_iters)
        .def_readwrite("epsilon", &TrainConfig::epsilon)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("truncate", &TrainConfig::truncated)
        .def_readwrite("track_full_loss", &TrainConfig::track_full_loss)
        .def_readwrite("init_width", &TrainConfig::init_width)
        .def_property(
            "smoothing", [](const TrainConfig& c) { return to_string(c.smoothing.kind); },
            [](TrainConfig& c, const std::string& s) { c.smoothing.kind = parse_smoothing_kind(s); })
        .def_property(
            "sigmoid_c", [](const TrainConfig& c) { return c.smoothing.scale; },
            [](TrainConfig& c, double v) { c.smoothing.scale = v; })
        .def_property(
            "algorithm", [](const TrainConfig& c) { return to_string(c.algorithm); },
            [](TrainConfig& c, const std::string& s) { c.algorithm = parse_algorithm(s); })
        .def("validate", &TrainConfig::validate)
        .def("__repr__", [](const TrainConfig& c) {
            return "TrainConfig(k=" + std::to_string(c.k) + ", top_n=" + std::to_string(c.top_n) +
                   ", smoothing='" + to_string(c.smoothing.kind) + "', algorithm='" + to_string(c.algorithm) +
                   "', truncate=" + (c.truncated ? "True" : "False") + ")";
        });

    m.def(
        "train",
        [](const InteractionDataset& ds, const TrainConfig& config, std::optional<LatentFactorModel> initial) {
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = initial ? train(ds, config, *initial) : train(ds, config);
            }
            return py::make_tuple(std::move(r.model), log_dict(r.log));
        },
        py::arg("dataset"), py::arg("config") = TrainConfig{}, py::arg("initial") = py::none(),
        "Mini-batch SGD; returns (model, log).");

    m.def(
        "sgd_step",
        [](LatentFactorModel& model, const InteractionDataset& ds, const std::vector<std::size_t>& batch,
           const TrainConfig& config) {
            config.validate();
            OpCounters counters;
            sgd_step(model, ds, batch, config, &counters);
            return counters_dict(counters);
        },
        py::arg("model"), py::arg("dataset"), py::arg("batch"), py::arg("config") = TrainConfig{},
        "One iteration of the configured trainer over `batch`, in place; returns operation counts.");

    m.def(
        "objective",
        [](const LatentFactorModel& model, const InteractionDataset& ds, const TrainConfig& config,
           std::optional<std::vector<std::size_t>> users) {
            const auto list = users ? *users : all_users(ds);
            return batch_objective(model, ds, list, config.objective());
        },
        py::arg("model"), py::arg("dataset"), py::arg("config") = TrainConfig{}, py::arg("users") = py::none());

    m.def(
        "loss_and_gradient",
        [](const LatentFactorModel& model, const InteractionDataset& ds, const TrainConfig& config,
           std::optional<std::vector<std::size_t>> users) {
            const auto list = users ? *users : all_users(ds);
            const auto g = loss_and_gradient(model, ds, list, config.objective());
            Array du({model.n_users(), model.k()}), di({model.n_items(), model.k()});
            std::fill(du.mutable_data(), du.mutable_data() + du.size(), 0.0);
            std::fill(di.mutable_data(), di.mutable_data() + di.size(), 0.0);
            for (const auto& [u, row] : g.user_grads) std::copy(row.begin(), row.end(), du.mutable_data(u, 0));
            for (const auto& [i, row] : g.item_grads) std::copy(row.begin(), row.end(), di.mutable_data(i, 0));
            return py::make_tuple(g.loss, du, di);
        },
        py::arg("model"), py::arg("dataset"), py::arg("config") = TrainConfig{}, py::arg("users") = py::none(),
        "Loss and dense gradients (user, item) by the quadratic reference evaluator.");

    m.def(
        "ndcg_at_n",
        [](const std::vector<double>& scores, const std::vector<int>& relevance,
           std::optional<std::vector<double>> weights, std::size_t cutoff, double log_base) -> std::optional<double> {
            if (scores.size() != relevance.size() || (weights && weights->size() != scores.size()))
                throw std::invalid_argument("scores, relevance and weights must have equal length");
            std::vector<ScoredItem> items;
            for (std::size_t i = 0; i < scores.size(); ++i)
                items.push_back({i, scores[i], weights ? (*weights)[i] : (relevance[i] ? 1.0 : -1.0), relevance[i]});
            return ndcg_at_n(items, cutoff, log_base);
        },
        py::arg("scores"), py::arg("relevance"), py::arg("weights") = py::none(), py::arg("cutoff") = 10,
        py::arg("log_base") = std::numbers::e,
        "NDCG of one list; weights default to +1 for relevant and -1 for other items. None when undefined.");

    m.def(
        "evaluate",
        [](const LatentFactorModel& model, const InteractionDataset& test, const std::vector<std::size_t>& cutoffs) {
            return report_dict(evaluate_model(model, test, cutoffs));
        },
        py::arg("model"), py::arg("test"), py::arg("cutoffs") = kDefaultCutoffs);

    m.def(
        "run_experiment",
        [](const InteractionDataset& ds, const TrainConfig& config, std::size_t repeats,
           const std::vector<std::size_t>& cutoffs) {
            MetricsReport r;
            {
                py::gil_scoped_release release;
                r = run_experiment(ds, config, repeats, cutoffs);
            }
            return report_dict(r);
        },
        py::arg("dataset"), py::arg("config") = TrainConfig{}, py::arg("repeats") = 5,
        py::arg("cutoffs") = kDefaultCutoffs);

    m.def(
        "run_ablation",
        [](const InteractionDataset& ds, const TrainConfig& base, std::size_t repeats,
           const std::vector<std::size_t>& cutoffs) {
            std::vector<VariantResult> results;
            {
                py::gil_scoped_release release;
                results = run_ablation(ds, base, repeats, cutoffs);
            }
            py::dict out;
            for (const auto& v : results) out[py::str(v.name)] = report_dict(v.report);
            return out;
        },
        py::arg("dataset"), py::arg("config") = TrainConfig{}, py::arg("repeats") = 5,
        py::arg("cutoffs") = kDefaultCutoffs, "Variant name -> metrics report.");

    m.def(
        "benchmark_scaling",
        [](const std::vector<std::size_t>& sizes, std::size_t n_users, std::size_t k, std::size_t trials,
           std::uint64_t seed) {
            BenchmarkOptions opts;
            opts.n_users = n_users;
            opts.k = k;
            opts.trials = trials;
            opts.seed = seed;
            std::vector<ScalingRow> rows;
            {
                py::gil_scoped_release release;
                rows = benchmark_scaling(sizes, opts);
            }
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["algorithm"] = to_string(r.algorithm);
                d["items_per_user"] = r.items_per_user;
                d["median_seconds"] = r.median_seconds;
                d["min_seconds"] = r.min_seconds;
                d["trial_seconds"] = r.trial_seconds;
                d["counters"] = counters_dict(r.counters);
                out.append(d);
            }
            return out;
        },
        py::arg("sizes"), py::arg("n_users") = 200, py::arg("k") = 10, py::arg("trials") = 5, py::arg("seed") = 7);

    m.def(
        "synthetic_ratings",
        [](std::uint64_t seed) {
            MovieLensLikeSpec spec;
            spec.seed = seed;
            py::list out;
            for (const auto& r : make_movielens_like(spec)) out.append(py::make_tuple(r.user_id, r.item_id, r.rating));
            return out;
        },
        py::arg("seed") = MovieLensLikeSpec{}.seed,
        "Generated (user, item, rating) rows in the MovieLens-100K layout.");

    m.def(
        "save_model",
        [](const std::filesystem::path& path, const LatentFactorModel& model, const InteractionDataset& ds,
           const TrainConfig& config) {
            save_checkpoint(path, Checkpoint{model, config.smoothing, config.seed,
                                             {ds.users().ids().begin(), ds.users().ids().end()},
                                             {ds.items().ids().begin(), ds.items().ids().end()}});
        },
        py::arg("path"), py::arg("model"), py::arg("dataset"), py::arg("config") = TrainConfig{});
    m.def(
        "load_model", [](const std::filesystem::path& path) { return load_checkpoint(path).model; },
        py::arg("path"));
}
