// topnrank: prepare data, train, evaluate, run the ablation and the scaling benchmark.
//
// Every command resolves its settings as flags > --config JSON > defaults, writes
// a manifest.json next to its results and echoes that manifest to stderr.

#include "topnrank/checkpoint.hpp"
#include "topnrank/dataset.hpp"
#include "topnrank/errors.hpp"
#include "topnrank/eval.hpp"
#include "topnrank/synthetic.hpp"
#include "topnrank/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace topnrank;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kParse = 4, kDivergence = 5, kData = 6, kInternal = 1 };

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kModelName = "model.tnrk";

/// Bad flag values, conflicting settings, unknown config keys.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raw values as typed on the command line. Only options the user actually
/// passed take part in resolution; see Resolver.
struct FlagValues {
    std::string input, output, config, model;
    std::size_t min_count = 0, k = 0, top_n = 0, max_iters = 0, repeats = 0, split = 0, users = 0, trials = 0;
    double threshold = 0, sigmoid_c = 0, lr = 0, lambda = 0, batch_frac = 0, epsilon = 0;
    std::uint64_t seed = 0;
    std::string smoothing, algorithm;
    std::vector<std::size_t> cutoffs, sizes;
    bool no_truncate = false, synthetic = false, track_full_loss = false, quiet = false;
};

/// Everything a command may use after resolution.
struct Settings {
    TrainConfig train;
    std::size_t min_count = 10;
    double threshold = 4.0;
    std::size_t repeats = 5;
    std::vector<std::size_t> cutoffs = kDefaultCutoffs;
    std::size_t split = 0;
    std::vector<std::size_t> sizes{100, 200, 400, 800};
    std::size_t users = 200;
    std::size_t trials = 5;
    bool algorithm_explicit = false;
};

// Keys accepted in a --config file: the long flag names without dashes.
const std::set<std::string> kConfigKeys{
    "input",     "output",    "model",      "min-count", "threshold", "seed",     "k",      "top-n",
    "no-truncate", "smoothing", "sigmoid-c", "algorithm", "lr",       "lambda",   "batch-frac",
    "max-iters", "epsilon",   "repeats",    "cutoffs",   "split",     "sizes",    "users",  "trials",
    "synthetic", "track-full-loss"};

class Resolver {
public:
    Resolver(const CLI::App& app, const json& config) : app_(app), config_(config) {}

    /// Assigns the flag value if the flag was passed, else the config value if
    /// present; returns whether either source supplied the key.
    template <class T>
    bool pick(const std::string& key, T& target, const T& flag_value) const {
        if (passed(key)) {
            target = flag_value;
            return true;
        }
        if (!config_.contains(key)) return false;
        try {
            target = config_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw UsageError("config key '" + key + "': " + e.what());
        }
        return true;
    }

    bool passed(const std::string& key) const {
        const auto* opt = app_.get_option_no_throw("--" + key);
        return opt && opt->count() > 0;
    }

private:
    const CLI::App& app_;
    const json& config_;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config file " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError("config file " + path + ": expected a JSON object");
    for (const auto& [key, value] : doc.items())
        if (!kConfigKeys.count(key)) throw UsageError("unknown config key '" + key + "' in " + path);
    return doc;
}

Settings resolve(const CLI::App& app, FlagValues& flags) {
    const json config = load_config(flags.config);
    const Resolver r(app, config);
    Settings s;
    auto& t = s.train;

    r.pick("input", flags.input, flags.input);
    r.pick("output", flags.output, flags.output);
    r.pick("model", flags.model, flags.model);
    r.pick("synthetic", flags.synthetic, flags.synthetic);
    r.pick("track-full-loss", t.track_full_loss, flags.track_full_loss);

    r.pick("min-count", s.min_count, flags.min_count);
    r.pick("threshold", s.threshold, flags.threshold);
    r.pick("seed", t.seed, flags.seed);
    r.pick("k", t.k, flags.k);
    r.pick("top-n", t.top_n, flags.top_n);
    bool no_truncate = false;
    if (r.pick("no-truncate", no_truncate, flags.no_truncate)) t.truncated = !no_truncate;
    std::string name;
    if (r.pick("smoothing", name, flags.smoothing)) {
        try {
            t.smoothing.kind = parse_smoothing_kind(name);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    r.pick("sigmoid-c", t.smoothing.scale, flags.sigmoid_c);
    if (r.pick("algorithm", name, flags.algorithm)) {
        try {
            t.algorithm = parse_algorithm(name);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        s.algorithm_explicit = true;
    }
    // sigmoid smoothing has no fast path; pick the generic trainer unless the
    // user asked for fast-relu, which validate() then rejects
    if (!s.algorithm_explicit && t.smoothing.kind == SmoothingKind::sigmoid) t.algorithm = Algorithm::generic;
    r.pick("lr", t.learning_rate, flags.lr);
    r.pick("lambda", t.lambda, flags.lambda);
    r.pick("batch-frac", t.batch_fraction, flags.batch_frac);
    r.pick("max-iters", t.max_iters, flags.max_iters);
    r.pick("epsilon", t.epsilon, flags.epsilon);
    r.pick("repeats", s.repeats, flags.repeats);
    r.pick("cutoffs", s.cutoffs, flags.cutoffs);
    r.pick("split", s.split, flags.split);
    r.pick("sizes", s.sizes, flags.sizes);
    r.pick("users", s.users, flags.users);
    r.pick("trials", s.trials, flags.trials);

    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (s.repeats == 0) throw UsageError("--repeats must be at least 1");
    if (s.cutoffs.empty()) throw UsageError("--cutoffs must list at least one cutoff");
    for (auto c : s.cutoffs)
        if (c == 0) throw UsageError("cutoffs must be positive");
    if (s.min_count == 0) throw UsageError("--min-count must be at least 1");
    return s;
}

json settings_json(const Settings& s) {
    const auto& t = s.train;
    return {{"min-count", s.min_count},
            {"threshold", s.threshold},
            {"seed", t.seed},
            {"k", t.k},
            {"top-n", t.top_n},
            {"truncate", t.truncated},
            {"smoothing", to_string(t.smoothing.kind)},
            {"sigmoid-c", t.smoothing.scale},
            {"algorithm", to_string(t.algorithm)},
            {"lr", t.learning_rate},
            {"lambda", t.lambda},
            {"batch-frac", t.batch_fraction},
            {"max-iters", t.max_iters},
            {"epsilon", t.epsilon},
            {"init-width", t.resolved_init_width()},
            {"repeats", s.repeats},
            {"cutoffs", s.cutoffs}};
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// FNV-1a 64 over the file bytes; identifies inputs in manifests.
json file_record(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::uintmax_t bytes = 0;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        bytes += static_cast<std::uintmax_t>(in.gcount());
    }
    return {{"path", path.string()}, {"bytes", bytes}, {"fnv1a64", hex64(h)}};
}

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

/// Collects provenance for one command and writes it as manifest.json.
struct Manifest {
    json doc;

    Manifest(const std::string& command, const std::vector<std::string>& argv, const FlagValues& flags,
             const Settings& settings) {
        doc = {{"tool", "topnrank"},
               {"version", TOPNRANK_VERSION},
               {"command", command},
               {"argv", argv},
               {"config_file", flags.config.empty() ? json(nullptr) : json(flags.config)},
               {"settings", settings_json(settings)},
               {"inputs", json::array()},
               {"outputs", json::array()},
               {"timings_seconds", json::object()}};
    }

    void input(const fs::path& p) { doc["inputs"].push_back(file_record(p)); }
    void output(const std::string& name) { doc["outputs"].push_back(name); }

    void write(const fs::path& dir, bool quiet) const {
        write_text(dir / kManifestName, doc.dump(2) + "\n");
        if (!quiet) std::cerr << doc.dump(2) << "\n";
    }

    static void write_text(const fs::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        if (!out) throw IoError("write failed for " + path.string());
    }
};

fs::path require_output_dir(const std::string& output) {
    if (output.empty()) throw UsageError("--output is required");
    std::error_code ec;
    fs::create_directories(output, ec);
    if (ec) throw IoError("cannot create output directory " + output + ": " + ec.message());
    return output;
}

std::vector<std::string> read_id_list(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> ids;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ids.push_back(line);
    return ids;
}

void write_id_list(const fs::path& path, std::span<const std::string> ids) {
    std::ostringstream out;
    for (const auto& id : ids) out << id << '\n';
    Manifest::write_text(path, out.str());
}

/// A directory written by `prepare`: split files plus the shared id space.
struct PreparedDir {
    fs::path root;
    json manifest;

    static std::optional<PreparedDir> open(const std::string& input) {
        if (input.empty() || !fs::is_directory(input)) return std::nullopt;
        PreparedDir d{input, {}};
        std::ifstream in(d.root / kManifestName);
        if (!in) throw IoError(input + " is a directory without " + kManifestName + "; run `topnrank prepare` first");
        try {
            d.manifest = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ParseError((d.root / kManifestName).string() + ": " + e.what());
        }
        if (d.manifest.value("command", "") != "prepare") throw DataError(input + " was not written by prepare");
        return d;
    }

    std::size_t repeats() const { return manifest.at("split_seeds").size(); }
    fs::path split_file(std::size_t split, const char* name) const {
        if (split >= repeats())
            throw UsageError("--split " + std::to_string(split) + " out of range; " + root.string() + " holds " +
                             std::to_string(repeats()) + " splits");
        return root / ("split_" + std::to_string(split)) / name;
    }
    IdMap users() const { return IdMap::from_ids(read_id_list(root / "users.txt")); }
    IdMap items() const { return IdMap::from_ids(read_id_list(root / "items.txt")); }
    double threshold() const { return manifest.at("settings").at("threshold").get<double>(); }
};

/// Data-level defaults recorded by prepare apply unless set by flag or config.
void inherit_threshold(const PreparedDir& dir, const CLI::App& app, const FlagValues& flags, Settings& s) {
    const bool in_config = !flags.config.empty() && load_config(flags.config).contains("threshold");
    if (!Resolver(app, json::object()).passed("threshold") && !in_config) s.threshold = dir.threshold();
}

std::vector<RawRating> load_input(const std::string& input) {
    if (input.empty()) throw UsageError("--input is required");
    if (!fs::exists(input)) throw IoError("input not found: " + input);
    return load_ratings(input);
}

// ---------------------------------------------------------------- commands

int cmd_prepare(const CLI::App& app, FlagValues& flags, const std::vector<std::string>& argv) {
    const Settings s = resolve(app, flags);
    Stopwatch clock;
    const auto raw = load_input(flags.input);
    const auto out = require_output_dir(flags.output);
    Manifest manifest("prepare", argv, flags, s);
    manifest.input(flags.input);
    manifest.doc["timings_seconds"]["load"] = clock.lap();

    const auto filtered = filter_sparse_users(raw, s.min_count);
    if (filtered.empty())
        throw DataError("no user has at least " + std::to_string(s.min_count) + " ratings in " + flags.input);
    const auto dataset = to_implicit(filtered, {s.threshold});
    write_id_list(out / "users.txt", dataset.users().ids());
    write_id_list(out / "items.txt", dataset.items().ids());
    manifest.output("users.txt");
    manifest.output("items.txt");

    json seeds = json::array();
    for (std::size_t r = 0; r < s.repeats; ++r) {
        const auto seed = split_seed(s.train.seed, r);
        const auto split = split_half(dataset, seed);
        const fs::path dir = out / ("split_" + std::to_string(r));
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        write_ratings(dir / "train.csv", split.train.to_raw());
        write_ratings(dir / "test.csv", split.test.to_raw());
        manifest.output("split_" + std::to_string(r) + "/train.csv");
        manifest.output("split_" + std::to_string(r) + "/test.csv");
        seeds.push_back(seed);
    }
    manifest.doc["split_seeds"] = seeds;
    manifest.doc["item_digest"] = hex64(id_digest(dataset.items().ids()));
    manifest.doc["summary"] = {{"ratings_read", raw.size()},
                               {"ratings_kept", filtered.size()},
                               {"users", dataset.n_users()},
                               {"items", dataset.n_items()}};
    manifest.doc["timings_seconds"]["split"] = clock.lap();
    manifest.write(out, flags.quiet);
    std::cout << "prepared " << dataset.n_users() << " users, " << dataset.n_items() << " items, " << s.repeats
              << " splits in " << out.string() << "\n";
    return kOk;
}

int cmd_train(const CLI::App& app, FlagValues& flags, const std::vector<std::string>& argv) {
    Settings s = resolve(app, flags);
    Stopwatch clock;
    const auto prepared = PreparedDir::open(flags.input);
    InteractionDataset dataset;
    fs::path input_file = flags.input;
    TrainConfig config = s.train;
    if (prepared) {
        inherit_threshold(*prepared, app, flags, s);
        input_file = prepared->split_file(s.split, "train.csv");
        dataset = to_implicit(load_ratings(input_file), prepared->users(), prepared->items(), {s.threshold});
        // same seed the in-process experiment uses for this split
        config.seed = repeat_train_seed(s.train.seed, s.split);
    } else {
        dataset = to_implicit(load_input(flags.input), {s.threshold});
    }
    const auto out = require_output_dir(flags.output);
    Manifest manifest("train", argv, flags, s);
    manifest.input(input_file);
    if (prepared) {
        manifest.doc["split"] = s.split;
        manifest.doc["prepared_manifest"] = (prepared->root / kManifestName).string();
    }
    manifest.doc["training_seed"] = config.seed;
    manifest.doc["timings_seconds"]["load"] = clock.lap();

    const auto result = train(dataset, config);
    manifest.doc["timings_seconds"]["train"] = clock.lap();

    Checkpoint checkpoint{result.model, config.smoothing, config.seed,
                          {dataset.users().ids().begin(), dataset.users().ids().end()},
                          {dataset.items().ids().begin(), dataset.items().ids().end()}};
    save_checkpoint(out / kModelName, checkpoint);
    std::ostringstream log;
    log << "# manifest: " << kManifestName << "\n";
    write_training_log(log, result.log);
    Manifest::write_text(out / "training_log.tsv", log.str());
    manifest.output(kModelName);
    manifest.output("training_log.tsv");
    manifest.doc["item_digest"] = hex64(id_digest(checkpoint.item_ids));
    manifest.doc["summary"] = {{"users", dataset.n_users()},
                               {"items", dataset.n_items()},
                               {"interactions", dataset.n_interactions()},
                               {"iterations", result.log.iterations.size()},
                               {"stop_reason", to_string(result.log.stop_reason)}};
    manifest.write(out, flags.quiet);
    std::cout << "trained " << result.log.iterations.size() << " iterations (" << to_string(result.log.stop_reason)
              << "), model written to " << (out / kModelName).string() << "\n";
    return kOk;
}

int cmd_evaluate(const CLI::App& app, FlagValues& flags, const std::vector<std::string>& argv) {
    Settings s = resolve(app, flags);
    Stopwatch clock;
    if (flags.model.empty()) throw UsageError("--model is required");
    fs::path model_path = flags.model;
    if (fs::is_directory(model_path)) model_path /= kModelName;
    const auto checkpoint = load_checkpoint(model_path);
    if (checkpoint.item_ids.empty() || checkpoint.user_ids.empty())
        throw DataError(model_path.string() + " carries no id space; cannot map test ids onto it");

    const auto prepared = PreparedDir::open(flags.input);
    fs::path input_file = flags.input;
    if (prepared) {
        inherit_threshold(*prepared, app, flags, s);
        input_file = prepared->split_file(s.split, "test.csv");
        const auto expected = prepared->manifest.at("item_digest").get<std::string>();
        if (expected != hex64(id_digest(checkpoint.item_ids)))
            throw DataError("item id space of " + model_path.string() + " does not match " +
                            prepared->root.string());
    }
    const auto ratings = prepared ? load_ratings(input_file) : load_input(flags.input);
    if (ratings.empty()) throw DataError("test file " + input_file.string() + " holds no ratings");
    const auto test = to_implicit(ratings, IdMap::from_ids(checkpoint.user_ids), IdMap::from_ids(checkpoint.item_ids),
                                  {s.threshold});
    const auto out = require_output_dir(flags.output);
    Manifest manifest("evaluate", argv, flags, s);
    manifest.input(model_path);
    manifest.input(input_file);
    if (prepared) manifest.doc["split"] = s.split;
    manifest.doc["timings_seconds"]["load"] = clock.lap();

    const auto report = evaluate_model(checkpoint.model, test, s.cutoffs);
    manifest.doc["timings_seconds"]["evaluate"] = clock.lap();
    if (report.user_count == 0) throw DataError("no test user has a relevant item; NDCG is undefined for all users");

    std::ostringstream tsv;
    write_metrics_tsv(tsv, report, kManifestName);
    Manifest::write_text(out / "metrics.tsv", tsv.str());
    Manifest::write_text(out / "metrics.json", metrics_json(report, kManifestName) + "\n");
    manifest.output("metrics.tsv");
    manifest.output("metrics.json");
    manifest.write(out, flags.quiet);
    std::cout << tsv.str();
    return kOk;
}

int cmd_ablation(const CLI::App& app, FlagValues& flags, const std::vector<std::string>& argv) {
    const Settings s = resolve(app, flags);
    Stopwatch clock;
    std::vector<RawRating> raw;
    if (flags.synthetic) {
        if (!flags.input.empty()) throw UsageError("--synthetic and --input are mutually exclusive");
        raw = make_movielens_like();
    } else {
        if (fs::is_directory(flags.input))
            throw UsageError("ablation reads a ratings file and makes its own splits; pass the raw file");
        raw = load_input(flags.input);
    }
    const auto out = require_output_dir(flags.output);
    Manifest manifest("ablation", argv, flags, s);
    if (flags.synthetic)
        manifest.doc["synthetic_data"] = {{"generator", "movielens-like"}, {"seed", MovieLensLikeSpec{}.seed}};
    else
        manifest.input(flags.input);
    const auto filtered = filter_sparse_users(raw, s.min_count);
    if (filtered.empty()) throw DataError("no user has at least " + std::to_string(s.min_count) + " ratings");
    const auto dataset = to_implicit(filtered, {s.threshold});
    manifest.doc["timings_seconds"]["load"] = clock.lap();

    const auto results = run_ablation(dataset, s.train, s.repeats, s.cutoffs);
    manifest.doc["timings_seconds"]["ablation"] = clock.lap();
    json seeds = json::array();
    for (std::size_t r = 0; r < s.repeats; ++r) seeds.push_back(split_seed(s.train.seed, r));
    manifest.doc["split_seeds"] = seeds;

    std::ostringstream tsv;
    write_ablation_tsv(tsv, results, kManifestName);
    Manifest::write_text(out / "ablation.tsv", tsv.str());
    Manifest::write_text(out / "ablation.json", ablation_json(results, kManifestName) + "\n");
    manifest.output("ablation.tsv");
    manifest.output("ablation.json");
    manifest.doc["summary"] = {{"users", dataset.n_users()}, {"items", dataset.n_items()}};
    manifest.write(out, flags.quiet);
    std::cout << tsv.str();
    return kOk;
}

int cmd_benchmark(const CLI::App& app, FlagValues& flags, const std::vector<std::string>& argv) {
    const Settings s = resolve(app, flags);
    if (s.sizes.empty()) throw UsageError("--sizes must list at least one size");
    if (s.users == 0) throw UsageError("--users must be at least 1");
    const auto out = require_output_dir(flags.output);
    Manifest manifest("benchmark", argv, flags, s);
    BenchmarkOptions options;
    options.n_users = s.users;
    options.k = s.train.k;
    options.trials = s.trials;
    options.seed = s.train.seed;
    if (s.algorithm_explicit) options.algorithms = {s.train.algorithm};
    manifest.doc["benchmark"] = {{"sizes", s.sizes}, {"users", s.users}, {"trials", s.trials}};

    Stopwatch clock;
    const auto rows = benchmark_scaling(s.sizes, options);
    manifest.doc["timings_seconds"]["benchmark"] = clock.lap();
    std::ostringstream table;
    table << "# manifest: " << kManifestName << "\n";
    write_scaling_table(table, rows);
    Manifest::write_text(out / "scaling.tsv", table.str());
    manifest.output("scaling.tsv");
    manifest.write(out, flags.quiet);
    std::cout << table.str();
    return kOk;
}

int cmd_synth(const CLI::App& app, FlagValues& flags, const std::vector<std::string>& argv) {
    const Settings s = resolve(app, flags);
    if (flags.output.empty()) throw UsageError("--output is required");
    MovieLensLikeSpec spec;
    if (Resolver(app, json::object()).passed("seed")) spec.seed = s.train.seed;
    const auto ratings = make_movielens_like(spec);
    const fs::path path = flags.output;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    write_ratings(path, ratings);
    Manifest manifest("synth", argv, flags, s);
    manifest.doc["synthetic_data"] = {{"generator", "movielens-like"}, {"seed", spec.seed}};
    manifest.output(path.filename().string());
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    manifest.doc["summary"] = {{"ratings", ratings.size()}};
    // sits beside the data file as <name>.manifest.json
    Manifest::write_text(dir / (path.filename().string() + ".manifest.json"), manifest.doc.dump(2) + "\n");
    if (!flags.quiet) std::cerr << manifest.doc.dump(2) << "\n";
    std::cout << "wrote " << ratings.size() << " ratings to " << path.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------- flag wiring

void add_common(CLI::App* cmd, FlagValues& f) {
    cmd->add_option("--config", f.config, "JSON file of settings; flags override it")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "base random seed (default 1)");
    cmd->add_flag("--quiet", f.quiet, "do not echo the manifest");
}

void add_data(CLI::App* cmd, FlagValues& f) {
    cmd->add_option("--min-count", f.min_count, "drop users with fewer ratings (default 10)");
    cmd->add_option("--threshold", f.threshold, "ratings at or above are relevant (default 4)");
}

void add_training(CLI::App* cmd, FlagValues& f) {
    cmd->add_option("--k", f.k, "latent dimension (default 10)");
    cmd->add_option("--top-n", f.top_n, "truncation depth N (default 20)");
    cmd->add_flag("--no-truncate", f.no_truncate, "optimize the whole list");
    cmd->add_option("--smoothing", f.smoothing, "relu or sigmoid (default relu)")
        ->check(CLI::IsMember({"relu", "sigmoid"}));
    cmd->add_option("--sigmoid-c", f.sigmoid_c, "sigmoid scale C (default 7)");
    cmd->add_option("--algorithm", f.algorithm, "generic or fast-relu (default fast-relu)")
        ->check(CLI::IsMember({"generic", "fast-relu"}));
    cmd->add_option("--lr", f.lr, "learning rate (default 0.05)");
    cmd->add_option("--lambda", f.lambda, "L2 weight (default 0.1)");
    cmd->add_option("--batch-frac", f.batch_frac, "users per iteration as a fraction (default 0.1)");
    cmd->add_option("--max-iters", f.max_iters, "iteration cap (default 30)");
    cmd->add_option("--epsilon", f.epsilon, "stop when the squared parameter change falls below (default 0.1)");
}

void add_cutoffs(CLI::App* cmd, FlagValues& f) {
    cmd->add_option("--cutoffs", f.cutoffs, "NDCG cutoffs (default 1,3,5,10,20)")->delimiter(',');
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Top-N truncated list-wise ranking for implicit feedback"};
    app.require_subcommand(1);
    app.set_version_flag("--version", TOPNRANK_VERSION);
    FlagValues f;

    auto* prepare = app.add_subcommand("prepare", "filter ratings and write repeated train/test splits");
    prepare->add_option("--input", f.input, "ratings file (MovieLens csv, u.data or ::-separated)");
    prepare->add_option("--output", f.output, "directory for the splits");
    prepare->add_option("--repeats", f.repeats, "number of splits (default 5)");
    add_data(prepare, f);
    add_common(prepare, f);

    auto* train_cmd = app.add_subcommand("train", "fit a model on a ratings file or a prepared split");
    train_cmd->add_option("--input", f.input, "ratings file or directory written by prepare");
    train_cmd->add_option("--split", f.split, "split index when --input is a prepared directory (default 0)");
    train_cmd->add_option("--output", f.output, "directory for the model, log and manifest");
    train_cmd->add_option("--threshold", f.threshold, "ratings at or above are relevant (default 4)");
    train_cmd->add_flag("--track-full-loss", f.track_full_loss, "log the loss over all users each iteration");
    add_training(train_cmd, f);
    add_common(train_cmd, f);

    auto* evaluate = app.add_subcommand("evaluate", "NDCG of a trained model on held-out ratings");
    evaluate->add_option("--model", f.model, "checkpoint file or train output directory");
    evaluate->add_option("--input", f.input, "test ratings file or directory written by prepare");
    evaluate->add_option("--split", f.split, "split index when --input is a prepared directory (default 0)");
    evaluate->add_option("--output", f.output, "directory for metrics and manifest");
    evaluate->add_option("--threshold", f.threshold, "ratings at or above are relevant (default 4)");
    add_cutoffs(evaluate, f);
    add_common(evaluate, f);

    auto* ablation = app.add_subcommand("ablation", "truncation x smoothing comparison over repeated splits");
    ablation->add_option("--input", f.input, "ratings file");
    ablation->add_flag("--synthetic", f.synthetic, "use generated data in the MovieLens-100K layout");
    ablation->add_option("--output", f.output, "directory for the table and manifest");
    ablation->add_option("--repeats", f.repeats, "number of splits (default 5)");
    add_data(ablation, f);
    add_training(ablation, f);
    add_cutoffs(ablation, f);
    add_common(ablation, f);

    auto* benchmark = app.add_subcommand("benchmark", "per-iteration cost of both trainers against list length");
    benchmark->add_option("--sizes", f.sizes, "items per user (default 100,200,400,800)")->delimiter(',');
    benchmark->add_option("--users", f.users, "users per dataset (default 200)");
    benchmark->add_option("--trials", f.trials, "timed trials per row (default 5)");
    benchmark->add_option("--k", f.k, "latent dimension (default 10)");
    benchmark->add_option("--algorithm", f.algorithm, "only time this trainer")
        ->check(CLI::IsMember({"generic", "fast-relu"}));
    benchmark->add_option("--output", f.output, "directory for the table and manifest");
    add_common(benchmark, f);

    auto* synth = app.add_subcommand("synth", "write a synthetic ratings file in the MovieLens-100K layout");
    synth->add_option("--output", f.output, "ratings file to write");
    add_common(synth, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    const std::vector<std::string> args(argv, argv + argc);
    try {
        CLI::App* cmd = app.get_subcommands().front();
        const std::string name = cmd->get_name();
        if (name == "prepare") return cmd_prepare(*cmd, f, args);
        if (name == "train") return cmd_train(*cmd, f, args);
        if (name == "evaluate") return cmd_evaluate(*cmd, f, args);
        if (name == "ablation") return cmd_ablation(*cmd, f, args);
        if (name == "benchmark") return cmd_benchmark(*cmd, f, args);
        return cmd_synth(*cmd, f, args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParse;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kDivergence;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
}
