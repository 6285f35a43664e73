#include "tsad/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tsad/cost_models.hpp"
#include "tsad/dataset.hpp"
#include "tsad/evaluation.hpp"
#include "tsad/feature_selection.hpp"
#include "tsad/random.hpp"
#include "tsad/resampling.hpp"
#include "tsad/stationarity.hpp"
#include "tsad/stream.hpp"

namespace tsad::cli {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
    for (const unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

namespace {

namespace fs = std::filesystem;

/// Rejected parameter values or config file contents.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr const char* kDefaultTask = R"(stream |from("water") |window(5d, 2h) |httpOut("batch"))";

// Every value a run depends on. Two runs with equal configs write equal artifacts.
struct RunConfig {
    std::string command;
    std::string input;
    std::string output = "out";
    std::string config_file;
    std::uint64_t seed = 1;
    bool no_difference = false;
    std::size_t subsample = 0;
    double holdout = 0.2;
    std::size_t max_lag = 0;

    std::string learner = "forest";
    std::vector<std::string> learners = {"forest", "logistic", "linear_svm"};
    std::string weights = "balanced";
    std::size_t trees = 1000;
    std::size_t max_features = 0;
    std::size_t threads = 0;
    std::size_t svm_iterations = 1000;
    double svm_lambda = 1e-4;
    double lr_lambda = 1e-4;
    std::size_t lr_epochs = 1000;
    double lr_tolerance = 1e-6;

    std::string resample = "none";
    std::vector<std::string> resamplers = {"none", "ros", "smote", "blsmote", "svmsmote", "adasyn"};
    std::size_t k_neighbors = 5;
    std::size_t m_neighbors = 10;
    double ratio = 1.0;
    bool keep_weights = false;

    std::size_t folds = 10;
    std::size_t repeats = 3;
    std::size_t features = 0;

    std::string task = kDefaultTask;
    std::string task_file;
    std::string model;
    std::string host = "127.0.0.1";
    int port = 9092;
    double duration = 0.0;
    bool strict = false;
    bool wall_clock = false;
};

// Output location, thread count and the config path itself do not change any
// artifact, so they stay out of the digest.
nlohmann::json digest_view(const RunConfig& c) {
    return {
        {"command", c.command},         {"input", c.input},
        {"seed", c.seed},               {"no_difference", c.no_difference},
        {"subsample", c.subsample},     {"holdout", c.holdout},
        {"max_lag", c.max_lag},         {"learner", c.learner},
        {"learners", c.learners},       {"weights", c.weights},
        {"trees", c.trees},             {"max_features", c.max_features},
        {"svm_iterations", c.svm_iterations}, {"svm_lambda", c.svm_lambda},
        {"lr_lambda", c.lr_lambda},     {"lr_epochs", c.lr_epochs},
        {"lr_tolerance", c.lr_tolerance}, {"resample", c.resample},
        {"resamplers", c.resamplers},   {"k_neighbors", c.k_neighbors},
        {"m_neighbors", c.m_neighbors}, {"ratio", c.ratio},
        {"keep_weights", c.keep_weights}, {"folds", c.folds},
        {"repeats", c.repeats},         {"features", c.features},
        {"task", c.task},               {"task_file", c.task_file},
        {"model", c.model},             {"strict", c.strict},
    };
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Digest of the config plus the bytes of every file it reads.
std::string run_digest(const RunConfig& c) {
    auto view = digest_view(c);
    for (const auto* path : {&c.input, &c.model, &c.task_file}) {
        if (!path->empty()) view["bytes:" + *path] = hex64(fnv1a64(read_file(*path)));
    }
    return hex64(fnv1a64(view.dump()));
}

class Artifacts {
public:
    Artifacts(const RunConfig& cfg, std::ostream& log) : dir_(cfg.output), command_(cfg.command), log_(log) {
        digest_ = run_digest(cfg);
        fs::create_directories(dir_);
    }

    [[nodiscard]] const std::string& digest() const noexcept { return digest_; }

    /// Opens `name` for writing; analytic tables start with a `# digest=` line.
    std::ofstream open(const std::string& name, bool digest_line) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw InputError("cannot write " + (dir_ / name).string());
        if (digest_line) out << "# digest=" << digest_ << '\n';
        names_.push_back(name);
        log_ << "wrote " << (dir_ / name).string() << '\n';
        return out;
    }

    void finish() {
        nlohmann::json manifest = {{"command", command_}, {"digest", digest_}, {"artifacts", names_}};
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        if (!out) throw InputError("cannot write manifest in " + dir_.string());
        out << manifest.dump(2) << '\n';
    }

private:
    fs::path dir_;
    std::string command_;
    std::ostream& log_;
    std::string digest_;
    std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Translating the config into library specs

WeightSpec parse_weights(const std::string& text) {
    if (text == "balanced") return BalancedWeights{};
    if (text == "none") return ClassWeights{};
    const bool costs = text.rfind("cost:", 0) == 0;
    const std::string body = costs ? text.substr(5) : text;
    const auto comma = body.find(',');
    double a = 0.0, b = 0.0;
    try {
        if (comma == std::string::npos) throw std::invalid_argument("");
        std::size_t used = 0;
        a = std::stod(body.substr(0, comma), &used);
        if (used != comma) throw std::invalid_argument("");
        b = std::stod(body.substr(comma + 1), &used);
        if (used != body.size() - comma - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw ConfigError("--weights must be balanced, none, <w_neg>,<w_pos> or cost:<c_fp>,<c_fn>; got '" + text +
                          "'");
    }
    if (costs) {
        CostMatrix m;
        m.c_fp = a;
        m.c_fn = b;
        if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("misclassification costs must be positive");
        return weights_from_costs(m);
    }
    return ClassWeights{a, b};
}

Learner parse_learner(const std::string& name) {
    const auto l = learner_from_name(name);
    if (!l) throw ConfigError("unknown learner '" + name + "' (logistic, linear_svm, forest)");
    return *l;
}

CostModelSpec model_spec(const RunConfig& c, Learner learner) {
    CostModelSpec m;
    m.learner = learner;
    m.weights = parse_weights(c.weights);
    m.logistic.lambda = c.lr_lambda;
    m.logistic.max_epochs = c.lr_epochs;
    m.logistic.gradient_tolerance = c.lr_tolerance;
    m.svm.iterations = c.svm_iterations;
    m.svm.lambda = c.svm_lambda;
    m.forest.n_trees = c.trees;
    if (c.max_features > 0) m.forest.max_features = c.max_features;
    m.forest.threads = c.threads;
    m.seed = derive_seed(c.seed, {1});
    m.validate();
    return m;
}

std::optional<ResampleSpec> resample_spec(const RunConfig& c, const std::string& name) {
    if (name == "none") return std::nullopt;
    const auto method = resample_method_from_name(name);
    if (!method) throw ConfigError("unknown resampler '" + name + "' (none, ros, smote, blsmote, svmsmote, adasyn)");
    ResampleSpec r;
    r.method = *method;
    r.k_neighbors = c.k_neighbors;
    r.m_neighbors = c.m_neighbors;
    r.target_ratio = c.ratio;
    r.seed = derive_seed(c.seed, {3});
    r.validate();
    return r;
}

CvSpec cv_spec(const RunConfig& c) {
    CvSpec cv;
    cv.folds = c.folds;
    cv.repeats = c.repeats;
    cv.seed = derive_seed(c.seed, {2});
    cv.keep_weights_with_resampling = c.keep_weights;
    return cv;
}

stream::StreamTaskSpec task_spec(const RunConfig& c) {
    const std::string text = c.task_file.empty() ? c.task : read_file(c.task_file);
    return stream::define_task(text);
}

std::vector<std::string> channel_names(const TimeSeriesFrame& frame) {
    std::vector<std::string> names;
    for (const auto id : frame.channels()) names.emplace_back(channel_name(id));
    return names;
}

TimeSeriesFrame load_clean(const RunConfig& c) { return fill_missing(parse_csv(fs::path(c.input))); }

// Cleaned, optionally differenced rows; the subsample (if any) keeps class shares.
TimeSeriesFrame load_features(const RunConfig& c, bool allow_subsample) {
    auto frame = load_clean(c);
    if (!c.no_difference) frame = difference(frame).deltas;
    if (allow_subsample && c.subsample > 0 && c.subsample < frame.rows()) {
        const auto rows = stratified_subsample(frame.labels(), c.subsample, derive_seed(c.seed, {4}));
        frame = frame.select_rows(rows);
    }
    return frame;
}

std::string model_id(const RunConfig& c) { return fs::path(c.model).stem().string(); }

std::shared_ptr<const TrainedClassifier> load_model_file(const RunConfig& c) {
    if (c.model.empty()) return nullptr;
    return std::make_shared<const TrainedClassifier>(load_model(c.model));
}

void write_summary_row(std::ostream& out, std::string_view label, const CvReport& report) {
    out << label;
    for (const auto m : kAllMetrics) out << ',' << format_metric(report.summary(m).mean);
    out << '\n';
}

void write_summary_header(std::ostream& out, std::string_view first) {
    out << first;
    for (const auto m : kAllMetrics) out << ',' << metric_name(m);
    out << '\n';
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_clean(const RunConfig& c, std::ostream& log) {
    Artifacts art(c, log);
    const auto raw = parse_csv(fs::path(c.input));
    const auto clean = fill_missing(raw);
    auto out = art.open("clean.csv", false);
    write_csv(out, clean);
    log << "rows " << raw.rows() << " -> " << clean.rows() << ", missing cells filled " << raw.missing_count()
        << '\n';
    art.finish();
}

void cmd_adf(const RunConfig& c, std::ostream& log) {
    Artifacts art(c, log);
    const auto frame = load_features(c, false);
    const std::optional<std::size_t> lag = c.max_lag > 0 ? std::optional(c.max_lag) : std::nullopt;
    const auto report = adf_report(frame, lag);
    auto out = art.open("adf.csv", true);
    write_adf_csv(out, report);
    art.finish();
}

void cmd_mi(const RunConfig& c, std::ostream& log) {
    Artifacts art(c, log);
    const auto frame = load_features(c, true);
    const auto scores = mutual_information_scores(frame, frame.labels());
    auto out = art.open("mi.csv", true);
    write_scores_csv(out, scores);
    art.finish();
}

void cmd_train(const RunConfig& c, std::ostream& log) {
    if (!(c.holdout >= 0.0 && c.holdout < 1.0)) throw ConfigError("--holdout must lie in [0, 1)");
    const auto spec = model_spec(c, parse_learner(c.learner));
    const auto resampler = resample_spec(c, c.resample);
    Artifacts art(c, log);
    const auto frame = load_features(c, false);
    SplitSpec split;
    split.holdout_fraction = c.holdout;
    const auto [train_part, test_part] =
        c.holdout > 0.0 ? chronological_split(frame, split) : std::pair{frame, TimeSeriesFrame{}};

    auto x = train_part.to_matrix();
    Labels y = train_part.labels();
    CostModelSpec fit_spec = spec;
    if (resampler) {
        auto res = tsad::resample(x, y, *resampler);
        x = std::move(res.x);
        y = std::move(res.y);
        if (!c.keep_weights) fit_spec.weights = ClassWeights{};
    }
    const auto model = train(fit_spec, x, y, channel_names(frame));
    {
        auto out = art.open("model.json", false);
        out << model_to_json(model).dump(1) << '\n';
    }
    auto out = art.open("holdout.csv", true);
    out << "metric,value\n";
    if (!test_part.empty()) {
        const auto counts = confusion(model.predict(test_part.to_matrix()), test_part.labels());
        const auto report = metrics(counts);
        out << "rows," << test_part.rows() << '\n';
        out << "tp," << counts.tp << "\nfp," << counts.fp << "\ntn," << counts.tn << "\nfn," << counts.fn << '\n';
        for (const auto m : kAllMetrics) out << metric_name(m) << ',' << format_metric(metric_value(report, m)) << '\n';
    }
    art.finish();
}

void cmd_evaluate(const RunConfig& c, std::ostream& log) {
    std::vector<CostModelSpec> specs;
    for (const auto& name : c.learners) specs.push_back(model_spec(c, parse_learner(name)));
    const auto resampler = resample_spec(c, c.resample);
    const auto cv = cv_spec(c);
    Artifacts art(c, log);
    const auto frame = load_features(c, true);
    const auto x = frame.to_matrix();

    auto folds = art.open("cv_folds.csv", true);
    folds << "model,repeat,fold,metric,value\n";
    std::vector<CvReport> reports;
    for (const auto& spec : specs) {
        log << "evaluating " << learner_name(spec.learner) << '\n';
        reports.push_back(cross_validate(spec, resampler, x, frame.labels(), cv));
        write_cv_rows(folds, reports.back(), learner_name(spec.learner));
    }
    auto summary = art.open("summary.csv", true);
    write_summary_header(summary, "model");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        write_summary_row(summary, learner_name(specs[i].learner), reports[i]);
        write_summary_row(log, learner_name(specs[i].learner), reports[i]);
    }
    art.finish();
}

void cmd_resample_eval(const RunConfig& c, std::ostream& log) {
    const auto spec = model_spec(c, parse_learner(c.learner));
    std::vector<std::pair<std::string, std::optional<ResampleSpec>>> methods;
    for (const auto& name : c.resamplers) methods.emplace_back(name, resample_spec(c, name));
    const auto cv = cv_spec(c);
    Artifacts art(c, log);
    const auto frame = load_features(c, true);
    const auto x = frame.to_matrix();

    auto folds = art.open("resample_folds.csv", true);
    folds << "resampler,repeat,fold,metric,value\n";
    auto summary_rows = std::ostringstream();
    for (const auto& [name, r] : methods) {
        log << "evaluating " << learner_name(spec.learner) << " + " << name << '\n';
        const auto report = cross_validate(spec, r, x, frame.labels(), cv);
        write_cv_rows(folds, report, name);
        write_summary_row(summary_rows, name, report);
        write_summary_row(log, name, report);
    }
    auto summary = art.open("resample_summary.csv", true);
    write_summary_header(summary, "resampler");
    summary << summary_rows.str();
    art.finish();
}

void cmd_rfe(const RunConfig& c, std::ostream& log) {
    const auto spec = model_spec(c, parse_learner(c.learner));
    Artifacts art(c, log);
    const auto frame = load_features(c, true);
    RfeOptions options;
    if (c.features > 0) options.target_k = c.features;
    options.cv = cv_spec(c);
    const auto result = tsad::rfe(spec, frame.to_matrix(), frame.labels(), options);

    RfeRanking ranking;
    for (std::size_t j = 0; j < frame.channels().size(); ++j) ranking.ranking[frame.channels()[j]] = result.rank[j];
    for (const auto j : result.selected) ranking.selected.push_back(frame.channels()[j]);
    for (const auto j : result.elimination_order) ranking.elimination_order.push_back(frame.channels()[j]);
    ranking.per_k_scores = result.per_k_scores;

    {
        auto out = art.open("rfe_ranking.csv", true);
        write_ranking_csv(out, ranking);
    }
    if (!ranking.per_k_scores.empty()) {
        auto out = art.open("rfe_scan.csv", true);
        write_rfe_scan_csv(out, ranking);
    }
    art.finish();
}

void write_alerts(std::ostream& out, const std::vector<stream::AnomalyAlert>& alerts) {
    for (const auto& a : alerts) out << stream::alert_to_json(a) << '\n';
}

void cmd_score(const RunConfig& c, std::ostream& log) {
    if (c.model.empty()) throw ConfigError("score needs --model");
    const auto model = load_model_file(c);
    Artifacts art(c, log);
    const auto points = stream::frame_points(load_clean(c));
    std::vector<stream::AnomalyAlert> alerts;
    if (points.size() >= 2) {
        stream::WindowBatch batch;
        batch.window_end = points.back().timestamp;
        batch.points.assign(points.begin() + 1, points.end());
        alerts = stream::score_stream(*model, batch, points.front(), model_id(c));
    }
    auto out = art.open("alerts.jsonl", false);
    write_alerts(out, alerts);
    log << "scored " << (points.empty() ? 0 : points.size() - 1) << " rows, " << alerts.size() << " alerts\n";
    art.finish();
}

std::vector<stream::DataPoint> load_points(const RunConfig& c, const stream::StreamTaskSpec& task) {
    const auto ext = fs::path(c.input).extension().string();
    if (ext == ".csv") return stream::frame_points(load_clean(c));
    std::ifstream in(c.input);
    if (!in) throw InputError("cannot open " + c.input);
    std::vector<stream::DataPoint> points;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto rec = stream::parse_line(line);
            if (rec.measurement == task.measurement) points.push_back(rec.point);
        } catch (const ParseError& e) {
            throw ParseError(c.input + ":" + std::to_string(row) + ": " + e.what(), row, e.column());
        }
    }
    // Replay order is timestamp order; duplicates keep the later line.
    std::stable_sort(points.begin(), points.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    return points;
}

void cmd_replay(const RunConfig& c, std::ostream& log) {
    const auto task = task_spec(c);
    const auto model = load_model_file(c);
    Artifacts art(c, log);
    const auto points = load_points(c, task);

    stream::StreamEngine engine(task, c.strict);
    stream::ReplayClock clock(engine);
    std::optional<stream::StreamScorer> scorer;
    if (model) scorer.emplace(model, model_id(c));

    auto batches = art.open("batches.csv", true);
    batches << "window_end,points\n";
    std::vector<stream::AnomalyAlert> alerts;
    const auto take = [&](std::vector<stream::WindowBatch> emitted) {
        for (const auto& b : emitted) {
            batches << format_rfc3339(b.window_end) << ',' << b.points.size() << '\n';
            if (scorer) {
                auto fresh = scorer->consume(b);
                alerts.insert(alerts.end(), fresh.begin(), fresh.end());
            }
        }
    };
    for (const auto& p : points) take(clock.ingest(p));
    take(clock.flush());

    if (const auto last = engine.latest_batch()) {
        auto out = art.open("last_batch.json", false);
        out << stream::serve_httpout(task.measurement, *last) << '\n';
    }
    if (scorer) {
        auto out = art.open("alerts.jsonl", false);
        write_alerts(out, alerts);
    }
    log << "replayed " << points.size() << " points, overwrites " << engine.overwrite_count() << ", alerts "
        << alerts.size() << '\n';
    art.finish();
}

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int) { g_stop_requested = true; }

void cmd_serve(const RunConfig& c, std::ostream& log) {
    const auto task = task_spec(c);
    const auto model = load_model_file(c);
    fs::create_directories(c.output);
    stream::ServerOptions options;
    options.host = c.host;
    options.port = c.port;
    options.strict_schema = c.strict;
    options.wall_clock = c.wall_clock;
    options.alerts_path = fs::path(c.output) / "alerts.jsonl";
    stream::StreamServer server(task, model, options);
    const int port = server.start();
    log << "listening on http://" << c.host << ':' << port << " (POST /write, GET " << task.out_path()
        << ", GET /alerts)" << std::endl;

    g_stop_requested = false;
    std::signal(SIGINT, on_stop_signal);
    std::signal(SIGTERM, on_stop_signal);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(c.duration);
    while (!g_stop_requested && (c.duration <= 0.0 || std::chrono::steady_clock::now() < deadline)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.stop();
    log << "stopped; " << server.alerts().size() << " alerts\n";
}

// ---------------------------------------------------------------------------
// Option wiring

struct Groups {
    bool data = false;       // --input
    bool features = false;   // --no-difference, --seed
    bool subsample = false;
    bool model = false;
    bool learners = false;
    bool resample = false;
    bool resamplers = false;
    bool cv = false;
    bool stream = false;
    bool serve = false;
};

void add_options(CLI::App& sub, RunConfig& c, const Groups& g) {
    sub.add_option("--config", c.config_file, "JSON file with flat keys named like these flags");
    sub.add_option("--out,-o", c.output, "output directory")->capture_default_str();
    if (g.data) sub.add_option("--input,-i", c.input, "input data")->required();
    if (g.features) {
        sub.add_option("--seed", c.seed, "master seed")->capture_default_str();
        sub.add_flag("--no-difference", c.no_difference, "use raw levels instead of first differences");
    }
    if (g.subsample) {
        sub.add_option("--subsample", c.subsample, "stratified row subsample after differencing (0 = all rows)")
            ->capture_default_str();
    }
    if (g.model) {
        sub.add_option("--learner", c.learner, "logistic | linear_svm | forest")->capture_default_str();
        sub.add_option("--weights", c.weights, "balanced | none | <w_neg>,<w_pos> | cost:<c_fp>,<c_fn>")
            ->capture_default_str();
        sub.add_option("--trees", c.trees, "forest size")->capture_default_str();
        sub.add_option("--max-features", c.max_features, "features tried per split (0 = floor(sqrt(d)))")
            ->capture_default_str();
        sub.add_option("--threads", c.threads, "forest worker threads (0 = all cores)")->capture_default_str();
        sub.add_option("--svm-iterations", c.svm_iterations, "subgradient steps")->capture_default_str();
        sub.add_option("--svm-lambda", c.svm_lambda, "SVM regularization")->capture_default_str();
        sub.add_option("--lr-lambda", c.lr_lambda, "logistic L2 penalty")->capture_default_str();
        sub.add_option("--lr-epochs", c.lr_epochs, "logistic iteration cap")->capture_default_str();
        sub.add_option("--lr-tolerance", c.lr_tolerance, "logistic gradient tolerance")->capture_default_str();
    }
    if (g.learners) {
        sub.add_option("--learners", c.learners, "learners to compare")->delimiter(',')->capture_default_str();
    }
    if (g.resample) {
        if (!g.resamplers) {
            sub.add_option("--resample", c.resample, "none | ros | smote | blsmote | svmsmote | adasyn")
                ->capture_default_str();
        }
        sub.add_option("--k-neighbors", c.k_neighbors, "SMOTE neighbors")->capture_default_str();
        sub.add_option("--m-neighbors", c.m_neighbors, "danger-test neighbors")->capture_default_str();
        sub.add_option("--ratio", c.ratio, "minority:majority ratio after resampling")->capture_default_str();
        sub.add_flag("--keep-weights", c.keep_weights, "keep class weights when a resampler is active");
    }
    if (g.resamplers) {
        sub.add_option("--resamplers", c.resamplers, "resamplers to compare")->delimiter(',')->capture_default_str();
    }
    if (g.cv) {
        sub.add_option("--folds", c.folds, "folds per repeat")->capture_default_str();
        sub.add_option("--repeats", c.repeats, "CV repeats")->capture_default_str();
    }
    if (g.stream) {
        sub.add_option("--task", c.task, "stream task script")->capture_default_str();
        sub.add_option("--task-file", c.task_file, "read the task script from a file");
        sub.add_flag("--strict", c.strict, "reject points lacking any channel");
    }
    if (g.serve) {
        sub.add_option("--host", c.host, "bind address")->capture_default_str();
        sub.add_option("--port", c.port, "listen port (0 = any free port)")->capture_default_str();
        sub.add_option("--duration", c.duration, "stop after this many seconds (0 = until SIGINT)")
            ->capture_default_str();
        sub.add_flag("--wall-clock", c.wall_clock, "emit windows on wall time instead of ingested time");
    }
}

// Expands `--config file.json` into flags the user did not give explicitly.
std::vector<std::string> merge_config(const CLI::App& app, std::vector<std::string> args) {
    auto cmd = std::find_if(args.begin(), args.end(), [](const auto& a) { return !a.empty() && a[0] != '-'; });
    if (cmd == args.end()) return args;
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands([](const CLI::App*) { return true; })) {
        if (s->get_name() == *cmd) sub = s;
    }
    if (!sub) return args;

    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config " + path + ": expected a JSON object");

    const auto given = [&](const std::string& flag) {
        return std::any_of(args.begin(), args.end(),
                           [&](const auto& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    const auto scalar = [&](const std::string& key, const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number()) return v.dump();
        throw ConfigError("config " + path + ": value of '" + key + "' must be a string, number or boolean");
    };
    std::vector<std::string> extra;
    for (const auto& [raw_key, value] : doc.items()) {
        std::string key = raw_key;
        std::replace(key.begin(), key.end(), '_', '-');
        const std::string flag = "--" + key;
        if (key == "config") continue;
        if (sub->get_option_no_throw(flag) == nullptr) {
            bool known = false;
            for (const auto* s : app.get_subcommands([](const CLI::App*) { return true; })) {
                known = known || s->get_option_no_throw(flag) != nullptr;
            }
            if (!known) throw ConfigError("config " + path + ": unknown key '" + raw_key + "'");
            continue;  // meaningful for another subcommand
        }
        if (given(flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) extra.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) joined += (joined.empty() ? "" : ",") + scalar(raw_key, item);
            extra.push_back(flag);
            extra.push_back(joined);
        } else {
            extra.push_back(flag);
            extra.push_back(scalar(raw_key, value));
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Anomaly detection pipeline for water-quality sensor data", "tsad"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tsad 1.0");

    struct Entry {
        const char* name;
        const char* help;
        Groups groups;
        void (*fn)(const RunConfig&, std::ostream&);
    };
    const Entry entries[] = {
        {"clean", "forward-fill missing cells and drop unfillable leading rows", {.data = true}, cmd_clean},
        {"adf", "augmented Dickey-Fuller test per channel", {.data = true, .features = true}, cmd_adf},
        {"mi", "mutual information of each channel with the label", {.data = true, .features = true, .subsample = true},
         cmd_mi},
        {"train", "fit one cost-sensitive model and save it",
         {.data = true, .features = true, .model = true, .resample = true}, cmd_train},
        {"evaluate", "repeated stratified CV of several learners",
         {.data = true, .features = true, .subsample = true, .model = true, .learners = true, .resample = true,
          .cv = true},
         cmd_evaluate},
        {"resample-eval", "repeated stratified CV of one learner under each oversampler",
         {.data = true, .features = true, .subsample = true, .model = true, .resample = true, .resamplers = true,
          .cv = true},
         cmd_resample_eval},
        {"rfe", "recursive feature elimination",
         {.data = true, .features = true, .subsample = true, .model = true, .cv = true}, cmd_rfe},
        {"serve", "run the stream engine behind HTTP", {.stream = true, .serve = true}, cmd_serve},
        {"replay", "push a CSV or line-protocol file through the stream engine", {.data = true, .stream = true},
         cmd_replay},
        {"score", "flag anomalies in a CSV with a saved model", {.data = true}, cmd_score},
    };

    std::map<const CLI::App*, const Entry*> dispatch;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        add_options(*sub, cfg, e.groups);
        if (std::string_view(e.name) == "rfe") {
            sub->add_option("--features", cfg.features, "features to keep (0 = scan every count by CV)")
                ->capture_default_str();
        }
        if (std::string_view(e.name) == "adf") {
            sub->add_option("--max-lag", cfg.max_lag, "largest lag tried (0 = 12 (n/100)^(1/4))")
                ->capture_default_str();
        }
        if (std::string_view(e.name) == "serve" || std::string_view(e.name) == "replay" ||
            std::string_view(e.name) == "score") {
            auto* opt = sub->add_option("--model", cfg.model, "saved model (model.json from train)");
            if (std::string_view(e.name) == "score") opt->required();
        }
        dispatch[sub] = &e;
    }

    try {
        auto merged = merge_config(app, args);
        std::reverse(merged.begin(), merged.end());
        app.parse(merged);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const ConfigError& e) {
        err << "tsad: invalid config: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InputError& e) {
        err << "tsad: " << e.what() << '\n';
        return kExitInput;
    }

    const Entry* entry = nullptr;
    for (const auto& [sub, e] : dispatch) {
        if (sub->parsed()) entry = e;
    }
    if (!entry) {
        err << "tsad: no subcommand\n";
        return kExitUsage;
    }
    cfg.command = entry->name;

    try {
        entry->fn(cfg, out);
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "tsad " << cfg.command << ": invalid config: " << e.what() << '\n';
        return kExitConfig;
    } catch (const stream::TaskSyntaxError& e) {
        err << "tsad " << cfg.command << ": invalid task: " << e.what() << '\n';
        return kExitConfig;
    } catch (const stream::TaskValidationError& e) {
        err << "tsad " << cfg.command << ": invalid task: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "tsad " << cfg.command << ": invalid config: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InputError& e) {
        err << "tsad " << cfg.command << ": " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        err << "tsad " << cfg.command << ": " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "tsad " << cfg.command << ": numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "tsad " << cfg.command << ": internal error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace tsad::cli
