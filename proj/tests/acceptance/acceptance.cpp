// Acceptance checks, one per criterion. Prints a PASS/FAIL (or SKIP) line per
// criterion run; exits non-zero if any ran and failed.
//
//   tsad_acceptance            all criteria
//   tsad_acceptance 4 5        selected criteria
//
// Criterion 3 needs the real water-quality CSV; set TSAD_GECCO_CSV to its path.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "tsad/cli.hpp"
#include "tsad/cost_models.hpp"
#include "tsad/dataset.hpp"
#include "tsad/evaluation.hpp"
#include "tsad/feature_selection.hpp"
#include "tsad/random.hpp"
#include "tsad/resampling.hpp"
#include "tsad/stationarity.hpp"
#include "tsad/stream.hpp"
#include "tsad/synthetic.hpp"

using namespace tsad;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum class Status { Pass, Fail, Skip } status = Status::Pass;
    std::string detail;
};

/// Collects failed conditions; the first few are reported.
class Checker {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) {
            ++failures_;
            if (messages_.size() < 5) messages_.push_back(what);
        }
    }
    [[nodiscard]] Outcome outcome(std::string summary) const {
        Outcome o;
        o.status = failures_ == 0 ? Outcome::Status::Pass : Outcome::Status::Fail;
        o.detail = std::move(summary);
        for (const auto& m : messages_) o.detail += "; " + m;
        if (failures_ > messages_.size()) o.detail += "; +" + std::to_string(failures_ - messages_.size()) + " more";
        return o;
    }

private:
    std::size_t failures_ = 0;
    std::vector<std::string> messages_;
};

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

Labels random_labels(std::size_t n, double rate, std::mt19937_64& rng) {
    std::bernoulli_distribution b(rate);
    Labels out(n);
    for (auto& v : out) v = b(rng) ? 1 : 0;
    return out;
}

double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------

Outcome metric_exactness() {
    Checker check;
    std::mt19937_64 rng(20240601);
    for (int trial = 0; trial < 1000; ++trial) {
        const double rate = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
        const auto actual = random_labels(1000, rate, rng);
        const auto predicted = random_labels(1000, rate, rng);
        std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < actual.size(); ++i) {
            tp += predicted[i] && actual[i];
            fp += predicted[i] && !actual[i];
            tn += !predicted[i] && !actual[i];
            fn += !predicted[i] && actual[i];
        }
        // Each metric is an integer ratio; both integers are below 2^53, so one
        // double division is the correctly rounded rational value.
        const auto q = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
            if (den == 0) return std::nullopt;
            return double(num) / double(den);
        };
        const bool f_defined = tp + fn > 0 && tp + fp > 0;
        const auto m = metrics(confusion(predicted, actual));
        const std::string at = "trial " + std::to_string(trial);
        check.expect(m.sensitivity == q(tp, tp + fn), at + " sensitivity");
        check.expect(m.specificity == q(tn, tn + fp), at + " specificity");
        check.expect(m.precision == q(tp, tp + fp), at + " precision");
        check.expect(m.f1 == (f_defined ? q(2 * tp, 2 * tp + fn + fp) : std::nullopt), at + " f1");
        check.expect(m.f05 == (f_defined ? q(5 * tp, 5 * tp + fn + 4 * fp) : std::nullopt), at + " f05");
    }
    return check.outcome("1000 pairs of length 1000");
}

Outcome adf_calibration() {
    Checker check;
    check.expect(kAdfCriticalValues[0] == -3.43042, "1% critical value");
    check.expect(kAdfCriticalValues[1] == -2.86157, "5% critical value");
    check.expect(kAdfCriticalValues[2] == -2.56679, "10% critical value");
    int noise_ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::normal_distribution<double> g;
        std::vector<double> y(5000);
        for (auto& v : y) v = g(rng);
        const auto result = adf_test(y);
        check.expect(result.critical_values == kAdfCriticalValues, "critical values carried on results");
        noise_ok += result.stationary_at(0.01);
    }
    int walk_ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(5000 + seed);
        std::normal_distribution<double> g;
        std::vector<double> y(2000);
        double level = 0.0;
        for (auto& v : y) v = level += g(rng);
        walk_ok += !adf_test(y).stationary_at(0.05);
    }
    check.expect(noise_ok >= 99, "white noise stationary@1% in " + std::to_string(noise_ok) + "/100");
    check.expect(walk_ok >= 90, "random walks non-stationary@5% in " + std::to_string(walk_ok) + "/100");
    return check.outcome("white noise " + std::to_string(noise_ok) + "/100 stationary@1%, random walks " +
                         std::to_string(walk_ok) + "/100 non-stationary@5%");
}

Outcome gecco_reproduction() {
    const char* path = std::getenv("TSAD_GECCO_CSV");
    if (!path || !*path) return {Outcome::Status::Skip, "TSAD_GECCO_CSV not set; the external dataset is required"};
    Checker check;
    const auto frame = fill_missing(parse_csv(fs::path(path)));
    const auto diffed = difference(frame);

    const std::map<ChannelId, double> reference = {
        {ChannelId::Tp, -65.6594},    {ChannelId::Cl, -64.3677},   {ChannelId::pH, -65.1679},
        {ChannelId::Redox, -65.7522}, {ChannelId::Leit, -64.892},  {ChannelId::Trueb, -65.0892},
        {ChannelId::Cl_2, -64.949},   {ChannelId::Fm, -65.9133},   {ChannelId::Fm_2, -64.8712},
    };
    std::string stats;
    for (const auto& c : adf_report(diffed)) {
        const auto want = reference.at(c.channel);
        const std::string name(channel_name(c.channel));
        stats += name + "=" + fixed(c.result.statistic, 2) + " ";
        check.expect(std::abs(c.result.statistic - want) <= 1.0, name + " ADF " + fixed(c.result.statistic));
        check.expect(c.result.verdict == AdfVerdict::Stationary1, name + " not stationary@1%");
    }

    const auto& labels = diffed.deltas.labels();
    const auto mi = mutual_information_scores(diffed, labels);
    check.expect(mi.front().channel == ChannelId::Redox, "MI first is " + std::string(channel_name(mi.front().channel)));
    check.expect(mi.back().channel == ChannelId::Tp, "MI last is " + std::string(channel_name(mi.back().channel)));

    // One elimination round on a desk-scale forest decides the lowest rank.
    CostModelSpec forest;
    forest.forest.n_trees = 100;
    forest.seed = derive_seed(1, {1});
    const auto rows = stratified_subsample(labels, 20000, derive_seed(1, {4}));
    DifferencedFrame sub{diffed.deltas.select_rows(rows), diffed.origin, diffed.origin_time};
    RfeOptions opt;
    opt.target_k = kChannelCount - 1;
    const auto ranking = rfe(forest, sub, sub.deltas.labels(), opt);
    const auto lowest = ranking.elimination_order.front();
    check.expect(lowest == ChannelId::Tp, "RFE lowest is " + std::string(channel_name(lowest)));
    return check.outcome(stats + "| MI first " + std::string(channel_name(mi.front().channel)) + ", last " +
                         std::string(channel_name(mi.back().channel)) + " | RFE lowest " +
                         std::string(channel_name(lowest)));
}

// ---------------------------------------------------------------------------
// Desk-scale model comparison on the simulated water record.

struct DeskData {
    FeatureMatrix x;
    Labels y;
    std::size_t positives = 0;
};

const DeskData& desk_data() {
    static const DeskData data = [] {
        SyntheticSpec spec;
        spec.rows = 122334;
        spec.seed = 1;
        const auto diffed = difference(synthetic_water_frame(spec));
        const auto rows = stratified_subsample(diffed.deltas.labels(), 20000, derive_seed(1, {4}));
        const auto sub = diffed.deltas.select_rows(rows);
        DeskData d{sub.to_matrix(), sub.labels()};
        d.positives = std::size_t(std::count(d.y.begin(), d.y.end(), 1));
        return d;
    }();
    return data;
}

double desk_f1(Learner learner, std::optional<ResampleMethod> resampler = std::nullopt) {
    const auto& d = desk_data();
    CostModelSpec model;
    model.learner = learner;
    model.forest.n_trees = 100;
    model.seed = derive_seed(1, {1});
    std::optional<ResampleSpec> rs;
    if (resampler) {
        rs.emplace();
        rs->method = *resampler;
        rs->seed = derive_seed(1, {3});
    }
    CvSpec cv;
    cv.seed = derive_seed(1, {2});
    const auto report = cross_validate(model, rs, d.x, d.y, cv);
    return report.summary(Metric::F1).mean.value_or(0.0);
}

Outcome model_ordering() {
    Checker check;
    const double rf = desk_f1(Learner::Forest);
    const double lr = desk_f1(Learner::Logistic);
    const double svm = desk_f1(Learner::LinearSvm);
    check.expect(rf > lr, "F1(RF) <= F1(LR)");
    check.expect(lr > svm, "F1(LR) <= F1(SVM)");
    check.expect(rf >= 0.75, "F1(RF) below 0.75");
    return check.outcome("20000 of 122333 rows, " + std::to_string(desk_data().positives) + " positive; F1 RF " +
                         fixed(rf) + ", LR " + fixed(lr) + ", SVM " + fixed(svm));
}

Outcome oversampling_neutrality() {
    Checker check;
    const double rf = desk_f1(Learner::Forest);
    const double ros = desk_f1(Learner::Forest, ResampleMethod::Ros);
    check.expect(std::abs(ros - rf) <= 0.05, "difference " + fixed(ros - rf));
    return check.outcome("F1 RF " + fixed(rf) + ", RF+ROS " + fixed(ros) + ", difference " + fixed(ros - rf));
}

// ---------------------------------------------------------------------------

Outcome resampler_properties() {
    Checker check;
    std::size_t synthetics = 0;
    const ResampleMethod methods[] = {ResampleMethod::Smote, ResampleMethod::BorderlineSmote, ResampleMethod::SvmSmote,
                                      ResampleMethod::Adasyn};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(900 + seed);
        const std::size_t d = 2 + seed % 4;
        const std::size_t n_min = 20 + seed % 30;
        const std::size_t n_maj = 150 + 7 * seed;
        std::normal_distribution<double> g;
        FeatureMatrix x(n_min + n_maj, d);
        Labels y(n_min + n_maj, 0);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            y[i] = i < n_min;
            for (std::size_t j = 0; j < d; ++j) x(i, j) = g(rng) * (1.0 + 0.5 * double(j)) + (y[i] ? 1.5 : 0.0);
        }
        for (auto method : methods) {
            ResampleSpec spec;
            spec.method = method;
            spec.seed = seed;
            spec.target_ratio = seed % 2 ? 1.0 : 0.6;
            const auto r = resample(x, y, spec);
            const std::string at = std::string(resample_method_name(method)) + " seed " + std::to_string(seed);
            check.expect(!r.empty_seed_set, at + " had no seed rows");
            bool originals = r.original_rows == x.rows();
            for (std::size_t i = 0; originals && i < x.rows(); ++i) {
                originals = r.y[i] == y[i] && std::equal(x.row(i).begin(), x.row(i).end(), r.x.row(i).begin());
            }
            check.expect(originals, at + " altered an original row");

            for (std::size_t s = 0; s < r.synthetic_count(); ++s) {
                const auto& p = r.provenance[s];
                const auto row = r.x.row(x.rows() + s);
                const auto a = x.row(p.seed);
                std::vector<double> b(x.row(p.neighbor).begin(), x.row(p.neighbor).end());
                if (p.kind == Provenance::Kind::Extrapolated) {
                    for (std::size_t j = 0; j < d; ++j) b[j] = 2.0 * a[j] - b[j];
                }
                const double gap = euclid(row, a) + euclid(row, b) - euclid(a, b);
                check.expect(std::abs(gap) <= 1e-9 * std::max(1.0, euclid(a, b)), at + " off-segment synthetic");
                check.expect(y[p.seed] == 1 && y[p.neighbor] == 1, at + " non-minority source");
            }
            synthetics += r.synthetic_count();

            if (method == ResampleMethod::Adasyn) {
                // ADASYN's budget is G = (n_maj - n_min) * ratio, rounded per seed row.
                const double g_budget = double(n_maj - n_min) * spec.target_ratio;
                const double off = std::abs(double(r.synthetic_count()) - g_budget);
                check.expect(off <= double(n_min) / 2.0, at + " ratio off by " + fixed(off, 0));
            } else {
                check.expect(r.synthetic_count() == oversample_deficit(n_min, n_maj, spec.target_ratio),
                             at + " ratio missed");
            }
        }
    }
    return check.outcome("50 datasets x 4 methods, " + std::to_string(synthetics) + " synthetic rows checked");
}

Outcome stratification_exactness() {
    Checker check;
    std::mt19937_64 rng(77);
    std::size_t configs = 0;
    while (configs < 200) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(50, 20000)(rng);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 20)(rng);
        const double rate = std::uniform_real_distribution<double>(0.005, 0.5)(rng);
        const auto y = random_labels(n, rate, rng);
        const auto pos = std::size_t(std::count(y.begin(), y.end(), 1));
        if (pos < k || n - pos < k) continue;
        ++configs;
        const auto folds = repeated_stratified_kfold(y, k, 3, configs);
        for (const auto& f : folds) {
            const auto fp = std::count_if(f.test.begin(), f.test.end(), [&](std::size_t i) { return y[i] == 1; });
            const double share = double(pos) * double(f.test.size()) / double(n);
            const std::string at = "n=" + std::to_string(n) + " k=" + std::to_string(k);
            check.expect(std::abs(double(fp) - share) <= 1.0, at + " positives " + std::to_string(fp));
            check.expect(f.test.size() == n / k || f.test.size() == n / k + 1, at + " fold size");
        }
    }
    return check.outcome("200 configurations, 3 repeats each");
}

// ---------------------------------------------------------------------------

Outcome stream_equivalence() {
    Checker check;
    SyntheticSpec train_spec;
    train_spec.rows = 20000;
    train_spec.seed = 101;
    const auto train_diffed = difference(synthetic_water_frame(train_spec));
    CostModelSpec forest;
    forest.forest.n_trees = 50;
    forest.seed = 5;
    auto model = std::make_shared<TrainedClassifier>(
        train(forest, train_diffed.deltas.to_matrix(), train_diffed.deltas.labels()));

    const stream::StreamTaskSpec task;  // window 5d every 2h
    std::size_t total_alerts = 0, full_windows = 0;
    for (std::uint64_t seed : {201, 202, 203}) {
        for (std::size_t days : {3, 8}) {
            SyntheticSpec spec;
            spec.rows = days * 1440;
            spec.seed = seed;
            spec.event_fraction = 0.03;
            const auto frame = synthetic_water_frame(spec);
            const auto diffed = difference(frame);
            const auto offline = model->predict(diffed.deltas.to_matrix());
            std::vector<Timestamp> expected;
            for (std::size_t i = 0; i < offline.size(); ++i) {
                if (offline[i]) expected.push_back(diffed.deltas.timestamps()[i]);
            }
            const auto points = stream::frame_points(frame);
            const auto report = stream::replay(points, task, model, "forest");
            std::vector<Timestamp> got;
            for (const auto& a : report.alerts) got.push_back(a.timestamp);
            const std::string at = std::to_string(days) + "d seed " + std::to_string(seed);
            check.expect(got == expected, at + " alerts differ from offline predict");
            total_alerts += got.size();

            // Cadence arithmetic in minutes: points sit at 0..m-1, window ends at
            // multiples of 120 up to the first one covering m-1, and the window
            // ending at e holds the points in (e - 7200, e].
            const std::int64_t m = std::int64_t(points.size());
            const std::int64_t windows = (m - 1 + 119) / 120 + 1;
            check.expect(std::int64_t(report.window_ends.size()) == windows, at + " window count");
            for (std::size_t w = 0; w < report.window_ends.size(); ++w) {
                const std::int64_t e = 120 * std::int64_t(w);
                const std::int64_t size = std::min(e, m - 1) - std::max<std::int64_t>(e - 7200 + 1, 0) + 1;
                check.expect(report.window_ends[w] == frame.timestamps().front() + std::chrono::minutes(e),
                             at + " window end " + std::to_string(w));
                check.expect(std::int64_t(report.batch_sizes[w]) == size,
                             at + " window " + std::to_string(w) + " has " + std::to_string(report.batch_sizes[w]));
                full_windows += report.batch_sizes[w] == 7200;
            }
        }
    }
    check.expect(full_windows > 0, "no full 5d window observed");
    return check.outcome(std::to_string(total_alerts) + " alerts matched offline predict; " +
                         std::to_string(full_windows) + " windows of 7200 points");
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_determinism() {
    Checker check;
    const auto dir = fs::temp_directory_path() / ("tsad_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    SyntheticSpec spec;
    spec.rows = 3000;
    spec.seed = 17;
    spec.event_fraction = 0.05;
    spec.missing_rate = 0.01;
    const auto input = (dir / "water.csv").string();
    write_csv(fs::path(input), synthetic_water_frame(spec));
    const auto clean = (dir / "clean.csv").string();

    std::ostringstream sink;
    {
        std::ostringstream err;
        if (cli::run({"clean", "-i", input, "-o", (dir / "prep").string()}, sink, err) != 0) {
            check.expect(false, "clean failed: " + err.str());
        }
        fs::copy_file(dir / "prep" / "clean.csv", clean);
    }
    const auto model = (dir / "prep_model").string();
    {
        std::ostringstream err;
        if (cli::run({"train", "-i", clean, "-o", model, "--trees", "10"}, sink, err) != 0) {
            check.expect(false, "train failed: " + err.str());
        }
    }
    const std::vector<std::vector<std::string>> commands = {
        {"clean", "-i", input},
        {"adf", "-i", clean},
        {"mi", "-i", clean},
        {"train", "-i", clean, "--trees", "20", "--resample", "smote"},
        {"evaluate", "-i", clean, "--trees", "10", "--folds", "3", "--repeats", "2"},
        {"resample-eval", "-i", clean, "--trees", "10", "--folds", "3", "--repeats", "1"},
        {"rfe", "-i", clean, "--trees", "10", "--features", "4"},
        {"score", "-i", clean, "--model", model + "/model.json"},
        {"replay", "-i", clean, "--model", model + "/model.json"},
    };
    std::size_t files = 0;
    for (const auto& cmd : commands) {
        std::vector<fs::path> outs;
        for (int run = 0; run < 2; ++run) {
            outs.push_back(dir / (cmd.front() + "_" + std::to_string(run)));
            auto args = cmd;
            args.insert(args.end(), {"-o", outs.back().string()});
            std::ostringstream err;
            const int code = cli::run(args, sink, err);
            check.expect(code == 0, cmd.front() + " exited " + std::to_string(code) + ": " + err.str());
        }
        std::size_t here = 0;
        for (const auto& entry : fs::directory_iterator(outs[0])) {
            ++here;
            const auto other = outs[1] / entry.path().filename();
            check.expect(fs::exists(other) && slurp(entry.path()) == slurp(other),
                         cmd.front() + "/" + entry.path().filename().string() + " differs");
        }
        check.expect(here == std::size_t(std::distance(fs::directory_iterator(outs[1]), fs::directory_iterator())),
                     cmd.front() + " artifact sets differ");
        files += here;
    }
    fs::remove_all(dir);
    return check.outcome(std::to_string(commands.size()) + " subcommands, " + std::to_string(files) +
                         " artifacts compared byte for byte");
}

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "metric exactness", metric_exactness},
        {2, "ADF calibration", adf_calibration},
        {3, "water-quality dataset reproduction", gecco_reproduction},
        {4, "desk-scale model ordering", model_ordering},
        {5, "oversampling neutrality", oversampling_neutrality},
        {6, "resampler properties", resampler_properties},
        {7, "stratification exactness", stratification_exactness},
        {8, "stream/batch equivalence", stream_equivalence},
        {9, "CLI determinism", cli_determinism},
    };
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    bool failed = false;
    for (const auto& c : criteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Outcome::Status::Fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = o.status == Outcome::Status::Pass ? "PASS" : o.status == Outcome::Status::Fail ? "FAIL" : "SKIP";
        failed = failed || o.status == Outcome::Status::Fail;
        std::cout << tag << " criterion " << c.id << " (" << c.title << ", " << fixed(secs, 1) << " s): " << o.detail
                  << std::endl;
    }
    return failed ? 1 : 0;
}
