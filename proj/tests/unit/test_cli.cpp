#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unistd.h>

#include "helpers.hpp"
#include "tsad/cli.hpp"
#include "tsad/synthetic.hpp"

using namespace tsad;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() {
        static int counter = 0;
        dir = fs::temp_directory_path() / ("tsad_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    [[nodiscard]] std::string path(const std::string& name) const { return (dir / name).string(); }
};

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string write_synthetic(const Scratch& s, std::size_t rows, std::uint64_t seed = 3) {
    SyntheticSpec spec;
    spec.rows = rows;
    spec.seed = seed;
    spec.event_fraction = 0.1;
    const auto path = s.path("water.csv");
    write_csv(fs::path(path), synthetic_water_frame(spec));
    return path;
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
    CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(cli::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("exit codes") {
    Scratch s;
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"nonsense"}).code == cli::kExitUsage);
    CHECK(run({"clean"}).code == cli::kExitUsage);
    CHECK(run({"clean", "--help"}).code == cli::kExitOk);
    CHECK(run({"clean", "-i", s.path("missing.csv"), "-o", s.path("o")}).code == cli::kExitInput);

    {
        std::ofstream bad(s.path("bad.csv"));
        bad << "Time,Tp\nnot-a-time,1\n";
    }
    const auto parsed = run({"clean", "-i", s.path("bad.csv"), "-o", s.path("o")});
    CHECK(parsed.code == cli::kExitInput);
    CHECK_FALSE(parsed.err.empty());

    const auto input = write_synthetic(s, 1500);
    CHECK(run({"train", "-i", input, "-o", s.path("o"), "--trees", "0"}).code == cli::kExitConfig);
    CHECK(run({"train", "-i", input, "-o", s.path("o"), "--learner", "boosting"}).code == cli::kExitConfig);
    CHECK(run({"replay", "-i", input, "-o", s.path("o"), "--task", "stream |window(5d, 2h)"}).code ==
          cli::kExitConfig);

    // A constant channel has no usable unit-root regression.
    {
        std::ofstream flat(s.path("flat.csv"));
        flat << "Time,Tp,Cl,pH,Redox,Leit,Trueb,Cl_2,Fm,Fm_2,EVENT\n";
        for (int i = 0; i < 200; ++i) {
            flat << format_civil_time(test::minute(i)) << ",7,0.1,8,750,200,0.1,0.1,1000,1000,false\n";
        }
    }
    CHECK(run({"adf", "-i", s.path("flat.csv"), "-o", s.path("o")}).code == cli::kExitNumerical);
}

TEST_CASE("clean is idempotent and writes a manifest") {
    Scratch s;
    SyntheticSpec spec;
    spec.rows = 500;
    spec.missing_rate = 0.05;
    write_csv(fs::path(s.path("gappy.csv")), synthetic_water_frame(spec));
    REQUIRE(run({"clean", "-i", s.path("gappy.csv"), "-o", s.path("a")}).code == 0);
    REQUIRE(run({"clean", "-i", s.path("a/clean.csv"), "-o", s.path("b")}).code == 0);
    CHECK(slurp(s.path("a/clean.csv")) == slurp(s.path("b/clean.csv")));
    const auto manifest = nlohmann::json::parse(slurp(s.path("a/manifest.json")));
    CHECK(manifest.at("command") == "clean");
    CHECK(manifest.at("digest").get<std::string>().size() == 16);
}

TEST_CASE("config file merges under command-line flags") {
    Scratch s;
    const auto input = write_synthetic(s, 1500);
    {
        std::ofstream cfg(s.path("cfg.json"));
        cfg << R"({"seed": 7, "trees": 5, "threads": 1, "folds": 3, "repeats": 1, "learners": ["forest", "logistic"]})";
    }
    REQUIRE(run({"evaluate", "-i", input, "-o", s.path("a"), "--config", s.path("cfg.json")}).code == 0);
    REQUIRE(run({"evaluate", "-i", input, "-o", s.path("b"), "--seed", "7", "--trees", "5", "--threads", "1",
                 "--folds", "3", "--repeats", "1", "--learners", "forest,logistic"})
                .code == 0);
    // The config path itself is not part of the run identity.
    CHECK(slurp(s.path("a/summary.csv")) == slurp(s.path("b/summary.csv")));
    CHECK(slurp(s.path("a/cv_folds.csv")) == slurp(s.path("b/cv_folds.csv")));

    // Command line wins over the file.
    REQUIRE(run({"evaluate", "-i", input, "-o", s.path("c"), "--config", s.path("cfg.json"), "--seed", "8"}).code ==
            0);
    CHECK(slurp(s.path("c/summary.csv")) != slurp(s.path("a/summary.csv")));

    {
        std::ofstream cfg(s.path("unknown.json"));
        cfg << R"({"seeed": 7})";
    }
    CHECK(run({"evaluate", "-i", input, "-o", s.path("d"), "--config", s.path("unknown.json")}).code ==
          cli::kExitConfig);
    {
        std::ofstream cfg(s.path("broken.json"));
        cfg << "{ seed: ";
    }
    CHECK(run({"evaluate", "-i", input, "-o", s.path("d"), "--config", s.path("broken.json")}).code ==
          cli::kExitConfig);
}

TEST_CASE("digest tracks configuration and inputs") {
    Scratch s;
    const auto input = write_synthetic(s, 300);
    const auto first_line = [&](const std::string& dir) {
        std::istringstream in(slurp(fs::path(dir) / "adf.csv"));
        std::string line;
        std::getline(in, line);
        return line;
    };
    REQUIRE(run({"adf", "-i", input, "-o", s.path("a")}).code == 0);
    REQUIRE(run({"adf", "-i", input, "-o", s.path("b")}).code == 0);
    REQUIRE(run({"adf", "-i", input, "-o", s.path("c"), "--max-lag", "3"}).code == 0);
    CHECK(first_line(s.path("a")).rfind("# digest=", 0) == 0);
    CHECK(first_line(s.path("a")) == first_line(s.path("b")));
    CHECK(first_line(s.path("a")) != first_line(s.path("c")));

    write_synthetic(s, 300, 4);
    REQUIRE(run({"adf", "-i", input, "-o", s.path("d")}).code == 0);
    CHECK(first_line(s.path("a")) != first_line(s.path("d")));
}

TEST_CASE("train, score and replay agree") {
    Scratch s;
    const auto input = write_synthetic(s, 2000);
    REQUIRE(run({"train", "-i", input, "-o", s.path("m"), "--trees", "10", "--threads", "1"}).code == 0);
    const auto model = s.path("m/model.json");
    REQUIRE(run({"score", "-i", input, "-o", s.path("s"), "--model", model}).code == 0);
    REQUIRE(run({"replay", "-i", input, "-o", s.path("r"), "--model", model}).code == 0);
    CHECK(slurp(s.path("s/alerts.jsonl")) == slurp(s.path("r/alerts.jsonl")));
    CHECK_FALSE(slurp(s.path("s/alerts.jsonl")).empty());
    CHECK(fs::exists(s.path("r/batches.csv")));
    CHECK(fs::exists(s.path("r/last_batch.json")));
}

TEST_CASE("repeated runs are byte-identical") {
    Scratch s;
    const auto input = write_synthetic(s, 1500);
    const std::vector<std::vector<std::string>> commands = {
        {"mi"},
        {"rfe", "--trees", "5", "--features", "3"},
        {"resample-eval", "--trees", "5", "--folds", "3", "--repeats", "1", "--resamplers", "none,ros,smote"},
        {"train", "--trees", "5", "--resample", "adasyn"},
    };
    int i = 0;
    for (const auto& cmd : commands) {
        std::vector<std::string> a = cmd, b = cmd;
        for (auto* v : {&a, &b}) {
            v->insert(v->end(), {"-i", input, "--threads", "1"});
        }
        if (cmd.front() == "mi") {
            a.erase(a.end() - 2, a.end());
            b.erase(b.end() - 2, b.end());
        }
        const auto da = s.path("a" + std::to_string(i)), db = s.path("b" + std::to_string(i));
        a.insert(a.end(), {"-o", da});
        b.insert(b.end(), {"-o", db});
        REQUIRE(run(a).code == 0);
        REQUIRE(run(b).code == 0);
        for (const auto& entry : fs::directory_iterator(da)) {
            INFO(cmd.front(), " ", entry.path().filename().string());
            CHECK(slurp(entry.path()) == slurp(fs::path(db) / entry.path().filename()));
        }
        ++i;
    }
}
