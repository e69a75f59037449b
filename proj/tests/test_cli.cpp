// Exercises the installed CLI binary end to end. The binary path arrives via
// the DTN_CLI environment variable (set by ctest).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
    const char* path = std::getenv("DTN_CLI");
    REQUIRE_MESSAGE(path != nullptr, "DTN_CLI must point at the dtn binary");
    return path;
}

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string out_file =
        (fs::temp_directory_path() / ("dtn_cli_out_" + std::to_string(::getpid()) + ".txt"))
            .string();
    const std::string command = cli_path() + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(command.c_str());
    std::ifstream f(out_file);
    std::ostringstream ss;
    ss << f.rdbuf();
    fs::remove(out_file);
    return {WEXITSTATUS(status), ss.str()};
}

std::size_t data_rows(const fs::path& csv) {
    std::ifstream f(csv);
    REQUIRE_MESSAGE(f.good(), "missing file " << csv);
    std::string line;
    std::size_t rows = 0;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (!line.empty()) ++rows;
    }
    return rows;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / (name + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

// tiny but complete run: small data, short epochs
const std::string kFastFlags =
    " --samples-per-class 16 --queries 4 --h-gen 2 --aux-steps 4 --episodes-per-epoch 3"
    " --batch-size 8";

}  // namespace

TEST_CASE("train: default schedule writes 30 metrics rows plus artifacts") {
    TempDir dir("dtn_cli_train");
    const RunResult r = run_cli("train --out " + dir.str() + kFastFlags);
    CHECK(r.exit_code == 0);
    CHECK(data_rows(dir.path / "metrics.csv") == 30);
    CHECK(fs::exists(dir.path / "checkpoint.dtnc"));
    CHECK(read_file(dir.path / "schedule.txt") == "AAAAAAAAAAAAAAMAAAAMAAAMMAAAMM\n");
}

TEST_CASE("train: naive schedule with 3 epochs logs 3 meta rows") {
    TempDir dir("dtn_cli_naive");
    const RunResult r =
        run_cli("train --schedule naive --epochs 3 --out " + dir.str() + kFastFlags);
    CHECK(r.exit_code == 0);
    std::ifstream f(dir.path / "metrics.csv");
    std::string line;
    std::getline(f, line);
    std::size_t meta_rows = 0;
    while (std::getline(f, line)) {
        CHECK(line.find(",M,") != std::string::npos);
        ++meta_rows;
    }
    CHECK(meta_rows == 3);
}

TEST_CASE("train: missing dataset file exits 1") {
    const RunResult r = run_cli("train --data /nonexistent/path.embed");
    CHECK(r.exit_code == 1);
}

TEST_CASE("train: config file applies and flags take precedence") {
    TempDir dir("dtn_cli_config");
    const std::string cfg_path = (dir.path / "run.cfg").string();
    std::ofstream(cfg_path) << "schedule=naive\nepochs=5\nsamples_per_class=16\nqueries=4\n"
                            << "h_gen=2\naux_steps=4\nepisodes_per_epoch=3\nbatch_size=8\n";
    const RunResult r =
        run_cli("train --config " + cfg_path + " --epochs 2 --out " + dir.str());
    CHECK(r.exit_code == 0);
    CHECK(data_rows(dir.path / "metrics.csv") == 2);  // flag overrode the file
}

TEST_CASE("eval: prints mean and interval, deterministic across reruns") {
    TempDir dir("dtn_cli_eval");
    REQUIRE(run_cli("train --schedule two-stage --aux-epochs 1 --meta-epochs 1 --out " +
                    dir.str() + kFastFlags)
                .exit_code == 0);
    const std::string eval_args = "eval --checkpoint " + dir.str() +
                                  "/checkpoint.dtnc --episodes 25 --samples-per-class 16"
                                  " --queries 4 --h-gen 2";
    const RunResult a = run_cli(eval_args);
    const RunResult b = run_cli(eval_args);
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output.find("±") != std::string::npos);
    CHECK(a.output.find("25 episodes") != std::string::npos);

    // E = 1: the interval is undefined
    const RunResult single = run_cli("eval --checkpoint " + dir.str() +
                                     "/checkpoint.dtnc --episodes 1 --samples-per-class 16"
                                     " --queries 4 --h-gen 2");
    CHECK(single.exit_code == 0);
    CHECK(single.output.find("n/a") != std::string::npos);
}

TEST_CASE("eval: defaults to the dataset and episode shape the model was trained with") {
    TempDir dir("dtn_cli_evaldef");
    REQUIRE(run_cli("train --schedule two-stage --aux-epochs 1 --meta-epochs 1 --seed 9"
                    " --classes 14 --train-classes 7 --val-classes 2 --test-classes 5 --out " +
                    dir.str() + kFastFlags)
                .exit_code == 0);
    const std::string ckpt = dir.str() + "/checkpoint.dtnc";
    // bare eval inherits the snapshot; the explicit twin must agree exactly
    const RunResult bare = run_cli("eval --episodes 15 --checkpoint " + ckpt);
    const RunResult twin = run_cli(
        "eval --episodes 15 --checkpoint " + ckpt +
        " --seed 9 --classes 14 --train-classes 7 --val-classes 2 --test-classes 5"
        " --samples-per-class 16 --queries 4 --h-gen 2");
    CHECK(bare.exit_code == 0);
    CHECK(bare.output == twin.output);
}

TEST_CASE("eval: per-episode accuracies land in the out dir") {
    TempDir dir("dtn_cli_evalout");
    REQUIRE(run_cli("train --schedule two-stage --aux-epochs 1 --meta-epochs 0 --out " +
                    dir.str() + kFastFlags)
                .exit_code == 0);
    const RunResult r = run_cli("eval --checkpoint " + dir.str() + "/checkpoint.dtnc --episodes 10"
                                " --samples-per-class 16 --queries 4 --h-gen 2 --out " +
                                dir.str());
    CHECK(r.exit_code == 0);
    CHECK(data_rows(dir.path / "episode_accuracies.csv") == 10);
}

TEST_CASE("ablate: h sweep covers the six arms including the H=0 baseline") {
    TempDir dir("dtn_cli_ablate");
    const RunResult r = run_cli(
        "ablate --sweep h --seeds 1 --schedule two-stage --aux-epochs 1 --meta-epochs 1"
        " --episodes 5 --out " +
        dir.str() + kFastFlags);
    CHECK(r.exit_code == 0);
    CHECK(data_rows(dir.path / "ablate_runs.csv") == 6);
    const std::string runs = read_file(dir.path / "ablate_runs.csv");
    CHECK(runs.find("0,1,") == runs.find('\n') + 1);  // first arm is H=0
    CHECK(runs.find("64,1,") != std::string::npos);
    CHECK(data_rows(dir.path / "ablate_summary.csv") == 6);
}

TEST_CASE("ablate: strategy sweep emits arm x seed rows") {
    TempDir dir("dtn_cli_ablate2");
    const RunResult r = run_cli(
        "ablate --sweep strategy --seeds 2 --unit-epochs 1 --gamma 0,1 --episodes 5 --out " +
        dir.str() + kFastFlags);
    CHECK(r.exit_code == 0);
    CHECK(data_rows(dir.path / "ablate_runs.csv") == 8);  // 4 strategies x 2 seeds
    for (const char* arm : {"naive", "two-stage", "at", "oat"}) {
        CHECK(read_file(dir.path / "ablate_summary.csv").find(arm) != std::string::npos);
    }
}

TEST_CASE("gen-data: writes a loadable embedding file") {
    TempDir dir("dtn_cli_gendata");
    const std::string out = (dir.path / "synthetic.embed").string();
    const RunResult r =
        run_cli("gen-data --classes 6 --samples-per-class 5 --dim 7 --out " + out);
    CHECK(r.exit_code == 0);
    std::ifstream f(out);
    std::string header;
    std::getline(f, header);
    CHECK(header == "dtn-embed v1 dim=7");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(f, line)) rows += line.empty() ? 0 : 1;
    CHECK(rows == 30);

    // a training run accepts the generated file
    const RunResult train = run_cli(
        "train --data " + out +
        " --train-classes 4 --val-classes 0 --test-classes 2 --n-way 2 --queries 2"
        " --schedule two-stage --aux-epochs 1 --meta-epochs 1 --aux-steps 2"
        " --episodes-per-epoch 2 --h-gen 1 --batch-size 4 --out " +
        dir.str());
    CHECK(train.exit_code == 0);
}

TEST_CASE("export-embeddings: role column holds exactly the three literals") {
    TempDir dir("dtn_cli_export");
    REQUIRE(run_cli("train --schedule two-stage --aux-epochs 1 --meta-epochs 0 --out " +
                    dir.str() + kFastFlags)
                .exit_code == 0);
    const RunResult r = run_cli("export-embeddings --checkpoint " + dir.str() +
                                "/checkpoint.dtnc --n-way 3 --h-gen 4 --samples-per-class 16"
                                " --queries 4 --out " +
                                dir.str());
    CHECK(r.exit_code == 0);

    std::ifstream f(dir.path / "features.csv");
    std::string line;
    std::getline(f, line);  // header
    std::size_t real = 0, support = 0, generated = 0, other = 0;
    while (std::getline(f, line)) {
        if (line.rfind("real,", 0) == 0) {
            ++real;
        } else if (line.rfind("support,", 0) == 0) {
            ++support;
        } else if (line.rfind("generated,", 0) == 0) {
            ++generated;
        } else if (!line.empty()) {
            ++other;
        }
    }
    CHECK(other == 0);
    CHECK(real == 3 * 16);       // every sample of the 3 episode classes
    CHECK(support == 3);
    CHECK(generated == 3 * 4);   // N * K * H
}

TEST_CASE("export-embeddings: H=0 leaves no generated rows") {
    TempDir dir("dtn_cli_export0");
    REQUIRE(run_cli("train --schedule two-stage --aux-epochs 1 --meta-epochs 0 --out " +
                    dir.str() + kFastFlags)
                .exit_code == 0);
    const RunResult r = run_cli("export-embeddings --checkpoint " + dir.str() +
                                "/checkpoint.dtnc --n-way 3 --h-gen 0 --samples-per-class 16"
                                " --queries 4 --out " +
                                dir.str());
    CHECK(r.exit_code == 0);
    CHECK(read_file(dir.path / "features.csv").find("generated,") == std::string::npos);
}

TEST_CASE("train: fixed seed reproduces every output file byte for byte") {
    TempDir dir_a("dtn_cli_det_a");
    TempDir dir_b("dtn_cli_det_b");
    const std::string flags =
        " --seed 5 --schedule two-stage --aux-epochs 1 --meta-epochs 1" + kFastFlags;
    REQUIRE(run_cli("train --out " + dir_a.str() + flags).exit_code == 0);
    REQUIRE(run_cli("train --out " + dir_b.str() + flags).exit_code == 0);
    for (const char* name : {"metrics.csv", "schedule.txt", "checkpoint.dtnc"}) {
        CHECK(read_file(dir_a.path / name) == read_file(dir_b.path / name));
    }
}

TEST_CASE("train: resume from the final checkpoint is a no-op that still succeeds") {
    TempDir dir("dtn_cli_resume");
    REQUIRE(run_cli("train --schedule two-stage --aux-epochs 1 --meta-epochs 1 --out " +
                    dir.str() + kFastFlags)
                .exit_code == 0);
    const std::string ckpt = dir.str() + "/checkpoint.dtnc";
    TempDir dir2("dtn_cli_resume2");
    const RunResult r = run_cli("train --resume " + ckpt + " --out " + dir2.str());
    CHECK(r.exit_code == 0);
    CHECK(data_rows(dir2.path / "metrics.csv") == 0);  // nothing left to train
}
