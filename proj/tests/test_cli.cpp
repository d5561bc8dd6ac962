#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "seqbench/runner.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

CliResult cli(const std::string& args) {
    fs::path log = fs::temp_directory_path() / "seqbench_cli_out.txt";
    std::string cmd = std::string(SEQBENCH_CLI) + " " + args + " > " +
                      log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    fs::remove(log);
    return {rc == 0 ? 0 : 1, ss.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("cli: validate parses the corpus and reports layer counts") {
    auto r = cli("validate --corpus " + std::string(SEQBENCH_CORPUS_DIR));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("ok vgg16_style (40 layers)") != std::string::npos);
    CHECK(r.output.find("ok deep_repetitive (1029 layers)") != std::string::npos);
}

TEST_CASE("cli: validate rejects a broken model file") {
    TempDir dir("seqbench_cli_badcorpus");
    std::ofstream(dir.path / "bad.json") << "{\"name\": \"bad\"}";
    auto r = cli("validate --corpus " + dir.str());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("cli: decompose lists one network per layer at G=1") {
    auto r = cli("decompose --model " + std::string(SEQBENCH_CORPUS_DIR) +
                 "/vgg16_style.json --granularity 1");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("40 networks") != std::string::npos);
}

TEST_CASE("cli: generate exports hash-named benchmark files and a manifest") {
    TempDir dir("seqbench_cli_generate");
    auto r = cli("generate --corpus " + std::string(SEQBENCH_CORPUS_DIR) +
                 " --granularity 1 --out " + dir.str());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir.path / "suite-manifest.json"));
    int count = 0;
    for (const auto& e : fs::directory_iterator(dir.path / "benchmarks")) {
        ++count;
        std::string stem = e.path().stem().string();
        CHECK(stem.size() == 16);
        CHECK(stem.find_first_not_of("0123456789abcdef") == std::string::npos);
    }
    CHECK(count > 0);
    CHECK(r.output.find("suite:") != std::string::npos);
}

TEST_CASE("cli: run, baseline, construct and report round-trip") {
    TempDir dir("seqbench_cli_pipeline");
    std::string corpus = std::string(SEQBENCH_DUP_CORPUS_DIR);

    auto run = cli("run --corpus " + corpus + " --granularity 1 --runs 3 --out " +
                   dir.str());
    REQUIRE(run.exit_code == 0);
    REQUIRE(fs::exists(dir.path / "store.json"));

    auto base = cli("baseline --corpus " + corpus + " --runs 3 --out " + dir.str());
    REQUIRE(base.exit_code == 0);
    REQUIRE(fs::exists(dir.path / "baselines.json"));

    auto con = cli("construct --corpus " + corpus + " --store " +
                   (dir.path / "store.json").string() + " --granularity 1");
    CHECK(con.exit_code == 0);
    CHECK(con.output.find("dup_base,1,sequential,") != std::string::npos);
    CHECK(con.output.find("dup_copy,1,sequential,") != std::string::npos);

    auto rep = cli("report --corpus " + corpus + " --granularity 1 --out " + dir.str());
    CHECK(rep.exit_code == 0);
    CHECK(fs::exists(dir.path / "report-G1.csv"));
    CHECK(rep.output.find("geomean=") != std::string::npos);
}

TEST_CASE("cli: report on a store with no records fails with a clear error") {
    TempDir dir("seqbench_cli_empty");
    seqbench::save_store(seqbench::BenchmarkStore{},
                         (dir.path / "store.json").string());
    seqbench::save_baselines(seqbench::BaselineMap{},
                             (dir.path / "baselines.json").string());
    auto r = cli("report --corpus " + std::string(SEQBENCH_DUP_CORPUS_DIR) +
                 " --granularity 1 --out " + dir.str());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("no benchmark records") != std::string::npos);
}

TEST_CASE("cli: bad invocations exit nonzero") {
    CHECK(cli("frobnicate").exit_code == 1);
    CHECK(cli("decompose").exit_code == 1);                    // missing --model
    CHECK(cli("run --corpus /nonexistent-dir").exit_code == 1);
    CHECK(cli("decompose --model " + std::string(SEQBENCH_CORPUS_DIR) +
              "/chain3.json --granularity 0")
              .exit_code == 1);
}
