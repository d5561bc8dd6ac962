// seqbench command-line front end: orchestrates parsing, decomposition,
// suite generation, timing, performance construction and reporting.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqbench/construct.hpp"
#include "seqbench/report.hpp"

namespace fs = std::filesystem;
using namespace seqbench;

namespace {

std::vector<ModelGraph> load_corpus(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());  // deterministic corpus order
    if (files.empty()) throw IrError("no .json model files in " + dir);
    std::vector<ModelGraph> models;
    for (const auto& f : files) {
        ModelGraph m = load_model(f.string());
        infer_shapes(m);
        models.push_back(std::move(m));
    }
    return models;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw IrError("cannot write " + path.string());
    f << content;
}

struct SweepRange {
    int lo = 1, hi = 1;
};

// "--granularity-sweep 1..6"
SweepRange parse_sweep(const std::string& s) {
    auto dots = s.find("..");
    if (dots == std::string::npos) throw IrError("sweep must look like A..B");
    SweepRange r;
    r.lo = std::stoi(s.substr(0, dots));
    r.hi = std::stoi(s.substr(dots + 2));
    if (r.lo < 1 || r.hi < r.lo) throw IrError("bad sweep range: " + s);
    return r;
}

std::string store_path(const std::string& out, int g, bool sweep) {
    return sweep ? out + "/store-G" + std::to_string(g) + ".json" : out + "/store.json";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"composable DL layer-sequence benchmarking toolkit"};
    app.require_subcommand(1);

    std::string corpus_dir, model_file, out_dir = "out";
    std::string store_file, baselines_file, mode = "sequential", sweep_str;
    int granularity = 1, runs = 100;
    double trim = 0.2;
    uint64_t seed = 0;
    bool resume = false, provenance = false;

    auto add_common = [&](CLI::App* cmd, bool needs_corpus = true) {
        if (needs_corpus) cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
        cmd->add_option("--out", out_dir, "output directory");
    };

    auto* validate = app.add_subcommand("validate", "parse and shape-check a corpus");
    validate->add_option("--corpus", corpus_dir)->required();

    auto* stats = app.add_subcommand("stats", "unique-layer and similarity statistics");
    add_common(stats);

    auto* similarity = app.add_subcommand("similarity", "pairwise Jaccard matrix");
    add_common(similarity);

    auto* decompose = app.add_subcommand("decompose", "list a model's runnable networks");
    decompose->add_option("--model", model_file, "model IR file")->required();
    decompose->add_option("--granularity", granularity, "max layers per network");

    auto* generate = app.add_subcommand("generate", "build and export the benchmark suite");
    add_common(generate);
    generate->add_option("--granularity", granularity);
    generate->add_flag("--provenance", provenance, "also write contributing model names");

    auto* run = app.add_subcommand("run", "time the benchmark suite");
    add_common(run);
    run->add_option("--granularity", granularity);
    run->add_option("--granularity-sweep", sweep_str, "range A..B, one store per G");
    run->add_option("--runs", runs);
    run->add_option("--trim", trim);
    run->add_option("--seed", seed);
    run->add_flag("--resume", resume, "keep existing records, time only missing ones");

    auto* baseline = app.add_subcommand("baseline", "time each model end to end");
    add_common(baseline);
    baseline->add_option("--runs", runs);
    baseline->add_option("--trim", trim);
    baseline->add_option("--seed", seed);

    auto* construct = app.add_subcommand("construct", "estimate model latencies from a store");
    construct->add_option("--corpus", corpus_dir)->required();
    construct->add_option("--store", store_file)->required();
    construct->add_option("--granularity", granularity);
    construct->add_option("--mode", mode)->check(CLI::IsMember({"sequential", "parallel"}));

    auto* report = app.add_subcommand("report", "emit the evaluation report");
    add_common(report);
    report->add_option("--granularity", granularity);
    report->add_option("--granularity-sweep", sweep_str);
    report->add_option("--store", store_file, "store file (default <out>/store.json)");
    report->add_option("--baselines", baselines_file, "baselines file (default <out>/baselines.json)");
    report->add_option("--mode", mode)->check(CLI::IsMember({"sequential", "parallel"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            for (const auto& m : load_corpus(corpus_dir))
                std::printf("ok %s (%zu layers)\n", m.name.c_str(), m.layers.size());
            return 0;
        }

        if (stats->parsed() || similarity->parsed()) {
            auto models = load_corpus(corpus_dir);
            CorpusStats st = corpus_stats(models);
            write_file(fs::path(out_dir) / "jaccard.csv", jaccard_csv(models, st.jaccard));
            if (stats->parsed())
                write_file(fs::path(out_dir) / "stats.csv", stats_csv(st));
            std::printf("corpus: %d layers, %d unique (%.1f%%)\n",
                        st.corpus_total_layers, st.corpus_unique_layers,
                        100.0 * st.corpus_unique_layers / st.corpus_total_layers);
            return 0;
        }

        if (decompose->parsed()) {
            ModelGraph m = load_model(model_file);
            infer_shapes(m);
            auto nets = find_model_subgraphs(m, BenchmarkGranularity(granularity));
            for (const auto& net : nets) {
                std::printf("network %s layers=%d range=[%d,%d)\n",
                            net.signature.hash_hex().c_str(), net.layer_count(),
                            net.begin, net.end);
                for (const auto& l : net.graph.layers)
                    std::printf("  %s %s -> %s\n", op_name(l.op), l.id.c_str(),
                                l.output_shape.str().c_str());
            }
            std::printf("%zu networks\n", nets.size());
            return 0;
        }

        if (generate->parsed()) {
            auto models = load_corpus(corpus_dir);
            BenchmarkSuite suite = build_suite(models, BenchmarkGranularity(granularity));
            export_suite(suite, out_dir, provenance);
            std::printf("suite: %d unique networks from %d (G=%d)\n",
                        static_cast<int>(suite.entries.size()), suite.total_networks(),
                        granularity);
            return 0;
        }

        if (run->parsed()) {
            auto models = load_corpus(corpus_dir);
            SweepRange range = sweep_str.empty() ? SweepRange{granularity, granularity}
                                                 : parse_sweep(sweep_str);
            TimingOptions opts{runs, trim, seed};
            for (int g = range.lo; g <= range.hi; ++g) {
                BenchmarkSuite suite = build_suite(models, BenchmarkGranularity(g));
                std::string path = store_file.empty()
                                       ? store_path(out_dir, g, !sweep_str.empty())
                                       : store_file;
                BenchmarkStore previous;
                const BenchmarkStore* prev = nullptr;
                if (resume && fs::exists(path)) {
                    previous = load_store(path);
                    prev = &previous;
                }
                BenchmarkStore store = run_suite(suite, opts, prev);
                fs::create_directories(out_dir);
                save_store(store, path);
                std::printf("G=%d: %zu records -> %s\n", g, store.records.size(),
                            path.c_str());
            }
            return 0;
        }

        if (baseline->parsed()) {
            auto models = load_corpus(corpus_dir);
            TimingOptions opts{runs, trim, seed};
            // interleaved so a transient slowdown cannot bias one model
            std::vector<RunnableNetwork> wholes;
            for (const auto& m : models) wholes.push_back(whole_model_network(m));
            auto records = time_networks_interleaved(wholes, opts);
            BaselineMap baselines;
            for (size_t i = 0; i < models.size(); ++i) {
                baselines[models[i].name] =
                    records.at(wholes[i].signature.hash_hex());
                std::printf("%s: %.3f ms\n", models[i].name.c_str(),
                            baselines[models[i].name].trimmed_mean_ns / 1e6);
            }
            fs::create_directories(out_dir);
            save_baselines(baselines, out_dir + "/baselines.json");
            return 0;
        }

        if (construct->parsed()) {
            auto models = load_corpus(corpus_dir);
            BenchmarkStore store = load_store(store_file);
            std::printf("model,granularity,mode,estimate_ns,covered,missing\n");
            for (const auto& m : models) {
                PerfEstimate est =
                    mode == "parallel"
                        ? construct_parallel(m, store)
                        : construct_sequential(m, BenchmarkGranularity(granularity), store);
                std::printf("%s,%d,%s,%.1f,%d,%zu\n", est.model.c_str(), est.granularity,
                            est.mode.c_str(), est.estimate_ns, est.covered_signatures,
                            est.missing_signatures.size());
            }
            return 0;
        }

        if (report->parsed()) {
            auto models = load_corpus(corpus_dir);
            std::string bpath = baselines_file.empty() ? out_dir + "/baselines.json"
                                                       : baselines_file;
            BaselineMap baselines = load_baselines(bpath);
            SweepRange range = sweep_str.empty() ? SweepRange{granularity, granularity}
                                                 : parse_sweep(sweep_str);
            for (int g = range.lo; g <= range.hi; ++g) {
                std::string spath = store_file.empty()
                                        ? store_path(out_dir, g, !sweep_str.empty())
                                        : store_file;
                BenchmarkStore store = load_store(spath);
                EvaluationReport rep = build_report(models, BenchmarkGranularity(g),
                                                    mode, store, baselines);
                std::string csv_path = out_dir + "/report-G" + std::to_string(g) + ".csv";
                write_file(csv_path, report_csv(rep));
                std::printf("G=%d: geomean=%.4f speedup=%.2fx -> %s\n", g,
                            rep.geomean_normalized, rep.speedup_ratio, csv_path.c_str());
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
