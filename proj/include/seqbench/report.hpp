#pragma once

// Evaluation reporting: normalized-latency tables, geometric means, and
// benchmarking-time speedup, all derived purely from persisted stores
// and baselines.

#include <string>
#include <vector>

#include "seqbench/construct.hpp"

namespace seqbench {

double geometric_mean(const std::vector<double>& ratios);  // rejects <= 0

// Sum of end-to-end baselines over the corpus divided by the sum of all
// stored benchmark latencies.
double speedup(const std::vector<ModelGraph>& models, const BenchmarkStore& store,
               const BaselineMap& baselines);

struct EvaluationReport {
    struct Row {
        std::string model;
        double end_to_end_ns = 0.0;
        double constructed_ns = 0.0;
        double normalized = 0.0;  // constructed / end-to-end
        bool complete = true;
    };

    int granularity = 1;
    std::string mode;
    std::string host;
    std::vector<Row> rows;
    double geomean_normalized = 0.0;  // over complete rows
    double total_end_to_end_ns = 0.0;
    double total_benchmark_ns = 0.0;
    double speedup_ratio = 0.0;
};

// Pure function of persisted artifacts; nothing is re-executed. Throws
// IrError("no benchmark records") on an empty store.
EvaluationReport build_report(const std::vector<ModelGraph>& models,
                              BenchmarkGranularity g, const std::string& mode,
                              const BenchmarkStore& store,
                              const BaselineMap& baselines);

// CSV emitters; byte-deterministic given fixed inputs.
std::string report_csv(const EvaluationReport& report);
std::string jaccard_csv(const std::vector<ModelGraph>& models,
                        const std::vector<std::vector<double>>& matrix);
std::string stats_csv(const CorpusStats& stats);

}  // namespace seqbench
