#pragma once

// Performance construction: rebuilds a model's end-to-end latency
// estimate from stored benchmark results, either by summing all
// decomposed sequences (sequential) or along the critical path
// (parallel, layer granularity only).

#include <map>
#include <string>
#include <vector>

#include "seqbench/runner.hpp"

namespace seqbench {

struct GranularityError : IrError {
    using IrError::IrError;
};

struct PerfEstimate {
    std::string model;
    int granularity = 1;
    std::string mode;  // "sequential" | "parallel"
    double estimate_ns = 0.0;  // NaN when the store is missing signatures
    int covered_signatures = 0;
    std::vector<std::string> missing_signatures;  // signature hashes

    bool complete() const { return missing_signatures.empty(); }
};

struct CriticalPath {
    std::vector<std::string> layers;  // start layer .. designated output
    double total_ns = 0.0;
};

// Longest (by summed latency) path to the model's output layer, computed
// by dynamic programming over the topological order. Every layer whose
// inputs are all external is a valid start. Ties break toward the
// lexicographically smaller predecessor id.
CriticalPath critical_path(const ModelGraph& model,
                           const std::map<std::string, double>& layer_latency_ns);

// Decomposes the model at G and sums the stored trimmed means of its
// sequences. Missing signatures are listed and the estimate flagged
// incomplete, never silently zeroed.
PerfEstimate construct_sequential(const ModelGraph& model, BenchmarkGranularity g,
                                  const BenchmarkStore& store);

// Critical-path construction over per-layer records. Only defined for
// G=1 stores; anything else is rejected with GranularityError.
PerfEstimate construct_parallel(const ModelGraph& model, const BenchmarkStore& store);

}  // namespace seqbench
