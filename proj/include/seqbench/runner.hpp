#pragma once

// Reference executor and timing harness: deterministic operator kernels,
// synthetic inputs/weights, trimmed-mean latency measurement, and the
// benchmark store.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seqbench/decompose.hpp"
#include "seqbench/suite.hpp"

namespace seqbench {

struct Tensor {
    TensorShape shape;
    std::vector<double> data;  // row-major

    static Tensor zeros(const TensorShape& shape);
    double& at(std::initializer_list<int64_t> idx);
    double at(std::initializer_list<int64_t> idx) const;
};

// splitmix64 stream mapped to [-1, 1); bitwise-reproducible everywhere.
class SynthStream {
public:
    explicit SynthStream(uint64_t seed) : state_(seed) {}
    uint64_t next_u64();
    double next_unit();  // in [-1, 1)

private:
    uint64_t state_;
};

Tensor synth_input(const TensorShape& shape, uint64_t seed);

// Weights derived from the layer's signature so repeated layers stay
// performance-identical and runs are reproducible.
struct LayerWeights {
    std::vector<double> primary;  // conv kernel / dense matrix
    std::vector<double> secondary;  // batchnorm shift (primary = scale)
};

LayerWeights synth_weights(const LayerSpec& layer, uint64_t weight_seed);

// Kernel dispatch with explicit weights (tests use this to force e.g. an
// identity convolution kernel).
Tensor execute_layer(const LayerSpec& layer, const std::vector<Tensor>& inputs,
                     const LayerWeights& weights);
Tensor execute_layer(const LayerSpec& layer, const std::vector<Tensor>& inputs,
                     uint64_t weight_seed);

// One synthetic tensor per external slot, in declaration order.
std::vector<Tensor> synth_network_inputs(const RunnableNetwork& network, uint64_t seed);

// Executes layers strictly sequentially in list order. If `trace` is
// given, executed layer ids are appended in dispatch order.
Tensor execute_with_inputs(const RunnableNetwork& network,
                           const std::vector<Tensor>& external_inputs,
                           uint64_t weight_seed,
                           std::vector<std::string>* trace = nullptr);

// Convenience: synthesizes inputs from `seed`, then executes.
Tensor execute_network(const RunnableNetwork& network, uint64_t seed,
                       std::vector<std::string>* trace = nullptr);

// Mean after discarding the lowest and highest floor(trim * n) samples.
double trimmed_mean(std::vector<double> samples, double trim);

struct TimingRecord {
    std::string signature_hash;
    int layer_count = 0;
    std::vector<double> samples_ns;
    double trimmed_mean_ns = 0.0;
    int run_count = 0;
    double trim = 0.2;
    bool batched = false;  // samples are batch means (fast-network guard)
};

struct TimingOptions {
    int runs = 100;
    double trim = 0.2;
    uint64_t seed = 0;
    int warmup = 2;
};

TimingRecord time_network(const RunnableNetwork& network,
                          const TimingOptions& opts = {});

// Times many networks in interleaved rounds: every network contributes
// one sample per round, so transient machine slowdowns spread evenly
// across all records instead of swallowing one network's entire sample
// set. Duplicate signatures are timed once. Keyed by signature hash.
std::map<std::string, TimingRecord> time_networks_interleaved(
    const std::vector<RunnableNetwork>& networks, const TimingOptions& opts = {});

struct BenchmarkStore {
    std::string host;
    std::string timestamp;
    int granularity = 1;
    // Keyed by sequence-signature hash; one record per signature.
    std::map<std::string, TimingRecord> records;

    const TimingRecord* find(const SequenceSignature& sig) const;
    double total_benchmark_ns() const;  // sum of trimmed means
};

// One record per suite signature. With `resume`, signatures already in
// `previous` are carried over untimed.
BenchmarkStore run_suite(const BenchmarkSuite& suite, const TimingOptions& opts,
                         const BenchmarkStore* previous = nullptr);

// End-to-end baseline: the whole model timed as one network.
TimingRecord time_model_end_to_end(const ModelGraph& model,
                                   const TimingOptions& opts = {});

void save_store(const BenchmarkStore& store, const std::string& path);
BenchmarkStore load_store(const std::string& path);

// Baselines: model name -> end-to-end record.
using BaselineMap = std::map<std::string, TimingRecord>;
void save_baselines(const BaselineMap& baselines, const std::string& path);
BaselineMap load_baselines(const std::string& path);

}  // namespace seqbench
