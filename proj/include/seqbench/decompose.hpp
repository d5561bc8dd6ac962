#pragma once

// Model decomposition: partitions a model's topologically ordered layers
// into non-overlapping runnable networks of at most G layers, with a
// single-layer fallback when a slice is not self-contained.

#include <string>
#include <vector>

#include "seqbench/ir.hpp"

namespace seqbench {

struct BenchmarkGranularity {
    int value = 1;

    explicit BenchmarkGranularity(int g) : value(g) {
        if (g < 1) throw IrError("benchmark granularity must be >= 1");
    }
};

// Raised by create_model when a multi-layer slice references a producer
// outside the slice. Caught by split_model, never user-facing.
struct ModelCreateError : IrError {
    std::string layer_id;
    std::string missing_ref;

    ModelCreateError(std::string layer, std::string ref)
        : IrError("layer " + layer + " requires input \"" + ref +
                  "\" which is outside the slice"),
          layer_id(std::move(layer)),
          missing_ref(std::move(ref)) {}
};

// Weight-blind identity of a runnable network: internal topology encoded
// by slice position plus each member layer's signature.
struct SequenceSignature {
    std::string bytes;

    bool operator==(const SequenceSignature&) const = default;
    bool operator<(const SequenceSignature& o) const { return bytes < o.bytes; }
    std::string hash_hex() const { return hex64(fnv1a64(bytes)); }
};

struct RunnableNetwork {
    // Self-contained sub-model: external inputs are synthetic slots named
    // in0, in1, ... with shapes recorded from the source model's cut edges.
    ModelGraph graph;
    std::string source_model;
    int begin = 0;  // slice bounds in the source topological order,
    int end = 0;    // begin inclusive, end exclusive
    SequenceSignature signature;

    int layer_count() const { return static_cast<int>(graph.layers.size()); }
};

// Validity rule: a single-layer slice always constructs (every input
// becomes a synthetic external); a multi-layer slice constructs iff only
// its first layer has out-of-slice inputs. Throws ModelCreateError.
RunnableNetwork create_model(const ModelGraph& model,
                             const std::vector<std::string>& topo_order,
                             int begin, int end);

// Attempts [begin,end); on failure emits the single layer at begin and
// shifts the window by one (end clamped to the vertex count). Returns the
// produced networks and the final exclusive end position.
struct SplitResult {
    std::vector<RunnableNetwork> networks;
    int end = 0;
};
SplitResult split_model(const ModelGraph& model,
                        const std::vector<std::string>& topo_order,
                        int begin, int end);

// Full decomposition: the returned networks partition the model's
// topological order exactly.
std::vector<RunnableNetwork> find_model_subgraphs(const ModelGraph& model,
                                                  BenchmarkGranularity g);

SequenceSignature sequence_signature(const RunnableNetwork& network);

// Wraps an entire model as one runnable network without the slice
// validity rule (used for end-to-end baselines).
RunnableNetwork whole_model_network(const ModelGraph& model);

}  // namespace seqbench
