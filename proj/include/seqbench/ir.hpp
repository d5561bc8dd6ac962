#pragma once

// Portable model-graph IR: layer specs, DAG validation, topological
// ordering, shape inference, and weight-blind layer identity.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace seqbench {

struct IrError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : IrError {
    using IrError::IrError;
};

struct CycleError : IrError {
    using IrError::IrError;
};

struct ShapeError : IrError {
    using IrError::IrError;
};

enum class OpType {
    Convolution,
    Dense,
    BatchNorm,
    Pooling,
    Activation,
    Elementwise,
    Concat,
    Softmax,
    Flatten,
    Padding,
};

const char* op_name(OpType op);
OpType op_from_name(const std::string& name);  // throws ParseError on unknown op

struct TensorShape {
    std::vector<int64_t> dims;

    int64_t rank() const { return static_cast<int64_t>(dims.size()); }
    int64_t elements() const;
    std::string str() const;  // e.g. "[1,3,32,32]"

    bool operator==(const TensorShape&) const = default;
};

// Attribute values are integers, integer lists, or enumeration strings
// (pool mode, activation kind, elementwise op).
using AttrValue = std::variant<int64_t, std::vector<int64_t>, std::string>;

struct LayerSpec {
    std::string id;
    OpType op = OpType::Convolution;
    // std::map keeps attributes sorted by name, which makes the
    // signature encoding canonical.
    std::map<std::string, AttrValue> attrs;
    // Each entry names another layer's id or an external-input slot.
    std::vector<std::string> inputs;

    // Filled by infer_shapes().
    std::vector<TensorShape> input_shapes;
    TensorShape output_shape;

    bool shapes_inferred() const { return !output_shape.dims.empty(); }
};

struct ModelGraph {
    std::string name;
    // Ordered as declared in the document.
    std::vector<std::pair<std::string, TensorShape>> external_inputs;
    std::vector<LayerSpec> layers;

    bool has_external_input(const std::string& slot) const;
    const TensorShape& external_input_shape(const std::string& slot) const;
    const LayerSpec* find_layer(const std::string& id) const;
    LayerSpec* find_layer(const std::string& id);

    // The designated model output: the last sink in document order.
    const std::string& output_layer() const;
};

// Parse / serialize the JSON model schema (see README). parse_model
// checks reference closure, arity, acyclicity and the single-output rule.
ModelGraph parse_model(const std::string& json_text);
ModelGraph load_model(const std::string& path);
std::string serialize_model(const ModelGraph& model);

// Deterministic topological order: Kahn's algorithm with ties broken by
// document order. Throws CycleError if the graph has a cycle.
std::vector<std::string> topological_order(const ModelGraph& model);

// Fills input_shapes / output_shape for every layer and normalizes
// defaultable attributes (stride, pad, dilation) so signatures are
// canonical. Idempotent.
void infer_shapes(ModelGraph& model);

// Weight-blind canonical layer identity: (op_type, sorted attributes,
// input shapes). Layer ids and input naming do not participate.
struct LayerSignature {
    std::string bytes;

    bool operator==(const LayerSignature&) const = default;
    bool operator<(const LayerSignature& o) const { return bytes < o.bytes; }
    std::string hash_hex() const;
};

LayerSignature layer_signature(const LayerSpec& layer);  // requires inferred shapes

// FNV-1a, used for stable content-addressed filenames.
uint64_t fnv1a64(const std::string& bytes);
std::string hex64(uint64_t v);

}  // namespace seqbench
