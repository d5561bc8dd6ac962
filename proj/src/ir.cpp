#include "seqbench/ir.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace seqbench {

using json = nlohmann::ordered_json;

namespace {

struct OpInfo {
    const char* name;
    int min_arity;
    int max_arity;  // -1 = unbounded
};

constexpr OpInfo kOps[] = {
    {"Convolution", 1, 1}, {"Dense", 1, 1},       {"BatchNorm", 1, 1},
    {"Pooling", 1, 1},     {"Activation", 1, 1},  {"Elementwise", 2, -1},
    {"Concat", 2, -1},     {"Softmax", 1, 1},     {"Flatten", 1, 1},
    {"Padding", 1, 1},
};

const OpInfo& info(OpType op) { return kOps[static_cast<int>(op)]; }

}  // namespace

const char* op_name(OpType op) { return info(op).name; }

OpType op_from_name(const std::string& name) {
    for (size_t i = 0; i < std::size(kOps); ++i) {
        if (name == kOps[i].name) return static_cast<OpType>(i);
    }
    throw ParseError("unsupported op type: " + name);
}

int64_t TensorShape::elements() const {
    return std::accumulate(dims.begin(), dims.end(), int64_t{1},
                           std::multiplies<int64_t>());
}

std::string TensorShape::str() const {
    std::string s = "[";
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

bool ModelGraph::has_external_input(const std::string& slot) const {
    for (const auto& [name, shape] : external_inputs)
        if (name == slot) return true;
    return false;
}

const TensorShape& ModelGraph::external_input_shape(const std::string& slot) const {
    for (const auto& [name, shape] : external_inputs)
        if (name == slot) return shape;
    throw IrError("unknown external input: " + slot);
}

const LayerSpec* ModelGraph::find_layer(const std::string& id) const {
    for (const auto& l : layers)
        if (l.id == id) return &l;
    return nullptr;
}

LayerSpec* ModelGraph::find_layer(const std::string& id) {
    for (auto& l : layers)
        if (l.id == id) return &l;
    return nullptr;
}

const std::string& ModelGraph::output_layer() const {
    // Last sink in document order: a layer no other layer consumes.
    std::unordered_set<std::string> consumed;
    for (const auto& l : layers)
        for (const auto& in : l.inputs) consumed.insert(in);
    const std::string* out = nullptr;
    for (const auto& l : layers)
        if (!consumed.count(l.id)) out = &l.id;
    if (!out) throw IrError("model " + name + " has no sink layer");
    return *out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

TensorShape parse_shape(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw ParseError(where + ": shape must be a non-empty integer list");
    TensorShape s;
    for (const auto& d : j) {
        if (!d.is_number_integer() || d.get<int64_t>() < 1)
            throw ParseError(where + ": shape dims must be integers >= 1");
        s.dims.push_back(d.get<int64_t>());
    }
    return s;
}

AttrValue parse_attr(const json& j, const std::string& where) {
    if (j.is_number_integer()) return j.get<int64_t>();
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        std::vector<int64_t> v;
        for (const auto& e : j) {
            if (!e.is_number_integer())
                throw ParseError(where + ": attribute lists must hold integers");
            v.push_back(e.get<int64_t>());
        }
        return v;
    }
    throw ParseError(where + ": unsupported attribute value type");
}

}  // namespace

ModelGraph parse_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("document root must be an object");
    for (const char* field : {"name", "inputs", "layers"})
        if (!doc.contains(field))
            throw ParseError(std::string("missing required field: ") + field);

    ModelGraph m;
    m.name = doc.at("name").get<std::string>();
    for (const auto& [slot, dims] : doc.at("inputs").items())
        m.external_inputs.emplace_back(slot, parse_shape(dims, "inputs." + slot));
    if (m.external_inputs.empty())
        throw ParseError("model declares no external inputs");

    std::unordered_set<std::string> ids;
    for (const auto& jl : doc.at("layers")) {
        LayerSpec l;
        if (!jl.contains("id") || !jl.contains("op") || !jl.contains("inputs"))
            throw ParseError("layer missing required field (id/op/inputs)");
        l.id = jl.at("id").get<std::string>();
        if (!ids.insert(l.id).second)
            throw ParseError("duplicate layer id: " + l.id);
        l.op = op_from_name(jl.at("op").get<std::string>());
        if (jl.contains("attrs"))
            for (const auto& [k, v] : jl.at("attrs").items())
                l.attrs[k] = parse_attr(v, "layer " + l.id + " attr " + k);
        for (const auto& in : jl.at("inputs"))
            l.inputs.push_back(in.get<std::string>());
        const auto& oi = info(l.op);
        int arity = static_cast<int>(l.inputs.size());
        if (arity < oi.min_arity || (oi.max_arity >= 0 && arity > oi.max_arity))
            throw ParseError("layer " + l.id + ": " + oi.name + " expects " +
                             (oi.max_arity < 0 ? ">= " + std::to_string(oi.min_arity)
                                               : std::to_string(oi.min_arity)) +
                             " inputs, got " + std::to_string(arity));
        m.layers.push_back(std::move(l));
    }
    if (m.layers.empty()) throw ParseError("model has no layers");

    // Reference closure.
    for (const auto& l : m.layers)
        for (const auto& in : l.inputs)
            if (!ids.count(in) && !m.has_external_input(in))
                throw ParseError("layer " + l.id + " references unknown input \"" +
                                 in + "\"");

    topological_order(m);  // throws CycleError on a cycle
    m.output_layer();      // throws if no sink
    return m;
}

ModelGraph load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IrError("cannot open model file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_model(ss.str());
}

std::string serialize_model(const ModelGraph& model) {
    json doc;
    doc["name"] = model.name;
    json inputs = json::object();
    for (const auto& [slot, shape] : model.external_inputs)
        inputs[slot] = shape.dims;
    doc["inputs"] = inputs;
    json layers = json::array();
    for (const auto& l : model.layers) {
        json jl;
        jl["id"] = l.id;
        jl["op"] = op_name(l.op);
        json attrs = json::object();
        for (const auto& [k, v] : l.attrs)
            std::visit([&](const auto& x) { attrs[k] = x; }, v);
        jl["attrs"] = attrs;
        jl["inputs"] = l.inputs;
        layers.push_back(jl);
    }
    doc["layers"] = layers;
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Topological order

std::vector<std::string> topological_order(const ModelGraph& model) {
    const size_t n = model.layers.size();
    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < n; ++i) index[model.layers[i].id] = i;

    std::vector<int> indegree(n, 0);
    std::vector<std::vector<size_t>> consumers(n);
    for (size_t i = 0; i < n; ++i) {
        for (const auto& in : model.layers[i].inputs) {
            auto it = index.find(in);
            if (it == index.end()) continue;  // external input
            ++indegree[i];
            consumers[it->second].push_back(i);
        }
    }

    // Kahn's algorithm; the ready set is kept sorted by document index
    // so ties break deterministically.
    std::vector<size_t> ready;
    for (size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push_back(i);

    std::vector<std::string> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto it = std::min_element(ready.begin(), ready.end());
        size_t v = *it;
        ready.erase(it);
        order.push_back(model.layers[v].id);
        for (size_t c : consumers[v])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    if (order.size() != n)
        throw CycleError("model " + model.name + " contains a cycle");
    return order;
}

// ---------------------------------------------------------------------------
// Shape inference

namespace {

int64_t attr_int(const LayerSpec& l, const std::string& key) {
    auto it = l.attrs.find(key);
    if (it == l.attrs.end())
        throw ShapeError("layer " + l.id + ": missing attribute \"" + key + "\"");
    if (const auto* v = std::get_if<int64_t>(&it->second)) return *v;
    throw ShapeError("layer " + l.id + ": attribute \"" + key + "\" must be an integer");
}

std::vector<int64_t> attr_ints(const LayerSpec& l, const std::string& key) {
    auto it = l.attrs.find(key);
    if (it == l.attrs.end())
        throw ShapeError("layer " + l.id + ": missing attribute \"" + key + "\"");
    if (const auto* v = std::get_if<std::vector<int64_t>>(&it->second)) return *v;
    throw ShapeError("layer " + l.id + ": attribute \"" + key + "\" must be an integer list");
}

std::string attr_str(const LayerSpec& l, const std::string& key) {
    auto it = l.attrs.find(key);
    if (it == l.attrs.end())
        throw ShapeError("layer " + l.id + ": missing attribute \"" + key + "\"");
    if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
    throw ShapeError("layer " + l.id + ": attribute \"" + key + "\" must be a string");
}

std::vector<int64_t> pair_attr_or(LayerSpec& l, const std::string& key,
                                  std::vector<int64_t> fallback) {
    auto it = l.attrs.find(key);
    if (it == l.attrs.end()) {
        l.attrs[key] = fallback;  // normalize so the signature is canonical
        return fallback;
    }
    auto v = attr_ints(l, key);
    if (v.size() != 2)
        throw ShapeError("layer " + l.id + ": \"" + key + "\" must have 2 entries");
    return v;
}

void require_rank(const LayerSpec& l, const TensorShape& s, int64_t rank) {
    if (s.rank() != rank)
        throw ShapeError("layer " + l.id + ": expects rank-" + std::to_string(rank) +
                         " input, got " + s.str());
}

int64_t window_out(const LayerSpec& l, int64_t in, int64_t k, int64_t stride,
                   int64_t pad, int64_t dil) {
    int64_t eff = dil * (k - 1) + 1;
    int64_t out = (in + 2 * pad - eff) / stride + 1;
    if (out < 1)
        throw ShapeError("layer " + l.id + ": window larger than padded input (" +
                         std::to_string(in) + " vs kernel " + std::to_string(k) + ")");
    return out;
}

TensorShape infer_layer(LayerSpec& l) {
    const auto& in0 = l.input_shapes.at(0);
    switch (l.op) {
        case OpType::Convolution: {
            require_rank(l, in0, 4);
            int64_t channels = attr_int(l, "channels");
            auto kernel = attr_ints(l, "kernel");
            if (kernel.size() != 2)
                throw ShapeError("layer " + l.id + ": kernel must have 2 entries");
            auto stride = pair_attr_or(l, "stride", {1, 1});
            auto pad = pair_attr_or(l, "pad", {0, 0});
            auto dil = pair_attr_or(l, "dilation", {1, 1});
            int64_t h = window_out(l, in0.dims[2], kernel[0], stride[0], pad[0], dil[0]);
            int64_t w = window_out(l, in0.dims[3], kernel[1], stride[1], pad[1], dil[1]);
            return {{in0.dims[0], channels, h, w}};
        }
        case OpType::Pooling: {
            require_rank(l, in0, 4);
            auto kernel = attr_ints(l, "kernel");
            if (kernel.size() != 2)
                throw ShapeError("layer " + l.id + ": kernel must have 2 entries");
            std::string mode = attr_str(l, "mode");
            if (mode != "max" && mode != "avg")
                throw ShapeError("layer " + l.id + ": pool mode must be max or avg");
            auto stride = pair_attr_or(l, "stride", kernel);
            auto pad = pair_attr_or(l, "pad", {0, 0});
            int64_t h = window_out(l, in0.dims[2], kernel[0], stride[0], pad[0], 1);
            int64_t w = window_out(l, in0.dims[3], kernel[1], stride[1], pad[1], 1);
            return {{in0.dims[0], in0.dims[1], h, w}};
        }
        case OpType::Dense: {
            if (in0.rank() < 2)
                throw ShapeError("layer " + l.id + ": Dense expects rank >= 2");
            return {{in0.dims[0], attr_int(l, "units")}};
        }
        case OpType::BatchNorm: {
            if (in0.rank() < 2)
                throw ShapeError("layer " + l.id + ": BatchNorm expects rank >= 2");
            return in0;
        }
        case OpType::Activation: {
            std::string kind = attr_str(l, "kind");
            if (kind != "relu" && kind != "sigmoid" && kind != "tanh")
                throw ShapeError("layer " + l.id + ": unknown activation \"" + kind + "\"");
            return in0;
        }
        case OpType::Elementwise: {
            std::string op = attr_str(l, "op");
            if (op != "add" && op != "mul")
                throw ShapeError("layer " + l.id + ": unknown elementwise op \"" + op + "\"");
            for (size_t i = 1; i < l.input_shapes.size(); ++i)
                if (!(l.input_shapes[i] == in0))
                    throw ShapeError("layer " + l.id + ": shape mismatch " + in0.str() +
                                     " vs " + l.input_shapes[i].str());
            return in0;
        }
        case OpType::Concat: {
            int64_t axis = attr_int(l, "axis");
            if (axis < 0 || axis >= in0.rank())
                throw ShapeError("layer " + l.id + ": concat axis out of range");
            TensorShape out = in0;
            for (size_t i = 1; i < l.input_shapes.size(); ++i) {
                const auto& s = l.input_shapes[i];
                if (s.rank() != in0.rank())
                    throw ShapeError("layer " + l.id + ": shape mismatch " + in0.str() +
                                     " vs " + s.str());
                for (int64_t d = 0; d < in0.rank(); ++d)
                    if (d != axis && s.dims[d] != in0.dims[d])
                        throw ShapeError("layer " + l.id + ": shape mismatch " +
                                         in0.str() + " vs " + s.str());
                out.dims[axis] += s.dims[axis];
            }
            return out;
        }
        case OpType::Softmax:
            return in0;
        case OpType::Flatten: {
            if (in0.rank() < 2)
                throw ShapeError("layer " + l.id + ": Flatten expects rank >= 2");
            int64_t rest = 1;
            for (int64_t d = 1; d < in0.rank(); ++d) rest *= in0.dims[d];
            return {{in0.dims[0], rest}};
        }
        case OpType::Padding: {
            require_rank(l, in0, 4);
            auto pad = attr_ints(l, "pad");
            if (pad.size() != 2)
                throw ShapeError("layer " + l.id + ": pad must have 2 entries");
            return {{in0.dims[0], in0.dims[1], in0.dims[2] + 2 * pad[0],
                     in0.dims[3] + 2 * pad[1]}};
        }
    }
    throw ShapeError("layer " + l.id + ": unknown op type");
}

}  // namespace

void infer_shapes(ModelGraph& model) {
    std::unordered_map<std::string, TensorShape> produced;
    for (const auto& [slot, shape] : model.external_inputs) produced[slot] = shape;

    for (const auto& id : topological_order(model)) {
        LayerSpec& l = *model.find_layer(id);
        l.input_shapes.clear();
        for (const auto& in : l.inputs) l.input_shapes.push_back(produced.at(in));
        l.output_shape = infer_layer(l);
        produced[l.id] = l.output_shape;
    }
}

// ---------------------------------------------------------------------------
// Signatures

LayerSignature layer_signature(const LayerSpec& layer) {
    if (!layer.shapes_inferred())
        throw IrError("layer " + layer.id + ": signature requires inferred shapes");
    std::string s = op_name(layer.op);
    s += '|';
    bool first = true;
    for (const auto& [k, v] : layer.attrs) {
        if (!first) s += ';';
        first = false;
        s += k;
        s += '=';
        std::visit(
            [&s](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, int64_t>) {
                    s += std::to_string(x);
                } else if constexpr (std::is_same_v<T, std::string>) {
                    s += x;
                } else {
                    s += '[';
                    for (size_t i = 0; i < x.size(); ++i) {
                        if (i) s += ',';
                        s += std::to_string(x[i]);
                    }
                    s += ']';
                }
            },
            v);
    }
    s += '|';
    for (size_t i = 0; i < layer.input_shapes.size(); ++i) {
        if (i) s += ',';
        s += layer.input_shapes[i].str();
    }
    return {std::move(s)};
}

std::string LayerSignature::hash_hex() const { return hex64(fnv1a64(bytes)); }

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace seqbench
