#include "seqbench/decompose.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace seqbench {

namespace {

// Shape of whatever `ref` names in the source model (external input or
// layer output). Requires inferred shapes.
const TensorShape& produced_shape(const ModelGraph& model, const std::string& ref) {
    if (const LayerSpec* l = model.find_layer(ref)) {
        if (!l->shapes_inferred())
            throw IrError("model " + model.name + " must be shape-inferred first");
        return l->output_shape;
    }
    return model.external_input_shape(ref);
}

}  // namespace

RunnableNetwork create_model(const ModelGraph& model,
                             const std::vector<std::string>& topo_order,
                             int begin, int end) {
    const int n = static_cast<int>(topo_order.size());
    if (begin < 0 || begin >= end || end > n)
        throw IrError("create_model: bad slice bounds");

    std::unordered_set<std::string> in_slice;
    for (int i = begin; i < end; ++i) in_slice.insert(topo_order[i]);

    RunnableNetwork net;
    net.source_model = model.name;
    net.begin = begin;
    net.end = end;
    net.graph.name = model.name + "[" + std::to_string(begin) + ":" +
                     std::to_string(end) + ")";

    // Out-of-slice references become synthetic external slots, one per
    // distinct reference, in first-appearance order. Only the entry layer
    // (slice position 0) may have them when the slice has >= 2 layers.
    std::unordered_map<std::string, std::string> slot_of;
    const bool single = (end - begin == 1);
    for (int i = begin; i < end; ++i) {
        const LayerSpec& src = *model.find_layer(topo_order[i]);
        LayerSpec l = src;
        l.input_shapes.clear();
        l.output_shape = {};
        for (auto& in : l.inputs) {
            if (in_slice.count(in)) continue;
            if (!single && i != begin) throw ModelCreateError(src.id, in);
            auto it = slot_of.find(in);
            if (it == slot_of.end()) {
                std::string slot = "in" + std::to_string(slot_of.size());
                net.graph.external_inputs.emplace_back(slot, produced_shape(model, in));
                it = slot_of.emplace(in, std::move(slot)).first;
            }
            in = it->second;
        }
        net.graph.layers.push_back(std::move(l));
    }

    // Re-infer on the sub-model and cross-check against the source.
    infer_shapes(net.graph);
    for (auto& l : net.graph.layers) {
        const LayerSpec& src = *model.find_layer(l.id);
        if (src.shapes_inferred() && !(l.output_shape == src.output_shape))
            throw ShapeError("layer " + l.id + ": slice shape " + l.output_shape.str() +
                             " disagrees with source shape " + src.output_shape.str());
    }

    net.signature = sequence_signature(net);
    return net;
}

SplitResult split_model(const ModelGraph& model,
                        const std::vector<std::string>& topo_order,
                        int begin, int end) {
    const int n = static_cast<int>(topo_order.size());
    SplitResult res;
    // Iterative form of the recursive shift rule: on failure emit the
    // layer at begin alone, advance both bounds by one (end clamped).
    while (true) {
        try {
            res.networks.push_back(create_model(model, topo_order, begin, end));
            res.end = end;
            return res;
        } catch (const ModelCreateError&) {
            res.networks.push_back(create_model(model, topo_order, begin, begin + 1));
            begin += 1;
            end = std::min(end + 1, n);
        }
    }
}

std::vector<RunnableNetwork> find_model_subgraphs(const ModelGraph& model,
                                                  BenchmarkGranularity g) {
    const auto topo = topological_order(model);
    const int n = static_cast<int>(topo.size());
    std::vector<RunnableNetwork> networks;
    int begin = 0;
    while (begin < n) {
        int end = std::min(begin + g.value, n);
        SplitResult sm = split_model(model, topo, begin, end);
        for (auto& net : sm.networks) networks.push_back(std::move(net));
        begin = sm.end;
    }
    return networks;
}

SequenceSignature sequence_signature(const RunnableNetwork& network) {
    // Layer ids are erased: producers are referenced by slice position,
    // external slots by declaration index.
    std::unordered_map<std::string, int> pos;
    for (size_t i = 0; i < network.graph.layers.size(); ++i)
        pos[network.graph.layers[i].id] = static_cast<int>(i);
    std::unordered_map<std::string, int> slot_index;
    for (size_t i = 0; i < network.graph.external_inputs.size(); ++i)
        slot_index[network.graph.external_inputs[i].first] = static_cast<int>(i);

    std::string s;
    for (size_t i = 0; i < network.graph.layers.size(); ++i) {
        const LayerSpec& l = network.graph.layers[i];
        s += std::to_string(i);
        s += '{';
        s += layer_signature(l).bytes;
        s += "}<-(";
        for (size_t j = 0; j < l.inputs.size(); ++j) {
            if (j) s += ',';
            auto it = pos.find(l.inputs[j]);
            if (it != pos.end()) {
                s += '@';
                s += std::to_string(it->second);
            } else {
                s += '$';
                s += std::to_string(slot_index.at(l.inputs[j]));
            }
        }
        s += ");";
    }
    return {std::move(s)};
}

RunnableNetwork whole_model_network(const ModelGraph& model) {
    RunnableNetwork net;
    net.graph = model;
    if (!net.graph.layers.empty() && !net.graph.layers.front().shapes_inferred())
        infer_shapes(net.graph);
    net.source_model = model.name;
    net.begin = 0;
    net.end = static_cast<int>(model.layers.size());
    net.signature = sequence_signature(net);
    return net;
}

}  // namespace seqbench
