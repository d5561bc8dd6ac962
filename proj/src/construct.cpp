#include "seqbench/construct.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

namespace seqbench {

CriticalPath critical_path(const ModelGraph& model,
                           const std::map<std::string, double>& layer_latency_ns) {
    for (const auto& l : model.layers)
        if (!layer_latency_ns.count(l.id))
            throw IrError("critical_path: missing latency for layer " + l.id);

    const auto topo = topological_order(model);
    std::unordered_map<std::string, double> dist;
    std::unordered_map<std::string, std::string> best_pred;

    for (const auto& id : topo) {
        const LayerSpec& l = *model.find_layer(id);
        double best = 0.0;
        std::string pred;
        for (const auto& in : l.inputs) {
            auto it = dist.find(in);
            if (it == dist.end()) continue;  // external input
            if (pred.empty() || it->second > best ||
                (it->second == best && in < pred)) {
                best = it->second;
                pred = in;
            }
        }
        dist[id] = best + layer_latency_ns.at(id);
        if (!pred.empty()) best_pred[id] = pred;
    }

    CriticalPath cp;
    const std::string& end = model.output_layer();
    cp.total_ns = dist.at(end);
    for (std::string cur = end;;) {
        cp.layers.push_back(cur);
        auto it = best_pred.find(cur);
        if (it == best_pred.end()) break;
        cur = it->second;
    }
    std::reverse(cp.layers.begin(), cp.layers.end());
    return cp;
}

PerfEstimate construct_sequential(const ModelGraph& model, BenchmarkGranularity g,
                                  const BenchmarkStore& store) {
    PerfEstimate est;
    est.model = model.name;
    est.granularity = g.value;
    est.mode = "sequential";

    // The model goes through the same decomposition as at suite build
    // time; each sequence is looked up by its signature.
    for (const auto& net : find_model_subgraphs(model, g)) {
        if (const TimingRecord* rec = store.find(net.signature)) {
            est.estimate_ns += rec->trimmed_mean_ns;
            est.covered_signatures += 1;
        } else {
            est.missing_signatures.push_back(net.signature.hash_hex());
        }
    }
    return est;
}

PerfEstimate construct_parallel(const ModelGraph& model, const BenchmarkStore& store) {
    if (store.granularity != 1)
        throw GranularityError(
            "parallel construction requires a layer-granularity (G=1) store, got G=" +
            std::to_string(store.granularity));

    PerfEstimate est;
    est.model = model.name;
    est.granularity = 1;
    est.mode = "parallel";

    std::map<std::string, double> latency;
    for (const auto& net : find_model_subgraphs(model, BenchmarkGranularity(1))) {
        // G=1 networks hold exactly one layer
        const std::string& id = net.graph.layers.front().id;
        if (const TimingRecord* rec = store.find(net.signature)) {
            latency[id] = rec->trimmed_mean_ns;
            est.covered_signatures += 1;
        } else {
            est.missing_signatures.push_back(net.signature.hash_hex());
        }
    }
    if (!est.missing_signatures.empty()) {
        est.estimate_ns = std::numeric_limits<double>::quiet_NaN();
        return est;
    }
    est.estimate_ns = critical_path(model, latency).total_ns;
    return est;
}

}  // namespace seqbench
