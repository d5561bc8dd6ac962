#pragma once

// Shared fixtures for the test suites: corpus loading and small inline
// model builders.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "seqbench/ir.hpp"

namespace seqbench::testing {

inline std::vector<ModelGraph> load_corpus_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<ModelGraph> models;
    for (const auto& f : files) {
        ModelGraph m = load_model(f.string());
        infer_shapes(m);
        models.push_back(std::move(m));
    }
    return models;
}

inline std::vector<ModelGraph> bundled_corpus() {
    return load_corpus_dir(SEQBENCH_CORPUS_DIR);
}

inline ModelGraph corpus_model(const std::string& name) {
    ModelGraph m = load_model(std::string(SEQBENCH_CORPUS_DIR) + "/" + name + ".json");
    infer_shapes(m);
    return m;
}

// Builders for hand-made graphs.

inline LayerSpec make_layer(std::string id, OpType op,
                            std::map<std::string, AttrValue> attrs,
                            std::vector<std::string> inputs) {
    LayerSpec l;
    l.id = std::move(id);
    l.op = op;
    l.attrs = std::move(attrs);
    l.inputs = std::move(inputs);
    return l;
}

inline LayerSpec conv(std::string id, std::string in, int64_t ch, int64_t k = 3,
                      int64_t s = 1, int64_t p = 1) {
    return make_layer(std::move(id), OpType::Convolution,
                      {{"channels", ch},
                       {"kernel", std::vector<int64_t>{k, k}},
                       {"stride", std::vector<int64_t>{s, s}},
                       {"pad", std::vector<int64_t>{p, p}}},
                      {std::move(in)});
}

inline LayerSpec relu(std::string id, std::string in) {
    return make_layer(std::move(id), OpType::Activation, {{"kind", std::string("relu")}},
                      {std::move(in)});
}

inline ModelGraph make_model(std::string name,
                             std::vector<std::pair<std::string, TensorShape>> inputs,
                             std::vector<LayerSpec> layers, bool infer = true) {
    ModelGraph m;
    m.name = std::move(name);
    m.external_inputs = std::move(inputs);
    m.layers = std::move(layers);
    if (infer) infer_shapes(m);
    return m;
}

// Deterministic RNG for property tests.
struct TestRng {
    uint64_t state;
    explicit TestRng(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    int64_t range(int64_t lo, int64_t hi) {  // inclusive
        return lo + static_cast<int64_t>(next() % static_cast<uint64_t>(hi - lo + 1));
    }
    double unit() { return static_cast<double>(next() >> 11) * (2.0 / 9007199254740992.0) - 1.0; }
};

}  // namespace seqbench::testing
