#include "seqbench/suite.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace seqbench {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const BenchmarkSuite::Entry* BenchmarkSuite::find(const SequenceSignature& sig) const {
    for (const auto& e : entries)
        if (e.representative.signature == sig) return &e;
    return nullptr;
}

int BenchmarkSuite::total_networks() const {
    int n = 0;
    for (const auto& e : entries) n += e.occurrences;
    return n;
}

BenchmarkSuite build_suite(const std::vector<ModelGraph>& models,
                           BenchmarkGranularity g) {
    BenchmarkSuite suite;
    suite.granularity = g.value;
    std::unordered_map<std::string, size_t> index;  // signature bytes -> entry
    for (const auto& model : models) {
        for (auto& net : find_model_subgraphs(model, g)) {
            auto it = index.find(net.signature.bytes);
            if (it == index.end()) {
                index.emplace(net.signature.bytes, suite.entries.size());
                BenchmarkSuite::Entry e;
                e.representative = std::move(net);
                e.occurrences = 1;
                e.models.push_back(model.name);
                suite.entries.push_back(std::move(e));
            } else {
                auto& e = suite.entries[it->second];
                e.occurrences += 1;
                if (std::find(e.models.begin(), e.models.end(), model.name) ==
                    e.models.end())
                    e.models.push_back(model.name);
            }
        }
    }
    return suite;
}

namespace {

std::set<std::string> signature_set(const ModelGraph& m) {
    std::set<std::string> s;
    for (const auto& l : m.layers) s.insert(layer_signature(l).bytes);
    return s;
}

}  // namespace

double jaccard_similarity(const ModelGraph& m1, const ModelGraph& m2) {
    auto s1 = signature_set(m1);
    auto s2 = signature_set(m2);
    size_t inter = 0;
    for (const auto& x : s1) inter += s2.count(x);
    size_t uni = s1.size() + s2.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

CorpusStats corpus_stats(const std::vector<ModelGraph>& models) {
    CorpusStats stats;
    std::set<std::string> corpus_sigs;
    for (const auto& m : models) {
        std::unordered_map<std::string, int> counts;
        std::unordered_map<std::string, OpType> op_of;
        for (const auto& l : m.layers) {
            auto sig = layer_signature(l).bytes;
            counts[sig] += 1;
            op_of[sig] = l.op;
            corpus_sigs.insert(sig);
        }
        CorpusStats::PerModel pm;
        pm.name = m.name;
        pm.total_layers = static_cast<int>(m.layers.size());
        pm.unique_layers = static_cast<int>(counts.size());
        pm.unique_fraction =
            static_cast<double>(pm.unique_layers) / pm.total_layers;
        stats.per_model.push_back(pm);
        stats.corpus_total_layers += pm.total_layers;
        for (const auto& [sig, cnt] : counts)
            if (cnt >= 2) stats.repeated_by_type[op_name(op_of.at(sig))] += cnt;
    }
    stats.corpus_unique_layers = static_cast<int>(corpus_sigs.size());

    const size_t n = models.size();
    stats.jaccard.assign(n, std::vector<double>(n, 1.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            stats.jaccard[i][j] = stats.jaccard[j][i] =
                jaccard_similarity(models[i], models[j]);
    return stats;
}

void export_suite(const BenchmarkSuite& suite, const std::string& out_dir,
                  bool write_provenance) {
    fs::create_directories(fs::path(out_dir) / "benchmarks");

    json manifest;
    manifest["granularity"] = suite.granularity;
    manifest["total_networks"] = suite.total_networks();
    json entries = json::array();
    for (const auto& e : suite.entries) {
        std::string hash = e.representative.signature.hash_hex();
        std::string filename = hash + ".json";

        ModelGraph exported = e.representative.graph;
        exported.name = hash;  // source topology stays out of the export
        std::ofstream f(fs::path(out_dir) / "benchmarks" / filename);
        f << serialize_model(exported);

        json je;
        je["signature"] = hash;
        je["layer_count"] = e.representative.layer_count();
        je["occurrences"] = e.occurrences;
        je["file"] = "benchmarks/" + filename;
        entries.push_back(je);
    }
    manifest["entries"] = entries;
    std::ofstream mf(fs::path(out_dir) / "suite-manifest.json");
    mf << manifest.dump(2) << "\n";

    if (write_provenance) {
        json prov;
        for (const auto& e : suite.entries)
            prov[e.representative.signature.hash_hex()] = e.models;
        std::ofstream pf(fs::path(out_dir) / "provenance.json");
        pf << prov.dump(2) << "\n";
    }
}

}  // namespace seqbench
