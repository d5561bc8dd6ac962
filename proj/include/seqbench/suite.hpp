#pragma once

// Deduplicated benchmark suite across a model corpus, plus the
// architecture statistics (unique-layer fractions, repeated-type
// distribution, Jaccard similarity).

#include <map>
#include <string>
#include <vector>

#include "seqbench/decompose.hpp"

namespace seqbench {

struct BenchmarkSuite {
    struct Entry {
        RunnableNetwork representative;  // first-encountered network wins
        int occurrences = 0;
        std::vector<std::string> models;  // contributing model names, deduped
    };

    int granularity = 1;
    std::vector<Entry> entries;  // insertion order = first encounter

    const Entry* find(const SequenceSignature& sig) const;
    int total_networks() const;  // sum of occurrence counts
};

BenchmarkSuite build_suite(const std::vector<ModelGraph>& models,
                           BenchmarkGranularity g);

// |L1 ∩ L2| / |L1 ∪ L2| over the models' distinct layer-signature sets.
double jaccard_similarity(const ModelGraph& m1, const ModelGraph& m2);

struct CorpusStats {
    struct PerModel {
        std::string name;
        int total_layers = 0;
        int unique_layers = 0;  // distinct layer signatures
        double unique_fraction = 0.0;
    };

    std::vector<PerModel> per_model;
    int corpus_total_layers = 0;
    int corpus_unique_layers = 0;  // distinct signatures across the corpus
    // Layers whose signature occurs >= 2 times within their model,
    // bucketed by op type and summed over the corpus.
    std::map<std::string, int> repeated_by_type;
    std::vector<std::vector<double>> jaccard;  // symmetric, unit diagonal
};

CorpusStats corpus_stats(const std::vector<ModelGraph>& models);

// Writes benchmarks/<hash>.json (networks renamed to their signature
// hash, so exports reveal no source topology) plus suite-manifest.json;
// contributing model names go only to the optional provenance file.
void export_suite(const BenchmarkSuite& suite, const std::string& out_dir,
                  bool write_provenance = false);

}  // namespace seqbench
