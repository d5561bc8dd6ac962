#include "seqbench/report.hpp"

#include <cmath>
#include <cstdio>

namespace seqbench {

double geometric_mean(const std::vector<double>& ratios) {
    if (ratios.empty()) throw IrError("geometric_mean: empty input");
    double log_sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0)) throw IrError("geometric_mean: ratios must be positive");
        log_sum += std::log(r);
    }
    return std::exp(log_sum / static_cast<double>(ratios.size()));
}

double speedup(const std::vector<ModelGraph>& models, const BenchmarkStore& store,
               const BaselineMap& baselines) {
    if (store.records.empty()) throw IrError("no benchmark records");
    double total_e2e = 0.0;
    for (const auto& m : models) {
        auto it = baselines.find(m.name);
        if (it == baselines.end())
            throw IrError("speedup: no end-to-end baseline for model " + m.name);
        total_e2e += it->second.trimmed_mean_ns;
    }
    return total_e2e / store.total_benchmark_ns();
}

EvaluationReport build_report(const std::vector<ModelGraph>& models,
                              BenchmarkGranularity g, const std::string& mode,
                              const BenchmarkStore& store,
                              const BaselineMap& baselines) {
    if (store.records.empty()) throw IrError("no benchmark records");

    EvaluationReport rep;
    rep.granularity = g.value;
    rep.mode = mode;
    rep.host = store.host;

    std::vector<double> ratios;
    for (const auto& m : models) {
        PerfEstimate est = mode == "parallel"
                               ? construct_parallel(m, store)
                               : construct_sequential(m, g, store);
        auto bit = baselines.find(m.name);
        if (bit == baselines.end())
            throw IrError("report: no end-to-end baseline for model " + m.name);

        EvaluationReport::Row row;
        row.model = m.name;
        row.end_to_end_ns = bit->second.trimmed_mean_ns;
        row.constructed_ns = est.estimate_ns;
        row.complete = est.complete();
        if (row.complete) {
            row.normalized = row.constructed_ns / row.end_to_end_ns;
            ratios.push_back(row.normalized);
        }
        rep.total_end_to_end_ns += row.end_to_end_ns;
        rep.rows.push_back(std::move(row));
    }
    if (!ratios.empty()) rep.geomean_normalized = geometric_mean(ratios);
    rep.total_benchmark_ns = store.total_benchmark_ns();
    rep.speedup_ratio = rep.total_end_to_end_ns / rep.total_benchmark_ns;
    return rep;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string report_csv(const EvaluationReport& report) {
    std::string out =
        "record,model,granularity,mode,constructed_ns,end_to_end_ns,normalized,complete\n";
    for (const auto& r : report.rows) {
        out += "model," + r.model + "," + std::to_string(report.granularity) + "," +
               report.mode + "," + fmt(r.constructed_ns) + "," +
               fmt(r.end_to_end_ns) + "," + (r.complete ? fmt(r.normalized) : "") +
               "," + (r.complete ? "yes" : "no") + "\n";
    }
    out += "geomean,,," + report.mode + ",,," + fmt(report.geomean_normalized) + ",\n";
    out += "total_end_to_end,,,," + fmt(report.total_end_to_end_ns) + ",,,\n";
    out += "total_benchmark,,,," + fmt(report.total_benchmark_ns) + ",,,\n";
    out += "speedup,,,,,," + fmt(report.speedup_ratio) + ",\n";
    return out;
}

std::string jaccard_csv(const std::vector<ModelGraph>& models,
                        const std::vector<std::vector<double>>& matrix) {
    std::string out = "model";
    for (const auto& m : models) out += "," + m.name;
    out += "\n";
    for (size_t i = 0; i < models.size(); ++i) {
        out += models[i].name;
        for (size_t j = 0; j < models.size(); ++j) out += "," + fmt(matrix[i][j]);
        out += "\n";
    }
    return out;
}

std::string stats_csv(const CorpusStats& stats) {
    std::string out = "record,name,total_layers,unique_layers,unique_fraction,repeat_count\n";
    for (const auto& pm : stats.per_model) {
        out += "model," + pm.name + "," + std::to_string(pm.total_layers) + "," +
               std::to_string(pm.unique_layers) + "," + fmt(pm.unique_fraction) +
               ",\n";
    }
    out += "corpus,," + std::to_string(stats.corpus_total_layers) + "," +
           std::to_string(stats.corpus_unique_layers) + "," +
           fmt(static_cast<double>(stats.corpus_unique_layers) /
               static_cast<double>(stats.corpus_total_layers)) +
           ",\n";
    for (const auto& [op, count] : stats.repeated_by_type)
        out += "repeated_type," + std::string(op) + ",,,," + std::to_string(count) + "\n";
    return out;
}

}  // namespace seqbench
