#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "helpers.hpp"
#include "seqbench/runner.hpp"

using namespace seqbench;
using namespace seqbench::testing;

namespace {

// ---------------------------------------------------------------------------
// Independent kernel oracles. These deliberately share no code with the
// executor: convolution materializes a padded buffer first, dense runs
// its loops feature-major, pooling walks windows on the padded copy.

Tensor pad_input(const Tensor& x, int64_t ph, int64_t pw) {
    const auto& d = x.shape.dims;
    Tensor p = Tensor::zeros({{d[0], d[1], d[2] + 2 * ph, d[3] + 2 * pw}});
    for (int64_t n = 0; n < d[0]; ++n)
        for (int64_t c = 0; c < d[1]; ++c)
            for (int64_t h = 0; h < d[2]; ++h)
                for (int64_t w = 0; w < d[3]; ++w)
                    p.at({n, c, h + ph, w + pw}) = x.at({n, c, h, w});
    return p;
}

Tensor conv_oracle(const Tensor& x, const std::vector<double>& kernel, int64_t oc_count,
                   int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph,
                   int64_t pw, int64_t dh, int64_t dw) {
    Tensor p = pad_input(x, ph, pw);
    const int64_t N = p.shape.dims[0], C = p.shape.dims[1];
    const int64_t H = p.shape.dims[2], W = p.shape.dims[3];
    const int64_t oh_count = (H - (dh * (kh - 1) + 1)) / sh + 1;
    const int64_t ow_count = (W - (dw * (kw - 1) + 1)) / sw + 1;
    Tensor y = Tensor::zeros({{N, oc_count, oh_count, ow_count}});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t oc = 0; oc < oc_count; ++oc)
            for (int64_t oh = 0; oh < oh_count; ++oh)
                for (int64_t ow = 0; ow < ow_count; ++ow) {
                    double acc = 0;
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < kh; ++i)
                            for (int64_t j = 0; j < kw; ++j)
                                acc += p.at({n, c, oh * sh + i * dh, ow * sw + j * dw}) *
                                       kernel[((oc * C + c) * kh + i) * kw + j];
                    y.at({n, oc, oh, ow}) = acc;
                }
    return y;
}

Tensor pool_oracle(const Tensor& x, bool is_max, int64_t kh, int64_t kw, int64_t sh,
                   int64_t sw, int64_t ph, int64_t pw) {
    // max uses -inf padding, avg uses zero padding over the full window
    Tensor p = pad_input(x, ph, pw);
    if (is_max && (ph > 0 || pw > 0)) {
        const auto& d = x.shape.dims;
        Tensor q = p;
        for (double& v : q.data) v = -std::numeric_limits<double>::infinity();
        for (int64_t n = 0; n < d[0]; ++n)
            for (int64_t c = 0; c < d[1]; ++c)
                for (int64_t h = 0; h < d[2]; ++h)
                    for (int64_t w = 0; w < d[3]; ++w)
                        q.at({n, c, h + ph, w + pw}) = x.at({n, c, h, w});
        p = q;
    }
    const int64_t N = p.shape.dims[0], C = p.shape.dims[1];
    const int64_t H = p.shape.dims[2], W = p.shape.dims[3];
    const int64_t oh_count = (H - kh) / sh + 1;
    const int64_t ow_count = (W - kw) / sw + 1;
    Tensor y = Tensor::zeros({{N, C, oh_count, ow_count}});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t oh = 0; oh < oh_count; ++oh)
                for (int64_t ow = 0; ow < ow_count; ++ow) {
                    double acc = is_max ? -std::numeric_limits<double>::infinity() : 0;
                    for (int64_t i = 0; i < kh; ++i)
                        for (int64_t j = 0; j < kw; ++j) {
                            double v = p.at({n, c, oh * sh + i, ow * sw + j});
                            acc = is_max ? std::max(acc, v) : acc + v;
                        }
                    y.at({n, c, oh, ow}) = is_max ? acc : acc / (kh * kw);
                }
    return y;
}

Tensor dense_oracle(const Tensor& x, const std::vector<double>& weight, int64_t units) {
    const int64_t N = x.shape.dims[0];
    const int64_t F = x.shape.elements() / N;
    Tensor y = Tensor::zeros({{N, units}});
    for (int64_t f = 0; f < F; ++f)  // feature-major accumulation
        for (int64_t n = 0; n < N; ++n)
            for (int64_t u = 0; u < units; ++u)
                y.data[n * units + u] += weight[u * F + f] * x.data[n * F + f];
    return y;
}

LayerSpec single_inferred(LayerSpec l, const TensorShape& in) {
    ModelGraph m;
    m.name = "t";
    m.external_inputs = {{"x", in}};
    l.inputs = {"x"};
    m.layers = {std::move(l)};
    infer_shapes(m);
    return m.layers[0];
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape == b.shape);
    double m = 0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace

TEST_CASE("synth_input: deterministic, sized, digest-stable") {
    Tensor a = synth_input({{1}}, 0);
    Tensor b = synth_input({{1}}, 0);
    REQUIRE(a.data.size() == 1);
    CHECK(a.data[0] == b.data[0]);

    Tensor t = synth_input({{1, 3, 4, 4}}, 42);
    CHECK(t.data.size() == 48);
    for (double v : t.data) {
        CHECK(v >= -1.0);
        CHECK(v < 1.0);
    }
    // frozen digest of the generator stream: any platform must reproduce it
    std::string bytes(reinterpret_cast<const char*>(t.data.data()),
                      t.data.size() * sizeof(double));
    CHECK(hex64(fnv1a64(bytes)) == "f9ffb6f2fa52e5f6");
}

TEST_CASE("execute_layer: closed-form cases") {
    SUBCASE("relu") {
        LayerSpec l = single_inferred(
            make_layer("r", OpType::Activation, {{"kind", std::string("relu")}}, {}),
            {{1, 3}});
        Tensor x{{{1, 3}}, {-1, 0, 2}};
        Tensor y = execute_layer(l, {x}, LayerWeights{});
        CHECK(y.data == std::vector<double>{0, 0, 2});
    }
    SUBCASE("elementwise add of a tensor and its negation is zero") {
        ModelGraph m;
        m.name = "t";
        m.external_inputs = {{"a", {{1, 2, 3, 3}}}, {"b", {{1, 2, 3, 3}}}};
        m.layers = {make_layer("add", OpType::Elementwise, {{"op", std::string("add")}},
                               {"a", "b"})};
        infer_shapes(m);
        Tensor x = synth_input({{1, 2, 3, 3}}, 7);
        Tensor neg = x;
        for (double& v : neg.data) v = -v;
        Tensor y = execute_layer(m.layers[0], {x, neg}, LayerWeights{});
        for (double v : y.data) CHECK(v == 0.0);
    }
    SUBCASE("1x1 convolution with identity kernel is the identity") {
        LayerSpec l = single_inferred(
            make_layer("c", OpType::Convolution,
                       {{"channels", int64_t{1}},
                        {"kernel", std::vector<int64_t>{1, 1}}},
                       {}),
            {{1, 1, 5, 5}});
        Tensor x = synth_input({{1, 1, 5, 5}}, 3);
        LayerWeights identity;
        identity.primary = {1.0};
        Tensor y = execute_layer(l, {x}, identity);
        CHECK(y.data == x.data);
    }
    SUBCASE("3x3 convolution on 5x5 input matches the loop oracle") {
        LayerSpec l = single_inferred(
            make_layer("c", OpType::Convolution,
                       {{"channels", int64_t{2}},
                        {"kernel", std::vector<int64_t>{3, 3}}},
                       {}),
            {{1, 1, 5, 5}});
        Tensor x = synth_input({{1, 1, 5, 5}}, 11);
        LayerWeights w = synth_weights(l, 0);
        Tensor expect = conv_oracle(x, w.primary, 2, 3, 3, 1, 1, 0, 0, 1, 1);
        CHECK(max_abs_diff(execute_layer(l, {x}, w), expect) <= 1e-12);
    }
    SUBCASE("shape-mismatched input is rejected") {
        LayerSpec l = single_inferred(
            make_layer("r", OpType::Activation, {{"kind", std::string("relu")}}, {}),
            {{1, 3}});
        Tensor wrong{{{1, 4}}, {0, 0, 0, 0}};
        CHECK_THROWS_AS(execute_layer(l, {wrong}, LayerWeights{}), ShapeError);
    }
}

TEST_CASE("property: convolution agrees with the oracle on random shapes") {
    TestRng rng(1234);
    int cases = 0;
    while (cases < 100) {
        int64_t c = rng.range(1, 4), h = rng.range(3, 10), w = rng.range(3, 10);
        int64_t oc = rng.range(1, 4), k = rng.range(1, 3), s = rng.range(1, 2);
        int64_t p = rng.range(0, 1), d = rng.range(1, 2);
        if (h + 2 * p < d * (k - 1) + 1 || w + 2 * p < d * (k - 1) + 1) continue;
        LayerSpec l = single_inferred(
            make_layer("c", OpType::Convolution,
                       {{"channels", oc},
                        {"kernel", std::vector<int64_t>{k, k}},
                        {"stride", std::vector<int64_t>{s, s}},
                        {"pad", std::vector<int64_t>{p, p}},
                        {"dilation", std::vector<int64_t>{d, d}}},
                       {}),
            {{1, c, h, w}});
        Tensor x = synth_input({{1, c, h, w}}, rng.next());
        LayerWeights wt = synth_weights(l, rng.next());
        Tensor expect = conv_oracle(x, wt.primary, oc, k, k, s, s, p, p, d, d);
        CHECK(max_abs_diff(execute_layer(l, {x}, wt), expect) <= 1e-9);
        ++cases;
    }
}

TEST_CASE("property: pooling agrees with the oracle on random shapes") {
    TestRng rng(99);
    int cases = 0;
    while (cases < 100) {
        int64_t c = rng.range(1, 4), h = rng.range(3, 10), w = rng.range(3, 10);
        int64_t k = rng.range(1, 3), s = rng.range(1, 2), p = rng.range(0, 1);
        bool is_max = rng.range(0, 1) == 1;
        if (p >= k) continue;  // window must overlap the input
        if (h + 2 * p < k || w + 2 * p < k) continue;
        LayerSpec l = single_inferred(
            make_layer("p", OpType::Pooling,
                       {{"mode", std::string(is_max ? "max" : "avg")},
                        {"kernel", std::vector<int64_t>{k, k}},
                        {"stride", std::vector<int64_t>{s, s}},
                        {"pad", std::vector<int64_t>{p, p}}},
                       {}),
            {{1, c, h, w}});
        Tensor x = synth_input({{1, c, h, w}}, rng.next());
        Tensor expect = pool_oracle(x, is_max, k, k, s, s, p, p);
        CHECK(max_abs_diff(execute_layer(l, {x}, LayerWeights{}), expect) <= 1e-9);
        ++cases;
    }
}

TEST_CASE("property: dense agrees with the oracle on random shapes") {
    TestRng rng(7);
    for (int i = 0; i < 100; ++i) {
        int64_t f = rng.range(1, 30), u = rng.range(1, 20);
        LayerSpec l = single_inferred(
            make_layer("d", OpType::Dense, {{"units", u}}, {}), {{1, f}});
        Tensor x = synth_input({{1, f}}, rng.next());
        LayerWeights wt = synth_weights(l, rng.next());
        Tensor expect = dense_oracle(x, wt.primary, u);
        CHECK(max_abs_diff(execute_layer(l, {x}, wt), expect) <= 1e-9);
    }
}

TEST_CASE("execute_network: composition laws") {
    SUBCASE("single-layer network equals execute_layer on its synthetic input") {
        ModelGraph m = corpus_model("chain3");
        auto nets = find_model_subgraphs(m, BenchmarkGranularity(1));
        const uint64_t seed = 5;
        Tensor via_net = execute_network(nets[0], seed);
        Tensor in = synth_network_inputs(nets[0], seed)[0];
        Tensor direct = execute_layer(nets[0].graph.layers[0], {in}, seed);
        CHECK(via_net.data == direct.data);
    }
    SUBCASE("conv->relu equals manual composition") {
        ModelGraph m = make_model("t", {{"x", {{1, 3, 6, 6}}}},
                                  {conv("c", "x", 4), relu("r", "c")});
        auto nets = find_model_subgraphs(m, BenchmarkGranularity(2));
        REQUIRE(nets.size() == 1);
        const uint64_t seed = 21;
        Tensor in = synth_network_inputs(nets[0], seed)[0];
        Tensor mid = execute_layer(nets[0].graph.layers[0], {in}, seed);
        Tensor expect = execute_layer(nets[0].graph.layers[1], {mid}, seed);
        CHECK(execute_network(nets[0], seed).data == expect.data);
    }
    SUBCASE("whole VGG16-style network equals layer-by-layer execution") {
        ModelGraph m = corpus_model("vgg16_style");
        RunnableNetwork whole = whole_model_network(m);
        const uint64_t seed = 9;
        Tensor out = execute_network(whole, seed);

        std::map<std::string, Tensor> vals;
        vals.emplace("data", synth_network_inputs(whole, seed)[0]);
        for (const auto& id : topological_order(m)) {
            const LayerSpec& l = *m.find_layer(id);
            std::vector<Tensor> ins;
            for (const auto& in : l.inputs) ins.push_back(vals.at(in));
            vals.emplace(id, execute_layer(l, ins, seed));
        }
        CHECK(out.data == vals.at(m.output_layer()).data);
    }
}

TEST_CASE("execute_network: bitwise deterministic and strictly sequential") {
    ModelGraph m = corpus_model("inception_style");
    RunnableNetwork net = whole_model_network(m);
    std::vector<std::string> trace;
    Tensor a = execute_network(net, 17, &trace);
    Tensor b = execute_network(net, 17);
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
    // one dispatch per layer, in exactly the stored topological order
    std::vector<std::string> expected;
    for (const auto& l : net.graph.layers) expected.push_back(l.id);
    CHECK(trace == expected);
}

TEST_CASE("trimmed_mean") {
    std::vector<double> ms;
    for (int i = 1; i <= 10; ++i) ms.push_back(i * 1e6);  // 1..10 ms in ns
    CHECK(trimmed_mean(ms, 0.2) == doctest::Approx(5.5e6));  // mean of 3..8

    CHECK(trimmed_mean({42.0}, 0.2) == 42.0);  // floor(0.2*1)=0 discarded

    // sort/slice oracle on a scrambled copy: permutation invariance
    std::vector<double> scrambled = {7e6, 1e6, 9e6, 3e6, 10e6, 4e6, 2e6, 8e6, 5e6, 6e6};
    CHECK(trimmed_mean(scrambled, 0.2) == trimmed_mean(ms, 0.2));

    // trim 0 equals the plain mean
    double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / ms.size();
    CHECK(trimmed_mean(ms, 0.0) == doctest::Approx(mean));

    CHECK_THROWS_AS(trimmed_mean({}, 0.2), IrError);
    CHECK_THROWS_AS(trimmed_mean({1.0}, 0.5), IrError);
}

TEST_CASE("time_network: record invariants") {
    ModelGraph m = corpus_model("chain3");
    RunnableNetwork net = whole_model_network(m);
    TimingOptions opts;
    opts.runs = 10;
    TimingRecord rec = time_network(net, opts);
    CHECK(rec.run_count == 10);
    CHECK(rec.samples_ns.size() == 10);
    CHECK(rec.trimmed_mean_ns == trimmed_mean(rec.samples_ns, rec.trim));
    double lo = *std::min_element(rec.samples_ns.begin(), rec.samples_ns.end());
    double hi = *std::max_element(rec.samples_ns.begin(), rec.samples_ns.end());
    CHECK(rec.trimmed_mean_ns >= lo);
    CHECK(rec.trimmed_mean_ns <= hi);
}

TEST_CASE("time_network: sub-microsecond networks use the batched guard") {
    // a single tiny flatten is far below the 1us guard
    ModelGraph m = make_model("t", {{"x", {{1, 2, 2, 2}}}},
                              {make_layer("f", OpType::Flatten, {}, {"x"})});
    RunnableNetwork net = whole_model_network(m);
    TimingOptions opts;
    opts.runs = 3;
    TimingRecord rec = time_network(net, opts);
    CHECK(rec.batched);
}

TEST_CASE("run_suite: one record per signature, resume skips existing") {
    auto corpus = std::vector<ModelGraph>{corpus_model("chain3"),
                                          corpus_model("chain4")};
    auto suite = build_suite(corpus, BenchmarkGranularity(1));
    TimingOptions opts;
    opts.runs = 3;
    BenchmarkStore store = run_suite(suite, opts);
    CHECK(store.records.size() == suite.entries.size());
    CHECK(store.granularity == 1);

    // drop one record, resume: only that one is re-timed
    std::string dropped = store.records.begin()->first;
    BenchmarkStore partial = store;
    partial.records.erase(dropped);
    BenchmarkStore resumed = run_suite(suite, opts, &partial);
    CHECK(resumed.records.size() == store.records.size());
    for (const auto& [hash, rec] : partial.records)
        CHECK(resumed.records.at(hash).samples_ns == rec.samples_ns);  // carried over
    CHECK(resumed.records.count(dropped) == 1);
}

TEST_CASE("store and baselines round-trip through disk") {
    auto corpus = std::vector<ModelGraph>{corpus_model("chain3")};
    auto suite = build_suite(corpus, BenchmarkGranularity(2));
    TimingOptions opts;
    opts.runs = 3;
    BenchmarkStore store = run_suite(suite, opts);
    std::string path = (std::filesystem::temp_directory_path() / "sb_store.json").string();
    save_store(store, path);
    BenchmarkStore loaded = load_store(path);
    CHECK(loaded.granularity == store.granularity);
    REQUIRE(loaded.records.size() == store.records.size());
    for (const auto& [hash, rec] : store.records) {
        CHECK(loaded.records.at(hash).trimmed_mean_ns == rec.trimmed_mean_ns);
        CHECK(loaded.records.at(hash).samples_ns == rec.samples_ns);
    }

    BaselineMap bl{{"chain3", store.records.begin()->second}};
    std::string bpath = (std::filesystem::temp_directory_path() / "sb_bl.json").string();
    save_baselines(bl, bpath);
    CHECK(load_baselines(bpath).at("chain3").trimmed_mean_ns ==
          bl.at("chain3").trimmed_mean_ns);
    std::filesystem::remove(path);
    std::filesystem::remove(bpath);
}
