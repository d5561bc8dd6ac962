#include "seqbench/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#if defined(__SSE2__)
#include <immintrin.h>
#endif

#include <unistd.h>

namespace seqbench {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Tensors and synthetic data

Tensor Tensor::zeros(const TensorShape& shape) {
    Tensor t;
    t.shape = shape;
    t.data.assign(static_cast<size_t>(shape.elements()), 0.0);
    return t;
}

double& Tensor::at(std::initializer_list<int64_t> idx) {
    int64_t off = 0;
    size_t d = 0;
    for (int64_t i : idx) off = off * shape.dims[d++] + i;
    return data[static_cast<size_t>(off)];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
    return const_cast<Tensor*>(this)->at(idx);
}

uint64_t SynthStream::next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double SynthStream::next_unit() {
    // 53 mantissa bits mapped to [-1, 1)
    return static_cast<double>(next_u64() >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

Tensor synth_input(const TensorShape& shape, uint64_t seed) {
    Tensor t = Tensor::zeros(shape);
    SynthStream rng(seed);
    for (double& v : t.data) v = rng.next_unit();
    return t;
}

LayerWeights synth_weights(const LayerSpec& layer, uint64_t weight_seed) {
    uint64_t seed =
        fnv1a64(layer_signature(layer).bytes) ^ (weight_seed * 0x9e3779b97f4a7c15ull);
    SynthStream rng(seed);
    LayerWeights w;
    switch (layer.op) {
        case OpType::Convolution: {
            const auto& in = layer.input_shapes.at(0);
            auto kernel = std::get<std::vector<int64_t>>(layer.attrs.at("kernel"));
            int64_t out_c = std::get<int64_t>(layer.attrs.at("channels"));
            int64_t fan_in = in.dims[1] * kernel[0] * kernel[1];
            double scale = std::sqrt(3.0 / static_cast<double>(fan_in));
            w.primary.resize(static_cast<size_t>(out_c * fan_in));
            for (double& v : w.primary) v = scale * rng.next_unit();
            break;
        }
        case OpType::Dense: {
            const auto& in = layer.input_shapes.at(0);
            int64_t features = in.elements() / in.dims[0];
            int64_t units = std::get<int64_t>(layer.attrs.at("units"));
            double scale = std::sqrt(3.0 / static_cast<double>(features));
            w.primary.resize(static_cast<size_t>(units * features));
            for (double& v : w.primary) v = scale * rng.next_unit();
            break;
        }
        case OpType::BatchNorm: {
            int64_t channels = layer.input_shapes.at(0).dims[1];
            w.primary.resize(static_cast<size_t>(channels));
            w.secondary.resize(static_cast<size_t>(channels));
            for (double& v : w.primary) v = 1.0 + 0.1 * rng.next_unit();
            for (double& v : w.secondary) v = 0.1 * rng.next_unit();
            break;
        }
        default:
            break;  // weight-free ops
    }
    return w;
}

// ---------------------------------------------------------------------------
// Kernels

namespace {

int64_t attr_i(const LayerSpec& l, const char* key) {
    return std::get<int64_t>(l.attrs.at(key));
}

std::vector<int64_t> attr_v(const LayerSpec& l, const char* key) {
    return std::get<std::vector<int64_t>>(l.attrs.at(key));
}

Tensor conv2d(const LayerSpec& l, const Tensor& x, const LayerWeights& w) {
    const auto& in = x.shape.dims;
    const auto& out_dims = l.output_shape.dims;
    auto kernel = attr_v(l, "kernel");
    auto stride = attr_v(l, "stride");
    auto pad = attr_v(l, "pad");
    auto dil = attr_v(l, "dilation");
    const int64_t N = in[0], C = in[1], H = in[2], W = in[3];
    const int64_t OC = out_dims[1], OH = out_dims[2], OW = out_dims[3];
    const int64_t KH = kernel[0], KW = kernel[1];

    Tensor y = Tensor::zeros(l.output_shape);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t oc = 0; oc < OC; ++oc)
            for (int64_t oh = 0; oh < OH; ++oh)
                for (int64_t ow = 0; ow < OW; ++ow) {
                    double acc = 0.0;
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t kh = 0; kh < KH; ++kh) {
                            int64_t ih = oh * stride[0] - pad[0] + kh * dil[0];
                            if (ih < 0 || ih >= H) continue;
                            for (int64_t kw = 0; kw < KW; ++kw) {
                                int64_t iw = ow * stride[1] - pad[1] + kw * dil[1];
                                if (iw < 0 || iw >= W) continue;
                                acc += x.data[((n * C + c) * H + ih) * W + iw] *
                                       w.primary[((oc * C + c) * KH + kh) * KW + kw];
                            }
                        }
                    y.data[((n * OC + oc) * OH + oh) * OW + ow] = acc;
                }
    return y;
}

Tensor pool2d(const LayerSpec& l, const Tensor& x) {
    const auto& in = x.shape.dims;
    const auto& out_dims = l.output_shape.dims;
    auto kernel = attr_v(l, "kernel");
    auto stride = attr_v(l, "stride");
    auto pad = attr_v(l, "pad");
    const bool is_max = std::get<std::string>(l.attrs.at("mode")) == "max";
    const int64_t N = in[0], C = in[1], H = in[2], W = in[3];
    const int64_t OH = out_dims[2], OW = out_dims[3];
    const double area = static_cast<double>(kernel[0] * kernel[1]);

    Tensor y = Tensor::zeros(l.output_shape);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t oh = 0; oh < OH; ++oh)
                for (int64_t ow = 0; ow < OW; ++ow) {
                    double best = -std::numeric_limits<double>::infinity();
                    double sum = 0.0;
                    for (int64_t kh = 0; kh < kernel[0]; ++kh) {
                        int64_t ih = oh * stride[0] - pad[0] + kh;
                        if (ih < 0 || ih >= H) continue;
                        for (int64_t kw = 0; kw < kernel[1]; ++kw) {
                            int64_t iw = ow * stride[1] - pad[1] + kw;
                            if (iw < 0 || iw >= W) continue;
                            double v = x.data[((n * C + c) * H + ih) * W + iw];
                            best = std::max(best, v);
                            sum += v;
                        }
                    }
                    // avg counts padded cells as zeros (divide by full area)
                    y.data[((n * C + c) * OH + oh) * OW + ow] =
                        is_max ? best : sum / area;
                }
    return y;
}

Tensor dense(const LayerSpec& l, const Tensor& x, const LayerWeights& w) {
    const int64_t N = x.shape.dims[0];
    const int64_t F = x.shape.elements() / N;
    const int64_t U = l.output_shape.dims[1];
    Tensor y = Tensor::zeros(l.output_shape);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t u = 0; u < U; ++u) {
            double acc = 0.0;
            for (int64_t f = 0; f < F; ++f)
                acc += w.primary[u * F + f] * x.data[n * F + f];
            y.data[n * U + u] = acc;
        }
    return y;
}

Tensor batchnorm(const LayerSpec& l, const Tensor& x, const LayerWeights& w) {
    Tensor y = Tensor::zeros(l.output_shape);
    const int64_t N = x.shape.dims[0];
    const int64_t C = x.shape.dims[1];
    const int64_t inner = x.shape.elements() / (N * C);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const double scale = w.primary[c], shift = w.secondary[c];
            const int64_t base = (n * C + c) * inner;
            for (int64_t i = 0; i < inner; ++i)
                y.data[base + i] = scale * x.data[base + i] + shift;
        }
    return y;
}

Tensor activation(const LayerSpec& l, const Tensor& x) {
    const std::string kind = std::get<std::string>(l.attrs.at("kind"));
    Tensor y = x;
    if (kind == "relu") {
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    } else if (kind == "sigmoid") {
        for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
    } else {
        for (double& v : y.data) v = std::tanh(v);
    }
    return y;
}

Tensor elementwise(const LayerSpec& l, const std::vector<Tensor>& inputs) {
    const bool is_add = std::get<std::string>(l.attrs.at("op")) == "add";
    Tensor y = inputs[0];
    for (size_t i = 1; i < inputs.size(); ++i) {
        const auto& d = inputs[i].data;
        if (is_add)
            for (size_t j = 0; j < y.data.size(); ++j) y.data[j] += d[j];
        else
            for (size_t j = 0; j < y.data.size(); ++j) y.data[j] *= d[j];
    }
    return y;
}

Tensor concat(const LayerSpec& l, const std::vector<Tensor>& inputs) {
    const int64_t axis = attr_i(l, "axis");
    Tensor y = Tensor::zeros(l.output_shape);
    const auto& od = l.output_shape.dims;
    int64_t outer = 1, inner = 1;
    for (int64_t d = 0; d < axis; ++d) outer *= od[d];
    for (int64_t d = axis + 1; d < l.output_shape.rank(); ++d) inner *= od[d];

    int64_t axis_off = 0;
    for (const auto& in : inputs) {
        const int64_t a = in.shape.dims[axis];
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < a; ++i)
                std::copy_n(in.data.begin() + (o * a + i) * inner, inner,
                            y.data.begin() + (o * od[axis] + axis_off + i) * inner);
        axis_off += a;
    }
    return y;
}

Tensor softmax(const Tensor& x) {
    Tensor y = x;
    const int64_t last = x.shape.dims.back();
    const int64_t rows = x.shape.elements() / last;
    for (int64_t r = 0; r < rows; ++r) {
        double* row = y.data.data() + r * last;
        double mx = *std::max_element(row, row + last);
        double sum = 0.0;
        for (int64_t i = 0; i < last; ++i) {
            row[i] = std::exp(row[i] - mx);
            sum += row[i];
        }
        for (int64_t i = 0; i < last; ++i) row[i] /= sum;
    }
    return y;
}

Tensor padding(const LayerSpec& l, const Tensor& x) {
    auto pad = attr_v(l, "pad");
    double value = 0.0;
    if (auto it = l.attrs.find("value"); it != l.attrs.end())
        value = static_cast<double>(std::get<int64_t>(it->second));
    const auto& in = x.shape.dims;
    const int64_t N = in[0], C = in[1], H = in[2], W = in[3];
    Tensor y = Tensor::zeros(l.output_shape);
    if (value != 0.0) std::fill(y.data.begin(), y.data.end(), value);
    const int64_t OH = l.output_shape.dims[2], OW = l.output_shape.dims[3];
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t h = 0; h < H; ++h)
                std::copy_n(x.data.begin() + ((n * C + c) * H + h) * W, W,
                            y.data.begin() +
                                ((n * C + c) * OH + h + pad[0]) * OW + pad[1]);
    return y;
}

void check_inputs(const LayerSpec& layer, const std::vector<Tensor>& inputs) {
    if (inputs.size() != layer.input_shapes.size())
        throw ShapeError("layer " + layer.id + ": wrong input count");
    for (size_t i = 0; i < inputs.size(); ++i)
        if (!(inputs[i].shape == layer.input_shapes[i]))
            throw ShapeError("layer " + layer.id + ": input " + std::to_string(i) +
                             " shape " + inputs[i].shape.str() + " does not match " +
                             layer.input_shapes[i].str());
}

// Denormal operands would make latencies depend on value magnitudes;
// flush them to zero for the whole process.
void enable_ftz() {
#if defined(__SSE2__)
    static bool done = [] {
        _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
        _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
        return true;
    }();
    (void)done;
#endif
}

}  // namespace

Tensor execute_layer(const LayerSpec& layer, const std::vector<Tensor>& inputs,
                     const LayerWeights& weights) {
    if (!layer.shapes_inferred())
        throw IrError("layer " + layer.id + ": execute requires inferred shapes");
    check_inputs(layer, inputs);
    enable_ftz();
    switch (layer.op) {
        case OpType::Convolution: return conv2d(layer, inputs[0], weights);
        case OpType::Dense: return dense(layer, inputs[0], weights);
        case OpType::BatchNorm: return batchnorm(layer, inputs[0], weights);
        case OpType::Pooling: return pool2d(layer, inputs[0]);
        case OpType::Activation: return activation(layer, inputs[0]);
        case OpType::Elementwise: return elementwise(layer, inputs);
        case OpType::Concat: return concat(layer, inputs);
        case OpType::Softmax: return softmax(inputs[0]);
        case OpType::Flatten: {
            Tensor y = inputs[0];
            y.shape = layer.output_shape;
            return y;
        }
        case OpType::Padding: return padding(layer, inputs[0]);
    }
    throw IrError("layer " + layer.id + ": unknown op type");
}

Tensor execute_layer(const LayerSpec& layer, const std::vector<Tensor>& inputs,
                     uint64_t weight_seed) {
    return execute_layer(layer, inputs, synth_weights(layer, weight_seed));
}

std::vector<Tensor> synth_network_inputs(const RunnableNetwork& network, uint64_t seed) {
    std::vector<Tensor> inputs;
    uint64_t slot = 0;
    for (const auto& [name, shape] : network.graph.external_inputs)
        inputs.push_back(synth_input(shape, seed ^ (0xa0761d6478bd642full * ++slot)));
    return inputs;
}

Tensor execute_with_inputs(const RunnableNetwork& network,
                           const std::vector<Tensor>& external_inputs,
                           uint64_t weight_seed, std::vector<std::string>* trace) {
    if (external_inputs.size() != network.graph.external_inputs.size())
        throw ShapeError("execute: wrong number of external inputs");
    std::unordered_map<std::string, const Tensor*> values;
    std::vector<Tensor> produced;
    produced.reserve(network.graph.layers.size());
    for (size_t i = 0; i < external_inputs.size(); ++i)
        values[network.graph.external_inputs[i].first] = &external_inputs[i];

    // Single worker, strict list order: layers are stored in topological
    // order and never dispatched concurrently.
    for (const auto& layer : network.graph.layers) {
        std::vector<Tensor> inputs;
        inputs.reserve(layer.inputs.size());
        for (const auto& in : layer.inputs) inputs.push_back(*values.at(in));
        if (trace) trace->push_back(layer.id);
        produced.push_back(execute_layer(layer, inputs, weight_seed));
        values[layer.id] = &produced.back();
    }
    if (produced.empty()) throw IrError("empty network");
    return *values.at(network.graph.output_layer());
}

Tensor execute_network(const RunnableNetwork& network, uint64_t seed,
                       std::vector<std::string>* trace) {
    return execute_with_inputs(network, synth_network_inputs(network, seed), seed, trace);
}

// ---------------------------------------------------------------------------
// Timing

double trimmed_mean(std::vector<double> samples, double trim) {
    if (samples.empty()) throw IrError("trimmed_mean: no samples");
    if (trim < 0.0 || trim >= 0.5) throw IrError("trimmed_mean: trim must be in [0, 0.5)");
    std::sort(samples.begin(), samples.end());
    const size_t drop = static_cast<size_t>(trim * static_cast<double>(samples.size()));
    const size_t kept = samples.size() - 2 * drop;
    double sum = std::accumulate(samples.begin() + drop, samples.end() - drop, 0.0);
    return sum / static_cast<double>(kept);
}

namespace {

// The executor is single-threaded, so on-CPU time equals inference
// latency while staying immune to preemption by other processes; wall
// clocks pick up scheduler noise that distorts the constructed/measured
// latency ratios.
double now_ns() {
#if defined(CLOCK_THREAD_CPUTIME_ID)
    timespec ts;
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) * 1e9 + static_cast<double>(ts.tv_nsec);
#else
    return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                   std::chrono::steady_clock::now().time_since_epoch())
                                   .count());
#endif
}

// Input synthesis stays outside the timed region: latency is the
// inference time, not data generation. One sample is the mean of a batch
// of back-to-back runs; batch > 1 keeps timer overhead negligible for
// fast networks.
double timed_batch_ns(const RunnableNetwork& network, const std::vector<Tensor>& inputs,
                      uint64_t seed, int batch) {
    double t0 = now_ns();
    for (int b = 0; b < batch; ++b) {
        Tensor out = execute_with_inputs(network, inputs, seed);
        // keep the result observable so the run is not elided
        volatile double sink = out.data.empty() ? 0.0 : out.data[0];
        (void)sink;
    }
    return (now_ns() - t0) / static_cast<double>(batch);
}

// Networks faster than this are batched until one sample spans it.
constexpr double kTargetSampleNs = 100000.0;
constexpr int kMaxBatch = 1000;

}  // namespace

std::map<std::string, TimingRecord> time_networks_interleaved(
    const std::vector<RunnableNetwork>& networks, const TimingOptions& opts) {
    if (opts.runs < 1) throw IrError("time_network: runs must be >= 1");

    struct Prepared {
        const RunnableNetwork* net;
        std::vector<Tensor> inputs;
        int batch = 1;
        TimingRecord rec;
    };

    std::vector<Prepared> prepared;
    std::map<std::string, size_t> index;
    for (const auto& net : networks) {
        const std::string hash = net.signature.hash_hex();
        if (index.count(hash)) continue;
        index[hash] = prepared.size();

        Prepared p;
        p.net = &net;
        p.inputs = synth_network_inputs(net, opts.seed);
        p.rec.signature_hash = hash;
        p.rec.layer_count = net.layer_count();
        p.rec.run_count = opts.runs;
        p.rec.trim = opts.trim;
        for (int i = 0; i < opts.warmup; ++i)
            execute_with_inputs(net, p.inputs, opts.seed);

        // Fast networks are timed in batches so timer granularity and
        // call overhead do not dominate.
        double probe = timed_batch_ns(net, p.inputs, opts.seed, 1);
        if (probe < kTargetSampleNs)
            p.batch = static_cast<int>(std::min<double>(
                kMaxBatch, std::ceil(kTargetSampleNs / std::max(probe, 100.0))));
        p.rec.batched = p.batch > 1;
        p.rec.samples_ns.reserve(static_cast<size_t>(opts.runs));
        prepared.push_back(std::move(p));
    }

    // One sample per network per round, strictly sequential.
    for (int i = 0; i < opts.runs; ++i)
        for (auto& p : prepared)
            p.rec.samples_ns.push_back(
                timed_batch_ns(*p.net, p.inputs, opts.seed, p.batch));

    std::map<std::string, TimingRecord> records;
    for (auto& p : prepared) {
        p.rec.trimmed_mean_ns = trimmed_mean(p.rec.samples_ns, opts.trim);
        records[p.rec.signature_hash] = std::move(p.rec);
    }
    return records;
}

TimingRecord time_network(const RunnableNetwork& network, const TimingOptions& opts) {
    auto records = time_networks_interleaved({network}, opts);
    return std::move(records.begin()->second);
}

const TimingRecord* BenchmarkStore::find(const SequenceSignature& sig) const {
    auto it = records.find(sig.hash_hex());
    return it == records.end() ? nullptr : &it->second;
}

double BenchmarkStore::total_benchmark_ns() const {
    double total = 0.0;
    for (const auto& [hash, rec] : records) total += rec.trimmed_mean_ns;
    return total;
}

namespace {

std::string host_label() {
    char buf[256] = {0};
    if (gethostname(buf, sizeof(buf) - 1) != 0) return "unknown";
    return buf;
}

std::string iso_timestamp() {
    std::time_t t = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace

BenchmarkStore run_suite(const BenchmarkSuite& suite, const TimingOptions& opts,
                         const BenchmarkStore* previous) {
    BenchmarkStore store;
    store.host = host_label();
    store.timestamp = iso_timestamp();
    store.granularity = suite.granularity;
    std::vector<RunnableNetwork> to_time;
    for (const auto& entry : suite.entries) {
        const std::string hash = entry.representative.signature.hash_hex();
        if (previous) {
            auto it = previous->records.find(hash);
            if (it != previous->records.end()) {
                store.records[hash] = it->second;
                continue;
            }
        }
        to_time.push_back(entry.representative);
    }
    for (auto& [hash, rec] : time_networks_interleaved(to_time, opts))
        store.records[hash] = std::move(rec);
    return store;
}

TimingRecord time_model_end_to_end(const ModelGraph& model, const TimingOptions& opts) {
    return time_network(whole_model_network(model), opts);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json record_to_json(const TimingRecord& rec) {
    json j;
    j["signature"] = rec.signature_hash;
    j["layer_count"] = rec.layer_count;
    j["run_count"] = rec.run_count;
    j["trim"] = rec.trim;
    j["batched"] = rec.batched;
    j["trimmed_mean_ns"] = rec.trimmed_mean_ns;
    j["samples_ns"] = rec.samples_ns;
    return j;
}

TimingRecord record_from_json(const json& j) {
    TimingRecord rec;
    rec.signature_hash = j.at("signature").get<std::string>();
    rec.layer_count = j.at("layer_count").get<int>();
    rec.run_count = j.at("run_count").get<int>();
    rec.trim = j.at("trim").get<double>();
    rec.batched = j.at("batched").get<bool>();
    rec.trimmed_mean_ns = j.at("trimmed_mean_ns").get<double>();
    rec.samples_ns = j.at("samples_ns").get<std::vector<double>>();
    return rec;
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IrError("cannot open file: " + path);
    json j;
    f >> j;
    return j;
}

}  // namespace

void save_store(const BenchmarkStore& store, const std::string& path) {
    json j;
    j["host"] = store.host;
    j["timestamp"] = store.timestamp;
    j["granularity"] = store.granularity;
    json records = json::object();
    for (const auto& [hash, rec] : store.records) records[hash] = record_to_json(rec);
    j["records"] = records;
    std::ofstream f(path);
    if (!f) throw IrError("cannot write store: " + path);
    f << j.dump(2) << "\n";
}

BenchmarkStore load_store(const std::string& path) {
    json j = load_json_file(path);
    BenchmarkStore store;
    store.host = j.at("host").get<std::string>();
    store.timestamp = j.at("timestamp").get<std::string>();
    store.granularity = j.at("granularity").get<int>();
    for (const auto& [hash, rec] : j.at("records").items())
        store.records[hash] = record_from_json(rec);
    return store;
}

void save_baselines(const BaselineMap& baselines, const std::string& path) {
    json j = json::object();
    for (const auto& [model, rec] : baselines) j[model] = record_to_json(rec);
    std::ofstream f(path);
    if (!f) throw IrError("cannot write baselines: " + path);
    f << j.dump(2) << "\n";
}

BaselineMap load_baselines(const std::string& path) {
    json j = load_json_file(path);
    BaselineMap m;
    for (const auto& [model, rec] : j.items()) m[model] = record_from_json(rec);
    return m;
}

}  // namespace seqbench
