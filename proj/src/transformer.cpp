#include "tepinn/transformer.hpp"

#include <cmath>

#include "tepinn/error.hpp"
#include "tepinn/quat_ops.hpp"

namespace tepinn {

using ad::Tensor;
using ad::Var;

namespace {

Tensor xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor t({fan_in, fan_out});
    for (double& v : t.data()) v = dist(rng);
    return t;
}

std::string layer_name(std::size_t l, const char* suffix) { return "layer" + std::to_string(l) + "." + suffix; }

// x·W + b for row-stacked x
Var linear(Var x, Var w, Var b) { return ad::broadcast_add(ad::matmul(x, w), b); }

Var layer_norm(Var x, Var gain, Var bias) { return ad::broadcast_add(ad::mul(ad::layer_norm_rows(x), gain), bias); }

Var dropout(ad::Tape& tape, Var x, const EncoderConfig& cfg, const ForwardOptions& opt) {
    if (!opt.training || cfg.dropout_rate <= 0.0 || opt.dropout_rng == nullptr) return x;
    std::bernoulli_distribution keep(1.0 - cfg.dropout_rate);
    Tensor mask(x.shape());
    const double s = 1.0 / (1.0 - cfg.dropout_rate);
    for (double& m : mask.data()) m = keep(*opt.dropout_rng) ? s : 0.0;
    return ad::mul(x, tape.constant(std::move(mask)));
}

Var multi_head_attention(const BoundEncoder::Layer& layer, Var h, const EncoderConfig& cfg,
                         const ForwardOptions& opt) {
    const Var q = linear(h, layer.wq, layer.bq);
    const Var k = linear(h, layer.wk, layer.bk);
    const Var v = linear(h, layer.wv, layer.bv);
    const std::size_t d_head = cfg.d_model / cfg.n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
    std::vector<Var> heads;
    heads.reserve(cfg.n_heads);
    for (std::size_t i = 0; i < cfg.n_heads; ++i) {
        const std::size_t lo = i * d_head, hi = lo + d_head;
        const Var qh = ad::slice_cols(q, lo, hi);
        const Var kh = ad::slice_cols(k, lo, hi);
        const Var vh = ad::slice_cols(v, lo, hi);
        const Var weights = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt));
        if (opt.attention_out != nullptr) opt.attention_out->push_back(weights.value());
        heads.push_back(ad::matmul(weights, vh));
    }
    return linear(ad::concat(heads, 1), layer.wo, layer.bo);
}

BoundEncoder bind_impl(const EncoderParams& params, const std::function<Var(const std::string&)>& get) {
    BoundEncoder b;
    b.config = params.config();
    b.input_w = get("input.weight");
    b.input_b = get("input.bias");
    for (std::size_t l = 0; l < b.config.n_layers; ++l) {
        BoundEncoder::Layer L;
        L.wq = get(layer_name(l, "attn.wq"));
        L.bq = get(layer_name(l, "attn.bq"));
        L.wk = get(layer_name(l, "attn.wk"));
        L.bk = get(layer_name(l, "attn.bk"));
        L.wv = get(layer_name(l, "attn.wv"));
        L.bv = get(layer_name(l, "attn.bv"));
        L.wo = get(layer_name(l, "attn.wo"));
        L.bo = get(layer_name(l, "attn.bo"));
        L.ln1_gain = get(layer_name(l, "ln1.gain"));
        L.ln1_bias = get(layer_name(l, "ln1.bias"));
        L.ff_w1 = get(layer_name(l, "ff.w1"));
        L.ff_b1 = get(layer_name(l, "ff.b1"));
        L.ff_w2 = get(layer_name(l, "ff.w2"));
        L.ff_b2 = get(layer_name(l, "ff.b2"));
        L.ln2_gain = get(layer_name(l, "ln2.gain"));
        L.ln2_bias = get(layer_name(l, "ln2.bias"));
        b.layers.push_back(L);
    }
    b.head_w = get("head.weight");
    b.head_b = get("head.bias");
    return b;
}

}  // namespace

void EncoderConfig::validate() const {
    if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || window_len == 0) {
        throw Error(ErrorKind::InvalidArgument, "encoder dimensions must be positive");
    }
    if (d_model % 2 != 0) throw Error(ErrorKind::OddModelDim, "d_model must be even, got " + std::to_string(d_model));
    if (d_model % n_heads != 0) throw Error(ErrorKind::InvalidArgument, "d_model must be divisible by n_heads");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "dropout_rate must lie in [0, 1)");
    }
}

EncoderParams::EncoderParams(const EncoderConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d = config.d_model;
    add("input.weight", xavier(6, d, rng));
    add("input.bias", Tensor({d}));
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
            add(layer_name(l, w), xavier(d, d, rng));
        }
        for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) add(layer_name(l, b), Tensor({d}));
        add(layer_name(l, "ln1.gain"), Tensor({d}, 1.0));
        add(layer_name(l, "ln1.bias"), Tensor({d}));
        add(layer_name(l, "ff.w1"), xavier(d, config.d_ff, rng));
        add(layer_name(l, "ff.b1"), Tensor({config.d_ff}));
        add(layer_name(l, "ff.w2"), xavier(config.d_ff, d, rng));
        add(layer_name(l, "ff.b2"), Tensor({d}));
        add(layer_name(l, "ln2.gain"), Tensor({d}, 1.0));
        add(layer_name(l, "ln2.bias"), Tensor({d}));
    }
    add("head.weight", xavier(d, 4, rng));
    add("head.bias", Tensor::row({1.0, 0.0, 0.0, 0.0}));
}

EncoderParams::EncoderParams(const EncoderParams& other)
    : config_(other.config_), params_(other.params_), index_(other.index_) {}

EncoderParams& EncoderParams::operator=(const EncoderParams& other) {
    config_ = other.config_;
    params_ = other.params_;
    index_ = other.index_;
    return *this;
}

void EncoderParams::add(const std::string& name, Tensor value) {
    index_[name] = params_.size();
    params_.emplace_back(name, std::move(value));
}

ad::Parameter& EncoderParams::at(const std::string& name) {
    const auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorKind::InvalidArgument, "no encoder parameter '" + name + "'");
    return params_[it->second];
}

const ad::Parameter& EncoderParams::at(const std::string& name) const {
    return const_cast<EncoderParams*>(this)->at(name);
}

std::vector<ad::Parameter*> EncoderParams::pointers() {
    std::vector<ad::Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

BoundEncoder bind(ad::Tape& tape, EncoderParams& params) {
    return bind_impl(params, [&](const std::string& n) { return tape.param(params.at(n)); });
}

BoundEncoder bind_frozen(ad::Tape& tape, const EncoderParams& params) {
    return bind_impl(params, [&](const std::string& n) { return tape.constant(params.at(n).value); });
}

Tensor build_input(std::span<const ImuSample> window, std::size_t window_len) {
    if (window.size() != window_len) {
        throw Error(ErrorKind::WrongWindowLength,
                    "expected " + std::to_string(window_len) + " samples, got " + std::to_string(window.size()));
    }
    Tensor x({window.size(), 6});
    for (std::size_t i = 0; i < window.size(); ++i) {
        const ImuSample& s = window[i];
        x(i, 0) = s.gyro.x;
        x(i, 1) = s.gyro.y;
        x(i, 2) = s.gyro.z;
        x(i, 3) = s.accel.x;
        x(i, 4) = s.accel.y;
        x(i, 5) = s.accel.z;
    }
    return x;
}

std::vector<double> window_timestamps(std::span<const ImuSample> window) {
    std::vector<double> t;
    t.reserve(window.size());
    for (const ImuSample& s : window) t.push_back(s.t - window.front().t);
    return t;
}

Tensor positional_encoding(std::span<const double> timestamps, std::size_t d_model) {
    if (d_model % 2 != 0) throw Error(ErrorKind::OddModelDim, "d_model must be even, got " + std::to_string(d_model));
    Tensor p({timestamps.size(), d_model});
    for (std::size_t k = 0; k < d_model / 2; ++k) {
        const double denom = std::pow(10000.0, static_cast<double>(2 * k) / static_cast<double>(d_model));
        for (std::size_t i = 0; i < timestamps.size(); ++i) {
            const double arg = timestamps[i] / denom;
            p(i, 2 * k) = std::sin(arg);
            p(i, 2 * k + 1) = std::cos(arg);
        }
    }
    return p;
}

Var encoder_forward(ad::Tape& tape, const BoundEncoder& enc, const Tensor& x, std::span<const double> timestamps,
                    const ForwardOptions& options) {
    const EncoderConfig& cfg = enc.config;
    if (x.cols() != 6 || x.rows() != timestamps.size()) {
        throw Error(ErrorKind::ShapeMismatch, "encoder input " + ad::shape_string(x.shape()) + " with " +
                                                  std::to_string(timestamps.size()) + " timestamps");
    }
    Var h = ad::add(linear(tape.constant(x), enc.input_w, enc.input_b),
                    tape.constant(positional_encoding(timestamps, cfg.d_model)));
    for (const auto& layer : enc.layers) {
        const Var attn = dropout(tape, multi_head_attention(layer, h, cfg, options), cfg, options);
        const Var z = layer_norm(ad::add(h, attn), layer.ln1_gain, layer.ln1_bias);
        const Var ff = linear(ad::relu(linear(z, layer.ff_w1, layer.ff_b1)), layer.ff_w2, layer.ff_b2);
        h = layer_norm(ad::add(z, dropout(tape, ff, cfg, options)), layer.ln2_gain, layer.ln2_bias);
    }
    return h;
}

Var quaternion_head_rows(const BoundEncoder& enc, Var hidden, std::size_t count) {
    const std::size_t n = hidden.rows();
    if (count == 0 || count > n) {
        throw Error(ErrorKind::InvalidArgument, "head row count " + std::to_string(count) + " for " +
                                                    std::to_string(n) + " positions");
    }
    return qops::normalize_rows(linear(ad::slice_rows(hidden, n - count, n), enc.head_w, enc.head_b));
}

Quaternion quaternion_head(ad::Tape&, const BoundEncoder& enc, Var hidden) {
    return qops::row_quaternion(quaternion_head_rows(enc, hidden, 1).value(), 0);
}

Quaternion attitude_correct_layer(Quaternion q) { return attitude_correct(q); }

Quaternion estimate(std::span<const ImuSample> window, const EncoderParams& params) {
    const EncoderConfig& cfg = params.config();
    const Tensor x = build_input(window, cfg.window_len);
    const std::vector<double> t = window_timestamps(window);
    ad::Tape tape;
    const BoundEncoder enc = bind_frozen(tape, params);
    const Var h = encoder_forward(tape, enc, x, t);
    const Quaternion q = quaternion_head(tape, enc, h);
    return cfg.attitude_correction ? attitude_correct_layer(q) : q;
}

}  // namespace tepinn
