#include "sslcal/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "sslcal/error.hpp"
#include "sslcal/kernels.hpp"
#include "sslcal/text.hpp"

namespace sslcal {

const char* to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    fail(ErrorKind::InvalidArgument, "unknown activation '" + s + "'");
}

GradAccumulator GradAccumulator::zeros_like(const MlpParams& params) {
    GradAccumulator g;
    for (const auto& l : params.layers)
        g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size(), 0.0)});
    return g;
}

void GradAccumulator::add(const GradAccumulator& other) {
    require(other.layers.size() == layers.size(), "gradient shape mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& w = layers[i].weight.data();
        const auto& ow = other.layers[i].weight.data();
        require(w.size() == ow.size(), "gradient shape mismatch");
        for (std::size_t j = 0; j < w.size(); ++j) w[j] += ow[j];
        for (std::size_t j = 0; j < layers[i].bias.size(); ++j) layers[i].bias[j] += other.layers[i].bias[j];
    }
}

double GradAccumulator::squared_norm() const {
    double s = 0.0;
    for (const auto& l : layers) {
        for (double v : l.weight.data()) s += v * v;
        for (double v : l.bias) s += v * v;
    }
    return s;
}

MlpParams init_params(const std::vector<std::size_t>& widths, Activation activation, std::uint64_t seed) {
    require(widths.size() >= 2, "widths need an input and an output layer");
    require(widths.back() >= 2, "need at least two classes");
    for (auto w : widths) require(w >= 1, "layer width must be positive");

    MlpParams p;
    p.widths = widths;
    p.activations.assign(widths.size() - 2, activation);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
        LayerParams layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& w : layer.weight.data()) w = scale * normal(rng);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

namespace {

void activate(Matrix& m, Activation a) {
    for (double& v : m.data()) v = a == Activation::Tanh ? std::tanh(v) : (v > 0.0 ? v : 0.0);
}

// d(pre-activation) from d(post-activation), using the post-activation values.
void activation_backward(const Matrix& post, Activation a, Matrix& grad) {
    auto& g = grad.data();
    const auto& y = post.data();
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] *= a == Activation::Tanh ? (1.0 - y[i] * y[i]) : (y[i] > 0.0 ? 1.0 : 0.0);
}

template <class AffineForward>
ForwardResult forward_with(const MlpParams& params, const Matrix& x, AffineForward affine) {
    require(x.cols() == params.input_dim(), "input dimension mismatch: got " + std::to_string(x.cols()) +
                                                ", expected " + std::to_string(params.input_dim()));
    ForwardResult r;
    r.cache.inputs.reserve(params.layers.size());
    r.cache.inputs.push_back(x);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Matrix out;
        affine(r.cache.inputs.back(), params.layers[l].weight, params.layers[l].bias, out);
        if (l + 1 == params.layers.size()) {
            r.logits = std::move(out);
        } else {
            activate(out, params.activations[l]);
            r.cache.inputs.push_back(std::move(out));
        }
    }
    return r;
}

template <class AffineBackward>
GradAccumulator backward_with(const MlpParams& params, const ForwardCache& cache, const Matrix& dlogits,
                              AffineBackward affine) {
    const std::size_t depth = params.layers.size();
    require(cache.inputs.size() == depth, "forward cache does not match parameters");
    require(dlogits.cols() == params.num_classes() && dlogits.rows() == cache.inputs.front().rows(),
            "logit gradient shape mismatch");
    GradAccumulator g;
    g.layers.resize(depth);
    Matrix upstream = dlogits;
    for (std::size_t l = depth; l-- > 0;) {
        Matrix din;
        affine(cache.inputs[l], params.layers[l].weight, upstream, g.layers[l].weight, g.layers[l].bias,
               l > 0 ? &din : nullptr);
        if (l > 0) {
            activation_backward(cache.inputs[l], params.activations[l - 1], din);
            upstream = std::move(din);
        }
    }
    return g;
}

}  // namespace

ForwardResult forward(const MlpParams& params, const Matrix& x) {
    return forward_with(params, x, kernels::omp::affine_forward);
}

ForwardResult forward_reference(const MlpParams& params, const Matrix& x) {
    return forward_with(params, x, kernels::serial::affine_forward);
}

Matrix predict_logits(const MlpParams& params, const Matrix& x) { return forward(params, x).logits; }

GradAccumulator backward(const MlpParams& params, const ForwardCache& cache, const Matrix& dlogits) {
    return backward_with(params, cache, dlogits, kernels::omp::affine_backward);
}

GradAccumulator backward_reference(const MlpParams& params, const ForwardCache& cache, const Matrix& dlogits) {
    return backward_with(params, cache, dlogits, kernels::serial::affine_backward);
}

double SgdState::rate_at(std::size_t t) const {
    if (!scheduled) return learning_rate;
    const auto& s = schedule;
    if (t < s.warmup_steps) return learning_rate * static_cast<double>(t + 1) / static_cast<double>(s.warmup_steps);
    if (s.total_steps <= s.warmup_steps) return learning_rate;
    const double progress =
        static_cast<double>(t - s.warmup_steps) / static_cast<double>(s.total_steps - s.warmup_steps);
    // Truncated cosine over 7/16 of a period.
    return learning_rate * std::max(0.0, std::cos(std::numbers::pi * 7.0 / 16.0 * std::min(progress, 1.0)));
}

void sgd_step(MlpParams& params, const GradAccumulator& grads, SgdState& state) {
    require(grads.layers.size() == params.layers.size(), "gradient shape mismatch");
    if (state.velocity.layers.empty()) state.velocity = GradAccumulator::zeros_like(params);
    const double lr = state.rate_at(state.step);
    const double m = state.momentum;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& w = params.layers[l].weight.data();
        auto& vw = state.velocity.layers[l].weight.data();
        const auto& gw = grads.layers[l].weight.data();
        require(gw.size() == w.size(), "gradient shape mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) {
            vw[i] = m * vw[i] + gw[i];
            w[i] -= lr * vw[i];
        }
        auto& b = params.layers[l].bias;
        auto& vb = state.velocity.layers[l].bias;
        const auto& gb = grads.layers[l].bias;
        for (std::size_t i = 0; i < b.size(); ++i) {
            vb[i] = m * vb[i] + gb[i];
            b[i] -= lr * vb[i];
        }
    }
    ++state.step;
}

// Checkpoint layout (version 1), whitespace separated:
//   sslcal-mlp 1
//   widths <n> w_0 ... w_{n-1}
//   activations <tag>...
//   layer <rows> <cols> <row-major weights> <biases>   (one line per layer)
void save_params(const MlpParams& params, std::ostream& os) {
    os << "sslcal-mlp 1\nwidths " << params.widths.size();
    for (auto w : params.widths) os << ' ' << w;
    os << "\nactivations";
    for (auto a : params.activations) os << ' ' << to_string(a);
    os << '\n';
    for (const auto& l : params.layers) {
        os << "layer " << l.weight.rows() << ' ' << l.weight.cols();
        for (double v : l.weight.data()) os << ' ' << format_double(v);
        for (double v : l.bias) os << ' ' << format_double(v);
        os << '\n';
    }
}

MlpParams load_params(std::istream& is) {
    auto bad = [](const std::string& why) { fail(ErrorKind::Io, "malformed checkpoint: " + why); };
    std::string tag, token;
    int version = 0;
    if (!(is >> tag >> version) || tag != "sslcal-mlp") bad("missing header");
    if (version != 1) bad("unsupported version " + std::to_string(version));
    std::size_t n = 0;
    if (!(is >> tag >> n) || tag != "widths" || n < 2) bad("widths");
    MlpParams p;
    p.widths.resize(n);
    for (auto& w : p.widths)
        if (!(is >> w)) bad("widths");
    if (!(is >> tag) || tag != "activations") bad("activations");
    for (std::size_t i = 0; i + 2 < n; ++i) {
        if (!(is >> token)) bad("activations");
        p.activations.push_back(parse_activation(token));
    }
    for (std::size_t l = 0; l + 1 < n; ++l) {
        std::size_t rows = 0, cols = 0;
        if (!(is >> tag >> rows >> cols) || tag != "layer") bad("layer header");
        if (rows != p.widths[l + 1] || cols != p.widths[l]) bad("layer shape");
        LayerParams layer{Matrix(rows, cols), std::vector<double>(rows)};
        for (double& v : layer.weight.data()) {
            if (!(is >> token)) bad("truncated weights");
            v = parse_double(token);
        }
        for (double& v : layer.bias) {
            if (!(is >> token)) bad("truncated biases");
            v = parse_double(token);
        }
        p.layers.push_back(std::move(layer));
    }
    return p;
}

void save_params(const MlpParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    save_params(params, os);
    if (!os) fail(ErrorKind::Io, "write failed: '" + path + "'");
}

MlpParams load_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::Io, "cannot open '" + path + "'");
    return load_params(is);
}

}  // namespace sslcal
