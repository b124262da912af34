#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sslcal/matrix.hpp"

namespace sslcal {

enum class Activation { Tanh, Relu };

const char* to_string(Activation a);
Activation parse_activation(const std::string& s);

struct LayerParams {
    Matrix weight;              // fan_out x fan_in
    std::vector<double> bias;   // fan_out

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Fully connected classifier. widths = (d, h_1, ..., h_L, K); the final layer is linear.
struct MlpParams {
    std::vector<std::size_t> widths;
    std::vector<Activation> activations;  // one per hidden layer
    std::vector<LayerParams> layers;

    std::size_t input_dim() const { return widths.front(); }
    std::size_t num_classes() const { return widths.back(); }

    friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// dLoss/dtheta, shaped like the MlpParams it was computed for.
struct GradAccumulator {
    std::vector<LayerParams> layers;

    static GradAccumulator zeros_like(const MlpParams& params);
    void add(const GradAccumulator& other);
    double squared_norm() const;
};

/// Weights ~ N(0, 1/fan_in), zero biases. Throws unless widths has at least
/// an input and an output entry and K >= 2.
MlpParams init_params(const std::vector<std::size_t>& widths, Activation activation, std::uint64_t seed);

/// Post-activation outputs of every layer input (inputs[0] is the batch itself).
struct ForwardCache {
    std::vector<Matrix> inputs;
};

struct ForwardResult {
    Matrix logits;
    ForwardCache cache;
};

ForwardResult forward(const MlpParams& params, const Matrix& x);

/// Logits only; skips the cache.
Matrix predict_logits(const MlpParams& params, const Matrix& x);

/// Exact gradient of the scalar loss whose logit-gradient is `dlogits`.
GradAccumulator backward(const MlpParams& params, const ForwardCache& cache, const Matrix& dlogits);

/// Serial-kernel versions kept as the reference for the OpenMP path.
ForwardResult forward_reference(const MlpParams& params, const Matrix& x);
GradAccumulator backward_reference(const MlpParams& params, const ForwardCache& cache, const Matrix& dlogits);

struct CosineSchedule {
    std::size_t total_steps = 0;
    std::size_t warmup_steps = 0;
};

/// SGD with momentum: v <- m v + g; theta <- theta - lr(t) v.
struct SgdState {
    double learning_rate = 0.03;
    double momentum = 0.9;
    bool scheduled = false;
    CosineSchedule schedule;
    std::size_t step = 0;
    GradAccumulator velocity;

    /// Learning rate used for the update at step `t`.
    double rate_at(std::size_t t) const;
};

void sgd_step(MlpParams& params, const GradAccumulator& grads, SgdState& state);

void save_params(const MlpParams& params, std::ostream& os);
MlpParams load_params(std::istream& is);
void save_params(const MlpParams& params, const std::string& path);
MlpParams load_params(const std::string& path);

}  // namespace sslcal
