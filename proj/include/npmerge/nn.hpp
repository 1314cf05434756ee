#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "npmerge/rng.hpp"
#include "npmerge/tensor.hpp"

namespace npmerge {

// Multi-layer perceptron: linear layers with ReLU on hidden layers and an
// identity output layer. Hidden layers may carry BatchNorm.
struct MlpSpec {
    std::vector<std::int64_t> layer_widths;  // [n0, n1, ..., nL]
    std::vector<bool> batchnorm;             // one flag per hidden layer (size L-1)

    static MlpSpec plain(std::vector<std::int64_t> widths);
    static MlpSpec with_batchnorm(std::vector<std::int64_t> widths);

    std::int64_t num_layers() const { return static_cast<std::int64_t>(layer_widths.size()) - 1; }  // L
    std::int64_t input_dim() const { return layer_widths.front(); }
    std::int64_t output_dim() const { return layer_widths.back(); }
    bool has_batchnorm() const;
    bool layer_has_bn(std::int64_t layer) const;  // layer in [0, L)

    void validate() const;
    bool operator==(const MlpSpec& other) const;
};

struct BatchNormParams {
    Tensor gamma, beta;              // learned affine, shape [n]
    Tensor running_mean, running_var;  // population stats used in eval mode
    double momentum = 0.1;
    double epsilon = 1e-5;
};

struct LayerParams {
    Tensor weight;  // [n_i x n_{i-1}]
    Tensor bias;    // [n_i]
    std::optional<BatchNormParams> bn;
};

struct ModelParams {
    MlpSpec spec;
    std::vector<LayerParams> layers;  // size L

    static ModelParams zeros(const MlpSpec& spec);
    // Fan-in-scaled Gaussian init (He) for weights, zero bias, unit BN.
    static ModelParams he_init(const MlpSpec& spec, Rng& rng);

    void validate() const;
};

// Visits every learned tensor (weights, biases, BN gamma/beta) in declaration
// order. BN running stats are buffers, not parameters, and are excluded.
void for_each_param(ModelParams& m, const std::function<void(const std::string&, Tensor&)>& fn);
void for_each_param(const ModelParams& m, const std::function<void(const std::string&, const Tensor&)>& fn);
// Visits every tensor including BN running stats (checkpoint order).
void for_each_tensor(const ModelParams& m, const std::function<void(const std::string&, const Tensor&)>& fn);

bool bitwise_equal(const ModelParams& a, const ModelParams& b);
std::uint64_t params_fingerprint(const ModelParams& m);  // FNV-1a over raw bytes

// Per-layer intermediates captured by a train-mode forward; required by
// backward() on the same batch.
struct LayerCache {
    Tensor input;      // activations feeding this layer [B x n_{i-1}]
    Tensor pre_bn;     // W x + b
    Tensor xhat;       // normalized pre-activations (BN layers)
    Tensor batch_mean, batch_inv_std;
    Tensor pre_act;    // after BN (or == pre_bn), before the nonlinearity
    bool has_bn = false;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    std::int64_t batch = 0;
};

// Eval mode: running BN stats, deterministic, no side effects.
Tensor forward_eval(const ModelParams& params, const Tensor& x);
// Train mode: batch BN stats; updates running stats on `params` in place.
Tensor forward_train(ModelParams& params, const Tensor& x, ForwardCache& cache);

struct XentResult {
    double loss = 0.0;
    Tensor grad_logits;  // (softmax - onehot) / batch
};
XentResult loss_xent(const Tensor& logits, const std::vector<std::int64_t>& labels);

// Gradient tensors, shape-congruent with the learned parameters.
struct LayerGrads {
    Tensor weight, bias;
    std::optional<Tensor> gamma, beta;
};
struct Gradients {
    std::vector<LayerGrads> layers;
};
void for_each_grad(const Gradients& g, const std::function<void(const Tensor&)>& fn);

Gradients backward(const ModelParams& params, const ForwardCache& cache, const Tensor& grad_logits);

enum class OptimKind { Adam, Sgd };

struct TrainConfig {
    OptimKind optimizer = OptimKind::Adam;
    double learning_rate = 1e-3;
    std::int64_t epochs = 30;
    std::int64_t batch_size = 64;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;
    // When set, weight init draws from this seed while data order still
    // follows `seed`; lets several models share an initialization.
    std::optional<std::uint64_t> init_seed;
};

// Adam (bias-corrected) or plain SGD over an arbitrary list of tensors.
// Moment buffers are lazily sized on the first step.
class Optimizer {
public:
    Optimizer(OptimKind kind, double lr, double weight_decay = 0.0);

    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);
    std::int64_t steps_taken() const { return t_; }

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

private:
    OptimKind kind_;
    double lr_, weight_decay_;
    std::int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

struct LabeledDataset;  // data.hpp

std::vector<Tensor*> param_tensors(ModelParams& m);
std::vector<const Tensor*> grad_tensors(const Gradients& g);

struct EpochMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochMetrics> metrics;  // one entry per epoch
};

TrainResult train_model(const MlpSpec& spec, const LabeledDataset& dataset, const TrainConfig& config);
// Continues training from existing parameters (fine-tuning path).
TrainResult train_from(const ModelParams& start, const LabeledDataset& dataset, const TrainConfig& config);

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};
EvalResult evaluate(const ModelParams& params, const LabeledDataset& dataset);

// Argmax with ties broken toward the lowest class index.
std::int64_t argmax_row(const Tensor& t, std::int64_t row);

struct BnResetResult {
    ModelParams params;
    bool reset_applied = false;  // false when the model has no BN layers
};

// Replaces BN running stats with the exact mean/variance (population) of each
// BN layer's inputs over `data`, aggregated layer by layer in two passes so
// the result does not depend on the batch partitioning.
BnResetResult bn_reset(const ModelParams& params, const Tensor& data, std::int64_t batch_size);

}  // namespace npmerge
