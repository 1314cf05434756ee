#include "npmerge/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "npmerge/data.hpp"
#include "npmerge/errors.hpp"

namespace npmerge {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974ULL;     // "init"
constexpr std::uint64_t kShuffleTag = 0x73687566ULL;  // "shuf"

void add_bias_rows(Tensor& z, const Tensor& bias) {
    const std::int64_t n = z.cols();
    for (std::int64_t i = 0; i < z.rows(); ++i) {
        double* row = z.data() + i * n;
        for (std::int64_t j = 0; j < n; ++j) row[j] += bias[j];
    }
}

void relu_inplace(Tensor& t) {
    for (double& v : t.vec())
        if (v < 0.0) v = 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// MlpSpec / ModelParams
// ---------------------------------------------------------------------------

MlpSpec MlpSpec::plain(std::vector<std::int64_t> widths) {
    MlpSpec spec;
    spec.layer_widths = std::move(widths);
    spec.batchnorm.assign(spec.layer_widths.size() >= 2 ? spec.layer_widths.size() - 2 : 0, false);
    spec.validate();
    return spec;
}

MlpSpec MlpSpec::with_batchnorm(std::vector<std::int64_t> widths) {
    MlpSpec spec = plain(std::move(widths));
    spec.batchnorm.assign(spec.batchnorm.size(), true);
    return spec;
}

bool MlpSpec::has_batchnorm() const {
    return std::any_of(batchnorm.begin(), batchnorm.end(), [](bool b) { return b; });
}

bool MlpSpec::layer_has_bn(std::int64_t layer) const {
    // Only hidden layers (0..L-2) can carry BN; the output layer never does.
    return layer < num_layers() - 1 && batchnorm[static_cast<std::size_t>(layer)];
}

void MlpSpec::validate() const {
    if (layer_widths.size() < 3) throw InputError("MlpSpec: need at least input, one hidden, and output widths");
    for (std::int64_t w : layer_widths)
        if (w < 1) throw InputError("MlpSpec: widths must be >= 1");
    if (batchnorm.size() != layer_widths.size() - 2)
        throw InputError("MlpSpec: need one batchnorm flag per hidden layer");
}

bool MlpSpec::operator==(const MlpSpec& other) const {
    return layer_widths == other.layer_widths && batchnorm == other.batchnorm;
}

ModelParams ModelParams::zeros(const MlpSpec& spec) {
    spec.validate();
    ModelParams m;
    m.spec = spec;
    for (std::int64_t i = 0; i < spec.num_layers(); ++i) {
        LayerParams layer;
        const std::int64_t out = spec.layer_widths[static_cast<std::size_t>(i + 1)];
        const std::int64_t in = spec.layer_widths[static_cast<std::size_t>(i)];
        layer.weight = Tensor({out, in});
        layer.bias = Tensor({out});
        if (spec.layer_has_bn(i)) {
            BatchNormParams bn;
            bn.gamma = Tensor::full({out}, 1.0);
            bn.beta = Tensor({out});
            bn.running_mean = Tensor({out});
            bn.running_var = Tensor::full({out}, 1.0);
            layer.bn = std::move(bn);
        }
        m.layers.push_back(std::move(layer));
    }
    return m;
}

ModelParams ModelParams::he_init(const MlpSpec& spec, Rng& rng) {
    ModelParams m = zeros(spec);
    for (std::int64_t i = 0; i < spec.num_layers(); ++i) {
        Tensor& w = m.layers[static_cast<std::size_t>(i)].weight;
        const double scale = std::sqrt(2.0 / static_cast<double>(w.cols()));
        for (double& v : w.vec()) v = scale * rng.normal();
    }
    return m;
}

void ModelParams::validate() const {
    spec.validate();
    if (static_cast<std::int64_t>(layers.size()) != spec.num_layers())
        throw DimError("ModelParams: layer count does not match spec");
    for (std::int64_t i = 0; i < spec.num_layers(); ++i) {
        const LayerParams& layer = layers[static_cast<std::size_t>(i)];
        const std::int64_t out = spec.layer_widths[static_cast<std::size_t>(i + 1)];
        const std::int64_t in = spec.layer_widths[static_cast<std::size_t>(i)];
        if (layer.weight.shape() != std::vector<std::int64_t>{out, in}) throw DimError("ModelParams: weight shape mismatch");
        if (layer.bias.shape() != std::vector<std::int64_t>{out}) throw DimError("ModelParams: bias shape mismatch");
        if (layer.bn.has_value() != spec.layer_has_bn(i)) throw DimError("ModelParams: batchnorm presence mismatch");
        layer.weight.check_finite("weight");
        layer.bias.check_finite("bias");
        if (layer.bn) {
            const BatchNormParams& bn = *layer.bn;
            for (const Tensor* t : {&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var})
                if (t->shape() != std::vector<std::int64_t>{out}) throw DimError("ModelParams: batchnorm shape mismatch");
            bn.gamma.check_finite("bn.gamma");
            bn.beta.check_finite("bn.beta");
            bn.running_mean.check_finite("bn.running_mean");
            for (double v : bn.running_var.vec())
                if (!(v > 0.0)) throw NumericError("ModelParams: running_var must stay strictly positive");
        }
    }
}

void for_each_param(ModelParams& m, const std::function<void(const std::string&, Tensor&)>& fn) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const std::string prefix = "layer" + std::to_string(i) + ".";
        fn(prefix + "weight", m.layers[i].weight);
        fn(prefix + "bias", m.layers[i].bias);
        if (m.layers[i].bn) {
            fn(prefix + "bn.gamma", m.layers[i].bn->gamma);
            fn(prefix + "bn.beta", m.layers[i].bn->beta);
        }
    }
}

void for_each_param(const ModelParams& m, const std::function<void(const std::string&, const Tensor&)>& fn) {
    for_each_param(const_cast<ModelParams&>(m), [&](const std::string& name, Tensor& t) { fn(name, t); });
}

void for_each_tensor(const ModelParams& m, const std::function<void(const std::string&, const Tensor&)>& fn) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const std::string prefix = "layer" + std::to_string(i) + ".";
        fn(prefix + "weight", m.layers[i].weight);
        fn(prefix + "bias", m.layers[i].bias);
        if (m.layers[i].bn) {
            fn(prefix + "bn.gamma", m.layers[i].bn->gamma);
            fn(prefix + "bn.beta", m.layers[i].bn->beta);
            fn(prefix + "bn.running_mean", m.layers[i].bn->running_mean);
            fn(prefix + "bn.running_var", m.layers[i].bn->running_var);
        }
    }
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
    if (!(a.spec == b.spec)) return false;
    bool equal = true;
    std::vector<const Tensor*> ta, tb;
    for_each_tensor(a, [&](const std::string&, const Tensor& t) { ta.push_back(&t); });
    for_each_tensor(b, [&](const std::string&, const Tensor& t) { tb.push_back(&t); });
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size() && equal; ++i) {
        if (ta[i]->size() != tb[i]->size()) return false;
        equal = std::equal(ta[i]->vec().begin(), ta[i]->vec().end(), tb[i]->vec().begin(),
                           [](double x, double y) { return std::memcmp(&x, &y, sizeof(double)) == 0; });
    }
    return equal;
}

std::uint64_t params_fingerprint(const ModelParams& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for_each_tensor(m, [&](const std::string&, const Tensor& t) {
        mix(t.data(), static_cast<std::size_t>(t.size()) * sizeof(double));
    });
    return h;
}

// ---------------------------------------------------------------------------
// Forward / loss / backward
// ---------------------------------------------------------------------------

namespace {

void check_input_width(const ModelParams& params, const Tensor& x) {
    if (x.ndim() != 2 || x.cols() != params.spec.input_dim())
        throw DimError("forward: input width " + x.shape_str() + " does not match model input " +
                       std::to_string(params.spec.input_dim()));
}

}  // namespace

Tensor forward_eval(const ModelParams& params, const Tensor& x) {
    check_input_width(params, x);
    Tensor act = x;
    const std::int64_t L = params.spec.num_layers();
    for (std::int64_t i = 0; i < L; ++i) {
        const LayerParams& layer = params.layers[static_cast<std::size_t>(i)];
        Tensor z = matmul_nt(act, layer.weight);
        add_bias_rows(z, layer.bias);
        if (layer.bn) {
            const BatchNormParams& bn = *layer.bn;
            const std::int64_t n = z.cols();
            for (std::int64_t r = 0; r < z.rows(); ++r) {
                double* row = z.data() + r * n;
                for (std::int64_t j = 0; j < n; ++j) {
                    const double inv = 1.0 / std::sqrt(bn.running_var[j] + bn.epsilon);
                    row[j] = bn.gamma[j] * (row[j] - bn.running_mean[j]) * inv + bn.beta[j];
                }
            }
        }
        if (i < L - 1) relu_inplace(z);
        act = std::move(z);
    }
    act.check_finite("logits");
    return act;
}

Tensor forward_train(ModelParams& params, const Tensor& x, ForwardCache& cache) {
    check_input_width(params, x);
    const std::int64_t L = params.spec.num_layers();
    const std::int64_t batch = x.rows();
    cache.layers.assign(static_cast<std::size_t>(L), LayerCache{});
    cache.batch = batch;

    Tensor act = x;
    for (std::int64_t i = 0; i < L; ++i) {
        LayerParams& layer = params.layers[static_cast<std::size_t>(i)];
        LayerCache& lc = cache.layers[static_cast<std::size_t>(i)];
        lc.input = act;

        Tensor z = matmul_nt(act, layer.weight);
        add_bias_rows(z, layer.bias);
        lc.pre_bn = z;

        if (layer.bn) {
            BatchNormParams& bn = *layer.bn;
            const std::int64_t n = z.cols();
            const double inv_count = 1.0 / static_cast<double>(batch);
            Tensor mean({n}), var({n});
            for (std::int64_t r = 0; r < batch; ++r) {
                const double* row = z.data() + r * n;
                for (std::int64_t j = 0; j < n; ++j) mean[j] += row[j];
            }
            for (std::int64_t j = 0; j < n; ++j) mean[j] *= inv_count;
            for (std::int64_t r = 0; r < batch; ++r) {
                const double* row = z.data() + r * n;
                for (std::int64_t j = 0; j < n; ++j) {
                    const double d = row[j] - mean[j];
                    var[j] += d * d;
                }
            }
            for (std::int64_t j = 0; j < n; ++j) var[j] *= inv_count;  // population variance

            Tensor inv_std({n});
            for (std::int64_t j = 0; j < n; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + bn.epsilon);

            Tensor xhat({batch, n});
            for (std::int64_t r = 0; r < batch; ++r)
                for (std::int64_t j = 0; j < n; ++j) xhat.at(r, j) = (z.at(r, j) - mean[j]) * inv_std[j];

            for (std::int64_t r = 0; r < batch; ++r)
                for (std::int64_t j = 0; j < n; ++j) z.at(r, j) = bn.gamma[j] * xhat.at(r, j) + bn.beta[j];

            for (std::int64_t j = 0; j < n; ++j) {
                bn.running_mean[j] = (1.0 - bn.momentum) * bn.running_mean[j] + bn.momentum * mean[j];
                bn.running_var[j] = (1.0 - bn.momentum) * bn.running_var[j] + bn.momentum * var[j];
            }

            lc.has_bn = true;
            lc.xhat = std::move(xhat);
            lc.batch_mean = std::move(mean);
            lc.batch_inv_std = std::move(inv_std);
        }

        lc.pre_act = z;
        if (i < L - 1) relu_inplace(z);
        act = std::move(z);
    }
    act.check_finite("logits");
    return act;
}

XentResult loss_xent(const Tensor& logits, const std::vector<std::int64_t>& labels) {
    if (logits.ndim() != 2) throw DimError("loss_xent: logits must be [batch x classes]");
    const std::int64_t batch = logits.rows();
    const std::int64_t classes = logits.cols();
    if (static_cast<std::int64_t>(labels.size()) != batch)
        throw DimError("loss_xent: label count does not match batch");

    XentResult res;
    res.grad_logits = Tensor({batch, classes});
    const double inv_batch = 1.0 / static_cast<double>(batch);
    double total = 0.0;
    for (std::int64_t r = 0; r < batch; ++r) {
        const std::int64_t y = labels[static_cast<std::size_t>(r)];
        if (y < 0 || y >= classes) throw InputError("loss_xent: label " + std::to_string(y) + " out of range");
        const double* row = logits.data() + r * classes;
        double mx = row[0];
        for (std::int64_t j = 1; j < classes; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::int64_t j = 0; j < classes; ++j) sum += std::exp(row[j] - mx);
        const double log_sum = std::log(sum) + mx;
        total += log_sum - row[y];
        double* grow = res.grad_logits.data() + r * classes;
        for (std::int64_t j = 0; j < classes; ++j) grow[j] = std::exp(row[j] - log_sum) * inv_batch;
        grow[y] -= inv_batch;
    }
    res.loss = total * inv_batch;
    return res;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache, const Tensor& grad_logits) {
    const std::int64_t L = params.spec.num_layers();
    if (static_cast<std::int64_t>(cache.layers.size()) != L)
        throw StateError("backward: cache does not match model depth");
    if (grad_logits.ndim() != 2 || grad_logits.rows() != cache.batch ||
        grad_logits.cols() != params.spec.output_dim())
        throw StateError("backward: grad_logits shape does not match cached forward");

    Gradients grads;
    grads.layers.resize(static_cast<std::size_t>(L));

    Tensor da = grad_logits;  // grad wrt this layer's output activation
    for (std::int64_t i = L - 1; i >= 0; --i) {
        const LayerParams& layer = params.layers[static_cast<std::size_t>(i)];
        const LayerCache& lc = cache.layers[static_cast<std::size_t>(i)];
        if (lc.input.rows() != cache.batch) throw StateError("backward: cache layer missing");
        const std::int64_t n = layer.weight.rows();

        Tensor dh = std::move(da);
        if (i < L - 1) {
            // ReLU gate; derivative at exactly zero is taken as zero.
            for (std::int64_t k = 0; k < dh.size(); ++k)
                if (lc.pre_act[k] <= 0.0) dh[k] = 0.0;
        }

        Tensor dz;
        LayerGrads& lg = grads.layers[static_cast<std::size_t>(i)];
        if (lc.has_bn) {
            const BatchNormParams& bn = *layer.bn;
            const std::int64_t batch = cache.batch;
            Tensor dgamma({n}), dbeta({n});
            Tensor sum_dxhat({n}), sum_dxhat_xhat({n});
            for (std::int64_t r = 0; r < batch; ++r) {
                for (std::int64_t j = 0; j < n; ++j) {
                    const double g = dh.at(r, j);
                    dbeta[j] += g;
                    dgamma[j] += g * lc.xhat.at(r, j);
                    const double dxh = g * bn.gamma[j];
                    sum_dxhat[j] += dxh;
                    sum_dxhat_xhat[j] += dxh * lc.xhat.at(r, j);
                }
            }
            dz = Tensor({batch, n});
            const double inv_b = 1.0 / static_cast<double>(batch);
            for (std::int64_t r = 0; r < batch; ++r) {
                for (std::int64_t j = 0; j < n; ++j) {
                    const double dxh = dh.at(r, j) * bn.gamma[j];
                    dz.at(r, j) = lc.batch_inv_std[j] *
                                  (dxh - inv_b * sum_dxhat[j] - lc.xhat.at(r, j) * inv_b * sum_dxhat_xhat[j]);
                }
            }
            lg.gamma = std::move(dgamma);
            lg.beta = std::move(dbeta);
        } else {
            dz = std::move(dh);
        }

        lg.weight = matmul_tn(dz, lc.input);
        lg.bias = Tensor({n});
        for (std::int64_t r = 0; r < dz.rows(); ++r)
            for (std::int64_t j = 0; j < n; ++j) lg.bias[j] += dz.at(r, j);

        if (i > 0) da = matmul(dz, layer.weight);
    }
    return grads;
}

void for_each_grad(const Gradients& g, const std::function<void(const Tensor&)>& fn) {
    for (const LayerGrads& lg : g.layers) {
        fn(lg.weight);
        fn(lg.bias);
        if (lg.gamma) fn(*lg.gamma);
        if (lg.beta) fn(*lg.beta);
    }
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

Optimizer::Optimizer(OptimKind kind, double lr, double weight_decay)
    : kind_(kind), lr_(lr), weight_decay_(weight_decay) {
    if (!(lr > 0.0)) throw InputError("Optimizer: learning rate must be positive");
    if (weight_decay < 0.0) throw InputError("Optimizer: weight decay must be nonnegative");
}

void Optimizer::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size()) throw StateError("Optimizer: param/grad count mismatch");
    if (m_.empty() && kind_ == OptimKind::Adam) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->shape());
            v_.emplace_back(p->shape());
        }
    }
    if (kind_ == OptimKind::Adam && m_.size() != params.size())
        throw StateError("Optimizer: parameter list changed between steps");

    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        const Tensor& g = *grads[p];
        if (!theta.same_shape(g)) throw StateError("Optimizer: grad shape mismatch");
        for (std::int64_t k = 0; k < theta.size(); ++k) {
            const double grad = g[k] + weight_decay_ * theta[k];
            if (kind_ == OptimKind::Sgd) {
                theta[k] -= lr_ * grad;
            } else {
                double& m = m_[p][k];
                double& v = v_[p][k];
                m = kBeta1 * m + (1.0 - kBeta1) * grad;
                v = kBeta2 * v + (1.0 - kBeta2) * grad * grad;
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                theta[k] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
            }
        }
    }
}

std::vector<Tensor*> param_tensors(ModelParams& m) {
    std::vector<Tensor*> out;
    for_each_param(m, [&](const std::string&, Tensor& t) { out.push_back(&t); });
    return out;
}

std::vector<const Tensor*> grad_tensors(const Gradients& g) {
    std::vector<const Tensor*> out;
    for_each_grad(g, [&](const Tensor& t) { out.push_back(&t); });
    return out;
}

// ---------------------------------------------------------------------------
// Training / evaluation
// ---------------------------------------------------------------------------

std::int64_t argmax_row(const Tensor& t, std::int64_t row) {
    const double* p = t.data() + row * t.cols();
    std::int64_t best = 0;
    for (std::int64_t j = 1; j < t.cols(); ++j)
        if (p[j] > p[best]) best = j;
    return best;
}

TrainResult train_from(const ModelParams& start, const LabeledDataset& dataset, const TrainConfig& config) {
    if (dataset.size() == 0) throw InputError("train: dataset is empty");
    if (dataset.num_classes > start.spec.output_dim())
        throw InputError("train: dataset has more classes than the model output width");
    if (config.epochs < 0) throw InputError("train: epochs must be nonnegative");
    if (config.batch_size < 1) throw InputError("train: batch size must be >= 1");

    TrainResult result;
    result.params = start;
    if (config.epochs == 0) return result;

    Rng shuffle_rng(mix_seed(config.seed, kShuffleTag));
    Optimizer opt(config.optimizer, config.learning_rate, config.weight_decay);

    const std::int64_t n = dataset.size();
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::int64_t correct = 0;
        for (std::int64_t b0 = 0; b0 < n; b0 += config.batch_size) {
            const std::int64_t b1 = std::min(n, b0 + config.batch_size);
            std::vector<std::int64_t> idx(order.begin() + b0, order.begin() + b1);
            Tensor xb = gather_rows(dataset.features, idx);
            std::vector<std::int64_t> yb(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) yb[k] = dataset.labels[static_cast<std::size_t>(idx[k])];

            ForwardCache cache;
            Tensor logits = forward_train(result.params, xb, cache);
            XentResult xent = loss_xent(logits, yb);
            Gradients grads = backward(result.params, cache, xent.grad_logits);
            opt.step(param_tensors(result.params), grad_tensors(grads));

            loss_sum += xent.loss * static_cast<double>(b1 - b0);
            for (std::int64_t r = 0; r < logits.rows(); ++r)
                if (argmax_row(logits, r) == yb[static_cast<std::size_t>(r)]) ++correct;
        }
        EpochMetrics em;
        em.loss = loss_sum / static_cast<double>(n);
        em.accuracy = static_cast<double>(correct) / static_cast<double>(n);
        result.metrics.push_back(em);
    }
    result.params.validate();
    return result;
}

TrainResult train_model(const MlpSpec& spec, const LabeledDataset& dataset, const TrainConfig& config) {
    Rng init_rng(mix_seed(config.init_seed.value_or(config.seed), kInitTag));
    return train_from(ModelParams::he_init(spec, init_rng), dataset, config);
}

EvalResult evaluate(const ModelParams& params, const LabeledDataset& dataset) {
    if (dataset.size() == 0) throw InputError("evaluate: dataset is empty");
    const std::int64_t n = dataset.size();
    const std::int64_t chunk = 512;
    double loss_sum = 0.0;
    std::int64_t correct = 0;
    for (std::int64_t b0 = 0; b0 < n; b0 += chunk) {
        const std::int64_t b1 = std::min(n, b0 + chunk);
        Tensor xb = slice_rows(dataset.features, b0, b1);
        std::vector<std::int64_t> yb(dataset.labels.begin() + b0, dataset.labels.begin() + b1);
        Tensor logits = forward_eval(params, xb);
        XentResult xent = loss_xent(logits, yb);
        loss_sum += xent.loss * static_cast<double>(b1 - b0);
        for (std::int64_t r = 0; r < logits.rows(); ++r)
            if (argmax_row(logits, r) == yb[static_cast<std::size_t>(r)]) ++correct;
    }
    EvalResult res;
    res.loss = loss_sum / static_cast<double>(n);
    res.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return res;
}

// ---------------------------------------------------------------------------
// BatchNorm reset
// ---------------------------------------------------------------------------

namespace {

// Pre-BN activations of `layer` in eval mode, using whatever running stats
// the model currently holds for the layers below.
Tensor pre_bn_at_layer(const ModelParams& params, const Tensor& x, std::int64_t layer) {
    Tensor act = x;
    for (std::int64_t i = 0; i < layer; ++i) {
        const LayerParams& lp = params.layers[static_cast<std::size_t>(i)];
        Tensor z = matmul_nt(act, lp.weight);
        add_bias_rows(z, lp.bias);
        if (lp.bn) {
            const BatchNormParams& bn = *lp.bn;
            for (std::int64_t r = 0; r < z.rows(); ++r)
                for (std::int64_t j = 0; j < z.cols(); ++j) {
                    const double inv = 1.0 / std::sqrt(bn.running_var[j] + bn.epsilon);
                    z.at(r, j) = bn.gamma[j] * (z.at(r, j) - bn.running_mean[j]) * inv + bn.beta[j];
                }
        }
        relu_inplace(z);  // layer < L-1 always holds here since BN is hidden-only
        act = std::move(z);
    }
    const LayerParams& lp = params.layers[static_cast<std::size_t>(layer)];
    Tensor z = matmul_nt(act, lp.weight);
    add_bias_rows(z, lp.bias);
    return z;
}

}  // namespace

BnResetResult bn_reset(const ModelParams& params, const Tensor& data, std::int64_t batch_size) {
    if (data.ndim() != 2 || data.rows() == 0) throw InputError("bn_reset: data must be a nonempty [N x d] tensor");
    if (batch_size < 1) throw InputError("bn_reset: batch size must be >= 1");

    BnResetResult result;
    result.params = params;
    if (!params.spec.has_batchnorm()) {
        result.reset_applied = false;
        return result;
    }

    const std::int64_t n = data.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    // Layers are recalibrated in order: each layer's input distribution is
    // taken with the stats of the layers below already replaced, so the
    // result is independent of how the data is batched.
    for (std::int64_t layer = 0; layer < params.spec.num_layers(); ++layer) {
        if (!params.spec.layer_has_bn(layer)) continue;
        BatchNormParams& bn = *result.params.layers[static_cast<std::size_t>(layer)].bn;
        const std::int64_t width = bn.gamma.size();

        Tensor mean({width});
        for (std::int64_t b0 = 0; b0 < n; b0 += batch_size) {
            const std::int64_t b1 = std::min(n, b0 + batch_size);
            Tensor z = pre_bn_at_layer(result.params, slice_rows(data, b0, b1), layer);
            for (std::int64_t r = 0; r < z.rows(); ++r)
                for (std::int64_t j = 0; j < width; ++j) mean[j] += z.at(r, j);
        }
        for (std::int64_t j = 0; j < width; ++j) mean[j] *= inv_n;

        Tensor var({width});
        for (std::int64_t b0 = 0; b0 < n; b0 += batch_size) {
            const std::int64_t b1 = std::min(n, b0 + batch_size);
            Tensor z = pre_bn_at_layer(result.params, slice_rows(data, b0, b1), layer);
            for (std::int64_t r = 0; r < z.rows(); ++r)
                for (std::int64_t j = 0; j < width; ++j) {
                    const double d = z.at(r, j) - mean[j];
                    var[j] += d * d;
                }
        }
        for (std::int64_t j = 0; j < width; ++j) var[j] *= inv_n;

        bn.running_mean = std::move(mean);
        bn.running_var = std::move(var);
    }
    result.reset_applied = true;
    return result;
}

}  // namespace npmerge
