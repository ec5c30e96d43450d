#pragma once

// Small dense feedforward networks: ReLU hidden layers, inverted dropout,
// softmax / linear / tanh outputs, cross-entropy backpropagation and Adam.

#include <aml5g/error.hpp>
#include <aml5g/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace aml5g {

enum class Activation : std::uint8_t { ReLU = 0, Softmax = 1, Linear = 2, Tanh = 3 };
enum class ModelRole : std::uint8_t { CT = 0, CA = 1, CS = 2, Generator = 3, Discriminator = 4, Other = 5 };
enum class RunMode { Train, Eval };
enum class OptimizerKind { Sgd, Adam };
enum class LabelSemantics { IdleBusy, AckNoAck, IntendedOther, RealSpoof };

using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;

struct MlpSpec {
    std::vector<int> layer_sizes;
    Activation hidden_activation = Activation::ReLU;
    Activation output_activation = Activation::Softmax;
    std::map<int, double> dropout_after;  // layer index in layer_sizes -> ratio

    /// [d, 512, 512, 2] with 0.2 dropout after both hidden layers.
    static MlpSpec classifier(int input_dim) {
        return {{input_dim, 512, 512, 2}, Activation::ReLU, Activation::Softmax, {{1, 0.2}, {2, 0.2}}};
    }

    static MlpSpec generator(int dim = 400) {
        return {{dim, 128, 128, 128, dim}, Activation::ReLU, Activation::Linear, {}};
    }

    static MlpSpec discriminator(int dim = 400) {
        return {{dim, 128, 128, 128, 2}, Activation::ReLU, Activation::Softmax, {}};
    }

    std::size_t n_dense() const noexcept { return layer_sizes.empty() ? 0 : layer_sizes.size() - 1; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i)
            n += static_cast<std::size_t>(layer_sizes[i]) * layer_sizes[i + 1] + layer_sizes[i + 1];
        return n;
    }

    double dropout(std::size_t layer) const {
        const auto it = dropout_after.find(static_cast<int>(layer));
        return it == dropout_after.end() ? 0.0 : it->second;
    }

    void validate() const {
        if (layer_sizes.size() < 2) throw Error(Errc::invalid_spec, "an MLP needs at least an input and an output layer");
        for (int s : layer_sizes)
            if (s < 1) throw Error(Errc::invalid_spec, "layer sizes must be >= 1");
        if (hidden_activation != Activation::ReLU) throw Error(Errc::invalid_spec, "hidden layers use ReLU");
        if (output_activation == Activation::ReLU) throw Error(Errc::invalid_spec, "output activation cannot be ReLU");
        if (output_activation == Activation::Softmax && layer_sizes.back() < 2)
            throw Error(Errc::invalid_spec, "softmax output needs at least two classes");
        for (const auto& [layer, ratio] : dropout_after) {
            if (layer < 1 || layer + 1 >= static_cast<int>(layer_sizes.size()))
                throw Error(Errc::invalid_spec, "dropout may only follow a hidden layer");
            if (!(ratio >= 0.0 && ratio < 1.0)) throw Error(Errc::invalid_spec, "dropout ratio must lie in [0, 1)");
        }
    }

    bool operator==(const MlpSpec&) const = default;
};

template <std::floating_point T>
struct Mlp {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

    MlpSpec spec;
    std::vector<Matrix> weights;  // weights[i] is layer_sizes[i+1] x layer_sizes[i]
    std::vector<Vector> biases;
    ModelRole role = ModelRole::Other;
    // Per-feature standardization applied before the first layer; empty = none.
    RowVector input_mean;
    RowVector input_scale;

    int input_size() const { return spec.layer_sizes.front(); }
    int output_size() const { return spec.layer_sizes.back(); }
    bool has_normalization() const { return input_mean.size() > 0; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
        return n;
    }

    bool all_finite() const {
        for (std::size_t i = 0; i < weights.size(); ++i)
            if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
        return true;
    }

    template <std::floating_point U>
    Mlp<U> cast() const {
        Mlp<U> out;
        out.spec = spec;
        out.role = role;
        for (const auto& w : weights) out.weights.push_back(w.template cast<U>());
        for (const auto& b : biases) out.biases.push_back(b.template cast<U>());
        out.input_mean = input_mean.template cast<U>();
        out.input_scale = input_scale.template cast<U>();
        return out;
    }

    bool operator==(const Mlp& o) const {
        if (!(spec == o.spec) || role != o.role || weights.size() != o.weights.size()) return false;
        for (std::size_t i = 0; i < weights.size(); ++i)
            if (weights[i] != o.weights[i] || biases[i] != o.biases[i]) return false;
        return input_mean.size() == o.input_mean.size() && input_mean == o.input_mean &&
               input_scale.size() == o.input_scale.size() && input_scale == o.input_scale;
    }
};

/// He-uniform weights, zero biases.
template <std::floating_point T = double>
Mlp<T> mlp_init(const MlpSpec& spec, RandomStream& rng, ModelRole role = ModelRole::Other) {
    spec.validate();
    Mlp<T> m;
    m.spec = spec;
    m.role = role;
    for (std::size_t i = 0; i < spec.n_dense(); ++i) {
        const int fan_in = spec.layer_sizes[i];
        const int fan_out = spec.layer_sizes[i + 1];
        const double limit = std::sqrt(6.0 / fan_in);
        typename Mlp<T>::Matrix w(fan_out, fan_in);
        // Row-major fill keeps the draw order independent of Eigen's storage order.
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = static_cast<T>(rng.uniform(-limit, limit));
        m.weights.push_back(std::move(w));
        m.biases.push_back(Mlp<T>::Vector::Zero(fan_out));
    }
    return m;
}

template <std::floating_point T>
struct ForwardCache {
    using Matrix = typename Mlp<T>::Matrix;
    std::vector<Matrix> inputs;  // inputs[i] feeds dense layer i (inputs[0] = standardized batch)
    std::vector<Matrix> pre;     // pre-activation of each dense layer
    std::vector<Matrix> masks;   // scaled dropout masks for hidden layers (empty when unused)
    Matrix output;
};

namespace detail {

template <typename M>
void softmax_rows(M& z) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const auto mx = z.row(r).maxCoeff();
        z.row(r) = (z.row(r).array() - mx).exp();
        z.row(r) /= z.row(r).sum();
    }
}

}  // namespace detail

/// Forward pass over a batch (one sample per row).
///
/// Train mode draws inverted-dropout masks from `rng`; Eval mode never
/// touches `rng`.
template <std::floating_point T>
ForwardCache<T> forward(const Mlp<T>& m, const typename Mlp<T>::Matrix& batch, RunMode mode, RandomStream* rng) {
    using Matrix = typename Mlp<T>::Matrix;
    if (batch.cols() != m.input_size())
        throw Error(Errc::shape_mismatch, "batch width " + std::to_string(batch.cols()) + " != input size " +
                                              std::to_string(m.input_size()));
    ForwardCache<T> c;
    const std::size_t n = m.weights.size();
    c.inputs.reserve(n);
    c.pre.reserve(n);
    c.masks.resize(n);
    if (m.has_normalization()) {
        Matrix x = batch;
        x.rowwise() -= m.input_mean;
        x.array().rowwise() /= m.input_scale.array();
        c.inputs.push_back(std::move(x));
    } else {
        c.inputs.push_back(batch);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Matrix z(c.inputs[i].rows(), m.weights[i].rows());
        z.noalias() = c.inputs[i] * m.weights[i].transpose();
        z.rowwise() += m.biases[i].transpose();
        c.pre.push_back(z);
        const bool last = i + 1 == n;
        if (!last) {
            Matrix a = z.cwiseMax(T(0));
            const double p = m.spec.dropout(i + 1);
            if (mode == RunMode::Train && p > 0.0) {
                if (rng == nullptr) throw Error(Errc::invalid_config, "Train-mode dropout needs a random stream");
                Matrix mask(a.rows(), a.cols());
                const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
                for (Eigen::Index r = 0; r < mask.rows(); ++r)
                    for (Eigen::Index col = 0; col < mask.cols(); ++col)
                        mask(r, col) = rng->uniform() < p ? T(0) : keep_scale;
                a.array() *= mask.array();
                c.masks[i] = std::move(mask);
            }
            c.inputs.push_back(std::move(a));
        } else {
            switch (m.spec.output_activation) {
                case Activation::Softmax: detail::softmax_rows(z); break;
                case Activation::Tanh: z = z.array().tanh().matrix(); break;
                default: break;
            }
            c.output = std::move(z);
        }
    }
    return c;
}

template <std::floating_point T>
struct Gradients {
    std::vector<typename Mlp<T>::Matrix> weights;
    std::vector<typename Mlp<T>::Vector> biases;
};

/// Backpropagates dL/d(pre-activation of the output layer).
/// If `grad_input` is given it receives dL/d(raw input batch).
template <std::floating_point T>
Gradients<T> backward(const Mlp<T>& m, const ForwardCache<T>& c, typename Mlp<T>::Matrix delta,
                      typename Mlp<T>::Matrix* grad_input = nullptr) {
    using Matrix = typename Mlp<T>::Matrix;
    const std::size_t n = m.weights.size();
    Gradients<T> g;
    g.weights.resize(n);
    g.biases.resize(n);
    for (std::size_t i = n; i-- > 0;) {
        g.weights[i].noalias() = delta.transpose() * c.inputs[i];
        g.biases[i] = delta.colwise().sum().transpose();
        if (i == 0 && grad_input == nullptr) break;
        Matrix up(delta.rows(), m.weights[i].cols());
        up.noalias() = delta * m.weights[i];
        if (i == 0) {
            if (m.has_normalization()) up.array().rowwise() /= m.input_scale.array();
            *grad_input = std::move(up);
            break;
        }
        if (c.masks[i - 1].size() > 0) up.array() *= c.masks[i - 1].array();
        up.array() *= (c.pre[i - 1].array() > T(0)).template cast<T>();
        delta = std::move(up);
    }
    return g;
}

/// Output-layer delta for an upstream gradient dL/d(output).
template <std::floating_point T>
typename Mlp<T>::Matrix output_delta(const Mlp<T>& m, const ForwardCache<T>& c, const typename Mlp<T>::Matrix& grad_out) {
    switch (m.spec.output_activation) {
        case Activation::Linear: return grad_out;
        case Activation::Tanh: return (grad_out.array() * (T(1) - c.output.array().square())).matrix();
        default: throw Error(Errc::invalid_spec, "output_delta is for linear or tanh outputs; use softmax_ce_delta");
    }
}

/// Mean cross-entropy of softmax outputs against integer labels.
template <std::floating_point T>
double cross_entropy(const typename Mlp<T>::Matrix& probs, std::span<const int> labels) {
    double loss = 0.0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r)
        loss -= std::log(std::max<double>(probs(r, labels[static_cast<std::size_t>(r)]), 1e-300));
    return loss / static_cast<double>(probs.rows());
}

/// dL/dz for softmax + mean cross-entropy: (p - onehot) / batch.
template <std::floating_point T>
typename Mlp<T>::Matrix softmax_ce_delta(const typename Mlp<T>::Matrix& probs, std::span<const int> labels) {
    typename Mlp<T>::Matrix d = probs;
    for (Eigen::Index r = 0; r < d.rows(); ++r) d(r, labels[static_cast<std::size_t>(r)]) -= T(1);
    d /= static_cast<T>(d.rows());
    return d;
}

// ---------------------------------------------------------------------------
// Optimizers

struct TrainConfig {
    int batch_size = 100;
    int n_steps = 1000;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool standardize = true;
    bool balance_classes = false;  // draw every minibatch half from each class

    /// Adam settings used for adversarial training.
    static TrainConfig gan_defaults() {
        TrainConfig c;
        c.learning_rate = 2e-4;
        c.beta1 = 0.5;
        return c;
    }

    void validate(bool allow_zero_steps = false) const {
        if (batch_size < 1) throw Error(Errc::invalid_config, "batch_size must be >= 1");
        if (n_steps < (allow_zero_steps ? 0 : 1)) throw Error(Errc::invalid_config, "n_steps must be >= 1");
        if (!(learning_rate > 0)) throw Error(Errc::invalid_config, "learning_rate must be positive");
    }
};

template <std::floating_point T>
class Optimizer {
public:
    Optimizer(const Mlp<T>& m, const TrainConfig& cfg) : cfg_(cfg) {
        for (std::size_t i = 0; i < m.weights.size(); ++i) {
            m_w_.push_back(Mlp<T>::Matrix::Zero(m.weights[i].rows(), m.weights[i].cols()));
            v_w_.push_back(m_w_.back());
            m_b_.push_back(Mlp<T>::Vector::Zero(m.biases[i].size()));
            v_b_.push_back(m_b_.back());
        }
    }

    void step(Mlp<T>& m, const Gradients<T>& g) {
        ++t_;
        const T lr = static_cast<T>(cfg_.learning_rate);
        if (cfg_.optimizer == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < m.weights.size(); ++i) {
                m.weights[i] -= lr * g.weights[i];
                m.biases[i] -= lr * g.biases[i];
            }
            return;
        }
        const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2), eps = static_cast<T>(cfg_.epsilon);
        const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(cfg_.beta1, t_)));
        const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(cfg_.beta2, t_)));
        auto update = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
            mom = b1 * mom + (T(1) - b1) * grad;
            vel.array() = b2 * vel.array() + (T(1) - b2) * grad.array().square();
            param.array() -= lr * (mom.array() * c1) / ((vel.array() * c2).sqrt() + eps);
        };
        for (std::size_t i = 0; i < m.weights.size(); ++i) {
            update(m.weights[i], m_w_[i], v_w_[i], g.weights[i]);
            update(m.biases[i], m_b_[i], v_b_[i], g.biases[i]);
        }
    }

private:
    TrainConfig cfg_;
    long t_ = 0;
    std::vector<typename Mlp<T>::Matrix> m_w_, v_w_;
    std::vector<typename Mlp<T>::Vector> m_b_, v_b_;
};

// ---------------------------------------------------------------------------
// Datasets and classifier training

struct LabeledDataset {
    MatrixXd features;        // N x d
    std::vector<int> labels;  // 0 / 1
    LabelSemantics semantics = LabelSemantics::IdleBusy;

    std::size_t size() const { return labels.size(); }
    int dim() const { return static_cast<int>(features.cols()); }

    std::size_t count(int label) const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
    }

    void validate(bool for_training = true) const {
        if (static_cast<std::size_t>(features.rows()) != labels.size())
            throw Error(Errc::shape_mismatch, "feature rows and labels differ in count");
        if (!features.allFinite()) throw Error(Errc::invalid_config, "dataset contains non-finite features");
        for (int l : labels)
            if (l != 0 && l != 1) throw Error(Errc::invalid_config, "labels must be 0 or 1");
        if (for_training) {
            if (labels.size() < 2) throw Error(Errc::class_missing, "need at least two samples");
            if (count(0) == 0 || count(1) == 0) throw Error(Errc::class_missing, "both classes must be present");
        }
    }

    LabeledDataset subset(std::span<const std::size_t> idx) const {
        LabeledDataset out;
        out.semantics = semantics;
        out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
        out.labels.reserve(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(idx[i]));
            out.labels.push_back(labels[idx[i]]);
        }
        return out;
    }

    LabeledDataset rows(std::size_t begin, std::size_t end) const {
        std::vector<std::size_t> idx(end - begin);
        std::iota(idx.begin(), idx.end(), begin);
        return subset(idx);
    }

    /// First half for training, second half for testing.
    std::pair<LabeledDataset, LabeledDataset> split_half() const {
        const std::size_t h = size() / 2;
        return {rows(0, h), rows(h, size())};
    }
};

template <std::floating_point T>
struct TrainResult {
    Mlp<T> model;
    std::vector<double> loss_history;
    double train_accuracy = 0.0;
};

struct Prediction {
    int label = 0;
    double confidence = 0.5;
    double margin = 0.0;  // winning logit minus the runner-up, in double
};

/// Eval-mode predictions: label = argmax (ties to the lower index),
/// confidence = max softmax probability recomputed in double from the logits.
template <std::floating_point T>
std::vector<Prediction> predict_batch(const Mlp<T>& m, const MatrixXd& x) {
    if (m.spec.output_activation != Activation::Softmax) throw Error(Errc::invalid_spec, "predict needs a softmax output");
    const auto c = forward(m, typename Mlp<T>::Matrix(x.template cast<T>()), RunMode::Eval, nullptr);
    const MatrixXd z = c.pre.back().template cast<double>();
    std::vector<Prediction> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < z.cols(); ++k)
            if (z(r, k) > z(r, best)) best = k;
        double denom = 0.0, runner = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < z.cols(); ++k) {
            denom += std::exp(z(r, k) - z(r, best));
            if (k != best) runner = std::max(runner, z(r, k));
        }
        auto& p = out[static_cast<std::size_t>(r)];
        p.label = static_cast<int>(best);
        p.confidence = 1.0 / denom;
        p.margin = z.cols() > 1 ? z(r, best) - runner : 0.0;
    }
    return out;
}

template <std::floating_point T>
Prediction predict(const Mlp<T>& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.input_size()) throw Error(Errc::shape_mismatch, "feature length != input size");
    MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];
    return predict_batch(m, row).front();
}

template <std::floating_point T>
double accuracy(const Mlp<T>& m, const LabeledDataset& d) {
    if (d.size() == 0) return 0.0;
    const auto p = predict_batch(m, d.features);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ok += p[i].label == d.labels[i];
    return static_cast<double>(ok) / static_cast<double>(d.size());
}

/// Per-feature mean and standard deviation (std floors to 1 for constant features).
template <std::floating_point T>
void fit_standardization(Mlp<T>& m, const MatrixXd& features) {
    const Eigen::RowVectorXd mean = features.colwise().mean();
    Eigen::RowVectorXd sd = ((features.rowwise() - mean).array().square().colwise().sum() /
                             std::max<double>(1.0, static_cast<double>(features.rows())))
                                .sqrt();
    for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (!(sd(i) > 1e-12)) sd(i) = 1.0;
    m.input_mean = mean.template cast<T>();
    m.input_scale = sd.template cast<T>();
}

/// Minibatch cross-entropy training; history has one loss per step.
template <std::floating_point T>
TrainResult<T> train_classifier(Mlp<T> m, const LabeledDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate(true);
    if (data.dim() != m.input_size()) throw Error(Errc::shape_mismatch, "dataset width != model input size");
    if (m.spec.output_activation != Activation::Softmax) throw Error(Errc::invalid_spec, "classifier needs softmax output");
    if (cfg.standardize) fit_standardization(m, data.features);

    using Matrix = typename Mlp<T>::Matrix;
    const Matrix all = data.features.template cast<T>();
    RandomStream root(cfg.seed);
    RandomStream order_rng = root.child("batches");
    RandomStream dropout_rng = root.child("dropout");
    Optimizer<T> opt(m, cfg);

    const std::size_t n = data.size();
    const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
    // One shuffled index pool per class when balancing, else a single pool.
    std::vector<std::vector<std::size_t>> pools(cfg.balance_classes ? 2 : 1);
    for (std::size_t i = 0; i < n; ++i) pools[cfg.balance_classes ? static_cast<std::size_t>(data.labels[i]) : 0].push_back(i);
    std::erase_if(pools, [](const auto& p) { return p.empty(); });
    std::vector<std::size_t> cursors(pools.size());
    for (std::size_t c = 0; c < pools.size(); ++c) cursors[c] = pools[c].size();

    TrainResult<T> res;
    res.loss_history.reserve(static_cast<std::size_t>(cfg.n_steps));
    Matrix batch(static_cast<Eigen::Index>(bs), all.cols());
    std::vector<int> labels(bs);
    for (int step = 0; step < cfg.n_steps; ++step) {
        for (std::size_t b = 0; b < bs; ++b) {
            const std::size_t c = b % pools.size();
            if (cursors[c] == pools[c].size()) {
                std::shuffle(pools[c].begin(), pools[c].end(), order_rng.engine());
                cursors[c] = 0;
            }
            const std::size_t i = pools[c][cursors[c]++];
            batch.row(static_cast<Eigen::Index>(b)) = all.row(static_cast<Eigen::Index>(i));
            labels[b] = data.labels[i];
        }
        const auto cache = forward(m, batch, RunMode::Train, &dropout_rng);
        const double loss = cross_entropy<T>(cache.output, labels);
        if (!std::isfinite(loss))
            throw Error(Errc::non_finite_loss, "loss became non-finite at step " + std::to_string(step));
        res.loss_history.push_back(loss);
        opt.step(m, backward(m, cache, softmax_ce_delta<T>(cache.output, labels)));
    }
    res.train_accuracy = accuracy(m, data);
    res.model = std::move(m);
    return res;
}

// ---------------------------------------------------------------------------
// Gradient check

namespace detail {

// Loss used by grad_check: cross-entropy for softmax outputs, otherwise
// 0.5 * ||y - onehot(label)||^2.
inline double check_loss(const Mlp<double>& m, const MatrixXd& x, int label) {
    const auto c = forward(m, x, RunMode::Eval, nullptr);
    if (m.spec.output_activation == Activation::Softmax) return -std::log(c.output(0, label));
    MatrixXd t = MatrixXd::Zero(1, c.output.cols());
    t(0, label) = 1.0;
    return 0.5 * (c.output - t).squaredNorm();
}

inline double& param_ref(Mlp<double>& m, std::size_t flat) {
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        const auto nw = static_cast<std::size_t>(m.weights[i].size());
        if (flat < nw) {
            const auto cols = static_cast<std::size_t>(m.weights[i].cols());
            return m.weights[i](static_cast<Eigen::Index>(flat / cols), static_cast<Eigen::Index>(flat % cols));
        }
        flat -= nw;
        const auto nb = static_cast<std::size_t>(m.biases[i].size());
        if (flat < nb) return m.biases[i](static_cast<Eigen::Index>(flat));
        flat -= nb;
    }
    throw Error(Errc::shape_mismatch, "parameter index out of range");
}

inline double grad_ref(const Mlp<double>& m, const Gradients<double>& g, std::size_t flat) {
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        const auto nw = static_cast<std::size_t>(m.weights[i].size());
        if (flat < nw) {
            const auto cols = static_cast<std::size_t>(m.weights[i].cols());
            return g.weights[i](static_cast<Eigen::Index>(flat / cols), static_cast<Eigen::Index>(flat % cols));
        }
        flat -= nw;
        const auto nb = static_cast<std::size_t>(m.biases[i].size());
        if (flat < nb) return g.biases[i](static_cast<Eigen::Index>(flat));
        flat -= nb;
    }
    throw Error(Errc::shape_mismatch, "parameter index out of range");
}

}  // namespace detail

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::vector<std::size_t> checked;  // flat parameter indices
    std::vector<double> analytic;
    std::vector<double> numeric;
};

/// Compares backprop gradients with central differences (step 1e-5) on a
/// random subsample of parameters. Relative error is
/// |a - n| / max(|a| + |n|, 1e-7); dropout is not applied.
inline GradCheckResult grad_check(Mlp<double> m, std::span<const double> x, int label, RandomStream& rng,
                                  std::size_t n_params = 100) {
    if (static_cast<int>(x.size()) != m.input_size()) throw Error(Errc::shape_mismatch, "sample width != input size");
    if (label < 0 || label >= m.output_size()) throw Error(Errc::shape_mismatch, "label outside output range");
    MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];

    const auto cache = forward(m, row, RunMode::Eval, nullptr);
    const std::vector<int> lab{label};
    MatrixXd delta;
    if (m.spec.output_activation == Activation::Softmax) {
        delta = softmax_ce_delta<double>(cache.output, lab);
    } else {
        MatrixXd t = MatrixXd::Zero(1, cache.output.cols());
        t(0, label) = 1.0;
        delta = output_delta(m, cache, MatrixXd(cache.output - t));
    }
    const auto g = backward(m, cache, delta);

    const std::size_t total = m.parameter_count();
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    if (total > n_params) {
        for (std::size_t i = 0; i < n_params; ++i) std::swap(idx[i], idx[i + rng.index(total - i)]);
        idx.resize(n_params);
    }

    GradCheckResult res;
    constexpr double h = 1e-5;
    for (std::size_t k : idx) {
        double& p = detail::param_ref(m, k);
        const double saved = p;
        p = saved + h;
        const double up = detail::check_loss(m, row, label);
        p = saved - h;
        const double down = detail::check_loss(m, row, label);
        p = saved;
        const double num = (up - down) / (2 * h);
        const double ana = detail::grad_ref(m, g, k);
        const double rel = std::abs(ana - num) / std::max(std::abs(ana) + std::abs(num), 1e-7);
        res.max_relative_error = std::max(res.max_relative_error, rel);
        res.checked.push_back(k);
        res.analytic.push_back(ana);
        res.numeric.push_back(num);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Model persistence: "AML5GNN1", spec, role, little-endian f64 parameters
// (row-major per weight matrix, then bias), normalization vectors.

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline void put_f64(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
    os.write(reinterpret_cast<const char*>(&v), 8);
}

inline std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw Error(Errc::io_error, "truncated model blob");
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
    return v;
}

inline double get_f64(std::istream& is) {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) throw Error(Errc::io_error, "truncated model blob");
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace detail

inline constexpr char model_magic[8] = {'A', 'M', 'L', '5', 'G', 'N', 'N', '1'};

template <std::floating_point T>
void save_model(const Mlp<T>& m, std::ostream& os) {
    os.write(model_magic, 8);
    detail::put_u32(os, static_cast<std::uint32_t>(m.spec.layer_sizes.size()));
    for (int s : m.spec.layer_sizes) detail::put_u32(os, static_cast<std::uint32_t>(s));
    detail::put_u32(os, static_cast<std::uint32_t>(m.spec.hidden_activation));
    detail::put_u32(os, static_cast<std::uint32_t>(m.spec.output_activation));
    detail::put_u32(os, static_cast<std::uint32_t>(m.spec.dropout_after.size()));
    for (const auto& [layer, ratio] : m.spec.dropout_after) {
        detail::put_u32(os, static_cast<std::uint32_t>(layer));
        detail::put_f64(os, ratio);
    }
    detail::put_u32(os, static_cast<std::uint32_t>(m.role));
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        for (Eigen::Index r = 0; r < m.weights[i].rows(); ++r)
            for (Eigen::Index c = 0; c < m.weights[i].cols(); ++c) detail::put_f64(os, static_cast<double>(m.weights[i](r, c)));
        for (Eigen::Index r = 0; r < m.biases[i].size(); ++r) detail::put_f64(os, static_cast<double>(m.biases[i](r)));
    }
    detail::put_u32(os, static_cast<std::uint32_t>(m.input_mean.size()));
    for (Eigen::Index i = 0; i < m.input_mean.size(); ++i) detail::put_f64(os, static_cast<double>(m.input_mean(i)));
    for (Eigen::Index i = 0; i < m.input_scale.size(); ++i) detail::put_f64(os, static_cast<double>(m.input_scale(i)));
    if (!os) throw Error(Errc::io_error, "failed writing model blob");
}

template <std::floating_point T>
Mlp<T> load_model(std::istream& is) {
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, model_magic, 8) != 0) throw Error(Errc::io_error, "bad model magic");
    Mlp<T> m;
    const std::uint32_t n_layers = detail::get_u32(is);
    if (n_layers < 2 || n_layers > 64) throw Error(Errc::io_error, "implausible layer count in model blob");
    for (std::uint32_t i = 0; i < n_layers; ++i) m.spec.layer_sizes.push_back(static_cast<int>(detail::get_u32(is)));
    m.spec.hidden_activation = static_cast<Activation>(detail::get_u32(is));
    m.spec.output_activation = static_cast<Activation>(detail::get_u32(is));
    const std::uint32_t n_drop = detail::get_u32(is);
    for (std::uint32_t i = 0; i < n_drop; ++i) {
        const int layer = static_cast<int>(detail::get_u32(is));
        m.spec.dropout_after[layer] = detail::get_f64(is);
    }
    m.spec.validate();
    m.role = static_cast<ModelRole>(detail::get_u32(is));
    for (std::size_t i = 0; i < m.spec.n_dense(); ++i) {
        typename Mlp<T>::Matrix w(m.spec.layer_sizes[i + 1], m.spec.layer_sizes[i]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<T>(detail::get_f64(is));
        typename Mlp<T>::Vector b(m.spec.layer_sizes[i + 1]);
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = static_cast<T>(detail::get_f64(is));
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    const std::uint32_t n_norm = detail::get_u32(is);
    if (n_norm != 0 && static_cast<int>(n_norm) != m.input_size())
        throw Error(Errc::io_error, "normalization length does not match input size");
    m.input_mean.resize(n_norm);
    m.input_scale.resize(n_norm);
    for (std::uint32_t i = 0; i < n_norm; ++i) m.input_mean(i) = static_cast<T>(detail::get_f64(is));
    for (std::uint32_t i = 0; i < n_norm; ++i) m.input_scale(i) = static_cast<T>(detail::get_f64(is));
    return m;
}

template <std::floating_point T>
void save_model(const Mlp<T>& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(Errc::io_error, "cannot open " + path.string());
    save_model(m, os);
}

template <std::floating_point T>
Mlp<T> load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(Errc::io_error, "cannot open " + path.string());
    return load_model<T>(is);
}

}  // namespace aml5g
