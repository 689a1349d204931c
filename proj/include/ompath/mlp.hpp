#pragma once

// Dense feed-forward network: tanh hidden layers, affine output layer,
// truncated-normal weights, zero biases, full-batch Adam.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ompath/errors.hpp"
#include "ompath/rng.hpp"

namespace ompath {

/// Per-feature affine map x -> (x - mean) / scale.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> scale;

    bool empty() const { return mean.empty(); }

    static Normalizer fit(const std::vector<std::vector<double>>& rows)
    {
        Normalizer n;
        if (rows.empty()) {
            return n;
        }
        const std::size_t d = rows.front().size();
        n.mean.assign(d, 0.0);
        n.scale.assign(d, 0.0);
        for (const auto& r : rows) {
            for (std::size_t j = 0; j < d; ++j) n.mean[j] += r[j];
        }
        for (auto& m : n.mean) m /= static_cast<double>(rows.size());
        for (const auto& r : rows) {
            for (std::size_t j = 0; j < d; ++j) n.scale[j] += (r[j] - n.mean[j]) * (r[j] - n.mean[j]);
        }
        for (auto& s : n.scale) {
            s = std::sqrt(s / static_cast<double>(rows.size()));
            if (!(s > 1e-12)) s = 1.0;  // constant feature
        }
        return n;
    }

    std::vector<double> apply(std::span<const double> x) const
    {
        std::vector<double> y(x.begin(), x.end());
        if (!empty()) {
            for (std::size_t j = 0; j < y.size(); ++j) y[j] = (y[j] - mean[j]) / scale[j];
        }
        return y;
    }

    std::vector<double> invert(std::span<const double> y) const
    {
        std::vector<double> x(y.begin(), y.end());
        if (!empty()) {
            for (std::size_t j = 0; j < x.size(); ++j) x[j] = x[j] * scale[j] + mean[j];
        }
        return x;
    }
};

class Mlp {
public:
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    /// Activations of every layer, one column per input, kept for the reverse pass.
    struct Tape {
        std::vector<Matrix> acts;
    };

    Mlp() = default;

    static Mlp init(std::vector<std::size_t> sizes, std::uint64_t seed, double sigma = 0.1)
    {
        if (sizes.size() < 2) {
            throw ConfigError("Mlp needs at least an input and an output layer");
        }
        for (std::size_t s : sizes) {
            if (s == 0) throw ConfigError("Mlp layer sizes must be positive");
        }
        Mlp m;
        m.sizes_ = std::move(sizes);
        m.seed_ = seed;
        m.layout();
        SplitMix64 rng(seed);
        for (std::size_t l = 0; l + 1 < m.sizes_.size(); ++l) {
            double* w = m.params_.data() + m.w_off_[l];
            for (std::size_t i = 0; i < m.sizes_[l + 1] * m.sizes_[l]; ++i) {
                w[i] = rng.truncated_normal(sigma);
            }
        }
        return m;
    }

    /// Builds a network from explicit per-layer weights (row-major out x in) and biases.
    static Mlp from_layers(std::vector<std::size_t> sizes, const std::vector<std::vector<double>>& weights,
                           const std::vector<std::vector<double>>& biases, std::uint64_t seed = 0)
    {
        Mlp m = init(std::move(sizes), seed);
        if (weights.size() != m.layers() || biases.size() != m.layers()) {
            throw ConfigError("Mlp::from_layers: layer count mismatch");
        }
        for (std::size_t l = 0; l < m.layers(); ++l) {
            if (weights[l].size() != m.sizes_[l + 1] * m.sizes_[l] || biases[l].size() != m.sizes_[l + 1]) {
                throw ConfigError("Mlp::from_layers: shape mismatch in layer " + std::to_string(l));
            }
            std::copy(weights[l].begin(), weights[l].end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.w_off_[l]));
            std::copy(biases[l].begin(), biases[l].end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.b_off_[l]));
        }
        return m;
    }

    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::size_t layers() const { return sizes_.size() - 1; }
    std::size_t input_size() const { return sizes_.front(); }
    std::size_t output_size() const { return sizes_.back(); }
    std::uint64_t seed() const { return seed_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    std::span<const double> weights(std::size_t l) const
    {
        return {params_.data() + w_off_[l], sizes_[l + 1] * sizes_[l]};
    }
    std::span<const double> biases(std::size_t l) const { return {params_.data() + b_off_[l], sizes_[l + 1]}; }

    std::vector<double> forward(std::span<const double> input) const
    {
        Tape tape;
        forward(input, tape);
        return {tape.acts.back().data(), tape.acts.back().data() + output_size()};
    }

    void forward(std::span<const double> input, Tape& tape) const
    {
        if (input.size() != input_size()) {
            throw ConfigError("Mlp::forward: input has " + std::to_string(input.size()) + " entries, expected "
                              + std::to_string(input_size()));
        }
        forward_batch(Eigen::Map<const Matrix>(input.data(), static_cast<Eigen::Index>(input.size()), 1), tape);
    }

    /// Columns of x are inputs; the last tape entry holds the outputs.
    void forward_batch(const Eigen::Ref<const Matrix>& x, Tape& tape) const
    {
        if (static_cast<std::size_t>(x.rows()) != input_size()) {
            throw ConfigError("Mlp::forward_batch: input rows do not match the first layer");
        }
        tape.acts.resize(sizes_.size());
        tape.acts[0] = x;
        for (std::size_t l = 0; l < layers(); ++l) {
            Matrix& y = tape.acts[l + 1];
            y.noalias() = weight_map(l) * tape.acts[l];
            y.colwise() += bias_map(l);
            if (l + 1 < layers()) y = y.array().tanh().matrix();
        }
    }

    /// Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
    /// Returns d(loss)/d(input) when `input_grad` is non-null.
    void backward(const Tape& tape, std::span<const double> dout, std::vector<double>& grad,
                  std::vector<double>* input_grad = nullptr) const
    {
        Matrix d = Eigen::Map<const Matrix>(dout.data(), static_cast<Eigen::Index>(dout.size()), 1);
        Matrix gin;
        backward_batch(tape, d, grad, input_grad != nullptr ? &gin : nullptr);
        if (input_grad != nullptr) input_grad->assign(gin.data(), gin.data() + gin.size());
    }

    void backward_batch(const Tape& tape, const Matrix& dout, std::vector<double>& grad,
                        Matrix* input_grad = nullptr) const
    {
        if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
        Matrix delta = dout;
        for (std::size_t l = layers(); l-- > 0;) {
            const auto nin = static_cast<Eigen::Index>(sizes_[l]);
            const auto nout = static_cast<Eigen::Index>(sizes_[l + 1]);
            if (l + 1 < layers()) {
                delta.array() *= 1.0 - tape.acts[l + 1].array().square();
            }
            Eigen::Map<RowMatrix> gw(grad.data() + w_off_[l], nout, nin);
            Eigen::Map<Eigen::VectorXd> gb(grad.data() + b_off_[l], nout);
            gw.noalias() += delta * tape.acts[l].transpose();
            gb += delta.rowwise().sum();
            if (l > 0 || input_grad != nullptr) {
                Matrix prev = weight_map(l).transpose() * delta;
                delta.swap(prev);
            }
        }
        if (input_grad != nullptr) *input_grad = delta;
    }

    Normalizer input_norm;
    Normalizer output_norm;

private:
    Eigen::Map<const RowMatrix> weight_map(std::size_t l) const
    {
        return {params_.data() + w_off_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
                static_cast<Eigen::Index>(sizes_[l])};
    }
    Eigen::Map<const Eigen::VectorXd> bias_map(std::size_t l) const
    {
        return {params_.data() + b_off_[l], static_cast<Eigen::Index>(sizes_[l + 1])};
    }

    void layout()
    {
        w_off_.clear();
        b_off_.clear();
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            w_off_.push_back(off);
            off += sizes_[l + 1] * sizes_[l];
            b_off_.push_back(off);
            off += sizes_[l + 1];
        }
        params_.assign(off, 0.0);
    }

    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> w_off_;
    std::vector<std::size_t> b_off_;
    std::vector<double> params_;
    std::uint64_t seed_ = 0;
};

class Adam {
public:
    explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad)
    {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

struct Sample {
    std::vector<double> input;
    std::vector<double> target;
};

struct TrainReport {
    std::size_t epochs = 0;
    double train_loss = std::numeric_limits<double>::quiet_NaN();
    double validation_loss = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> history;
};

/// Mean squared error over all samples and output components.
inline double mse(const Mlp& net, const std::vector<Sample>& data, std::vector<double>* grad = nullptr)
{
    if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto n = static_cast<Eigen::Index>(data.size());
    Mlp::Matrix x(static_cast<Eigen::Index>(net.input_size()), n);
    Mlp::Matrix t(static_cast<Eigen::Index>(net.output_size()), n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Sample& s = data[static_cast<std::size_t>(k)];
        if (s.input.size() != net.input_size() || s.target.size() != net.output_size()) {
            throw ConfigError("mse: sample shape does not match the network");
        }
        for (std::size_t j = 0; j < s.input.size(); ++j) x(static_cast<Eigen::Index>(j), k) = s.input[j];
        for (std::size_t j = 0; j < s.target.size(); ++j) t(static_cast<Eigen::Index>(j), k) = s.target[j];
    }
    Mlp::Tape tape;
    net.forward_batch(x, tape);
    const Mlp::Matrix r = tape.acts.back() - t;
    const double denom = static_cast<double>(r.size());
    if (grad != nullptr) {
        grad->assign(net.params().size(), 0.0);
        net.backward_batch(tape, (2.0 / denom) * r, *grad);
    }
    return r.squaredNorm() / denom;
}

/// Full-batch Adam on the MSE loss.
inline TrainReport train(Mlp& net, const std::vector<Sample>& data, std::size_t epochs, double lr,
                         const std::vector<Sample>& validation = {})
{
    if (data.empty()) throw ConfigError("train: empty dataset");
    if (!(lr > 0.0)) throw ConfigError("train: learning rate must be positive");
    Adam opt(net.params().size(), lr);
    TrainReport rep;
    rep.history.reserve(epochs);
    std::vector<double> grad;
    for (std::size_t e = 0; e < epochs; ++e) {
        const double loss = mse(net, data, &grad);
        if (!std::isfinite(loss)) {
            throw NumericalError("train: loss became non-finite at epoch " + std::to_string(e));
        }
        rep.history.push_back(loss);
        opt.step(net.params(), grad);
    }
    rep.epochs = epochs;
    rep.train_loss = mse(net, data);
    if (!validation.empty()) rep.validation_loss = mse(net, validation);
    return rep;
}

}  // namespace ompath
