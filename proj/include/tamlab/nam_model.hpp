#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nam_arch.hpp"
#include "rng.hpp"

namespace tamlab {

// Classifier over slot features: one valid 3x3 convolution with ReLU, a
// hidden dense layer with ReLU, and a softmax output layer. All parameters
// live in a single flat vector so optimizers and serializers can treat the
// model as one array; segment offsets and row-major shapes are fixed by the
// accessors below.
class NamModel {
public:
    NamModel(const NamArchitecture &arch, int x1, int x2, int channels, int n_classes)
        : arch_(arch), x1_(x1), x2_(x2), channels_(channels), n_classes_(n_classes) {
        arch_.validate();
        if (x1 < arch_.conv_kernel_h || x2 < arch_.conv_kernel_w)
            throw std::invalid_argument("NamModel: input smaller than the convolution kernel");
        if (channels < 1 || n_classes < 1)
            throw std::invalid_argument("NamModel: channels and classes must be >= 1");
        conv_w_len_ = static_cast<std::size_t>(arch_.conv_channels) *
                      static_cast<std::size_t>(channels_) *
                      static_cast<std::size_t>(arch_.conv_kernel_h) *
                      static_cast<std::size_t>(arch_.conv_kernel_w);
        conv_b_len_ = static_cast<std::size_t>(arch_.conv_channels);
        dense1_w_len_ = static_cast<std::size_t>(arch_.hidden_units) * flat_len();
        dense1_b_len_ = static_cast<std::size_t>(arch_.hidden_units);
        out_w_len_ =
            static_cast<std::size_t>(n_classes_) * static_cast<std::size_t>(arch_.hidden_units);
        out_b_len_ = static_cast<std::size_t>(n_classes_);
        params_.assign(conv_w_len_ + conv_b_len_ + dense1_w_len_ + dense1_b_len_ + out_w_len_ +
                           out_b_len_,
                       0.0);
    }

    const NamArchitecture &arch() const { return arch_; }
    int x1() const { return x1_; }
    int x2() const { return x2_; }
    int channels() const { return channels_; }
    int n_classes() const { return n_classes_; }
    int out_h() const { return x1_ - arch_.conv_kernel_h + 1; }
    int out_w() const { return x2_ - arch_.conv_kernel_w + 1; }
    std::size_t input_len() const {
        return static_cast<std::size_t>(x1_) * static_cast<std::size_t>(x2_) *
               static_cast<std::size_t>(channels_);
    }
    std::size_t flat_len() const {
        return static_cast<std::size_t>(arch_.conv_channels) * static_cast<std::size_t>(out_h()) *
               static_cast<std::size_t>(out_w());
    }

    // Flat parameter layout: [conv_w | conv_b | dense1_w | dense1_b | out_w | out_b].
    std::vector<double> &params() { return params_; }
    const std::vector<double> &params() const { return params_; }
    std::size_t conv_w_off() const { return 0; }
    std::size_t conv_b_off() const { return conv_w_len_; }
    std::size_t dense1_w_off() const { return conv_w_len_ + conv_b_len_; }
    std::size_t dense1_b_off() const { return dense1_w_off() + dense1_w_len_; }
    std::size_t out_w_off() const { return dense1_b_off() + dense1_b_len_; }
    std::size_t out_b_off() const { return out_w_off() + out_w_len_; }
    std::size_t conv_w_len() const { return conv_w_len_; }
    std::size_t conv_b_len() const { return conv_b_len_; }
    std::size_t dense1_w_len() const { return dense1_w_len_; }
    std::size_t dense1_b_len() const { return dense1_b_len_; }
    std::size_t out_w_len() const { return out_w_len_; }
    std::size_t out_b_len() const { return out_b_len_; }

    // conv_w(k, c, a, b): output channel k, input channel c, kernel row a, col b.
    double &conv_w(int k, int c, int a, int b) {
        return params_[conv_w_off() + conv_w_idx(k, c, a, b)];
    }
    double conv_w(int k, int c, int a, int b) const {
        return params_[conv_w_off() + conv_w_idx(k, c, a, b)];
    }
    double &conv_b(int k) { return params_[conv_b_off() + static_cast<std::size_t>(k)]; }
    double conv_b(int k) const { return params_[conv_b_off() + static_cast<std::size_t>(k)]; }
    // dense1_w(j, i): hidden unit j, flattened conv activation i.
    double &dense1_w(int j, std::size_t i) {
        return params_[dense1_w_off() + static_cast<std::size_t>(j) * flat_len() + i];
    }
    double dense1_w(int j, std::size_t i) const {
        return params_[dense1_w_off() + static_cast<std::size_t>(j) * flat_len() + i];
    }
    double &dense1_b(int j) { return params_[dense1_b_off() + static_cast<std::size_t>(j)]; }
    double dense1_b(int j) const { return params_[dense1_b_off() + static_cast<std::size_t>(j)]; }
    // out_w(n, j): class n, hidden unit j.
    double &out_w(int n, int j) {
        return params_[out_w_off() +
                       static_cast<std::size_t>(n) * static_cast<std::size_t>(arch_.hidden_units) +
                       static_cast<std::size_t>(j)];
    }
    double out_w(int n, int j) const {
        return params_[out_w_off() +
                       static_cast<std::size_t>(n) * static_cast<std::size_t>(arch_.hidden_units) +
                       static_cast<std::size_t>(j)];
    }
    double &out_b(int n) { return params_[out_b_off() + static_cast<std::size_t>(n)]; }
    double out_b(int n) const { return params_[out_b_off() + static_cast<std::size_t>(n)]; }

    // Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), drawn
    // in parameter-layout order; biases stay zero.
    void init_weights(std::uint64_t seed) {
        Rng rng(seed);
        const double conv_scale =
            1.0 / std::sqrt(static_cast<double>(channels_) * arch_.conv_kernel_h *
                            arch_.conv_kernel_w);
        const double dense1_scale = 1.0 / std::sqrt(static_cast<double>(flat_len()));
        const double out_scale = 1.0 / std::sqrt(static_cast<double>(arch_.hidden_units));
        for (std::size_t i = 0; i < conv_w_len_; ++i)
            params_[conv_w_off() + i] = rng.uniform(-conv_scale, conv_scale);
        for (std::size_t i = 0; i < dense1_w_len_; ++i)
            params_[dense1_w_off() + i] = rng.uniform(-dense1_scale, dense1_scale);
        for (std::size_t i = 0; i < out_w_len_; ++i)
            params_[out_w_off() + i] = rng.uniform(-out_scale, out_scale);
        for (std::size_t i = 0; i < conv_b_len_; ++i)
            params_[conv_b_off() + i] = 0.0;
        for (std::size_t i = 0; i < dense1_b_len_; ++i)
            params_[dense1_b_off() + i] = 0.0;
        for (std::size_t i = 0; i < out_b_len_; ++i)
            params_[out_b_off() + i] = 0.0;
    }

private:
    std::size_t conv_w_idx(int k, int c, int a, int b) const {
        return ((static_cast<std::size_t>(k) * static_cast<std::size_t>(channels_) +
                 static_cast<std::size_t>(c)) *
                    static_cast<std::size_t>(arch_.conv_kernel_h) +
                static_cast<std::size_t>(a)) *
                   static_cast<std::size_t>(arch_.conv_kernel_w) +
               static_cast<std::size_t>(b);
    }

    NamArchitecture arch_;
    int x1_, x2_, channels_, n_classes_;
    std::size_t conv_w_len_ = 0, conv_b_len_ = 0;
    std::size_t dense1_w_len_ = 0, dense1_b_len_ = 0;
    std::size_t out_w_len_ = 0, out_b_len_ = 0;
    std::vector<double> params_;
};

// Intermediate activations kept for the backward pass.
struct ForwardCache {
    std::vector<double> x;        // input copy, (m*x2 + f)*channels + c
    std::vector<double> conv_pre; // pre-activation, (k*out_h + i)*out_w + j
    std::vector<double> flat;     // post-ReLU conv activations, same layout
    std::vector<double> h1_pre;   // hidden pre-activation
    std::vector<double> h1;       // hidden post-ReLU
    std::vector<double> z;        // output logits
    std::vector<double> yhat;     // softmax probabilities
};

// Forward pass on one feature tensor laid out as (m*x2 + f)*channels + c.
inline ForwardCache forward(const NamModel &model, const std::vector<float> &input) {
    if (input.size() != model.input_len())
        throw std::invalid_argument("forward: input length does not match the model");
    const int kh = model.arch().conv_kernel_h;
    const int kw = model.arch().conv_kernel_w;
    const int nk = model.arch().conv_channels;
    const int nc = model.channels();
    const int oh = model.out_h();
    const int ow = model.out_w();
    const int hidden = model.arch().hidden_units;
    const int classes = model.n_classes();

    ForwardCache c;
    c.x.resize(input.size());
    for (std::size_t i = 0; i < input.size(); ++i)
        c.x[i] = static_cast<double>(input[i]);

    const auto xat = [&](int m, int f, int ch) {
        return c.x[(static_cast<std::size_t>(m) * model.x2() + static_cast<std::size_t>(f)) *
                       static_cast<std::size_t>(nc) +
                   static_cast<std::size_t>(ch)];
    };

    c.conv_pre.resize(model.flat_len());
    c.flat.resize(model.flat_len());
    for (int k = 0; k < nk; ++k)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                double acc = model.conv_b(k);
                for (int ch = 0; ch < nc; ++ch)
                    for (int a = 0; a < kh; ++a)
                        for (int b = 0; b < kw; ++b)
                            acc += model.conv_w(k, ch, a, b) * xat(i + a, j + b, ch);
                const std::size_t idx =
                    (static_cast<std::size_t>(k) * oh + static_cast<std::size_t>(i)) * ow +
                    static_cast<std::size_t>(j);
                c.conv_pre[idx] = acc;
                c.flat[idx] = acc > 0.0 ? acc : 0.0;
            }

    c.h1_pre.resize(static_cast<std::size_t>(hidden));
    c.h1.resize(static_cast<std::size_t>(hidden));
    for (int j = 0; j < hidden; ++j) {
        double acc = model.dense1_b(j);
        for (std::size_t i = 0; i < model.flat_len(); ++i)
            acc += model.dense1_w(j, i) * c.flat[i];
        c.h1_pre[static_cast<std::size_t>(j)] = acc;
        c.h1[static_cast<std::size_t>(j)] = acc > 0.0 ? acc : 0.0;
    }

    c.z.resize(static_cast<std::size_t>(classes));
    for (int n = 0; n < classes; ++n) {
        double acc = model.out_b(n);
        for (int j = 0; j < hidden; ++j)
            acc += model.out_w(n, j) * c.h1[static_cast<std::size_t>(j)];
        c.z[static_cast<std::size_t>(n)] = acc;
    }

    // Max-shifted softmax.
    double zmax = c.z[0];
    for (double v : c.z)
        zmax = std::max(zmax, v);
    c.yhat.resize(c.z.size());
    double denom = 0.0;
    for (std::size_t n = 0; n < c.z.size(); ++n) {
        c.yhat[n] = std::exp(c.z[n] - zmax);
        denom += c.yhat[n];
    }
    for (double &v : c.yhat)
        v /= denom;
    return c;
}

// Backward pass: gradient of the loss with respect to every parameter, in the
// flat layout of NamModel::params(), given dL/dyhat at the cached activations.
inline std::vector<double> backward(const NamModel &model, const ForwardCache &c,
                                    const std::vector<double> &dL_dyhat) {
    if (dL_dyhat.size() != c.yhat.size())
        throw std::invalid_argument("backward: gradient length does not match the output");
    const int kh = model.arch().conv_kernel_h;
    const int kw = model.arch().conv_kernel_w;
    const int nk = model.arch().conv_channels;
    const int nc = model.channels();
    const int oh = model.out_h();
    const int ow = model.out_w();
    const int hidden = model.arch().hidden_units;
    const int classes = model.n_classes();

    std::vector<double> grad(model.params().size(), 0.0);

    // Softmax Jacobian: dL/dz_n = yhat_n * (dL/dyhat_n - sum_m dL/dyhat_m yhat_m).
    double dot = 0.0;
    for (std::size_t n = 0; n < c.yhat.size(); ++n)
        dot += dL_dyhat[n] * c.yhat[n];
    std::vector<double> dz(c.yhat.size());
    for (std::size_t n = 0; n < c.yhat.size(); ++n)
        dz[n] = c.yhat[n] * (dL_dyhat[n] - dot);

    // Output layer.
    std::vector<double> dh1(static_cast<std::size_t>(hidden), 0.0);
    for (int n = 0; n < classes; ++n) {
        grad[model.out_b_off() + static_cast<std::size_t>(n)] = dz[static_cast<std::size_t>(n)];
        for (int j = 0; j < hidden; ++j) {
            grad[model.out_w_off() +
                 static_cast<std::size_t>(n) * static_cast<std::size_t>(hidden) +
                 static_cast<std::size_t>(j)] =
                dz[static_cast<std::size_t>(n)] * c.h1[static_cast<std::size_t>(j)];
            dh1[static_cast<std::size_t>(j)] +=
                model.out_w(n, j) * dz[static_cast<std::size_t>(n)];
        }
    }

    // Hidden layer (ReLU mask from the pre-activation).
    std::vector<double> dflat(model.flat_len(), 0.0);
    for (int j = 0; j < hidden; ++j) {
        const double d =
            c.h1_pre[static_cast<std::size_t>(j)] > 0.0 ? dh1[static_cast<std::size_t>(j)] : 0.0;
        grad[model.dense1_b_off() + static_cast<std::size_t>(j)] = d;
        for (std::size_t i = 0; i < model.flat_len(); ++i) {
            grad[model.dense1_w_off() + static_cast<std::size_t>(j) * model.flat_len() + i] =
                d * c.flat[i];
            dflat[i] += model.dense1_w(j, i) * d;
        }
    }

    // Convolution (ReLU mask from the pre-activation).
    const auto xat = [&](int m, int f, int ch) {
        return c.x[(static_cast<std::size_t>(m) * model.x2() + static_cast<std::size_t>(f)) *
                       static_cast<std::size_t>(nc) +
                   static_cast<std::size_t>(ch)];
    };
    for (int k = 0; k < nk; ++k)
        for (int i = 0; i < oh; ++i)
            for (int j2 = 0; j2 < ow; ++j2) {
                const std::size_t idx =
                    (static_cast<std::size_t>(k) * oh + static_cast<std::size_t>(i)) * ow +
                    static_cast<std::size_t>(j2);
                const double d = c.conv_pre[idx] > 0.0 ? dflat[idx] : 0.0;
                grad[model.conv_b_off() + static_cast<std::size_t>(k)] += d;
                for (int ch = 0; ch < nc; ++ch)
                    for (int a = 0; a < kh; ++a)
                        for (int b = 0; b < kw; ++b) {
                            const std::size_t widx =
                                ((static_cast<std::size_t>(k) * nc + static_cast<std::size_t>(ch)) *
                                     kh +
                                 static_cast<std::size_t>(a)) *
                                    kw +
                                static_cast<std::size_t>(b);
                            grad[model.conv_w_off() + widx] += d * xat(i + a, j2 + b, ch);
                        }
            }
    return grad;
}

} // namespace tamlab
