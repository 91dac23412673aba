#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tamlab {

// Reliability-biasing loss knobs. lambda = 0 selects the plain cross-entropy
// path bit for bit; alpha < 1 makes over-prediction (too many antennas)
// cheaper than under-prediction.
struct LossConfig {
    double lambda = 1.0;
    double alpha = 0.1;
    double beta = 10.0;

    void validate() const {
        if (!(lambda >= 0.0) || !(alpha >= 0.0) || !(beta > 0.0))
            throw std::invalid_argument(
                "LossConfig: lambda, alpha must be >= 0 and beta must be > 0");
    }
};

constexpr double kProbClip = 1e-12;

// Cross entropy -sum y_i log yhat_i with probabilities clipped at 1e-12.
inline double cross_entropy(const std::vector<double> &y, const std::vector<double> &yhat) {
    if (y.size() != yhat.size() || y.empty())
        throw std::invalid_argument("cross_entropy: vectors must be non-empty and equal length");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] != 0.0)
            acc -= y[i] * std::log(std::max(yhat[i], kProbClip));
    return acc;
}

// Differentiable argmax surrogate: sum_i softmax(beta * v)_i * i. Sharp beta
// recovers the argmax index; equal entries give the mean index exactly.
inline double softargmax(const std::vector<double> &v, double beta) {
    if (v.empty())
        throw std::invalid_argument("softargmax: empty vector");
    double vmax = v[0];
    for (double x : v)
        vmax = std::max(vmax, x);
    std::vector<double> e(v.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        e[i] = std::exp(beta * (v[i] - vmax));
        denom += e[i];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        acc += (e[i] / denom) * static_cast<double>(i);
    return acc;
}

// Squared index error, discounted by alpha when the prediction overshoots the
// label (predicting more antennas than needed never violates feasibility).
inline double asymmetric_penalty(double y_index, double yhat_index, double alpha) {
    const double d = y_index - yhat_index;
    return d > 0.0 ? d * d : alpha * d * d;
}

// Cross entropy plus lambda times the asymmetric penalty between the
// softargmax indices of the label and the prediction.
inline double total_loss(const std::vector<double> &y, const std::vector<double> &yhat,
                         const LossConfig &cfg) {
    const double ce = cross_entropy(y, yhat);
    if (cfg.lambda == 0.0)
        return ce;
    const double pen =
        asymmetric_penalty(softargmax(y, cfg.beta), softargmax(yhat, cfg.beta), cfg.alpha);
    return ce + cfg.lambda * pen;
}

// Analytic d total_loss / d yhat. The label's softargmax is a constant; the
// prediction's softargmax has Jacobian beta * s_i * (i - value) with
// s = softmax(beta * yhat).
inline std::vector<double> total_loss_grad(const std::vector<double> &y,
                                           const std::vector<double> &yhat,
                                           const LossConfig &cfg) {
    if (y.size() != yhat.size() || y.empty())
        throw std::invalid_argument("total_loss_grad: vectors must be non-empty and equal length");
    std::vector<double> g(y.size(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && yhat[i] > kProbClip)
            g[i] = -y[i] / yhat[i];
    if (cfg.lambda == 0.0)
        return g;

    double vmax = yhat[0];
    for (double x : yhat)
        vmax = std::max(vmax, x);
    std::vector<double> s(yhat.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        s[i] = std::exp(cfg.beta * (yhat[i] - vmax));
        denom += s[i];
    }
    double value = 0.0;
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        s[i] /= denom;
        value += s[i] * static_cast<double>(i);
    }
    const double d = softargmax(y, cfg.beta) - value;
    const double dpen_dd = d > 0.0 ? 2.0 * d : 2.0 * cfg.alpha * d;
    for (std::size_t i = 0; i < yhat.size(); ++i)
        g[i] += cfg.lambda * dpen_dd * (-cfg.beta * s[i] * (static_cast<double>(i) - value));
    return g;
}

} // namespace tamlab
