#pragma once

#include <algorithm>
#include <armadillo>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "features.hpp"
#include "nam_loss.hpp"
#include "nam_model.hpp"
#include "rng.hpp"

namespace tamlab {

// Training phases: the symmetric phase minimizes plain cross entropy (the
// lambda = 0 code path, bit for bit); the asymmetric phase adds the
// reliability-biasing penalty with the configured lambda.
enum class Phase { symmetric, asymmetric };

struct TrainOptions {
    int epochs = 30;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;

    void validate() const {
        if (epochs < 1 || batch_size < 1)
            throw std::invalid_argument("TrainOptions: epochs and batch_size must be >= 1");
        if (!(learning_rate > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) ||
            !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0))
            throw std::invalid_argument("TrainOptions: invalid optimizer constants");
    }
};

// Mean losses per epoch. val_loss stays empty when the dataset has no
// validation split.
struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
};

namespace detail {

constexpr std::uint64_t kShuffleStream = 0x73687566ULL;

inline std::vector<double> one_hot_double(const Sample &s, int n_classes) {
    if (s.label >= n_classes)
        throw std::invalid_argument("train: sample label outside the class range");
    std::vector<double> y(static_cast<std::size_t>(n_classes), 0.0);
    y[s.label] = 1.0;
    return y;
}

} // namespace detail

// Mean total loss over a sample range, forward passes only.
inline double mean_loss(const NamModel &model, const std::vector<Sample> &samples,
                        const std::vector<std::size_t> &idx, const LossConfig &cfg) {
    double acc = 0.0;
    for (std::size_t i : idx) {
        const ForwardCache c = forward(model, samples[i].features);
        acc += total_loss(detail::one_hot_double(samples[i], model.n_classes()), c.yhat, cfg);
    }
    return acc / static_cast<double>(idx.size());
}

// Minibatch Adam over the dataset's training split (split tag 0), reporting
// mean train loss per epoch and, when a validation split (tag 1) exists, mean
// validation loss per epoch. Optimizer state is local to the call, so a
// second phase starts from fresh Adam moments. Epoch shuffles are seeded from
// opts.seed and the epoch index only. A non-finite batch loss aborts with an
// exception.
inline TrainHistory train(NamModel &model, const std::vector<Sample> &samples, Phase phase,
                          const LossConfig &loss_cfg, const TrainOptions &opts) {
    opts.validate();
    loss_cfg.validate();
    LossConfig cfg = loss_cfg;
    if (phase == Phase::symmetric)
        cfg.lambda = 0.0;

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].split == 0)
            train_idx.push_back(i);
        else if (samples[i].split == 1)
            val_idx.push_back(i);
    }
    if (train_idx.empty())
        throw std::invalid_argument("train: dataset has no training samples");

    const std::size_t n_params = model.params().size();
    std::vector<double> m(n_params, 0.0), v(n_params, 0.0), grad_sum(n_params, 0.0);
    std::uint64_t t = 0;

    TrainHistory hist;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        Rng rng(mix_seed(opts.seed, detail::kShuffleStream, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
            const double bn = static_cast<double>(stop - start);
            std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t p = start; p < stop; ++p) {
                const Sample &s = samples[order[p]];
                const std::vector<double> y = detail::one_hot_double(s, model.n_classes());
                const ForwardCache c = forward(model, s.features);
                batch_loss += total_loss(y, c.yhat, cfg);
                const std::vector<double> g = backward(model, c, total_loss_grad(y, c.yhat, cfg));
                for (std::size_t i = 0; i < n_params; ++i)
                    grad_sum[i] += g[i];
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: loss diverged (non-finite)");
            epoch_loss += batch_loss;

            ++t;
            const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(t));
            for (std::size_t i = 0; i < n_params; ++i) {
                const double g = grad_sum[i] / bn;
                m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g;
                v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g * g;
                model.params()[i] -=
                    opts.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opts.adam_eps);
            }
        }
        hist.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
        if (!val_idx.empty())
            hist.val_loss.push_back(mean_loss(model, samples, val_idx, cfg));
    }
    return hist;
}

// Predicted class: argmax of the output probabilities, lowest index on ties.
inline int predict(const NamModel &model, const Sample &s) {
    const ForwardCache c = forward(model, s.features);
    int best = 0;
    for (std::size_t n = 1; n < c.yhat.size(); ++n)
        if (c.yhat[n] > c.yhat[best])
            best = static_cast<int>(n);
    return best;
}

// Classifier quality on a sample set. qos_guarantee is the fraction whose
// predicted class is at least the labeled class (never fewer active antennas
// than the label asked for). The confusion matrix is row-stochastic over true
// labels; rows with no samples carry a 1 on the diagonal. priors holds the
// empirical label distribution over the evaluated samples.
struct EvalMetrics {
    double accuracy = 0.0;
    double qos_guarantee = 0.0;
    arma::mat confusion;
    arma::vec priors;
    std::size_t n_evaluated = 0;
    std::size_t n_excluded = 0;
};

// Samples flagged full-array-infeasible have no attainable label and are
// excluded from the statistics unless include_flagged is set.
inline EvalMetrics evaluate(const NamModel &model, const std::vector<Sample> &samples,
                            bool include_flagged = false) {
    const int n = model.n_classes();
    arma::mat counts(static_cast<arma::uword>(n), static_cast<arma::uword>(n),
                     arma::fill::zeros);
    EvalMetrics out;
    std::size_t hits = 0, safe = 0, total = 0;
    for (const Sample &s : samples) {
        if (s.flagged_infeasible() && !include_flagged) {
            ++out.n_excluded;
            continue;
        }
        if (s.label >= n)
            throw std::invalid_argument("evaluate: sample label outside the class range");
        const int pred = predict(model, s);
        counts(s.label, static_cast<arma::uword>(pred)) += 1.0;
        hits += (pred == s.label) ? 1u : 0u;
        safe += (pred >= s.label) ? 1u : 0u;
        ++total;
    }
    if (total == 0)
        throw std::invalid_argument("evaluate: no samples to evaluate");

    out.n_evaluated = total;
    out.accuracy = static_cast<double>(hits) / static_cast<double>(total);
    out.qos_guarantee = static_cast<double>(safe) / static_cast<double>(total);
    out.priors = arma::sum(counts, 1) / static_cast<double>(total);
    out.confusion = counts;
    for (int i = 0; i < n; ++i) {
        const double row = arma::accu(counts.row(static_cast<arma::uword>(i)));
        if (row > 0.0)
            out.confusion.row(static_cast<arma::uword>(i)) /= row;
        else
            out.confusion(static_cast<arma::uword>(i), static_cast<arma::uword>(i)) = 1.0;
    }
    return out;
}

} // namespace tamlab
