#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "channel.hpp"

namespace tamlab {

// Feature columns per user: Re/Im of the polarization-averaged precoder and
// Re/Im of the polarization-averaged channel.
constexpr int kFeatureColumns = 4;

// One labeled slot. Features form an (M/2) x 4 x K real tensor stored
// row-major with the user axis last: index (m, f, k) = (m*4 + f)*K + k.
// Values are quantized to float32 at creation so in-memory and persisted
// datasets are identical.
struct Sample {
    std::vector<float> features;
    std::uint8_t label = 0;
    std::uint32_t drop = 0;
    std::uint32_t slot = 0;
    std::uint8_t n_scheduled = 0;
    std::uint8_t flags = 0; // bit 0: full-array infeasible
    std::uint8_t split = 0; // 0 train, 1 validation, 2 test

    bool flagged_infeasible() const { return (flags & 1u) != 0; }

    std::vector<float> one_hot(int n_classes) const {
        if (label >= n_classes)
            throw std::out_of_range("Sample: label outside class range");
        std::vector<float> v(static_cast<std::size_t>(n_classes), 0.0f);
        v[label] = 1.0f;
        return v;
    }
};

namespace detail {

// L2-normalize in double precision; an all-zero vector stays zero.
inline void store_normalized(const arma::vec &v, std::vector<float> &out, std::size_t base,
                             std::size_t stride) {
    const double n = arma::norm(v, 2);
    for (arma::uword i = 0; i < v.n_elem; ++i) {
        const double x = (n > 0.0) ? v(i) / n : 0.0;
        out[base + static_cast<std::size_t>(i) * stride] = static_cast<float>(x);
    }
}

} // namespace detail

// Model input for one slot: per scheduled user, the full-array precoder and
// the channel are reduced to length-M/2 vectors by averaging the two
// polarization blocks (the channel is first averaged over receive antennas
// and PRBs, the precoder over its stream columns). The four resulting real
// vectors are independently L2-normalized. Slices for absent users (fewer
// than k_max scheduled) stay all-zero.
inline std::vector<float> featurize(const ChannelSet &channels, const std::vector<int> &sched,
                                    const std::vector<arma::cx_mat> &precoders, int k_max) {
    const ArrayGeometry &g = channels.geometry;
    const int half = g.per_pol();
    if (k_max < 1)
        throw std::invalid_argument("featurize: k_max must be >= 1");
    if (static_cast<int>(sched.size()) > k_max)
        throw std::invalid_argument("featurize: more scheduled users than k_max");
    if (precoders.size() != sched.size())
        throw std::invalid_argument("featurize: one precoder per scheduled user required");

    std::vector<float> x(static_cast<std::size_t>(half) * kFeatureColumns *
                             static_cast<std::size_t>(k_max),
                         0.0f);
    const std::size_t k_stride = 1;
    const auto base = [&](int m, int f, int k) {
        return (static_cast<std::size_t>(m) * kFeatureColumns + static_cast<std::size_t>(f)) *
                   static_cast<std::size_t>(k_max) +
               static_cast<std::size_t>(k) * k_stride;
    };

    for (std::size_t i = 0; i < sched.size(); ++i) {
        const int u = sched[i];
        if (u < 0 || u >= channels.n_users())
            throw std::invalid_argument("featurize: user index out of range");
        const arma::cx_cube &h = channels.users[static_cast<std::size_t>(u)];
        const arma::cx_mat &w = precoders[i];
        if (static_cast<int>(w.n_rows) != g.total() || w.n_cols < 1)
            throw std::invalid_argument("featurize: precoder rows must match the full array");

        // Precoder: average stream columns, then the two polarization halves.
        arma::cx_vec w_mean(static_cast<arma::uword>(g.total()), arma::fill::zeros);
        for (arma::uword l = 0; l < w.n_cols; ++l)
            w_mean += w.col(l);
        w_mean /= static_cast<double>(w.n_cols);
        const arma::cx_vec w_pol =
            0.5 * (w_mean.subvec(0, static_cast<arma::uword>(half) - 1) +
                   w_mean.subvec(static_cast<arma::uword>(half),
                                 static_cast<arma::uword>(g.total()) - 1));

        // Channel: average over receive antennas and PRBs, then polarizations.
        arma::cx_rowvec h_mean(static_cast<arma::uword>(g.total()), arma::fill::zeros);
        for (arma::uword t = 0; t < h.n_slices; ++t)
            h_mean += arma::sum(h.slice(t), 0);
        h_mean /= static_cast<double>(h.n_rows * h.n_slices);
        const arma::cx_rowvec h_pol =
            0.5 * (h_mean.subvec(0, static_cast<arma::uword>(half) - 1) +
                   h_mean.subvec(static_cast<arma::uword>(half),
                                 static_cast<arma::uword>(g.total()) - 1));

        const int k = static_cast<int>(i);
        const std::size_t stride =
            static_cast<std::size_t>(kFeatureColumns) * static_cast<std::size_t>(k_max);
        detail::store_normalized(arma::real(w_pol), x, base(0, 0, k), stride);
        detail::store_normalized(arma::imag(w_pol), x, base(0, 1, k), stride);
        detail::store_normalized(arma::real(h_pol).t(), x, base(0, 2, k), stride);
        detail::store_normalized(arma::imag(h_pol).t(), x, base(0, 3, k), stride);
    }
    return x;
}

} // namespace tamlab
