#pragma once

#include <armadillo>
#include <stdexcept>

#include "geometry.hpp"
#include "linalg.hpp"

namespace tamlab {

struct RateConfig {
    double bandwidth_per_prb = 360.0e3; // Hz
    double slot_duration = 0.5e-3;      // seconds
    double se_cap = 8.0;                // bit/s/Hz per stream, truncated Shannon

    void validate() const {
        if (bandwidth_per_prb <= 0.0 || slot_duration <= 0.0 || se_cap <= 0.0)
            throw std::invalid_argument("RateConfig: all fields must be positive");
    }
};

struct UserRateReport {
    double rate_bits = 0.0;      // bits delivered in one slot, summed over PRBs
    double se_per_stream = 0.0;  // band-average post-cap SE per stream
    double se_user = 0.0;        // l_streams * se_per_stream
    double mean_sinr = 0.0;      // band-average linear SINR
    arma::vec mean_mse;          // band-average MSE per stream
    int l_streams = 0;
};

// Eigen-beamformer on the per-polarization averaged covariance. The dominant
// eigenvector u (unit norm on the active support, deterministic sign) is
// replicated across polarizations as W = I_L (x) u scaled by sqrt(P); stream l
// drives polarization block l, so L is at most the polarization count. Rows of
// muted antennas (exactly-zero covariance diagonal) are exactly zero. An
// all-zero covariance yields an all-zero precoder.
inline arma::cx_mat eigen_beamformer(const arma::cx_mat &r_avg, int l_streams,
                                     double stream_power, const ArrayGeometry &g) {
    const arma::uword p = static_cast<arma::uword>(g.per_pol());
    if (r_avg.n_rows != p || r_avg.n_cols != p)
        throw std::invalid_argument("eigen_beamformer: covariance does not match geometry");
    if (l_streams < 1 || l_streams > ArrayGeometry::polarizations)
        throw std::invalid_argument("eigen_beamformer: l_streams must be 1 or 2");
    if (stream_power <= 0.0)
        throw std::invalid_argument("eigen_beamformer: stream_power must be positive");
    if (!is_hermitian(r_avg))
        throw std::invalid_argument("eigen_beamformer: covariance must be Hermitian");

    // Muted antennas carry exactly-zero diagonal entries (and rows/columns);
    // anything nonzero, including a defective negative diagonal, stays in the
    // support so the PSD check below can see it.
    arma::uvec support(p);
    arma::uword n_active = 0;
    for (arma::uword i = 0; i < p; ++i)
        if (r_avg(i, i).real() != 0.0)
            support[n_active++] = i;
    support.resize(n_active);

    arma::cx_mat w(static_cast<arma::uword>(g.total()), static_cast<arma::uword>(l_streams),
                   arma::fill::zeros);
    if (n_active == 0)
        return w;

    const DominantEig de = dominant_eig(arma::cx_mat(r_avg.submat(support, support)));
    const double scale = std::max(1.0, std::abs(arma::trace(r_avg).real()));
    if (de.value < -1e-10 * scale)
        throw std::invalid_argument("eigen_beamformer: covariance is not positive semidefinite");

    arma::cx_vec u(p, arma::fill::zeros);
    u(support) = de.vec;
    for (int l = 0; l < l_streams; ++l)
        w.col(static_cast<arma::uword>(l))
            .subvec(static_cast<arma::uword>(l) * p, (static_cast<arma::uword>(l) + 1) * p - 1) =
            std::sqrt(stream_power) * u;
    return w;
}

// MMSE receive filter V_k = (H W W^H H^H + sigma^2 I)^{-1} H W_k for one PRB.
// w_all stacks the precoder columns of every co-scheduled user.
inline arma::cx_mat mmse_receiver(const arma::cx_mat &h, const arma::cx_mat &w_all,
                                  const arma::cx_mat &w_user, double noise_power) {
    if (noise_power <= 0.0)
        throw std::invalid_argument("mmse_receiver: noise_power must be positive");
    if (w_all.n_rows != h.n_cols || w_user.n_rows != h.n_cols)
        throw std::invalid_argument("mmse_receiver: precoder rows must match channel columns");
    const arma::cx_mat hw = h * w_all;
    arma::cx_mat a = hw * hw.t();
    a.diag() += noise_power;
    return arma::solve(a, arma::cx_mat(h * w_user), arma::solve_opts::likely_sympd);
}

// MMSE error covariance E_k = (I + W_k^H H_k^H R^{-1} H_k W_k)^{-1}, with R
// the interference-plus-noise covariance at the receiver.
inline arma::cx_mat mmse_error_covariance(const arma::cx_mat &h, const arma::cx_mat &w_user,
                                          const arma::cx_mat &r_ipn) {
    if (r_ipn.n_rows != h.n_rows || r_ipn.n_cols != h.n_rows)
        throw std::invalid_argument("mmse_error_covariance: R must be N_k x N_k");
    if (w_user.n_rows != h.n_cols)
        throw std::invalid_argument("mmse_error_covariance: precoder rows must match channel");
    const arma::cx_mat heff = h * w_user;
    arma::cx_mat t;
    if (!arma::solve(t, r_ipn, heff, arma::solve_opts::likely_sympd + arma::solve_opts::no_approx))
        throw std::runtime_error("mmse_error_covariance: interference covariance not invertible");
    arma::cx_mat inner = heff.t() * t;
    inner.diag() += 1.0;
    arma::cx_mat e;
    if (!arma::inv(e, inner))
        throw std::runtime_error("mmse_error_covariance: inner matrix not invertible");
    return e;
}

// Per-user effective SINR from the MSE diagonal: mean over streams of
// (1/MSE_l - 1). Valid MSE lies in (0, 1]; anything outside (beyond a small
// tolerance) indicates an upstream defect and is rejected.
inline double sinr_from_mse(const arma::cx_mat &e) {
    if (e.n_rows != e.n_cols || e.n_rows == 0)
        throw std::invalid_argument("sinr_from_mse: E must be square and non-empty");
    double acc = 0.0;
    for (arma::uword l = 0; l < e.n_rows; ++l) {
        const std::complex<double> d = e(l, l);
        if (std::abs(d.imag()) > 1e-9)
            throw std::invalid_argument("sinr_from_mse: MSE diagonal must be real");
        const double mse = d.real();
        if (mse <= 0.0 || mse > 1.0 + 1e-9)
            throw std::invalid_argument("sinr_from_mse: MSE outside (0, 1]");
        acc += 1.0 / std::min(mse, 1.0) - 1.0;
    }
    return acc / static_cast<double>(e.n_rows);
}

// Single-user slot rate under the no-interference assumption (R = sigma^2 I).
// Per PRB: error covariance, effective SINR, truncated-Shannon SE per stream;
// bits accumulate as SE * L * bandwidth * slot_duration.
inline UserRateReport user_rate(const arma::cx_cube &h, const arma::cx_mat &w,
                                double noise_power, const RateConfig &rc) {
    rc.validate();
    if (noise_power <= 0.0)
        throw std::invalid_argument("user_rate: noise_power must be positive");
    if (w.n_rows != h.n_cols)
        throw std::invalid_argument("user_rate: precoder rows must match channel columns");
    if (h.n_slices == 0)
        throw std::invalid_argument("user_rate: no PRBs");

    const int l_streams = static_cast<int>(w.n_cols);
    arma::cx_mat r_noise(h.n_rows, h.n_rows, arma::fill::eye);
    r_noise *= noise_power;

    UserRateReport rep;
    rep.l_streams = l_streams;
    rep.mean_mse = arma::vec(static_cast<arma::uword>(l_streams), arma::fill::zeros);
    for (arma::uword t = 0; t < h.n_slices; ++t) {
        const arma::cx_mat e = mmse_error_covariance(h.slice(t), w, r_noise);
        const double sinr = sinr_from_mse(e);
        const double se = std::min(std::log2(1.0 + sinr), rc.se_cap);
        rep.mean_sinr += sinr;
        rep.se_per_stream += se;
        rep.mean_mse += arma::real(e.diag());
        rep.rate_bits += se * l_streams * rc.bandwidth_per_prb * rc.slot_duration;
    }
    const double n = static_cast<double>(h.n_slices);
    rep.mean_sinr /= n;
    rep.se_per_stream /= n;
    rep.mean_mse /= n;
    rep.se_user = rep.se_per_stream * l_streams;
    return rep;
}

// Zero-forcing precoder for K stacked single-antenna users: W = H^H (H H^H)^{-1}.
inline arma::cx_mat zf_precoder(const arma::cx_mat &h) {
    if (h.n_rows == 0 || h.n_cols < h.n_rows)
        throw std::invalid_argument("zf_precoder: need 1 <= K <= M");
    const arma::cx_mat gram = h * h.t();
    arma::cx_mat gram_inv;
    if (!arma::inv(gram_inv, gram))
        throw std::runtime_error("zf_precoder: channel Gram matrix is singular");
    return h.t() * gram_inv;
}

// Effective zero-forcing channel gain b_k = 1 / [(H H^H)^{-1}]_{kk}.
inline double zf_effective_gain(const arma::cx_mat &h, int k) {
    if (k < 0 || static_cast<arma::uword>(k) >= h.n_rows)
        throw std::invalid_argument("zf_effective_gain: user index out of range");
    const arma::cx_mat gram = h * h.t();
    arma::cx_mat gram_inv;
    if (!arma::inv(gram_inv, gram))
        throw std::runtime_error("zf_effective_gain: channel Gram matrix is singular");
    const double d = gram_inv(static_cast<arma::uword>(k), static_cast<arma::uword>(k)).real();
    if (d <= 0.0)
        throw std::runtime_error("zf_effective_gain: Gram inverse diagonal not positive");
    return 1.0 / d;
}

// Zero-forcing per-user rate over one bandwidth chunk (no SE cap: this is the
// analysis-side rate used by the monotonicity studies, not the TAM pipeline).
inline double zf_user_rate(const arma::cx_mat &h, int k, double stream_power,
                           double noise_power, double bandwidth) {
    if (stream_power <= 0.0 || noise_power <= 0.0 || bandwidth <= 0.0)
        throw std::invalid_argument("zf_user_rate: powers and bandwidth must be positive");
    const double b = zf_effective_gain(h, k);
    return bandwidth * std::log2(1.0 + b * stream_power / noise_power);
}

} // namespace tamlab
