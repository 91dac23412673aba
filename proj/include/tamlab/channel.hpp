#pragma once

#include <armadillo>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace tamlab {

// Ray-based narrowband-per-PRB channel generator. Each user's channel is a
// sum of paths_per_user plane waves over the planar array: random
// azimuth/elevation per path, exponentially decaying path powers, a per-PRB
// phase progression from a random delay, an independent phase offset on the
// second polarization, and i.i.d. complex-normal receive-antenna responses
// (user antennas are treated as uncorrelated).
struct ChannelParams {
    int j_users = 10;        // users dropped in the sector
    int n_prb = 12;          // resource blocks carried per slot
    int paths_per_user = 8;  // plane-wave paths per user
    int n_rx_antennas = 4;   // N_k, same for every user
    double noise_power = 1.0e-2;  // sigma_n^2, per PRB
    double stream_power = 1.0e-2; // P, per stream per PRB, fixed under masking
    double max_delay_phase_per_prb = 0.8; // radians of phase slope, upper bound
    double path_decay = 0.6;              // exponential path-power profile rate

    void validate() const {
        if (j_users < 1 || n_prb < 1 || paths_per_user < 1 || n_rx_antennas < 1)
            throw std::invalid_argument("ChannelParams: counts must be >= 1");
        if (noise_power <= 0.0 || stream_power <= 0.0)
            throw std::invalid_argument("ChannelParams: powers must be positive");
    }
};

// One slot's worth of user channels. users[k] is a cube with slice t holding
// the N_k x M channel matrix of user k on PRB t.
struct ChannelSet {
    ArrayGeometry geometry;
    int n_prb = 0;
    double noise_power = 0.0;
    double stream_power = 0.0;
    std::vector<arma::cx_cube> users;

    int n_users() const { return static_cast<int>(users.size()); }
    int n_rx() const { return users.empty() ? 0 : static_cast<int>(users[0].n_rows); }
};

namespace detail {

constexpr std::uint64_t kPlacementTag = 0x504c4143;  // per-drop geometry draws
constexpr std::uint64_t kFadingTag = 0x46414445;     // per-slot fading draws

struct PathPlacement {
    double azimuth;
    double elevation;
    double weight; // power share, sums to 1 over paths
};

inline std::vector<PathPlacement> draw_placement(const ChannelParams &p, std::uint64_t drop_seed,
                                                 int user) {
    Rng rng(mix_seed(drop_seed, kPlacementTag, static_cast<std::uint64_t>(user)));
    std::vector<PathPlacement> paths(p.paths_per_user);
    const double pi = 3.14159265358979323846;
    double wsum = 0.0;
    for (int i = 0; i < p.paths_per_user; ++i) {
        paths[i].azimuth = rng.uniform(-pi / 3.0, pi / 3.0);   // 120 degree sector
        paths[i].elevation = rng.uniform(-pi / 6.0, pi / 6.0); // 60 degree spread
        paths[i].weight = std::exp(-p.path_decay * i);
        wsum += paths[i].weight;
    }
    for (auto &path : paths)
        path.weight /= wsum;
    return paths;
}

inline arma::cx_rowvec steering_row(const ArrayGeometry &g, double azimuth, double elevation) {
    const double pi = 3.14159265358979323846;
    const double u = std::sin(azimuth) * std::cos(elevation);
    const double v = std::sin(elevation);
    arma::cx_rowvec s(static_cast<arma::uword>(g.per_pol()));
    for (int e = 0; e < g.per_pol(); ++e) {
        const double phase = 2.0 * pi * g.element_spacing *
                             (g.col_of_per_pol(e) * u + g.row_of_per_pol(e) * v);
        s[static_cast<arma::uword>(e)] = std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return s;
}

} // namespace detail

// Generates one slot realization. Placement (angles, path powers) depends only
// on drop_seed; fading (gains, delays, polarization offsets, rx responses) is
// redrawn per slot. Deterministic under (drop_seed, slot, all counts).
inline ChannelSet generate_drop_slot(const ArrayGeometry &geometry, const ChannelParams &params,
                                     std::uint64_t drop_seed, std::uint32_t slot) {
    geometry.validate();
    params.validate();

    ChannelSet set;
    set.geometry = geometry;
    set.n_prb = params.n_prb;
    set.noise_power = params.noise_power;
    set.stream_power = params.stream_power;
    set.users.reserve(static_cast<std::size_t>(params.j_users));

    const int m_total = geometry.total();
    const int per_pol = geometry.per_pol();

    for (int u = 0; u < params.j_users; ++u) {
        const auto placement = detail::draw_placement(params, drop_seed, u);
        Rng fading(mix_seed(drop_seed, detail::kFadingTag, slot, static_cast<std::uint64_t>(u)));

        arma::cx_cube h(static_cast<arma::uword>(params.n_rx_antennas),
                        static_cast<arma::uword>(m_total),
                        static_cast<arma::uword>(params.n_prb), arma::fill::zeros);

        const auto n_paths = static_cast<arma::uword>(placement.size());
        arma::cx_vec gains(n_paths);
        arma::vec chis(n_paths);
        arma::cx_vec pol_offsets(n_paths);
        arma::cx_mat rx_all(static_cast<arma::uword>(params.n_rx_antennas), n_paths);
        for (arma::uword p = 0; p < n_paths; ++p) {
            gains[p] = std::sqrt(placement[p].weight) * fading.phase();
            chis[p] = fading.uniform(0.0, params.max_delay_phase_per_prb);
            pol_offsets[p] = fading.phase();
            for (int n = 0; n < params.n_rx_antennas; ++n)
                rx_all(static_cast<arma::uword>(n), p) = fading.cnormal();
        }

        // Receive responses: within each user, consecutive paths (in blocks of
        // the receive antenna count) are orthonormalized and scaled to a fixed
        // norm.  Receive-side power fading and cross-path receive interference
        // then vanish from the per-user covariance, so link quality is a
        // deterministic function of the path geometry alone.
        const auto block = static_cast<arma::uword>(params.n_rx_antennas);
        const double rx_scale = std::sqrt(static_cast<double>(params.n_rx_antennas));
        for (arma::uword start = 0; start < n_paths; start += block) {
            const arma::uword stop = std::min(start + block, n_paths) - 1;
            arma::cx_mat q, r;
            if (arma::qr_econ(q, r, rx_all.cols(start, stop)))
                rx_all.cols(start, stop) = rx_scale * q;
        }

        for (arma::uword p = 0; p < n_paths; ++p) {
            const arma::cx_rowvec s =
                detail::steering_row(geometry, placement[p].azimuth, placement[p].elevation);
            arma::cx_rowvec tx(static_cast<arma::uword>(m_total));
            tx.head(static_cast<arma::uword>(per_pol)) = s;
            tx.tail(static_cast<arma::uword>(per_pol)) = pol_offsets[p] * s;

            const arma::cx_mat outer = rx_all.col(p) * tx;
            for (int t = 0; t < params.n_prb; ++t) {
                const std::complex<double> rot(std::cos(-chis[p] * t), std::sin(-chis[p] * t));
                h.slice(static_cast<arma::uword>(t)) += (gains[p] * rot) * outer;
            }
        }
        set.users.push_back(std::move(h));
    }
    return set;
}

// Single-call form: one independent slot realization per seed.
inline ChannelSet generate_drop(const ArrayGeometry &geometry, const ChannelParams &params,
                                std::uint64_t seed) {
    return generate_drop_slot(geometry, params, seed, 0);
}

// Wideband transmit-side covariance: averages H^H H over PRBs (receive
// antennas are summed inside the product). Identity channel on one PRB gives
// the identity back, unnormalized by N_k.
inline arma::cx_mat channel_covariance(const arma::cx_cube &h) {
    if (h.n_slices == 0)
        throw std::invalid_argument("channel_covariance: no PRBs");
    arma::cx_mat r(h.n_cols, h.n_cols, arma::fill::zeros);
    for (arma::uword t = 0; t < h.n_slices; ++t)
        r += h.slice(t).t() * h.slice(t);
    return r / static_cast<double>(h.n_slices);
}

// Average of the two per-polarization diagonal blocks of a full covariance.
inline arma::cx_mat per_pol_avg_covariance(const arma::cx_mat &r, const ArrayGeometry &g) {
    const arma::uword m = static_cast<arma::uword>(g.total());
    const arma::uword p = static_cast<arma::uword>(g.per_pol());
    if (r.n_rows != m || r.n_cols != m)
        throw std::invalid_argument("per_pol_avg_covariance: covariance does not match geometry");
    return 0.5 * (r.submat(0, 0, p - 1, p - 1) + r.submat(p, p, m - 1, m - 1));
}

struct CovariancePair {
    arma::cx_mat full;    // M x M
    arma::cx_mat per_pol; // (M/2) x (M/2)
};

inline CovariancePair covariance_pair(const arma::cx_cube &h, const ArrayGeometry &g) {
    CovariancePair out;
    out.full = channel_covariance(h);
    out.per_pol = per_pol_avg_covariance(out.full, g);
    return out;
}

// Greedy semi-orthogonal user selection. Candidates are ordered by dominant
// eigenvalue of their per-pol covariance (descending, ties to the lower user
// index); a candidate is admitted while the accumulated |u_c^H u_a| against
// already admitted users stays below corr_threshold. Returns admission order;
// may return fewer than k_max users.
inline std::vector<int> schedule_users(const ChannelSet &channels,
                                       const std::vector<arma::cx_mat> &per_pol_covariances,
                                       int k_max, double corr_threshold) {
    if (k_max < 1)
        throw std::invalid_argument("schedule_users: k_max must be >= 1");
    if (per_pol_covariances.size() != channels.users.size())
        throw std::invalid_argument("schedule_users: covariance count does not match users");

    const int j = channels.n_users();
    std::vector<DominantEig> eigs(static_cast<std::size_t>(j));
    for (int u = 0; u < j; ++u)
        eigs[static_cast<std::size_t>(u)] = dominant_eig(per_pol_covariances[static_cast<std::size_t>(u)]);

    std::vector<int> order(static_cast<std::size_t>(j));
    for (int u = 0; u < j; ++u)
        order[static_cast<std::size_t>(u)] = u;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return eigs[static_cast<std::size_t>(a)].value > eigs[static_cast<std::size_t>(b)].value;
    });

    std::vector<int> admitted;
    for (int candidate : order) {
        if (static_cast<int>(admitted.size()) == k_max)
            break;
        double corr = 0.0;
        for (int a : admitted)
            corr += std::abs(arma::cdot(eigs[static_cast<std::size_t>(candidate)].vec,
                                        eigs[static_cast<std::size_t>(a)].vec));
        if (admitted.empty() || corr < corr_threshold)
            admitted.push_back(candidate);
    }
    return admitted;
}

} // namespace tamlab
