#include <catch2/catch_amalgamated.hpp>

#include "tamlab/rng.hpp"
#include "tamlab/txrx.hpp"

using namespace tamlab;

namespace {

arma::cx_mat random_cx(int rows, int cols, Rng &rng) {
    arma::cx_mat x(static_cast<arma::uword>(rows), static_cast<arma::uword>(cols));
    for (auto &v : x)
        v = rng.cnormal();
    return x;
}

// Expanded-form MSE matrix for receiver V on user k:
//   E = (V^H A V) - V^H H W_k - W_k^H H^H V + I, with A the received-signal
//   covariance H W W^H H^H + sigma^2 I. Trace is the summed stream MSE.
double expanded_mse(const arma::cx_mat &h, const arma::cx_mat &w_all, const arma::cx_mat &w_k,
                    double noise, const arma::cx_mat &v) {
    const arma::cx_mat hw = h * w_all;
    arma::cx_mat a = hw * hw.t();
    a.diag() += noise;
    const arma::cx_mat hk = h * w_k;
    const arma::cx_mat e =
        v.t() * a * v - v.t() * hk - hk.t() * v +
        arma::cx_mat(hk.n_cols, hk.n_cols, arma::fill::eye);
    return arma::trace(e).real();
}

} // namespace

TEST_CASE("eigen_beamformer diagonal covariance places the dominant axis") {
    const ArrayGeometry g{1, 2, 0.5}; // per_pol = 2, M = 4
    arma::cx_mat r(2, 2, arma::fill::zeros);
    r(0, 0) = 4.0;
    r(1, 1) = 1.0;
    const arma::cx_mat w = eigen_beamformer(r, 2, 1.0, g);
    REQUIRE(w.n_rows == 4);
    REQUIRE(w.n_cols == 2);
    REQUIRE(w(0, 0).real() == Catch::Approx(1.0));
    REQUIRE(w(2, 1).real() == Catch::Approx(1.0));
    REQUIRE(std::abs(w(1, 0)) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(std::abs(w(2, 0)) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(std::abs(w(3, 0)) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(std::abs(w(0, 1)) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("eigen_beamformer identity covariance resolves the tie to e_1") {
    const ArrayGeometry g{2, 2, 0.5}; // per_pol = 4
    const arma::cx_mat r(4, 4, arma::fill::eye);
    const arma::cx_mat w = eigen_beamformer(r, 1, 1.0, g);
    REQUIRE(w(0, 0).real() == Catch::Approx(1.0));
    for (arma::uword i = 1; i < 8; ++i)
        REQUIRE(std::abs(w(i, 0)) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("eigen_beamformer matches a power-iteration oracle") {
    const ArrayGeometry g{2, 2, 0.5};
    Rng rng(31);
    // PSD with well-separated spectrum so power iteration converges crisply.
    arma::cx_mat q, rr;
    arma::qr(q, rr, random_cx(4, 4, rng));
    const arma::vec d{7.0, 3.0, 1.0, 0.25};
    const arma::cx_mat r = q * arma::diagmat(d) * q.t();

    arma::cx_vec v(4, arma::fill::ones);
    v /= arma::norm(v);
    for (int it = 0; it < 4000; ++it) {
        v = r * v;
        v /= arma::norm(v);
    }
    v = sign_fixed(v);

    const arma::cx_mat w = eigen_beamformer(r, 1, 1.0, g);
    const arma::cx_vec u = w.col(0).subvec(0, 3);
    REQUIRE(arma::norm(u - v) <= 1e-8);
}

TEST_CASE("eigen_beamformer zeroes muted rows exactly") {
    const ArrayGeometry g{2, 2, 0.5};
    Rng rng(32);
    arma::cx_mat x = random_cx(3, 4, rng);
    arma::cx_mat r = x.t() * x;
    // Mute positions 1 and 3 exactly, as apply_mask would.
    for (arma::uword i : {arma::uword(1), arma::uword(3)}) {
        r.row(i).zeros();
        r.col(i).zeros();
    }
    const arma::cx_mat w = eigen_beamformer(r, 2, 2.0, g);
    for (int l = 0; l < 2; ++l) {
        REQUIRE(w(1 + 4 * static_cast<arma::uword>(l), static_cast<arma::uword>(l)) ==
                std::complex<double>(0.0, 0.0));
        REQUIRE(w(3 + 4 * static_cast<arma::uword>(l), static_cast<arma::uword>(l)) ==
                std::complex<double>(0.0, 0.0));
    }
    // Unit norm on the active support, scaled by sqrt(P).
    REQUIRE(arma::norm(w.col(0)) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("eigen_beamformer rejects invalid input") {
    const ArrayGeometry g{2, 2, 0.5};
    arma::cx_mat neg(4, 4, arma::fill::zeros);
    neg.diag() -= 1.0;
    REQUIRE_THROWS_AS(eigen_beamformer(neg, 1, 1.0, g), std::invalid_argument);
    const arma::cx_mat r(4, 4, arma::fill::eye);
    REQUIRE_THROWS_AS(eigen_beamformer(r, 3, 1.0, g), std::invalid_argument);
    REQUIRE_THROWS_AS(eigen_beamformer(arma::cx_mat(3, 3, arma::fill::eye), 1, 1.0, g),
                      std::invalid_argument);
}

TEST_CASE("mmse_receiver limits") {
    const arma::cx_mat h(2, 2, arma::fill::eye);
    const double p = 4.0;
    const arma::cx_mat w = std::sqrt(p) * arma::cx_mat(2, 2, arma::fill::eye);

    SECTION("noiseless limit inverts the gain") {
        const arma::cx_mat v = mmse_receiver(h, w, w, 1e-12);
        REQUIRE(arma::norm(v - (1.0 / std::sqrt(p)) * arma::cx_mat(2, 2, arma::fill::eye),
                           "fro") <= 1e-5);
    }
    SECTION("high-noise limit is the scaled matched filter") {
        const double noise = 1e12;
        const arma::cx_mat v = mmse_receiver(h, w, w, noise);
        REQUIRE(arma::norm(noise * v - h * w, "fro") <= 1e-3 * arma::norm(h * w, "fro"));
    }
    SECTION("invalid noise power throws") {
        REQUIRE_THROWS_AS(mmse_receiver(h, w, w, 0.0), std::invalid_argument);
    }
}

TEST_CASE("mmse_receiver beats 100 random receivers on a 2-user instance") {
    Rng rng(41);
    const arma::cx_mat h = random_cx(2, 4, rng); // user 0, N_k = 2
    const arma::cx_mat w = random_cx(4, 4, rng); // 2 users x 2 streams
    const arma::cx_mat w0 = w.cols(0, 1);
    const double noise = 0.5;
    const arma::cx_mat v = mmse_receiver(h, w, w0, noise);
    const double best = expanded_mse(h, w, w0, noise, v);
    for (int trial = 0; trial < 100; ++trial) {
        const arma::cx_mat vr = random_cx(2, 2, rng);
        REQUIRE(expanded_mse(h, w, w0, noise, vr) >= best - 1e-12);
    }
}

TEST_CASE("mmse_error_covariance closed forms") {
    SECTION("zero precoder gives identity error") {
        const arma::cx_mat h(2, 3, arma::fill::ones);
        const arma::cx_mat w(3, 2, arma::fill::zeros);
        arma::cx_mat r(2, 2, arma::fill::eye);
        const arma::cx_mat e = mmse_error_covariance(h, w, r);
        REQUIRE(arma::norm(e - arma::cx_mat(2, 2, arma::fill::eye), "fro") <= 1e-14);
    }
    SECTION("scalar closed form") {
        arma::cx_mat h(1, 1), w(1, 1), r(1, 1);
        h(0, 0) = {1.5, -0.5};
        w(0, 0) = {0.3, 0.8};
        const double noise = 0.7;
        r(0, 0) = noise;
        const arma::cx_mat e = mmse_error_covariance(h, w, r);
        const double hw2 = std::norm(h(0, 0) * w(0, 0));
        REQUIRE(e(0, 0).real() == Catch::Approx(1.0 / (1.0 + hw2 / noise)).epsilon(1e-12));
    }
    SECTION("singular interference covariance throws") {
        const arma::cx_mat h(2, 2, arma::fill::eye);
        const arma::cx_mat w(2, 2, arma::fill::eye);
        const arma::cx_mat r(2, 2, arma::fill::zeros);
        REQUIRE_THROWS_AS(mmse_error_covariance(h, w, r), std::runtime_error);
    }
}

TEST_CASE("error covariance equals the expanded form at the MMSE receiver") {
    // Identity chain: inverting through the receiver covariance (total signal)
    // must agree with the interference-excluded form to high precision.
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const int n_rx = 2 + static_cast<int>(rng.next_u64() % 3);
        const arma::cx_mat h = random_cx(n_rx, 6, rng);
        const arma::cx_mat w = random_cx(6, 4, rng);
        const arma::cx_mat w0 = w.cols(0, 1);
        const arma::cx_mat w_int = w.cols(2, 3);
        const double noise = 0.1 + rng.uniform();

        const arma::cx_mat hw = h * w;
        arma::cx_mat a = hw * hw.t();
        a.diag() += noise;
        const arma::cx_mat hk = h * w0;
        const arma::cx_mat e9 =
            arma::cx_mat(2, 2, arma::fill::eye) - hk.t() * arma::solve(a, hk);

        const arma::cx_mat hi = h * w_int;
        arma::cx_mat r_ipn = hi * hi.t();
        r_ipn.diag() += noise;
        const arma::cx_mat e10 = mmse_error_covariance(h, w0, r_ipn);

        REQUIRE(arma::norm(e9 - e10, "fro") <= 1e-10 * arma::norm(e10, "fro"));
    }
}

TEST_CASE("sinr_from_mse arithmetic and validation") {
    REQUIRE(sinr_from_mse(arma::cx_mat(3, 3, arma::fill::eye)) == Catch::Approx(0.0));
    arma::cx_mat e1(1, 1);
    e1(0, 0) = 0.5;
    REQUIRE(sinr_from_mse(e1) == Catch::Approx(1.0));
    arma::cx_mat e2(2, 2, arma::fill::zeros);
    e2(0, 0) = 0.2;
    e2(1, 1) = 0.5;
    REQUIRE(sinr_from_mse(e2) == Catch::Approx(2.5));
    e2(1, 1) = 1.5;
    REQUIRE_THROWS_AS(sinr_from_mse(e2), std::invalid_argument);
    e2(1, 1) = 0.0;
    REQUIRE_THROWS_AS(sinr_from_mse(e2), std::invalid_argument);
}

TEST_CASE("user_rate closed-form cases") {
    RateConfig rc;
    SECTION("zero precoder gives zero rate") {
        arma::cx_cube h(2, 4, 3, arma::fill::ones);
        const arma::cx_mat w(4, 2, arma::fill::zeros);
        const UserRateReport rep = user_rate(h, w, 1.0, rc);
        REQUIRE(rep.rate_bits == 0.0);
        REQUIRE(rep.se_per_stream == 0.0);
        REQUIRE(rep.mean_sinr == 0.0);
    }
    SECTION("full-band slot rate at the threshold SE is 0.3 Mbit") {
        // One full-band PRB: 273 * 360 kHz = 98.28 MHz over a 0.5 ms slot.
        RateConfig full;
        full.bandwidth_per_prb = 273 * 360.0e3;
        full.slot_duration = 0.5e-3;
        full.se_cap = 8.0;
        const double sinr = std::pow(2.0, 6.105) - 1.0;
        arma::cx_cube h(1, 1, 1);
        h(0, 0, 0) = 1.0;
        arma::cx_mat w(1, 1);
        w(0, 0) = std::sqrt(sinr); // noise power 1 makes SINR = |hw|^2
        const UserRateReport rep = user_rate(h, w, 1.0, full);
        REQUIRE(rep.rate_bits == Catch::Approx(0.3e6).epsilon(1e-3));
        REQUIRE(rep.se_user == Catch::Approx(6.105).epsilon(1e-9));
    }
    SECTION("the SE cap clamps per stream") {
        RateConfig capped;
        capped.se_cap = 8.0;
        const double sinr = std::pow(2.0, 20.0) - 1.0;
        arma::cx_cube h(1, 1, 2);
        h(0, 0, 0) = 1.0;
        h(0, 0, 1) = 1.0;
        arma::cx_mat w(1, 1);
        w(0, 0) = std::sqrt(sinr);
        const UserRateReport rep = user_rate(h, w, 1.0, capped);
        REQUIRE(rep.se_per_stream == Catch::Approx(8.0));
        REQUIRE(rep.rate_bits ==
                Catch::Approx(2 * 8.0 * capped.bandwidth_per_prb * capped.slot_duration));
    }
}

TEST_CASE("zf_precoder inverts the channel") {
    SECTION("identity channel") {
        const arma::cx_mat h(3, 3, arma::fill::eye);
        REQUIRE(arma::norm(zf_precoder(h) - h, "fro") <= 1e-12);
    }
    SECTION("orthonormal rows give the Hermitian transpose") {
        arma::cx_mat h(2, 4, arma::fill::zeros);
        h(0, 0) = 1.0;
        h(1, 2) = 1.0;
        REQUIRE(arma::norm(zf_precoder(h) - h.t(), "fro") <= 1e-12);
    }
    SECTION("random 3x6 residual") {
        Rng rng(51);
        const arma::cx_mat h = random_cx(3, 6, rng);
        const arma::cx_mat w = zf_precoder(h);
        REQUIRE(arma::norm(h * w - arma::cx_mat(3, 3, arma::fill::eye), "fro") <= 1e-8);
    }
    SECTION("rank-deficient channel reports singular") {
        arma::cx_mat h(2, 4, arma::fill::ones); // identical rows
        REQUIRE_THROWS_AS(zf_precoder(h), std::runtime_error);
    }
}

TEST_CASE("zf_user_rate closed forms and the norm identity") {
    SECTION("identity channel at unit SNR") {
        const arma::cx_mat h(2, 2, arma::fill::eye);
        REQUIRE(zf_user_rate(h, 0, 1.0, 1.0, 5.0e6) == Catch::Approx(5.0e6));
    }
    SECTION("orthonormal rows have unit effective gain") {
        arma::cx_mat h(2, 4, arma::fill::zeros);
        h(0, 1) = 1.0;
        h(1, 3) = 1.0;
        REQUIRE(zf_effective_gain(h, 0) == Catch::Approx(1.0));
        REQUIRE(zf_effective_gain(h, 1) == Catch::Approx(1.0));
    }
    SECTION("norm form equals inverse form") {
        Rng rng(53);
        for (int trial = 0; trial < 20; ++trial) {
            const arma::cx_mat h = random_cx(3, 7, rng);
            const arma::cx_mat w = zf_precoder(h);
            for (int k = 0; k < 3; ++k) {
                const double norm_form = 1.0 / std::pow(arma::norm(w.col(k)), 2.0);
                REQUIRE(zf_effective_gain(h, k) ==
                        Catch::Approx(norm_form).epsilon(1e-10));
            }
        }
    }
    SECTION("full Eq.-15 evaluation agrees once interference vanishes") {
        Rng rng(54);
        const arma::cx_mat h = random_cx(3, 7, rng);
        const arma::cx_mat w = zf_precoder(h);
        const double p = 0.8, noise = 0.25, bw = 1.0e6;
        for (int k = 0; k < 3; ++k) {
            double interference = 0.0;
            for (int j = 0; j < 3; ++j)
                if (j != k)
                    interference += p * std::norm(arma::as_scalar(h.row(k) * w.col(j))) /
                                    std::pow(arma::norm(w.col(j)), 2.0);
            const double signal = p * std::norm(arma::as_scalar(h.row(k) * w.col(k))) /
                                  std::pow(arma::norm(w.col(k)), 2.0);
            const double direct = bw * std::log2(1.0 + signal / (interference + noise));
            REQUIRE(zf_user_rate(h, k, p, noise, bw) == Catch::Approx(direct).epsilon(1e-9));
        }
    }
}
