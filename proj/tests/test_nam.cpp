#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <limits>
#include <vector>

#include "tamlab/channel.hpp"
#include "tamlab/checkpoint.hpp"
#include "tamlab/features.hpp"
#include "tamlab/nam_loss.hpp"
#include "tamlab/nam_model.hpp"
#include "tamlab/nam_train.hpp"
#include "tamlab/txrx.hpp"

using namespace tamlab;

namespace {

const ArrayGeometry kSmall{4, 2, 0.5}; // per_pol = 8, M = 16

ChannelParams small_params() {
    ChannelParams p;
    p.j_users = 4;
    p.n_prb = 3;
    p.paths_per_user = 2;
    p.n_rx_antennas = 2;
    p.noise_power = 1e-2;
    p.stream_power = 1e-2;
    return p;
}

// Feature tensor index (m, f, k) for a k_max-user sample on geometry g.
std::size_t fidx(const ArrayGeometry &g, int m, int f, int k, int k_max) {
    (void)g;
    return (static_cast<std::size_t>(m) * kFeatureColumns + static_cast<std::size_t>(f)) *
               static_cast<std::size_t>(k_max) +
           static_cast<std::size_t>(k);
}

std::vector<double> l2_normalized(const std::vector<double> &v) {
    double n = 0.0;
    for (double x : v)
        n += x * x;
    n = std::sqrt(n);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = n > 0.0 ? v[i] / n : 0.0;
    return out;
}

NamModel tiny_model(std::uint64_t seed) {
    NamArchitecture arch; // 3x3 kernel, 4 conv channels, 32 hidden units
    NamModel model(arch, 4, 4, 2, 5);
    model.init_weights(seed);
    return model;
}

std::vector<float> random_features(Rng &rng, std::size_t len) {
    std::vector<float> x(len);
    for (auto &v : x)
        v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return x;
}

} // namespace

TEST_CASE("featurize pads absent users and normalizes present ones") {
    const ChannelParams p = small_params();
    const ChannelSet set = generate_drop(kSmall, p, 901);
    const int k_max = 4;
    const std::vector<int> sched{0, 2};
    std::vector<arma::cx_mat> precoders;
    for (int u : sched) {
        const arma::cx_mat r = per_pol_avg_covariance(
            channel_covariance(set.users[static_cast<std::size_t>(u)]), kSmall);
        precoders.push_back(eigen_beamformer(r, 2, p.stream_power, kSmall));
    }

    const std::vector<float> x = featurize(set, sched, precoders, k_max);
    REQUIRE(x.size() == static_cast<std::size_t>(kSmall.per_pol()) * kFeatureColumns * k_max);

    for (int k = 0; k < k_max; ++k)
        for (int f = 0; f < kFeatureColumns; ++f) {
            double norm2 = 0.0;
            for (int m = 0; m < kSmall.per_pol(); ++m) {
                const double v = x[fidx(kSmall, m, f, k, k_max)];
                norm2 += v * v;
            }
            if (k >= static_cast<int>(sched.size())) {
                REQUIRE(norm2 == 0.0); // absent users stay zero
            } else if (f == 1) {
                // The beamformer's per-pol average is real times u; whether the
                // imaginary column is zero depends on u's phase fixing, so only
                // require normalized-or-zero.
                REQUIRE((norm2 == 0.0 || std::abs(norm2 - 1.0) < 1e-5));
            } else {
                REQUIRE(std::abs(norm2 - 1.0) < 1e-5);
            }
        }
}

TEST_CASE("featurize validates its inputs") {
    const ChannelParams p = small_params();
    const ChannelSet set = generate_drop(kSmall, p, 902);
    const arma::cx_mat r =
        per_pol_avg_covariance(channel_covariance(set.users[0]), kSmall);
    const arma::cx_mat w = eigen_beamformer(r, 2, p.stream_power, kSmall);

    REQUIRE_THROWS_AS(featurize(set, {0}, {w}, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(featurize(set, {0, 1, 2}, {w, w, w}, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(featurize(set, {0, 1}, {w}, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(featurize(set, {9}, {w}, 4), std::invalid_argument);
    const arma::cx_mat bad(static_cast<arma::uword>(kSmall.per_pol()), 2, arma::fill::ones);
    REQUIRE_THROWS_AS(featurize(set, {0}, {bad}, 4), std::invalid_argument);
}

TEST_CASE("featurize matches a hand-built single-ray oracle") {
    // One user, channel H(t) = r * [a, c2*a] for every PRB, receive responses
    // r = (2, 0) so the receive average is exactly 1. The polarization-averaged
    // channel is then 0.5*(1 + c2)*a, and the precoder columns are supplied
    // directly, so every feature entry has a closed form.
    const int half = kSmall.per_pol();
    const int k_max = 3;
    std::vector<std::complex<double>> a(static_cast<std::size_t>(half));
    for (int m = 0; m < half; ++m)
        a[static_cast<std::size_t>(m)] =
            std::complex<double>(0.3 * m - 1.0, std::sin(0.7 * m + 0.2));
    const std::complex<double> c2 = std::polar(1.0, 0.9);

    ChannelSet set;
    set.geometry = kSmall;
    set.n_prb = 2;
    set.noise_power = 1e-2;
    set.stream_power = 1e-2;
    arma::cx_cube h(2, static_cast<arma::uword>(kSmall.total()), 2, arma::fill::zeros);
    for (arma::uword t = 0; t < h.n_slices; ++t)
        for (int m = 0; m < half; ++m) {
            h(0, static_cast<arma::uword>(m), t) = 2.0 * a[static_cast<std::size_t>(m)];
            h(0, static_cast<arma::uword>(m + half), t) = 2.0 * c2 * a[static_cast<std::size_t>(m)];
        }
    set.users.push_back(h);
    set.users.push_back(arma::cx_cube(2, static_cast<arma::uword>(kSmall.total()), 2,
                                      arma::fill::zeros)); // silent user

    // Two-column precoder with distinct polarization blocks.
    arma::cx_mat w(static_cast<arma::uword>(kSmall.total()), 2, arma::fill::zeros);
    std::vector<std::complex<double>> v0(static_cast<std::size_t>(half)),
        v1(static_cast<std::size_t>(half));
    for (int m = 0; m < half; ++m) {
        v0[static_cast<std::size_t>(m)] = std::complex<double>(std::cos(0.4 * m), 0.1 * m);
        v1[static_cast<std::size_t>(m)] = std::complex<double>(0.2, -0.05 * m + 0.3);
        w(static_cast<arma::uword>(m), 0) = v0[static_cast<std::size_t>(m)];
        w(static_cast<arma::uword>(m + half), 1) = v1[static_cast<std::size_t>(m)];
    }
    const arma::cx_mat w_zero(static_cast<arma::uword>(kSmall.total()), 2, arma::fill::zeros);

    const std::vector<float> x = featurize(set, {0, 1}, {w, w_zero}, k_max);

    // Expected user-0 vectors, computed independently.
    std::vector<double> re_w(static_cast<std::size_t>(half)), im_w(re_w.size()),
        re_h(re_w.size()), im_h(re_w.size());
    for (int m = 0; m < half; ++m) {
        // Column mean is (v0 + v1)/2 per polarization block stacked; the
        // polarization average halves that again.
        const std::complex<double> wp =
            0.25 * (v0[static_cast<std::size_t>(m)] + v1[static_cast<std::size_t>(m)]);
        const std::complex<double> hp = 0.5 * (1.0 + c2) * a[static_cast<std::size_t>(m)];
        re_w[static_cast<std::size_t>(m)] = wp.real();
        im_w[static_cast<std::size_t>(m)] = wp.imag();
        re_h[static_cast<std::size_t>(m)] = hp.real();
        im_h[static_cast<std::size_t>(m)] = hp.imag();
    }
    const std::vector<std::vector<double>> expected{
        l2_normalized(re_w), l2_normalized(im_w), l2_normalized(re_h), l2_normalized(im_h)};

    for (int f = 0; f < kFeatureColumns; ++f)
        for (int m = 0; m < half; ++m) {
            const double got = x[fidx(kSmall, m, f, 0, k_max)];
            REQUIRE(std::abs(got - expected[static_cast<std::size_t>(f)]
                                           [static_cast<std::size_t>(m)]) < 1e-6);
        }

    // Silent user: zero channel and zero precoder stay exactly zero.
    for (int f = 0; f < kFeatureColumns; ++f)
        for (int m = 0; m < half; ++m)
            REQUIRE(x[fidx(kSmall, m, f, 1, k_max)] == 0.0f);
    // Padded third slice also zero.
    for (int f = 0; f < kFeatureColumns; ++f)
        for (int m = 0; m < half; ++m)
            REQUIRE(x[fidx(kSmall, m, f, 2, k_max)] == 0.0f);
}

TEST_CASE("one-hot labels have exactly one active entry") {
    Sample s;
    s.label = 5;
    const std::vector<float> v = s.one_hot(8);
    int nonzero = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] != 0.0f) {
            ++nonzero;
            REQUIRE(i == 5);
            REQUIRE(v[i] == 1.0f);
        }
    REQUIRE(nonzero == 1);
    REQUIRE_THROWS_AS(s.one_hot(5), std::out_of_range);
}

TEST_CASE("forward matches an independent loop reference") {
    NamModel model = tiny_model(11);
    // Nonzero biases so every parameter class is exercised.
    Rng rng(12);
    for (int k = 0; k < model.arch().conv_channels; ++k)
        model.conv_b(k) = rng.uniform(-0.2, 0.2);
    for (int j = 0; j < model.arch().hidden_units; ++j)
        model.dense1_b(j) = rng.uniform(-0.2, 0.2);
    for (int n = 0; n < model.n_classes(); ++n)
        model.out_b(n) = rng.uniform(-0.2, 0.2);

    const std::vector<float> x = random_features(rng, model.input_len());
    const ForwardCache c = forward(model, x);

    // Reference: same arithmetic, written against a transposed weight read
    // order and plain double buffers.
    const int oh = model.out_h(), ow = model.out_w();
    const int nk = model.arch().conv_channels, nc = model.channels();
    std::vector<double> flat(model.flat_len(), 0.0);
    for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j)
            for (int k = 0; k < nk; ++k) {
                double acc = model.conv_b(k);
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int ch = 0; ch < nc; ++ch)
                            acc += model.conv_w(k, ch, a, b) *
                                   static_cast<double>(
                                       x[(static_cast<std::size_t>(i + a) * model.x2() +
                                          static_cast<std::size_t>(j + b)) *
                                             static_cast<std::size_t>(nc) +
                                         static_cast<std::size_t>(ch)]);
                flat[(static_cast<std::size_t>(k) * oh + static_cast<std::size_t>(i)) * ow +
                     static_cast<std::size_t>(j)] = std::max(acc, 0.0);
            }
    std::vector<double> h1(static_cast<std::size_t>(model.arch().hidden_units));
    for (int j = 0; j < model.arch().hidden_units; ++j) {
        double acc = model.dense1_b(j);
        for (std::size_t i = 0; i < flat.size(); ++i)
            acc += model.dense1_w(j, i) * flat[i];
        h1[static_cast<std::size_t>(j)] = std::max(acc, 0.0);
    }
    std::vector<double> z(static_cast<std::size_t>(model.n_classes()));
    for (int n = 0; n < model.n_classes(); ++n) {
        double acc = model.out_b(n);
        for (int j = 0; j < model.arch().hidden_units; ++j)
            acc += model.out_w(n, j) * h1[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(n)] = acc;
    }
    double zmax = z[0];
    for (double v : z)
        zmax = std::max(zmax, v);
    double denom = 0.0;
    std::vector<double> yref(z.size());
    for (std::size_t n = 0; n < z.size(); ++n) {
        yref[n] = std::exp(z[n] - zmax);
        denom += yref[n];
    }

    double sum = 0.0;
    for (std::size_t n = 0; n < yref.size(); ++n) {
        REQUIRE(std::abs(c.yhat[n] - yref[n] / denom) < 1e-12);
        REQUIRE(c.yhat[n] >= 0.0);
        sum += c.yhat[n];
    }
    REQUIRE(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("zero weights give the uniform distribution and biases pick the argmax") {
    NamArchitecture arch;
    NamModel model(arch, 4, 4, 2, 8); // all parameters zero
    Rng rng(13);
    const std::vector<float> x = random_features(rng, model.input_len());
    const ForwardCache c = forward(model, x);
    for (double v : c.yhat)
        REQUIRE(v == 0.125);

    model.out_b(2) = 3.0;
    Sample s;
    s.features = x;
    s.label = 0;
    REQUIRE(predict(model, s) == 2);

    std::vector<float> bad(model.input_len() + 1, 0.0f);
    REQUIRE_THROWS_AS(forward(model, bad), std::invalid_argument);
}

TEST_CASE("cross entropy reference values") {
    const std::vector<double> onehot3{0.0, 1.0, 0.0};
    REQUIRE(cross_entropy(onehot3, onehot3) == 0.0);

    const std::vector<double> u8(8, 0.125);
    std::vector<double> y8(8, 0.0);
    y8[6] = 1.0;
    REQUIRE(std::abs(cross_entropy(y8, u8) - std::log(8.0)) < 1e-12);

    REQUIRE(std::abs(cross_entropy(onehot3, {0.7, 0.2, 0.1}) + std::log(0.2)) < 1e-12);

    // Clipped at 1e-12: finite even for an exactly-zero predicted probability.
    const double clipped = cross_entropy(onehot3, {1.0, 0.0, 0.0});
    REQUIRE(std::isfinite(clipped));
    REQUIRE(std::abs(clipped + std::log(1e-12)) < 1e-9);

    REQUIRE_THROWS_AS(cross_entropy(onehot3, u8), std::invalid_argument);
    REQUIRE_THROWS_AS(cross_entropy({}, {}), std::invalid_argument);
}

TEST_CASE("softargmax reference values") {
    std::vector<double> e2(8, 0.0);
    e2[2] = 1.0;
    REQUIRE(std::abs(softargmax(e2, 50.0) - 2.0) < 0.01);

    const std::vector<double> u8(8, 0.25);
    REQUIRE(softargmax(u8, 10.0) == 3.5); // equal entries: mean index, exactly

    const std::vector<double> two{0.6, 0.4};
    const double expected = std::exp(10.0 * 0.4) / (std::exp(10.0 * 0.6) + std::exp(10.0 * 0.4));
    REQUIRE(std::abs(softargmax(two, 10.0) - expected) < 1e-12);

    REQUIRE_THROWS_AS(softargmax({}, 10.0), std::invalid_argument);
}

TEST_CASE("asymmetric penalty discounts over-prediction only") {
    REQUIRE(asymmetric_penalty(5.0, 3.0, 0.1) == 4.0);
    REQUIRE(asymmetric_penalty(5.0, 3.0, 1.0) == 4.0);
    REQUIRE(std::abs(asymmetric_penalty(3.0, 5.0, 0.1) - 0.4) < 1e-15);
    REQUIRE(asymmetric_penalty(4.0, 4.0, 0.1) == 0.0);
    // Under-prediction always costs more than the same-size over-prediction.
    for (double gap = 0.5; gap < 4.0; gap += 0.5)
        REQUIRE(asymmetric_penalty(5.0, 5.0 - gap, 0.1) >
                asymmetric_penalty(5.0, 5.0 + gap, 0.1));
    REQUIRE(asymmetric_penalty(5.0, 3.0, 1.0) == asymmetric_penalty(3.0, 5.0, 1.0));
}

TEST_CASE("total loss composes and the symmetric path is bitwise cross entropy") {
    Rng rng(14);
    LossConfig sym;
    sym.lambda = 0.0;
    LossConfig asym; // lambda 1, alpha 0.1, beta 10

    for (int trial = 0; trial < 20; ++trial) {
        const int n = 8;
        std::vector<double> z(n), yhat(n);
        for (auto &v : z)
            v = rng.uniform(-3.0, 3.0);
        double zmax = z[0];
        for (double v : z)
            zmax = std::max(zmax, v);
        double denom = 0.0;
        for (int i = 0; i < n; ++i) {
            yhat[static_cast<std::size_t>(i)] = std::exp(z[static_cast<std::size_t>(i)] - zmax);
            denom += yhat[static_cast<std::size_t>(i)];
        }
        for (auto &v : yhat)
            v /= denom;
        std::vector<double> y(n, 0.0);
        y[static_cast<std::size_t>(rng.uniform_int(0, n - 1))] = 1.0;

        REQUIRE(total_loss(y, yhat, sym) == cross_entropy(y, yhat));
        const double pen = asymmetric_penalty(softargmax(y, asym.beta),
                                              softargmax(yhat, asym.beta), asym.alpha);
        REQUIRE(total_loss(y, yhat, asym) == cross_entropy(y, yhat) + asym.lambda * pen);

        const std::vector<double> g0 = total_loss_grad(y, yhat, sym);
        LossConfig asym_l0 = asym;
        asym_l0.lambda = 0.0;
        const std::vector<double> g1 = total_loss_grad(y, yhat, asym_l0);
        for (int i = 0; i < n; ++i)
            REQUIRE(g0[static_cast<std::size_t>(i)] == g1[static_cast<std::size_t>(i)]);
    }

    // Perfect prediction: zero loss in both modes.
    std::vector<double> onehot(8, 0.0);
    onehot[4] = 1.0;
    REQUIRE(total_loss(onehot, onehot, sym) == 0.0);
    REQUIRE(total_loss(onehot, onehot, asym) == 0.0);
}

TEST_CASE("loss gradient matches central finite differences") {
    Rng rng(15);
    LossConfig cfg; // lambda 1, alpha 0.1, beta 10
    const int n = 8;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> yhat(n);
        double denom = 0.0;
        for (auto &v : yhat) {
            v = std::exp(rng.uniform(-2.0, 2.0));
            denom += v;
        }
        for (auto &v : yhat)
            v /= denom;
        std::vector<double> y(n, 0.0);
        y[static_cast<std::size_t>(rng.uniform_int(0, n - 1))] = 1.0;

        const std::vector<double> g = total_loss_grad(y, yhat, cfg);
        for (int probe = 0; probe < 5; ++probe) {
            const int i = rng.uniform_int(0, n - 1);
            const double h = 1e-6;
            std::vector<double> up = yhat, dn = yhat;
            up[static_cast<std::size_t>(i)] += h;
            dn[static_cast<std::size_t>(i)] -= h;
            const double fd = (total_loss(y, up, cfg) - total_loss(y, dn, cfg)) / (2.0 * h);
            const double an = g[static_cast<std::size_t>(i)];
            REQUIRE(std::abs(fd - an) / std::max(1.0, std::abs(fd) + std::abs(an)) < 1e-5);
        }
    }
}

TEST_CASE("parameter gradient matches central finite differences") {
    NamModel model = tiny_model(16);
    Rng rng(17);
    Sample s;
    s.features = random_features(rng, model.input_len());
    s.label = 3;
    const std::vector<double> y = [&] {
        std::vector<double> v(static_cast<std::size_t>(model.n_classes()), 0.0);
        v[s.label] = 1.0;
        return v;
    }();
    LossConfig cfg; // lambda 1, alpha 0.1, beta 10

    const ForwardCache c = forward(model, s.features);
    const std::vector<double> analytic = backward(model, c, total_loss_grad(y, c.yhat, cfg));
    REQUIRE(analytic.size() == model.params().size());

    const auto loss_at = [&]() {
        const ForwardCache cc = forward(model, s.features);
        return total_loss(y, cc.yhat, cfg);
    };

    double worst = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
        const std::size_t i = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(model.params().size()) - 1));
        const double w0 = model.params()[i];
        const double h = 1e-5 * std::max(1.0, std::abs(w0));
        model.params()[i] = w0 + h;
        const double up = loss_at();
        model.params()[i] = w0 - h;
        const double dn = loss_at();
        model.params()[i] = w0;
        const double fd = (up - dn) / (2.0 * h);
        const double an = analytic[i];
        const double rel = std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an));
        worst = std::max(worst, rel);
        REQUIRE(rel < 1e-4);
    }
    REQUIRE(worst < 1e-4);
}

TEST_CASE("a single sample is overfit with strictly decreasing loss") {
    NamModel model = tiny_model(18);
    Rng rng(19);
    Sample s;
    s.features = random_features(rng, model.input_len());
    s.label = 2;
    s.split = 0;
    const std::vector<Sample> data{s};

    LossConfig cfg;
    TrainOptions opts;
    opts.epochs = 1;
    opts.batch_size = 1;
    opts.learning_rate = 0.05;
    opts.seed = 20;

    std::vector<double> losses;
    losses.push_back(mean_loss(model, data, {0}, cfg));
    for (int step = 0; step < 10; ++step) {
        train(model, data, Phase::asymmetric, cfg, opts);
        losses.push_back(mean_loss(model, data, {0}, cfg));
    }
    // Strict decrease until the loss hits its numerical floor (the sample is
    // fully memorized well before ten steps at this learning rate).
    for (std::size_t i = 1; i < losses.size(); ++i)
        REQUIRE(losses[i] < std::max(losses[i - 1], 1e-9));
    REQUIRE(losses.back() < 1e-6);
}

TEST_CASE("training reduces loss on a memorizable set and logs both splits") {
    NamModel model = tiny_model(21);
    Rng rng(22);
    std::vector<Sample> data;
    for (int i = 0; i < 32; ++i) {
        Sample s;
        s.features = random_features(rng, model.input_len());
        s.label = static_cast<std::uint8_t>(i % model.n_classes());
        s.split = (i % 8 == 7) ? 1 : 0; // 28 train, 4 validation
        data.push_back(std::move(s));
    }

    LossConfig cfg;
    TrainOptions opts;
    opts.epochs = 40;
    opts.batch_size = 8;
    opts.learning_rate = 5e-3;
    opts.seed = 23;

    const TrainHistory hist = train(model, data, Phase::asymmetric, cfg, opts);
    REQUIRE(hist.train_loss.size() == 40);
    REQUIRE(hist.val_loss.size() == 40);
    REQUIRE(hist.train_loss.back() < 0.5 * hist.train_loss.front());
    for (double v : hist.train_loss)
        REQUIRE(std::isfinite(v));
}

TEST_CASE("the symmetric phase trains bitwise identically to lambda zero") {
    Rng rng(24);
    std::vector<Sample> data;
    NamModel a = tiny_model(25);
    for (int i = 0; i < 12; ++i) {
        Sample s;
        s.features = random_features(rng, a.input_len());
        s.label = static_cast<std::uint8_t>(i % a.n_classes());
        s.split = 0;
        data.push_back(std::move(s));
    }
    NamModel b = a;

    LossConfig biased; // lambda 1: would change training if it leaked in
    LossConfig plain;
    plain.lambda = 0.0;
    TrainOptions opts;
    opts.epochs = 3;
    opts.batch_size = 4;
    opts.seed = 26;

    train(a, data, Phase::symmetric, biased, opts);
    train(b, data, Phase::asymmetric, plain, opts);
    for (std::size_t i = 0; i < a.params().size(); ++i)
        REQUIRE(a.params()[i] == b.params()[i]);
}

TEST_CASE("training rejects empty datasets and reports divergence") {
    NamModel model = tiny_model(27);
    LossConfig cfg;
    TrainOptions opts;
    opts.epochs = 1;

    std::vector<Sample> no_train;
    Sample v;
    Rng rng(28);
    v.features = random_features(rng, model.input_len());
    v.label = 1;
    v.split = 1; // validation only
    no_train.push_back(v);
    REQUIRE_THROWS_AS(train(model, no_train, Phase::symmetric, cfg, opts),
                      std::invalid_argument);

    Sample bad;
    bad.features = random_features(rng, model.input_len());
    bad.features[0] = std::numeric_limits<float>::infinity();
    bad.label = 0;
    bad.split = 0;
    const std::vector<Sample> diverging{bad};
    REQUIRE_THROWS_AS(train(model, diverging, Phase::symmetric, cfg, opts), std::runtime_error);
}

TEST_CASE("evaluate reports counts, confusion identities, and flag handling") {
    NamArchitecture arch;
    NamModel model(arch, 4, 4, 2, 4);
    model.out_b(2) = 5.0; // constant predictor: class 2
    Rng rng(29);

    std::vector<Sample> data;
    const auto add = [&](int label, bool flagged) {
        Sample s;
        s.features = random_features(rng, model.input_len());
        s.label = static_cast<std::uint8_t>(label);
        s.flags = flagged ? 1 : 0;
        data.push_back(std::move(s));
    };
    add(0, false);
    add(0, false);
    add(0, false);
    add(2, false);
    add(2, false);
    add(3, false);
    add(1, true);
    add(1, true);

    const EvalMetrics m = evaluate(model, data);
    REQUIRE(m.n_evaluated == 6);
    REQUIRE(m.n_excluded == 2);
    REQUIRE(std::abs(m.accuracy - 2.0 / 6.0) < 1e-15);
    REQUIRE(std::abs(m.qos_guarantee - 5.0 / 6.0) < 1e-15);

    // Row-stochastic confusion; the empty row carries its diagonal.
    for (int i = 0; i < 4; ++i) {
        const double row = arma::accu(m.confusion.row(static_cast<arma::uword>(i)));
        REQUIRE(std::abs(row - 1.0) < 1e-12);
    }
    REQUIRE(m.confusion(0, 2) == 1.0);
    REQUIRE(m.confusion(1, 1) == 1.0); // no label-1 samples evaluated
    REQUIRE(m.confusion(2, 2) == 1.0);
    REQUIRE(m.confusion(3, 2) == 1.0);

    // Identities: accuracy and qos recomposed from confusion and priors.
    double acc = 0.0, qos = 0.0;
    for (int i = 0; i < 4; ++i) {
        acc += m.priors(static_cast<arma::uword>(i)) *
               m.confusion(static_cast<arma::uword>(i), static_cast<arma::uword>(i));
        for (int j = i; j < 4; ++j)
            qos += m.priors(static_cast<arma::uword>(i)) *
                   m.confusion(static_cast<arma::uword>(i), static_cast<arma::uword>(j));
    }
    // The empty label-1 row has prior zero, so its synthetic diagonal does not
    // perturb either identity.
    REQUIRE(std::abs(acc - m.accuracy) < 1e-12);
    REQUIRE(std::abs(qos - m.qos_guarantee) < 1e-12);

    const EvalMetrics all = evaluate(model, data, true);
    REQUIRE(all.n_evaluated == 8);
    REQUIRE(all.n_excluded == 0);
    REQUIRE(std::abs(all.accuracy - 2.0 / 8.0) < 1e-15);
    REQUIRE(all.confusion(1, 2) == 1.0);

    const std::vector<Sample> only_flagged{data[6], data[7]};
    REQUIRE_THROWS_AS(evaluate(model, only_flagged), std::invalid_argument);
}

TEST_CASE("checkpoint round trip is bit-identical and validated") {
    NamModel model = tiny_model(30);
    CheckpointProvenance prov;
    prov.init_seed = 30;
    prov.phases = {"symmetric", "asymmetric"};
    prov.loss.lambda = 1.0;
    prov.loss.alpha = 0.1;
    prov.loss.beta = 10.0;
    prov.config_hash = "deadbeefdeadbeef";

    const std::string text1 = checkpoint_text(model, prov);
    const auto path = std::filesystem::temp_directory_path() / "tamlab_ckpt_test.json";
    save_checkpoint(model, prov, path.string());
    const LoadedCheckpoint loaded = load_checkpoint(path.string());
    std::filesystem::remove(path);

    REQUIRE(loaded.model.params().size() == model.params().size());
    for (std::size_t i = 0; i < model.params().size(); ++i)
        REQUIRE(loaded.model.params()[i] ==
                static_cast<double>(static_cast<float>(model.params()[i])));
    REQUIRE(loaded.provenance.init_seed == prov.init_seed);
    REQUIRE(loaded.provenance.phases == prov.phases);
    REQUIRE(loaded.provenance.loss.lambda == prov.loss.lambda);
    REQUIRE(loaded.provenance.config_hash == prov.config_hash);

    // Second serialization is byte-identical: weights are already quantized.
    const std::string text2 = checkpoint_text(loaded.model, loaded.provenance);
    REQUIRE(text1 == text2);

    // Loaded model and re-loaded model agree bit for bit on a forward pass.
    Rng rng(31);
    const std::vector<float> x = random_features(rng, model.input_len());
    const ForwardCache c1 = forward(loaded.model, x);
    const LoadedCheckpoint again = checkpoint_from_json(nlohmann::json::parse(text2));
    const ForwardCache c2 = forward(again.model, x);
    for (std::size_t n = 0; n < c1.yhat.size(); ++n)
        REQUIRE(c1.yhat[n] == c2.yhat[n]);

    // Corrupted documents are rejected.
    nlohmann::json j = nlohmann::json::parse(text1);
    j["shapes"]["hidden_units"] = 31;
    REQUIRE_THROWS_AS(checkpoint_from_json(j), std::runtime_error);
    j = nlohmann::json::parse(text1);
    j["format"] = "other";
    REQUIRE_THROWS_AS(checkpoint_from_json(j), std::runtime_error);
    j = nlohmann::json::parse(text1);
    j["format_version"] = 2;
    REQUIRE_THROWS_AS(checkpoint_from_json(j), std::runtime_error);
    j = nlohmann::json::parse(text1);
    j["activations"] = {"relu", "softmax"};
    REQUIRE_THROWS_AS(checkpoint_from_json(j), std::runtime_error);
}
