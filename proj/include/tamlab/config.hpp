#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "channel.hpp"
#include "complexity.hpp"
#include "geometry.hpp"
#include "nam_arch.hpp"
#include "nam_loss.hpp"
#include "nam_train.hpp"
#include "tam.hpp"
#include "txrx.hpp"

namespace tamlab {

// Every knob of one experiment: array, channel statistics, scheduler, rate
// model, muting constraints, classifier and its training, dataset shape, and
// all seeds. Everything an artifact depends on hashes through this struct.
struct ExperimentConfig {
    ArrayGeometry geometry;
    ChannelParams channel;

    // Scheduler.
    int k_max = 4;
    double corr_threshold = 0.3;

    // Rates and streams.
    RateConfig rate;
    int l_streams = 2;

    // Muting constraints. r_min is in bits per slot per user.
    double r_min = 0.3e6 * 12.0 / 273.0;
    int m_min = 4;

    // Classifier and training.
    NamArchitecture arch;
    LossConfig loss;
    int epochs_symmetric = 30;
    int epochs_asymmetric = 30;
    int batch_size = 64;
    double learning_rate = 1e-3;

    // Dataset shape. Splits assign whole drops.
    int drops = 40;
    int slots_per_drop = 50;
    double split_train = 0.8;
    double split_val = 0.1;
    double split_test = 0.1;

    // Seeds.
    std::uint64_t seed_channels = 1001;
    std::uint64_t seed_nam_init = 2001;
    std::uint64_t seed_train = 3001;

    int n_classes() const { return n_column_classes(geometry); }

    FpoParams fpo_params() const {
        FpoParams p;
        p.k_users = k_max;
        p.n_rx = channel.n_rx_antennas;
        p.l_streams = l_streams;
        p.n_prb = channel.n_prb;
        return p;
    }

    TamConstraints tam_constraints() const {
        TamConstraints c;
        c.r_min = r_min;
        c.m_min = m_min;
        c.l_streams = l_streams;
        return c;
    }

    TrainOptions train_options(Phase phase) const {
        TrainOptions o;
        o.epochs = (phase == Phase::symmetric) ? epochs_symmetric : epochs_asymmetric;
        o.batch_size = batch_size;
        o.learning_rate = learning_rate;
        o.seed = mix_seed(seed_train, phase == Phase::symmetric ? 1u : 2u);
        return o;
    }

    void validate() const {
        geometry.validate();
        channel.validate();
        rate.validate();
        arch.validate();
        loss.validate();
        if (k_max < 1 || k_max > channel.j_users)
            throw std::invalid_argument("ExperimentConfig: k_max must be in [1, j_users]");
        if (!(corr_threshold > 0.0))
            throw std::invalid_argument("ExperimentConfig: corr_threshold must be positive");
        if (l_streams < 1 || l_streams > ArrayGeometry::polarizations)
            throw std::invalid_argument("ExperimentConfig: l_streams must be 1 or 2");
        if (r_min < 0.0)
            throw std::invalid_argument("ExperimentConfig: r_min must be >= 0");
        if (m_min < 1 || m_min > geometry.per_pol())
            throw std::invalid_argument("ExperimentConfig: m_min must be in [1, M/2]");
        if (epochs_symmetric < 1 || epochs_asymmetric < 1 || batch_size < 1)
            throw std::invalid_argument("ExperimentConfig: epochs and batch_size must be >= 1");
        if (!(learning_rate > 0.0))
            throw std::invalid_argument("ExperimentConfig: learning_rate must be positive");
        if (drops < 1 || slots_per_drop < 1)
            throw std::invalid_argument("ExperimentConfig: drops and slots_per_drop must be >= 1");
        if (split_train < 0.0 || split_val < 0.0 || split_test < 0.0 ||
            std::abs(split_train + split_val + split_test - 1.0) > 1e-9)
            throw std::invalid_argument("ExperimentConfig: split fractions must sum to 1");
        if (geometry.per_pol() < arch.conv_kernel_h || 4 < arch.conv_kernel_w)
            throw std::invalid_argument("ExperimentConfig: feature tensor smaller than kernel");
    }
};

inline void to_json(nlohmann::json &j, const ExperimentConfig &c) {
    j = nlohmann::json{
        {"geometry",
         {{"m_col", c.geometry.m_col},
          {"m_row", c.geometry.m_row},
          {"element_spacing", c.geometry.element_spacing}}},
        {"channel",
         {{"j_users", c.channel.j_users},
          {"n_prb", c.channel.n_prb},
          {"paths_per_user", c.channel.paths_per_user},
          {"n_rx_antennas", c.channel.n_rx_antennas},
          {"noise_power", c.channel.noise_power},
          {"stream_power", c.channel.stream_power},
          {"max_delay_phase_per_prb", c.channel.max_delay_phase_per_prb},
          {"path_decay", c.channel.path_decay}}},
        {"scheduler", {{"k_max", c.k_max}, {"corr_threshold", c.corr_threshold}}},
        {"rates",
         {{"bandwidth_per_prb", c.rate.bandwidth_per_prb},
          {"slot_duration", c.rate.slot_duration},
          {"se_cap", c.rate.se_cap},
          {"l_streams", c.l_streams}}},
        {"tam", {{"r_min", c.r_min}, {"m_min", c.m_min}}},
        {"nam",
         {{"conv_kernel_h", c.arch.conv_kernel_h},
          {"conv_kernel_w", c.arch.conv_kernel_w},
          {"conv_channels", c.arch.conv_channels},
          {"hidden_units", c.arch.hidden_units},
          {"lambda", c.loss.lambda},
          {"alpha", c.loss.alpha},
          {"beta", c.loss.beta},
          {"epochs_symmetric", c.epochs_symmetric},
          {"epochs_asymmetric", c.epochs_asymmetric},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}}},
        {"dataset",
         {{"drops", c.drops},
          {"slots_per_drop", c.slots_per_drop},
          {"split_train", c.split_train},
          {"split_val", c.split_val},
          {"split_test", c.split_test}}},
        {"seeds",
         {{"channels", c.seed_channels},
          {"nam_init", c.seed_nam_init},
          {"train", c.seed_train}}}};
}

inline void from_json(const nlohmann::json &j, ExperimentConfig &c) {
    const auto &g = j.at("geometry");
    g.at("m_col").get_to(c.geometry.m_col);
    g.at("m_row").get_to(c.geometry.m_row);
    g.at("element_spacing").get_to(c.geometry.element_spacing);
    const auto &ch = j.at("channel");
    ch.at("j_users").get_to(c.channel.j_users);
    ch.at("n_prb").get_to(c.channel.n_prb);
    ch.at("paths_per_user").get_to(c.channel.paths_per_user);
    ch.at("n_rx_antennas").get_to(c.channel.n_rx_antennas);
    ch.at("noise_power").get_to(c.channel.noise_power);
    ch.at("stream_power").get_to(c.channel.stream_power);
    ch.at("max_delay_phase_per_prb").get_to(c.channel.max_delay_phase_per_prb);
    ch.at("path_decay").get_to(c.channel.path_decay);
    const auto &s = j.at("scheduler");
    s.at("k_max").get_to(c.k_max);
    s.at("corr_threshold").get_to(c.corr_threshold);
    const auto &r = j.at("rates");
    r.at("bandwidth_per_prb").get_to(c.rate.bandwidth_per_prb);
    r.at("slot_duration").get_to(c.rate.slot_duration);
    r.at("se_cap").get_to(c.rate.se_cap);
    r.at("l_streams").get_to(c.l_streams);
    const auto &t = j.at("tam");
    t.at("r_min").get_to(c.r_min);
    t.at("m_min").get_to(c.m_min);
    const auto &n = j.at("nam");
    n.at("conv_kernel_h").get_to(c.arch.conv_kernel_h);
    n.at("conv_kernel_w").get_to(c.arch.conv_kernel_w);
    n.at("conv_channels").get_to(c.arch.conv_channels);
    n.at("hidden_units").get_to(c.arch.hidden_units);
    n.at("lambda").get_to(c.loss.lambda);
    n.at("alpha").get_to(c.loss.alpha);
    n.at("beta").get_to(c.loss.beta);
    n.at("epochs_symmetric").get_to(c.epochs_symmetric);
    n.at("epochs_asymmetric").get_to(c.epochs_asymmetric);
    n.at("batch_size").get_to(c.batch_size);
    n.at("learning_rate").get_to(c.learning_rate);
    const auto &d = j.at("dataset");
    d.at("drops").get_to(c.drops);
    d.at("slots_per_drop").get_to(c.slots_per_drop);
    d.at("split_train").get_to(c.split_train);
    d.at("split_val").get_to(c.split_val);
    d.at("split_test").get_to(c.split_test);
    const auto &se = j.at("seeds");
    se.at("channels").get_to(c.seed_channels);
    se.at("nam_init").get_to(c.seed_nam_init);
    se.at("train").get_to(c.seed_train);
}

// FNV-1a 64-bit over the canonical serialized form (nlohmann objects iterate
// in sorted key order, so the dump is canonical for a given config).
inline std::uint64_t config_hash(const ExperimentConfig &c) {
    const std::string dump = nlohmann::json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char byte : dump) {
        h ^= static_cast<std::uint64_t>(byte);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash_hex(const ExperimentConfig &c) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(c)));
    return std::string(buf);
}

inline ExperimentConfig load_config(const std::string &path) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    ExperimentConfig c = nlohmann::json::parse(buf.str()).get<ExperimentConfig>();
    c.validate();
    return c;
}

inline void save_config(const ExperimentConfig &c, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("config: cannot open for writing " + path);
    f << nlohmann::json(c).dump(2) << "\n";
}

} // namespace tamlab
