#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nam_loss.hpp"
#include "nam_model.hpp"

namespace tamlab {

// Where a trained model came from: the initialization seed, the phases it was
// trained through, the loss knobs of the last phase, and a fingerprint of the
// experiment configuration that produced its dataset.
struct CheckpointProvenance {
    std::uint64_t init_seed = 0;
    std::vector<std::string> phases;
    LossConfig loss;
    std::string config_hash;
};

namespace detail {

constexpr int kCheckpointVersion = 1;

// Quantize to float32; checkpoints store weights at single precision, and a
// loaded model holds exactly the stored values.
inline nlohmann::json weight_array(const std::vector<double> &p, std::size_t off,
                                   std::size_t len) {
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t i = 0; i < len; ++i)
        a.push_back(static_cast<double>(static_cast<float>(p[off + i])));
    return a;
}

inline void read_weights(const nlohmann::json &a, std::vector<double> &p, std::size_t off,
                         std::size_t len, const char *name) {
    if (!a.is_array() || a.size() != len)
        throw std::runtime_error(std::string("checkpoint: bad length for ") + name);
    for (std::size_t i = 0; i < len; ++i)
        p[off + i] = static_cast<double>(static_cast<float>(a[i].get<double>()));
}

} // namespace detail

inline nlohmann::json checkpoint_to_json(const NamModel &model,
                                         const CheckpointProvenance &prov) {
    nlohmann::json j;
    j["format"] = "nam-checkpoint";
    j["format_version"] = detail::kCheckpointVersion;
    j["shapes"] = {{"x1", model.x1()},
                   {"x2", model.x2()},
                   {"channels", model.channels()},
                   {"classes", model.n_classes()},
                   {"kernel_h", model.arch().conv_kernel_h},
                   {"kernel_w", model.arch().conv_kernel_w},
                   {"conv_channels", model.arch().conv_channels},
                   {"hidden_units", model.arch().hidden_units}};
    j["activations"] = {"relu", "relu", "softmax"};
    const std::vector<double> &p = model.params();
    j["weights"] = {
        {"conv_w", detail::weight_array(p, model.conv_w_off(), model.conv_w_len())},
        {"conv_b", detail::weight_array(p, model.conv_b_off(), model.conv_b_len())},
        {"dense1_w", detail::weight_array(p, model.dense1_w_off(), model.dense1_w_len())},
        {"dense1_b", detail::weight_array(p, model.dense1_b_off(), model.dense1_b_len())},
        {"out_w", detail::weight_array(p, model.out_w_off(), model.out_w_len())},
        {"out_b", detail::weight_array(p, model.out_b_off(), model.out_b_len())}};
    j["provenance"] = {{"init_seed", prov.init_seed},
                       {"phases", prov.phases},
                       {"loss",
                        {{"lambda", prov.loss.lambda},
                         {"alpha", prov.loss.alpha},
                         {"beta", prov.loss.beta}}},
                       {"config_hash", prov.config_hash}};
    return j;
}

struct LoadedCheckpoint {
    NamModel model;
    CheckpointProvenance provenance;
};

inline LoadedCheckpoint checkpoint_from_json(const nlohmann::json &j) {
    if (!j.is_object() || j.value("format", "") != std::string("nam-checkpoint"))
        throw std::runtime_error("checkpoint: not a nam-checkpoint document");
    if (j.value("format_version", -1) != detail::kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported format version");
    const nlohmann::json &s = j.at("shapes");
    NamArchitecture arch;
    arch.conv_kernel_h = s.at("kernel_h").get<int>();
    arch.conv_kernel_w = s.at("kernel_w").get<int>();
    arch.conv_channels = s.at("conv_channels").get<int>();
    arch.hidden_units = s.at("hidden_units").get<int>();
    NamModel model(arch, s.at("x1").get<int>(), s.at("x2").get<int>(),
                   s.at("channels").get<int>(), s.at("classes").get<int>());

    const std::vector<std::string> acts = j.at("activations").get<std::vector<std::string>>();
    if (acts != std::vector<std::string>{"relu", "relu", "softmax"})
        throw std::runtime_error("checkpoint: unexpected activation stack");

    const nlohmann::json &w = j.at("weights");
    std::vector<double> &p = model.params();
    detail::read_weights(w.at("conv_w"), p, model.conv_w_off(), model.conv_w_len(), "conv_w");
    detail::read_weights(w.at("conv_b"), p, model.conv_b_off(), model.conv_b_len(), "conv_b");
    detail::read_weights(w.at("dense1_w"), p, model.dense1_w_off(), model.dense1_w_len(),
                         "dense1_w");
    detail::read_weights(w.at("dense1_b"), p, model.dense1_b_off(), model.dense1_b_len(),
                         "dense1_b");
    detail::read_weights(w.at("out_w"), p, model.out_w_off(), model.out_w_len(), "out_w");
    detail::read_weights(w.at("out_b"), p, model.out_b_off(), model.out_b_len(), "out_b");

    LoadedCheckpoint out{std::move(model), {}};
    const nlohmann::json &prov = j.at("provenance");
    out.provenance.init_seed = prov.at("init_seed").get<std::uint64_t>();
    out.provenance.phases = prov.at("phases").get<std::vector<std::string>>();
    out.provenance.loss.lambda = prov.at("loss").at("lambda").get<double>();
    out.provenance.loss.alpha = prov.at("loss").at("alpha").get<double>();
    out.provenance.loss.beta = prov.at("loss").at("beta").get<double>();
    out.provenance.config_hash = prov.at("config_hash").get<std::string>();
    return out;
}

// Serialized checkpoint text: sorted keys, two-space indent, trailing newline.
// Deterministic for a given model, and stable across a save/load round trip
// because weights are already float32-quantized after the first save.
inline std::string checkpoint_text(const NamModel &model, const CheckpointProvenance &prov) {
    return checkpoint_to_json(model, prov).dump(2) + "\n";
}

inline void save_checkpoint(const NamModel &model, const CheckpointProvenance &prov,
                            const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    f << checkpoint_text(model, prov);
    if (!f)
        throw std::runtime_error("checkpoint: write failed: " + path);
}

inline LoadedCheckpoint load_checkpoint(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("checkpoint: cannot open for reading: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return checkpoint_from_json(nlohmann::json::parse(buf.str()));
}

} // namespace tamlab
