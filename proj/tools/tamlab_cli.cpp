// Command-line driver for the antenna-muting laboratory. Doubles as the usage
// example for the library headers: every subcommand is a thin composition of
// the pipeline functions.
//
//   tamlab gen-data          --config cfg.json --out data.bin
//   tamlab train             --config cfg.json --data data.bin \
//                            --phase symmetric --out model.json
//   tamlab train             --config cfg.json --data data.bin \
//                            --phase asymmetric --init model.json --out model2.json
//   tamlab eval              --config cfg.json --data data.bin --model model2.json \
//                            --out-dir reports
//   tamlab run-heuristics    --config cfg.json --out-dir reports
//   tamlab complexity-report --config cfg.json --out-dir reports
//   tamlab report            --config cfg.json --out-dir reports \
//                            [--data data.bin --model model2.json]
//
// A --seed N override rederives all three config seeds from N so one value
// keeps gen-data, train, and eval coherent (artifact hashes still match).
// Exit status is nonzero on any validation or invariant failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tamlab/cdf.hpp"
#include "tamlab/checkpoint.hpp"
#include "tamlab/config.hpp"
#include "tamlab/dataset.hpp"
#include "tamlab/pipeline.hpp"
#include "tamlab/report.hpp"

namespace {

using namespace tamlab;

void apply_seed_override(ExperimentConfig &cfg, const std::optional<std::uint64_t> &seed) {
    if (!seed)
        return;
    cfg.seed_channels = mix_seed(*seed, 1);
    cfg.seed_nam_init = mix_seed(*seed, 2);
    cfg.seed_train = mix_seed(*seed, 3);
}

ExperimentConfig load_effective_config(const std::string &path,
                                       const std::optional<std::uint64_t> &seed) {
    ExperimentConfig cfg = load_config(path);
    apply_seed_override(cfg, seed);
    cfg.validate();
    return cfg;
}

void require_model_hash(const CheckpointProvenance &prov, const ExperimentConfig &cfg) {
    if (prov.config_hash != config_hash_hex(cfg))
        throw std::runtime_error(
            "model checkpoint was trained under a different configuration (hash mismatch)");
}

int cmd_gen_data(const std::string &config_path, const std::string &out_path,
                 const std::optional<std::uint64_t> &seed) {
    const ExperimentConfig cfg = load_effective_config(config_path, seed);
    GenerationStats stats;
    const DatasetFile data = generate_dataset(cfg, &stats);
    write_dataset(data, out_path);

    std::printf("dataset: %zu samples (%d drops x %d slots), feature_len=%u\n",
                stats.n_samples, cfg.drops, cfg.slots_per_drop, data.header.feature_len);
    std::printf("config_hash=%s seed_channels=%llu\n", config_hash_hex(cfg).c_str(),
                static_cast<unsigned long long>(cfg.seed_channels));
    std::printf("full-array-infeasible fraction: %.4f\n", stats.infeasible_fraction());
    std::printf("label histogram:");
    for (std::size_t c = 0; c < stats.label_counts.size(); ++c)
        std::printf(" %zu:%zu", c, stats.label_counts[c]);
    std::printf("\n");
    return 0;
}

int cmd_train(const std::string &config_path, const std::string &data_path,
              const std::string &phase_name, const std::string &out_path,
              const std::string &init_path, const std::optional<std::uint64_t> &seed) {
    const ExperimentConfig cfg = load_effective_config(config_path, seed);
    const DatasetFile data = read_dataset(data_path);
    require_matching_hash(data.header, config_hash(cfg));

    if (phase_name == "symmetric") {
        if (!init_path.empty())
            throw std::runtime_error("--init is only for the asymmetric phase");
        auto [model, hist] = train_symmetric(cfg, data);
        CheckpointProvenance prov;
        prov.init_seed = cfg.seed_nam_init;
        prov.phases = {"symmetric"};
        prov.loss = cfg.loss;
        prov.config_hash = config_hash_hex(cfg);
        save_checkpoint(model, prov, out_path);
        std::printf("phase symmetric: %d epochs, train loss %.6f -> %.6f\n",
                    cfg.epochs_symmetric, hist.train_loss.front(), hist.train_loss.back());
        if (!hist.val_loss.empty())
            std::printf("validation loss %.6f -> %.6f\n", hist.val_loss.front(),
                        hist.val_loss.back());
        return 0;
    }
    if (phase_name != "asymmetric")
        throw std::runtime_error("--phase must be symmetric or asymmetric");
    if (init_path.empty())
        throw std::runtime_error("asymmetric phase requires --init (a symmetric checkpoint)");

    LoadedCheckpoint start = load_checkpoint(init_path);
    require_model_hash(start.provenance, cfg);
    const TrainHistory hist = train_asymmetric(cfg, data, start.model);
    CheckpointProvenance prov = start.provenance;
    prov.phases.push_back("asymmetric");
    prov.loss = cfg.loss;
    save_checkpoint(start.model, prov, out_path);
    std::printf("phase asymmetric: %d epochs, train loss %.6f -> %.6f\n", cfg.epochs_asymmetric,
                hist.train_loss.front(), hist.train_loss.back());
    if (!hist.val_loss.empty())
        std::printf("validation loss %.6f -> %.6f\n", hist.val_loss.front(),
                    hist.val_loss.back());
    return 0;
}

int cmd_eval(const std::string &config_path, const std::string &data_path,
             const std::string &model_path, const std::string &out_dir,
             const std::string &split_name, bool include_flagged,
             const std::optional<std::uint64_t> &seed) {
    const ExperimentConfig cfg = load_effective_config(config_path, seed);
    const DatasetFile data = read_dataset(data_path);
    require_matching_hash(data.header, config_hash(cfg));
    const LoadedCheckpoint ckpt = load_checkpoint(model_path);
    require_model_hash(ckpt.provenance, cfg);

    std::vector<Sample> samples;
    if (split_name == "all")
        samples = data.samples;
    else if (split_name == "train")
        samples = split_samples(data, 0);
    else if (split_name == "val")
        samples = split_samples(data, 1);
    else if (split_name == "test")
        samples = split_samples(data, 2);
    else
        throw std::runtime_error("--split must be train, val, test, or all");

    const EvalMetrics m = evaluate(ckpt.model, samples, include_flagged);
    std::filesystem::create_directories(out_dir);
    std::string tag = "phases=";
    for (std::size_t i = 0; i < ckpt.provenance.phases.size(); ++i)
        tag += (i ? "+" : "") + ckpt.provenance.phases[i];
    write_eval_json((std::filesystem::path(out_dir) / "eval.json").string(), cfg, tag, m);
    write_confusion_csv((std::filesystem::path(out_dir) / "confusion.csv").string(), cfg, m);

    std::printf("split=%s n=%zu (excluded %zu infeasible)\n", split_name.c_str(), m.n_evaluated,
                m.n_excluded);
    std::printf("accuracy=%.4f qos_guarantee=%.4f\n", m.accuracy, m.qos_guarantee);
    return 0;
}

int cmd_run_heuristics(const std::string &config_path, const std::string &out_dir,
                       const std::optional<std::uint64_t> &seed, int max_drops) {
    ExperimentConfig cfg = load_effective_config(config_path, seed);
    if (max_drops > 0 && max_drops < cfg.drops)
        cfg.drops = max_drops;
    const HeuristicsRun run = run_heuristics(cfg);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    write_slot_table_csv((dir / "slots.csv").string(), cfg, run);
    write_complexity_csv((dir / "complexity.csv").string(), cfg, &run);
    for (std::size_t a = 0; a < run.solvers.size(); ++a) {
        const std::string &s = run.solvers[a];
        write_cdf_csv((dir / ("active_cdf_" + s + ".csv")).string(), cfg, s + "_active",
                      empirical_cdf(run.active_counts[a]));
        write_cdf_csv((dir / ("se_cdf_" + s + ".csv")).string(), cfg, s + "_user_se",
                      empirical_cdf(run.user_se[a]));
        std::vector<int> counts;
        counts.reserve(run.active_counts[a].size());
        for (double v : run.active_counts[a])
            counts.push_back(static_cast<int>(v));
        write_energy_json((dir / ("energy_" + s + ".json")).string(), cfg, s,
                          energy_report_from_counts(counts, cfg.geometry.total(), PowerModel{}));
        double mean = 0.0;
        for (double v : run.active_counts[a])
            mean += v;
        mean /= static_cast<double>(run.active_counts[a].size());
        std::printf("%s: mean active elements %.2f of %d\n", s.c_str(), mean,
                    cfg.geometry.total());
    }
    std::printf("wrote %zu slot rows to %s\n", run.rows.size(), out_dir.c_str());
    return 0;
}

int cmd_complexity_report(const std::string &config_path, const std::string &out_dir,
                          const std::optional<std::uint64_t> &seed) {
    const ExperimentConfig cfg = load_effective_config(config_path, seed);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_complexity_csv((dir / "complexity.csv").string(), cfg);
    write_complexity_json((dir / "complexity.json").string(), cfg);

    const NnFpoBreakdown nn = fpo_nn(cfg.arch, cfg.geometry, cfg.k_max, cfg.n_classes());
    const double greedy = fpo_algorithm(TamAlgorithm::greedy, cfg.geometry, cfg.fpo_params(),
                                        DistributionMode::paper);
    std::printf("nn fpos: conv=%lld dense=%lld input_prep=%lld total=%lld\n",
                static_cast<long long>(nn.conv), static_cast<long long>(nn.dense),
                static_cast<long long>(nn.input_prep), static_cast<long long>(nn.total));
    std::printf("greedy/nn ratio (paper mode): %.2f\n",
                greedy / static_cast<double>(nn.total));
    return 0;
}

int cmd_report(const std::string &config_path, const std::string &out_dir,
               const std::string &data_path, const std::string &model_path,
               const std::optional<std::uint64_t> &seed, int max_drops) {
    int rc = cmd_run_heuristics(config_path, out_dir, seed, max_drops);
    if (rc != 0)
        return rc;
    rc = cmd_complexity_report(config_path, out_dir, seed);
    if (rc != 0)
        return rc;
    if (!data_path.empty() && !model_path.empty())
        return cmd_eval(config_path, data_path, model_path, out_dir, "test", false, seed);
    if (!data_path.empty() || !model_path.empty())
        throw std::runtime_error("report needs both --data and --model to evaluate a model");
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"antenna-muting laboratory: datasets, solvers, training, reports"};
    app.require_subcommand(1);

    std::string config_path, out_path, out_dir, data_path, model_path, init_path;
    std::string phase_name = "symmetric", split_name = "test";
    bool include_flagged = false;
    int max_drops = 0;
    std::optional<std::uint64_t> seed;

    auto *gen = app.add_subcommand("gen-data", "generate and persist a labeled dataset");
    gen->add_option("--config", config_path, "experiment config JSON")->required();
    gen->add_option("--out", out_path, "output dataset file")->required();
    gen->add_option("--seed", seed, "override all config seeds from one value");

    auto *train = app.add_subcommand("train", "train the classifier on a dataset");
    train->add_option("--config", config_path, "experiment config JSON")->required();
    train->add_option("--data", data_path, "dataset file from gen-data")->required();
    train->add_option("--phase", phase_name, "symmetric or asymmetric")->required();
    train->add_option("--out", out_path, "output model checkpoint JSON")->required();
    train->add_option("--init", init_path, "initial checkpoint (asymmetric phase)");
    train->add_option("--seed", seed, "override all config seeds from one value");

    auto *eval = app.add_subcommand("eval", "evaluate a trained model on a dataset split");
    eval->add_option("--config", config_path, "experiment config JSON")->required();
    eval->add_option("--data", data_path, "dataset file")->required();
    eval->add_option("--model", model_path, "model checkpoint")->required();
    eval->add_option("--out-dir", out_dir, "report directory")->required();
    eval->add_option("--split", split_name, "train, val, test, or all (default test)");
    eval->add_flag("--include-flagged", include_flagged,
                   "include full-array-infeasible samples in the statistics");
    eval->add_option("--seed", seed, "override all config seeds from one value");

    auto *heur = app.add_subcommand("run-heuristics", "run all solvers over fresh drops");
    heur->add_option("--config", config_path, "experiment config JSON")->required();
    heur->add_option("--out-dir", out_dir, "report directory")->required();
    heur->add_option("--seed", seed, "override all config seeds from one value");
    heur->add_option("--drops", max_drops, "cap the number of drops swept (0 = all)");

    auto *cplx = app.add_subcommand("complexity-report", "analytic FPO tables");
    cplx->add_option("--config", config_path, "experiment config JSON")->required();
    cplx->add_option("--out-dir", out_dir, "report directory")->required();
    cplx->add_option("--seed", seed, "override all config seeds from one value");

    auto *rep = app.add_subcommand("report", "heuristics + complexity (+ eval) bundle");
    rep->add_option("--config", config_path, "experiment config JSON")->required();
    rep->add_option("--out-dir", out_dir, "report directory")->required();
    rep->add_option("--data", data_path, "dataset file (with --model)");
    rep->add_option("--model", model_path, "model checkpoint (with --data)");
    rep->add_option("--seed", seed, "override all config seeds from one value");
    rep->add_option("--drops", max_drops, "cap the number of drops swept (0 = all)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen_data(config_path, out_path, seed);
        if (train->parsed())
            return cmd_train(config_path, data_path, phase_name, out_path, init_path, seed);
        if (eval->parsed())
            return cmd_eval(config_path, data_path, model_path, out_dir, split_name,
                            include_flagged, seed);
        if (heur->parsed())
            return cmd_run_heuristics(config_path, out_dir, seed, max_drops);
        if (cplx->parsed())
            return cmd_complexity_report(config_path, out_dir, seed);
        if (rep->parsed())
            return cmd_report(config_path, out_dir, data_path, model_path, seed, max_drops);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
