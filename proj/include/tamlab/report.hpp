#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "complexity.hpp"
#include "config.hpp"
#include "nam_train.hpp"
#include "pipeline.hpp"

namespace tamlab {

// Deterministic number formatting for CSV output: shortest fixed style that
// still distinguishes the values we emit. Identical inputs format identically,
// which is what the byte-identical re-run guarantee rests on.
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

namespace detail {

inline std::ofstream open_out(const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("report: cannot open for writing: " + path);
    return f;
}

// Every artifact opens with its provenance so any number in it is traceable
// to the exact configuration and seeds that produced it.
inline void csv_provenance(std::ofstream &f, const ExperimentConfig &cfg) {
    f << "# config_hash=" << config_hash_hex(cfg) << "\n";
    f << "# seed_channels=" << cfg.seed_channels << " seed_nam_init=" << cfg.seed_nam_init
      << " seed_train=" << cfg.seed_train << "\n";
}

inline nlohmann::json json_provenance(const ExperimentConfig &cfg) {
    return {{"config_hash", config_hash_hex(cfg)},
            {"seed_channels", cfg.seed_channels},
            {"seed_nam_init", cfg.seed_nam_init},
            {"seed_train", cfg.seed_train}};
}

} // namespace detail

inline void write_slot_table_csv(const std::string &path, const ExperimentConfig &cfg,
                                 const HeuristicsRun &run) {
    std::ofstream f = detail::open_out(path);
    detail::csv_provenance(f, cfg);
    f << "drop,slot,solver,n_scheduled,active_elements,feasible,min_rate_bits,"
         "sum_rate_bits,fpo_consumed,stop_index\n";
    for (const SlotRecord &r : run.rows)
        f << r.drop << ',' << r.slot << ',' << r.solver << ',' << r.n_scheduled << ','
          << r.active_elements << ',' << (r.feasible ? 1 : 0) << ','
          << fmt_double(r.min_rate_bits) << ',' << fmt_double(r.sum_rate_bits) << ','
          << r.fpo_consumed << ',' << r.stop_index << '\n';
    if (!f)
        throw std::runtime_error("report: write failed: " + path);
}

inline void write_cdf_csv(const std::string &path, const ExperimentConfig &cfg,
                          const std::string &series,
                          const std::vector<std::pair<double, double>> &cdf) {
    std::ofstream f = detail::open_out(path);
    detail::csv_provenance(f, cfg);
    f << "series,value,cum_fraction\n";
    for (const auto &[v, p] : cdf)
        f << series << ',' << fmt_double(v) << ',' << fmt_double(p) << '\n';
    if (!f)
        throw std::runtime_error("report: write failed: " + path);
}

inline void write_confusion_csv(const std::string &path, const ExperimentConfig &cfg,
                                const EvalMetrics &m) {
    std::ofstream f = detail::open_out(path);
    detail::csv_provenance(f, cfg);
    f << "true_class";
    for (arma::uword j = 0; j < m.confusion.n_cols; ++j)
        f << ",pred_" << j;
    f << ",prior\n";
    for (arma::uword i = 0; i < m.confusion.n_rows; ++i) {
        f << i;
        for (arma::uword j = 0; j < m.confusion.n_cols; ++j)
            f << ',' << fmt_double(m.confusion(i, j));
        f << ',' << fmt_double(m.priors(i)) << '\n';
    }
    if (!f)
        throw std::runtime_error("report: write failed: " + path);
}

inline void write_eval_json(const std::string &path, const ExperimentConfig &cfg,
                            const std::string &model_tag, const EvalMetrics &m) {
    nlohmann::json j;
    j["provenance"] = detail::json_provenance(cfg);
    j["model"] = model_tag;
    j["accuracy"] = m.accuracy;
    j["qos_guarantee"] = m.qos_guarantee;
    j["n_evaluated"] = m.n_evaluated;
    j["n_excluded_infeasible"] = m.n_excluded;
    std::ofstream f = detail::open_out(path);
    f << j.dump(2) << "\n";
    if (!f)
        throw std::runtime_error("report: write failed: " + path);
}

// Analytic complexity table plus, when a heuristic run is supplied, the
// instrumented per-slot averages measured on it.
inline void write_complexity_csv(const std::string &path, const ExperimentConfig &cfg,
                                 const HeuristicsRun *run = nullptr) {
    const FpoParams fpo = cfg.fpo_params();
    const NnFpoBreakdown nn = fpo_nn(cfg.arch, cfg.geometry, cfg.k_max, cfg.n_classes());

    std::ofstream f = detail::open_out(path);
    detail::csv_provenance(f, cfg);
    f << "algorithm,fpos_per_slot,mode\n";
    const TamAlgorithm algs[3] = {TamAlgorithm::greedy, TamAlgorithm::sequential,
                                  TamAlgorithm::fixed_column};
    for (TamAlgorithm a : algs) {
        f << to_string(a) << ','
          << fmt_double(fpo_algorithm(a, cfg.geometry, fpo, DistributionMode::paper))
          << ",analytic_paper\n";
        f << to_string(a) << ','
          << fmt_double(fpo_algorithm(a, cfg.geometry, fpo, DistributionMode::corrected))
          << ",analytic_corrected\n";
    }
    f << "nn," << nn.total << ",analytic\n";
    if (run) {
        for (std::size_t a = 0; a < run->solvers.size(); ++a) {
            const TamAlgorithm alg = run->solvers[a] == "greedy" ? TamAlgorithm::greedy
                                     : run->solvers[a] == "sequential"
                                         ? TamAlgorithm::sequential
                                         : TamAlgorithm::fixed_column;
            f << run->solvers[a] << ','
              << fmt_double(
                     fpo_algorithm_empirical(alg, cfg.geometry, fpo, run->stop_counts[a]))
              << ",empirical\n";
        }
    }
    if (!f)
        throw std::runtime_error("report: write failed: " + path);
}

inline void write_complexity_json(const std::string &path, const ExperimentConfig &cfg) {
    const FpoParams fpo = cfg.fpo_params();
    const NnFpoBreakdown nn = fpo_nn(cfg.arch, cfg.geometry, cfg.k_max, cfg.n_classes());
    const double greedy =
        fpo_algorithm(TamAlgorithm::greedy, cfg.geometry, fpo, DistributionMode::paper);
    const double fixed =
        fpo_algorithm(TamAlgorithm::fixed_column, cfg.geometry, fpo, DistributionMode::paper);

    nlohmann::json j;
    j["provenance"] = detail::json_provenance(cfg);
    j["nn"] = {{"conv", nn.conv},
               {"dense", nn.dense},
               {"input_prep", nn.input_prep},
               {"total", nn.total}};
    j["analytic_paper"] = {
        {"greedy", greedy},
        {"sequential",
         fpo_algorithm(TamAlgorithm::sequential, cfg.geometry, fpo, DistributionMode::paper)},
        {"fixed_column", fixed}};
    j["analytic_corrected"] = {
        {"greedy",
         fpo_algorithm(TamAlgorithm::greedy, cfg.geometry, fpo, DistributionMode::corrected)},
        {"sequential", fpo_algorithm(TamAlgorithm::sequential, cfg.geometry, fpo,
                                     DistributionMode::corrected)},
        {"fixed_column", fpo_algorithm(TamAlgorithm::fixed_column, cfg.geometry, fpo,
                                       DistributionMode::corrected)}};
    j["ratios"] = {{"greedy_over_nn", greedy / static_cast<double>(nn.total)},
                   {"fixed_column_over_nn", fixed / static_cast<double>(nn.total)}};
    std::ofstream f = detail::open_out(path);
    f << j.dump(2) << "\n";
    if (!f)
        throw std::runtime_error("report: write failed: " + path);
}

inline void write_energy_json(const std::string &path, const ExperimentConfig &cfg,
                              const std::string &solver, const EnergyReport &rep) {
    nlohmann::json j;
    j["provenance"] = detail::json_provenance(cfg);
    j["solver"] = solver;
    j["warning"] = kPowerModelWarning;
    j["mean_active_elements"] = rep.mean_active_elements;
    j["saving_fraction"] = rep.saving_fraction;
    j["mean_frontend_watts"] = rep.mean_frontend_watts;
    std::ofstream f = detail::open_out(path);
    f << j.dump(2) << "\n";
    if (!f)
        throw std::runtime_error("report: write failed: " + path);
}

} // namespace tamlab
