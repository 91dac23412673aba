#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "features.hpp"
#include "nam_train.hpp"
#include "tam.hpp"

namespace tamlab {

// Split assignment is by whole drops (train first, then validation, then
// test) so no drop's slots leak across splits.
inline std::uint8_t split_of_drop(int drop, const ExperimentConfig &cfg) {
    const int t1 = static_cast<int>(std::lround(cfg.split_train * cfg.drops));
    const int t2 = static_cast<int>(std::lround((cfg.split_train + cfg.split_val) * cfg.drops));
    if (drop < t1)
        return 0;
    if (drop < t2)
        return 1;
    return 2;
}

// One slot's generated state, shared by labeling and heuristic sweeps.
struct SlotContext {
    ChannelSet set;
    std::vector<arma::cx_mat> per_pol_covs; // all users
    std::vector<int> sched;
};

inline SlotContext build_slot(const ExperimentConfig &cfg, int drop, int slot) {
    SlotContext ctx;
    ctx.set = generate_drop_slot(cfg.geometry, cfg.channel,
                                 mix_seed(cfg.seed_channels, static_cast<std::uint64_t>(drop)),
                                 static_cast<std::uint32_t>(slot));
    ctx.per_pol_covs.reserve(ctx.set.users.size());
    for (const auto &h : ctx.set.users)
        ctx.per_pol_covs.push_back(
            per_pol_avg_covariance(channel_covariance(h), cfg.geometry));
    ctx.sched = schedule_users(ctx.set, ctx.per_pol_covs, cfg.k_max, cfg.corr_threshold);
    return ctx;
}

struct GenerationStats {
    std::size_t n_samples = 0;
    std::size_t n_infeasible = 0; // full-array infeasible (flagged) samples
    std::vector<std::size_t> label_counts;

    double infeasible_fraction() const {
        return n_samples == 0 ? 0.0
                              : static_cast<double>(n_infeasible) /
                                    static_cast<double>(n_samples);
    }
};

// Labels every (drop, slot) with the fixed-column scan and featurizes the
// scheduled users against their full-array precoders. Deterministic under the
// config seeds; the header carries the config hash so downstream artifacts
// can refuse mismatched inputs.
inline DatasetFile generate_dataset(const ExperimentConfig &cfg, GenerationStats *stats = nullptr) {
    cfg.validate();
    const TamConstraints constraints = cfg.tam_constraints();
    const FpoParams fpo = cfg.fpo_params();

    DatasetFile out;
    out.header.config_hash = config_hash(cfg);
    out.header.seed = cfg.seed_channels;
    out.header.m_col = static_cast<std::uint32_t>(cfg.geometry.m_col);
    out.header.m_row = static_cast<std::uint32_t>(cfg.geometry.m_row);
    out.header.k_max = static_cast<std::uint32_t>(cfg.k_max);
    out.header.n_classes = static_cast<std::uint32_t>(cfg.n_classes());
    out.header.feature_len = static_cast<std::uint32_t>(
        static_cast<std::size_t>(cfg.geometry.per_pol()) * kFeatureColumns *
        static_cast<std::size_t>(cfg.k_max));
    out.samples.reserve(static_cast<std::size_t>(cfg.drops) *
                        static_cast<std::size_t>(cfg.slots_per_drop));

    GenerationStats local;
    local.label_counts.assign(static_cast<std::size_t>(cfg.n_classes()), 0);

    for (int drop = 0; drop < cfg.drops; ++drop) {
        const std::uint8_t split = split_of_drop(drop, cfg);
        for (int slot = 0; slot < cfg.slots_per_drop; ++slot) {
            const SlotContext ctx = build_slot(cfg, drop, slot);
            const auto [cls, sol] =
                fixed_column_tam(ctx.set, ctx.sched, constraints, cfg.rate, fpo);

            std::vector<arma::cx_mat> precoders;
            precoders.reserve(ctx.sched.size());
            for (int u : ctx.sched)
                precoders.push_back(
                    eigen_beamformer(ctx.per_pol_covs[static_cast<std::size_t>(u)],
                                     cfg.l_streams, cfg.channel.stream_power, cfg.geometry));

            Sample s;
            s.features = featurize(ctx.set, ctx.sched, precoders, cfg.k_max);
            s.label = static_cast<std::uint8_t>(cls.index);
            s.drop = static_cast<std::uint32_t>(drop);
            s.slot = static_cast<std::uint32_t>(slot);
            s.n_scheduled = static_cast<std::uint8_t>(ctx.sched.size());
            s.flags = sol.feasible ? 0 : 1;
            s.split = split;

            local.n_samples += 1;
            local.n_infeasible += sol.feasible ? 0 : 1;
            local.label_counts[static_cast<std::size_t>(cls.index)] += 1;
            out.samples.push_back(std::move(s));
        }
    }
    out.header.sample_count = out.samples.size();
    if (stats)
        *stats = local;
    return out;
}

// One solver's outcome on one slot.
struct SlotRecord {
    std::uint32_t drop = 0;
    std::uint32_t slot = 0;
    std::string solver;
    int n_scheduled = 0;
    int active_elements = 0;
    bool feasible = false;
    double min_rate_bits = 0.0;
    double sum_rate_bits = 0.0;
    std::int64_t fpo_consumed = 0;
    int stop_index = 0;
};

struct HeuristicsRun {
    std::vector<std::string> solvers{"greedy", "sequential", "fixed_column"};
    std::vector<SlotRecord> rows; // drop-major, slot inner, solver innermost
    // Per-solver distributions for CDF reports.
    std::vector<std::vector<double>> active_counts; // per solver
    std::vector<std::vector<double>> user_se;       // per solver, per scheduled user
    std::vector<std::vector<std::int64_t>> stop_counts; // per solver, by stop index
};

// Runs all three solvers over every (drop, slot) of the config. Channels are
// the same realizations dataset generation sees (same seeds).
inline HeuristicsRun run_heuristics(const ExperimentConfig &cfg) {
    cfg.validate();
    const TamConstraints constraints = cfg.tam_constraints();
    const FpoParams fpo = cfg.fpo_params();

    HeuristicsRun run;
    run.active_counts.assign(run.solvers.size(), {});
    run.user_se.assign(run.solvers.size(), {});
    run.stop_counts.assign(run.solvers.size(), {});

    for (int drop = 0; drop < cfg.drops; ++drop)
        for (int slot = 0; slot < cfg.slots_per_drop; ++slot) {
            const SlotContext ctx = build_slot(cfg, drop, slot);
            for (std::size_t a = 0; a < run.solvers.size(); ++a) {
                TamSolution sol;
                if (run.solvers[a] == "greedy")
                    sol = greedy_tam(ctx.set, ctx.sched, constraints, cfg.rate, fpo);
                else if (run.solvers[a] == "sequential")
                    sol = sequential_tam(ctx.set, ctx.sched, constraints, cfg.rate, fpo);
                else
                    sol = fixed_column_tam(ctx.set, ctx.sched, constraints, cfg.rate, fpo)
                              .second;

                SlotRecord row;
                row.drop = static_cast<std::uint32_t>(drop);
                row.slot = static_cast<std::uint32_t>(slot);
                row.solver = run.solvers[a];
                row.n_scheduled = static_cast<int>(ctx.sched.size());
                row.active_elements = sol.active_elements;
                row.feasible = sol.feasible;
                row.min_rate_bits = sol.rates.min_rate;
                row.sum_rate_bits = sol.rates.sum_rate;
                row.fpo_consumed = sol.fpo_consumed;
                row.stop_index = sol.stop_index;
                run.rows.push_back(std::move(row));

                run.active_counts[a].push_back(static_cast<double>(sol.active_elements));
                for (const UserRateReport &u : sol.rates.users)
                    run.user_se[a].push_back(u.se_user);
                auto &counts = run.stop_counts[a];
                if (sol.stop_index >= static_cast<int>(counts.size()))
                    counts.resize(static_cast<std::size_t>(sol.stop_index) + 1, 0);
                counts[static_cast<std::size_t>(sol.stop_index)] += 1;
            }
        }
    return run;
}

// Phase-1 training from a fresh initialization.
inline std::pair<NamModel, TrainHistory> train_symmetric(const ExperimentConfig &cfg,
                                                         const DatasetFile &data) {
    require_matching_hash(data.header, config_hash(cfg));
    NamModel model(cfg.arch, cfg.geometry.per_pol(), kFeatureColumns, cfg.k_max,
                   cfg.n_classes());
    model.init_weights(cfg.seed_nam_init);
    TrainHistory hist = train(model, data.samples, Phase::symmetric, cfg.loss,
                              cfg.train_options(Phase::symmetric));
    return {std::move(model), std::move(hist)};
}

// Phase-2 training continuing from a phase-1 model (fresh optimizer state).
inline TrainHistory train_asymmetric(const ExperimentConfig &cfg, const DatasetFile &data,
                                     NamModel &model) {
    require_matching_hash(data.header, config_hash(cfg));
    return train(model, data.samples, Phase::asymmetric, cfg.loss,
                 cfg.train_options(Phase::asymmetric));
}

// Test-split view of a dataset.
inline std::vector<Sample> split_samples(const DatasetFile &data, std::uint8_t split) {
    std::vector<Sample> out;
    for (const Sample &s : data.samples)
        if (s.split == split)
            out.push_back(s);
    return out;
}

} // namespace tamlab
