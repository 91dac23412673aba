#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"
#include "complexity.hpp"
#include "mask.hpp"
#include "txrx.hpp"

namespace tamlab {

struct TamConstraints {
    double r_min = 0.0; // bits per slot per user
    int m_min = 1;      // minimum active positions (per-polarization popcount)
    int l_streams = 2;  // streams per scheduled user

    void validate(const ArrayGeometry &g) const {
        if (r_min < 0.0)
            throw std::invalid_argument("TamConstraints: r_min must be >= 0");
        if (m_min < 1 || m_min > g.per_pol())
            throw std::invalid_argument("TamConstraints: m_min must be in [1, M/2]");
        if (l_streams < 1 || l_streams > ArrayGeometry::polarizations)
            throw std::invalid_argument("TamConstraints: l_streams must be 1 or 2");
    }
};

struct FeasibilityReport {
    bool feasible = false; // rates_ok and popcount >= m_min
    bool rates_ok = false; // every scheduled user's rate >= r_min
    double min_rate = 0.0;
    double sum_rate = 0.0;
    std::vector<UserRateReport> users;
};

// Instrumentation hook: counts candidate evaluations by total active antenna
// count, so consumed FPOs can be charged with the same per-iteration costs the
// analytic model uses.
struct FpoMeter {
    std::vector<std::int64_t> evals_by_active; // index = active elements

    void record(int m_active) {
        if (m_active >= static_cast<int>(evals_by_active.size()))
            evals_by_active.resize(static_cast<std::size_t>(m_active) + 1, 0);
        evals_by_active[static_cast<std::size_t>(m_active)] += 1;
    }

    std::int64_t total_cost(const FpoParams &p) const {
        std::int64_t total = 0;
        for (std::size_t m = 0; m < evals_by_active.size(); ++m)
            if (evals_by_active[m] > 0)
                total += evals_by_active[m] * fpo_iteration(static_cast<int>(m), p);
        return total;
    }
};

struct TamSolution {
    AntennaMask mask;
    FeasibilityReport rates;
    bool feasible = false;
    int active_elements = 0;
    std::string solver_id;
    std::int64_t fpo_consumed = 0;
    int stop_index = 0; // final popcount (scans) or class index (fixed classes)
};

// Eigen-BF rate evaluation of one mask for the scheduled users. Works on the
// active-column submatrix, which is algebraically identical to masking the
// full matrices (the beamformer is exactly zero on muted rows) but keeps the
// eigen decomposition at popcount size.
inline FeasibilityReport is_feasible(const ChannelSet &channels, const std::vector<int> &users,
                                     const AntennaMask &mask, const TamConstraints &c,
                                     const RateConfig &rc, FpoMeter *meter = nullptr) {
    c.validate(channels.geometry);
    rc.validate();
    if (users.empty())
        throw std::invalid_argument("is_feasible: at least one scheduled user required");
    for (int u : users)
        if (u < 0 || u >= channels.n_users())
            throw std::invalid_argument("is_feasible: user index out of range");

    const int popcount = mask.popcount();
    if (meter && popcount > 0)
        meter->record(mask.active_elements());

    FeasibilityReport rep;
    rep.users.reserve(users.size());
    rep.min_rate = std::numeric_limits<double>::infinity();

    if (popcount == 0) {
        // Nothing transmits: all rates are zero.
        for (std::size_t i = 0; i < users.size(); ++i) {
            UserRateReport r;
            r.l_streams = c.l_streams;
            r.mean_mse = arma::vec(static_cast<arma::uword>(c.l_streams), arma::fill::ones);
            rep.users.push_back(std::move(r));
        }
        rep.min_rate = 0.0;
        rep.rates_ok = (c.r_min <= 0.0);
        rep.feasible = false; // popcount < m_min always (m_min >= 1)
        return rep;
    }

    const arma::uvec antennas = mask.active_antennas();
    const arma::uword p = static_cast<arma::uword>(popcount);

    for (int u : users) {
        const arma::cx_cube &h = channels.users[static_cast<std::size_t>(u)];
        arma::cx_cube h_act(h.n_rows, antennas.n_elem, h.n_slices);
        for (arma::uword t = 0; t < h.n_slices; ++t)
            h_act.slice(t) = h.slice(t).cols(antennas);

        const arma::cx_mat r_full = channel_covariance(h_act);
        const arma::cx_mat r_avg =
            0.5 * (r_full.submat(0, 0, p - 1, p - 1) +
                   r_full.submat(p, p, 2 * p - 1, 2 * p - 1));
        const DominantEig de = dominant_eig(r_avg);

        arma::cx_mat w_act(2 * p, static_cast<arma::uword>(c.l_streams), arma::fill::zeros);
        for (int l = 0; l < c.l_streams; ++l)
            w_act.col(static_cast<arma::uword>(l))
                .subvec(static_cast<arma::uword>(l) * p, (static_cast<arma::uword>(l) + 1) * p - 1) =
                std::sqrt(channels.stream_power) * de.vec;

        UserRateReport r = user_rate(h_act, w_act, channels.noise_power, rc);
        rep.sum_rate += r.rate_bits;
        rep.min_rate = std::min(rep.min_rate, r.rate_bits);
        rep.users.push_back(std::move(r));
    }

    rep.rates_ok = (rep.min_rate >= c.r_min);
    rep.feasible = rep.rates_ok && popcount >= c.m_min;
    return rep;
}

namespace detail {

inline TamSolution make_solution(AntennaMask mask, FeasibilityReport rep, std::string solver_id,
                                 const FpoMeter &meter, const FpoParams &fp, int stop_index) {
    TamSolution sol;
    sol.feasible = rep.feasible;
    sol.active_elements = mask.active_elements();
    sol.mask = std::move(mask);
    sol.rates = std::move(rep);
    sol.solver_id = std::move(solver_id);
    sol.fpo_consumed = meter.total_cost(fp);
    sol.stop_index = stop_index;
    return sol;
}

} // namespace detail

// Greedy antenna selection. Each round evaluates every remaining position on
// top of the selected set; if any candidate meets all rate constraints (set P)
// the max-sum-rate one is taken, stopping as soon as the minimum-popcount
// constraint is also met; otherwise the max-sum-rate candidate overall (set Q)
// is taken and the search continues. Sum-rate ties break to the lowest
// antenna index. Exhausting the array returns the full mask, infeasible.
inline TamSolution greedy_tam(const ChannelSet &channels, const std::vector<int> &users,
                              const TamConstraints &c, const RateConfig &rc,
                              const FpoParams &fp) {
    const ArrayGeometry &g = channels.geometry;
    c.validate(g);
    FpoMeter meter;

    AntennaMask selected = AntennaMask::none(g);
    std::vector<int> remaining(static_cast<std::size_t>(g.per_pol()));
    for (int i = 0; i < g.per_pol(); ++i)
        remaining[static_cast<std::size_t>(i)] = i;

    for (int round = 1; round <= g.per_pol(); ++round) {
        int best_any = -1, best_p = -1;
        double best_any_sum = 0.0, best_p_sum = 0.0;
        FeasibilityReport best_any_rep, best_p_rep;

        for (int pos : remaining) { // ascending order: ties resolve low
            AntennaMask cand = selected;
            cand.set(pos, true);
            FeasibilityReport rep = is_feasible(channels, users, cand, c, rc, &meter);
            if (best_any < 0 || rep.sum_rate > best_any_sum) {
                best_any = pos;
                best_any_sum = rep.sum_rate;
                best_any_rep = rep;
            }
            if (rep.rates_ok && (best_p < 0 || rep.sum_rate > best_p_sum)) {
                best_p = pos;
                best_p_sum = rep.sum_rate;
                best_p_rep = rep;
            }
        }

        const int chosen = (best_p >= 0) ? best_p : best_any;
        selected.set(chosen, true);
        remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));

        if (best_p >= 0 && round >= c.m_min) {
            // Feasible candidate chosen and M_min satisfied: done.
            return detail::make_solution(selected, best_p_rep, "greedy", meter, fp, round);
        }
        if (round == g.per_pol()) {
            FeasibilityReport rep = (best_p >= 0) ? best_p_rep : best_any_rep;
            return detail::make_solution(selected, rep, "greedy", meter, fp, round);
        }
    }
    throw std::logic_error("greedy_tam: unreachable");
}

// Sequential activation in fixed index order: the mask grows as prefixes
// {0}, {0,1}, ..., stopping at the first prefix that meets the constraints.
inline TamSolution sequential_tam(const ChannelSet &channels, const std::vector<int> &users,
                                  const TamConstraints &c, const RateConfig &rc,
                                  const FpoParams &fp) {
    const ArrayGeometry &g = channels.geometry;
    c.validate(g);
    FpoMeter meter;

    AntennaMask mask = AntennaMask::none(g);
    for (int i = 0; i < g.per_pol(); ++i) {
        mask.set(i, true);
        FeasibilityReport rep = is_feasible(channels, users, mask, c, rc, &meter);
        if (rep.feasible || i + 1 == g.per_pol())
            return detail::make_solution(mask, rep, "sequential", meter, fp, i + 1);
    }
    throw std::logic_error("sequential_tam: unreachable");
}

namespace detail {

template <typename MaskOfClass>
inline std::pair<ColumnClass, TamSolution>
fixed_class_scan(const ChannelSet &channels, const std::vector<int> &users,
                 const TamConstraints &c, const RateConfig &rc, const FpoParams &fp,
                 int n_classes, const char *solver_id, MaskOfClass mask_of_class) {
    c.validate(channels.geometry);
    FpoMeter meter;
    for (int y = 0; y < n_classes; ++y) {
        AntennaMask mask = mask_of_class(y);
        FeasibilityReport rep = is_feasible(channels, users, mask, c, rc, &meter);
        if (rep.feasible || y + 1 == n_classes)
            return {ColumnClass{y}, make_solution(mask, rep, solver_id, meter, fp, y)};
    }
    throw std::logic_error("fixed_class_scan: no classes");
}

} // namespace detail

// Fixed-column scan: classes y = 0..N-1 activate columns 0..y; the first
// feasible class wins, else class N-1 is returned infeasible.
inline std::pair<ColumnClass, TamSolution>
fixed_column_tam(const ChannelSet &channels, const std::vector<int> &users,
                 const TamConstraints &c, const RateConfig &rc, const FpoParams &fp) {
    const ArrayGeometry &g = channels.geometry;
    return detail::fixed_class_scan(channels, users, c, rc, fp, n_column_classes(g),
                                    "fixed_column",
                                    [&](int y) { return AntennaMask::from_column_class(g, y); });
}

// Fixed-row variant behind the same class interface (not the labeling
// default): class y activates rows 0..y across all columns.
inline std::pair<ColumnClass, TamSolution>
fixed_row_tam(const ChannelSet &channels, const std::vector<int> &users, const TamConstraints &c,
              const RateConfig &rc, const FpoParams &fp) {
    const ArrayGeometry &g = channels.geometry;
    return detail::fixed_class_scan(channels, users, c, rc, fp, g.m_row, "fixed_row",
                                    [&](int y) { return AntennaMask::from_row_class(g, y); });
}

// Energy accounting adapter for solver outputs.
inline EnergyReport energy_report(const std::vector<TamSolution> &solutions,
                                  const ArrayGeometry &g, const PowerModel &pm) {
    std::vector<int> counts;
    counts.reserve(solutions.size());
    for (const auto &s : solutions)
        counts.push_back(s.active_elements);
    return energy_report_from_counts(counts, g.total(), pm);
}

} // namespace tamlab
