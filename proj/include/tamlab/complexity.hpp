#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdf.hpp"
#include "geometry.hpp"
#include "nam_arch.hpp"

namespace tamlab {

// Counting conventions shared by all FPO formulas: one complex multiply-add
// counts the way the reference accounting counts it, matrix work is charged by
// the leading-order terms below, and costs depend on the *total* number of
// active antennas M_i (both polarizations) in the iteration being charged.
struct FpoParams {
    int k_users = 4;   // co-scheduled users K
    int n_rx = 4;      // receive antennas N_k
    int l_streams = 2; // streams per user L_k
    int n_prb = 273;   // PRBs covered by the rate evaluation

    void validate() const {
        if (k_users < 1 || n_rx < 1 || l_streams < 1)
            throw std::invalid_argument("FpoParams: K, N_k, L_k must be >= 1");
        if (n_prb < 0)
            throw std::invalid_argument("FpoParams: n_prb must be >= 0");
    }
};

// Floating-point operations of one TAM candidate evaluation at m_active total
// active antennas: per user, covariance accumulation and dominant-eigenvector
// extraction on the per-polarization average (each charged (M_i/2)^3 under the
// per-pol convention, i.e. M_i^3/8), plus per-PRB MMSE rate work
// N_k M_i L_k + N_k^2 L_k + N_k L_k^2 + L_k^3.
inline std::int64_t fpo_iteration(int m_active, const FpoParams &p) {
    p.validate();
    if (m_active < 2 || m_active % 2 != 0)
        throw std::invalid_argument("fpo_iteration: m_active must be even and >= 2");
    const std::int64_t m = m_active;
    const std::int64_t cube_eighth = (m * m * m) / 8; // exact: m is even
    const std::int64_t per_prb = static_cast<std::int64_t>(p.n_rx) * m * p.l_streams +
                                 static_cast<std::int64_t>(p.n_rx) * p.n_rx * p.l_streams +
                                 static_cast<std::int64_t>(p.n_rx) * p.l_streams * p.l_streams +
                                 static_cast<std::int64_t>(p.l_streams) * p.l_streams * p.l_streams;
    return static_cast<std::int64_t>(p.k_users) *
           (cube_eighth + cube_eighth + static_cast<std::int64_t>(p.n_prb) * per_prb);
}

enum class TamAlgorithm { fixed_column, sequential, greedy };

enum class DistributionMode { paper, corrected };

inline std::string to_string(TamAlgorithm a) {
    switch (a) {
    case TamAlgorithm::fixed_column:
        return "fixed_column";
    case TamAlgorithm::sequential:
        return "sequential";
    default:
        return "greedy";
    }
}

// Expected FPOs per slot under the uniform stop-distribution assumption.
//   fixed_column: sum_{i=0}^{N-1} w_i F(2 m_row (i+1)),
//                 w_i = i/N (paper mode) or (i+1)/N (corrected mode)
//   sequential:   sum_{i=1}^{M/2} (2i/M)            F(2i)
//   greedy:       sum_{i=1}^{M/2} (2i/M)(M/2+1-i)   F(2i)
// Paper mode reproduces the published table verbatim, including its i/N
// anomaly (a one-class scan costs zero); corrected mode uses the inclusive
// weight (i+1)/N that the uniform assumption actually implies, and is strictly
// larger for every N >= 1.
inline double fpo_algorithm(TamAlgorithm algorithm, const ArrayGeometry &g, const FpoParams &p,
                            DistributionMode mode = DistributionMode::paper) {
    g.validate();
    p.validate();
    const int half_m = g.per_pol();
    const int m_total = g.total();
    double total = 0.0;
    if (algorithm == TamAlgorithm::fixed_column) {
        const int n_classes = g.m_col; // one class per column
        for (int i = 0; i < n_classes; ++i) {
            const double w = (mode == DistributionMode::paper)
                                 ? static_cast<double>(i) / n_classes
                                 : static_cast<double>(i + 1) / n_classes;
            total += w * static_cast<double>(fpo_iteration(2 * g.m_row * (i + 1), p));
        }
        return total;
    }
    for (int i = 1; i <= half_m; ++i) {
        double w = 2.0 * i / static_cast<double>(m_total);
        if (algorithm == TamAlgorithm::greedy)
            w *= static_cast<double>(half_m + 1 - i);
        total += w * static_cast<double>(fpo_iteration(2 * i, p));
    }
    return total;
}

// Work a solver executes before stopping at index s:
//   greedy stops after s outer rounds; round i evaluates (M/2+1-i) candidates
//   at 2i active antennas. sequential evaluates prefixes 1..s. fixed_column
//   evaluates classes 0..s.
inline std::int64_t fpo_scan_cost(TamAlgorithm algorithm, const ArrayGeometry &g,
                                  const FpoParams &p, int stop_index) {
    std::int64_t total = 0;
    if (algorithm == TamAlgorithm::fixed_column) {
        if (stop_index < 0 || stop_index >= g.m_col)
            throw std::invalid_argument("fpo_scan_cost: class index out of range");
        for (int y = 0; y <= stop_index; ++y)
            total += fpo_iteration(2 * g.m_row * (y + 1), p);
        return total;
    }
    if (stop_index < 1 || stop_index > g.per_pol())
        throw std::invalid_argument("fpo_scan_cost: stop index out of range");
    for (int i = 1; i <= stop_index; ++i) {
        std::int64_t rounds = (algorithm == TamAlgorithm::greedy) ? (g.per_pol() + 1 - i) : 1;
        total += rounds * fpo_iteration(2 * i, p);
    }
    return total;
}

// Exact expected FPOs per slot for an arbitrary empirical stop distribution,
// given as counts per stop index (class index for fixed_column, final
// popcount for the antenna scans). Computed as total executed work over total
// slots, so it matches the instrumented counters of the solvers exactly.
inline double fpo_algorithm_empirical(TamAlgorithm algorithm, const ArrayGeometry &g,
                                      const FpoParams &p,
                                      const std::vector<std::int64_t> &stop_counts) {
    std::int64_t work = 0;
    std::int64_t slots = 0;
    for (std::size_t s = 0; s < stop_counts.size(); ++s) {
        if (stop_counts[s] == 0)
            continue;
        if (stop_counts[s] < 0)
            throw std::invalid_argument("fpo_algorithm_empirical: negative count");
        work += stop_counts[s] * fpo_scan_cost(algorithm, g, p, static_cast<int>(s));
        slots += stop_counts[s];
    }
    if (slots == 0)
        throw std::invalid_argument("fpo_algorithm_empirical: empty distribution");
    return static_cast<double>(work) / static_cast<double>(slots);
}

struct NnFpoBreakdown {
    std::int64_t conv = 0;
    std::int64_t dense = 0;
    std::int64_t input_prep = 0;
    std::int64_t total = 0;
};

// Inference cost of the classifier at geometry scale: convolution charged as
// 2 (a b n_i n_k)(x1-a+1)(x2-b+1) for an x1 x x2 input with n_i channels,
// dense layers as 2AB, and input preparation (per-user per-pol covariance plus
// dominant eigenvector, same per-pol convention as fpo_iteration) as
// K * 2 * ((M/2)^3 / 8).
inline NnFpoBreakdown fpo_nn(const NamArchitecture &arch, const ArrayGeometry &g, int k_users,
                             int n_classes) {
    arch.validate();
    g.validate();
    if (k_users < 1 || n_classes < 1)
        throw std::invalid_argument("fpo_nn: k_users and n_classes must be >= 1");
    const std::int64_t x1 = g.per_pol();
    const std::int64_t x2 = 4;
    const std::int64_t oh = x1 - arch.conv_kernel_h + 1;
    const std::int64_t ow = x2 - arch.conv_kernel_w + 1;
    if (oh < 1 || ow < 1)
        throw std::invalid_argument("fpo_nn: kernel larger than input");

    NnFpoBreakdown out;
    out.conv = 2 * (static_cast<std::int64_t>(arch.conv_kernel_h) * arch.conv_kernel_w * k_users *
                    arch.conv_channels) *
               oh * ow;
    const std::int64_t flat = static_cast<std::int64_t>(arch.conv_channels) * oh * ow;
    out.dense = 2 * static_cast<std::int64_t>(arch.hidden_units) * flat +
                2 * static_cast<std::int64_t>(n_classes) * arch.hidden_units;
    const std::int64_t half = g.per_pol();
    out.input_prep = static_cast<std::int64_t>(k_users) * 2 * ((half * half * half) / 8);
    out.total = out.conv + out.dense + out.input_prep;
    return out;
}

// Static power draw of one active antenna front end. The default coefficients
// are unit placeholders, not calibrated hardware numbers; reports quote
// relative savings for that reason.
struct PowerModel {
    double tx_conversion_w = 1.0;
    double power_amplifier_w = 1.0;
    double rx_conversion_w = 1.0;
    double low_noise_amplifier_w = 1.0;

    double per_antenna_watts() const {
        return tx_conversion_w + power_amplifier_w + rx_conversion_w + low_noise_amplifier_w;
    }
};

struct EnergyReport {
    double mean_active_elements = 0.0;
    double saving_fraction = 0.0; // 1 - mean_active / M
    double mean_frontend_watts = 0.0;
    std::vector<std::pair<double, double>> active_cdf;
};

constexpr const char *kPowerModelWarning =
    "power model coefficients are unit placeholders; quote relative savings only";

inline EnergyReport energy_report_from_counts(const std::vector<int> &active_elements,
                                              int m_total, const PowerModel &pm) {
    if (active_elements.empty())
        throw std::invalid_argument("energy_report: no solutions");
    if (m_total < 1)
        throw std::invalid_argument("energy_report: m_total must be >= 1");
    EnergyReport rep;
    std::vector<double> values;
    values.reserve(active_elements.size());
    for (int a : active_elements) {
        if (a < 0 || a > m_total)
            throw std::invalid_argument("energy_report: active count outside [0, M]");
        rep.mean_active_elements += a;
        values.push_back(static_cast<double>(a));
    }
    rep.mean_active_elements /= static_cast<double>(active_elements.size());
    rep.saving_fraction = 1.0 - rep.mean_active_elements / static_cast<double>(m_total);
    rep.mean_frontend_watts = rep.mean_active_elements * pm.per_antenna_watts();
    rep.active_cdf = empirical_cdf(values);
    return rep;
}

} // namespace tamlab
