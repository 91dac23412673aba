#pragma once

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tamlab {

// Right-continuous empirical CDF: sorted unique values paired with cumulative
// fractions; the last fraction is exactly 1. Duplicates collapse into one step.
inline std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("empirical_cdf: empty input");
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> cdf;
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!cdf.empty() && cdf.back().first == values[i])
            cdf.back().second = static_cast<double>(i + 1) / n;
        else
            cdf.emplace_back(values[i], static_cast<double>(i + 1) / n);
    }
    return cdf;
}

} // namespace tamlab
