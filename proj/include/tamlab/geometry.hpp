#pragma once

#include <stdexcept>

namespace tamlab {

// Cross-polarized uniform planar array. Each physical position (col, row)
// hosts two elements, one per polarization; antennas are indexed
// polarization-major, so element (pol, col, row) sits at
//   pol * (m_col * m_row) + col * m_row + row.
// Muting decisions are made per position (length m_col*m_row mask) and apply
// to both polarizations of that position.
struct ArrayGeometry {
    int m_col = 8;
    int m_row = 4;
    double element_spacing = 0.5; // in wavelengths, same in both axes

    static constexpr int polarizations = 2;

    int per_pol() const { return m_col * m_row; }
    int total() const { return polarizations * m_col * m_row; }

    int element_index(int pol, int col, int row) const {
        return pol * per_pol() + col * m_row + row;
    }
    int col_of_per_pol(int e) const { return e / m_row; }
    int row_of_per_pol(int e) const { return e % m_row; }

    void validate() const {
        if (m_col < 1 || m_row < 1)
            throw std::invalid_argument("ArrayGeometry: m_col and m_row must be >= 1");
        if (element_spacing <= 0.0)
            throw std::invalid_argument("ArrayGeometry: element_spacing must be positive");
    }
};

} // namespace tamlab
