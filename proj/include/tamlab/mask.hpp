#pragma once

#include <armadillo>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"

namespace tamlab {

// Per-polarization mute mask: one bit per array position (length M/2). A
// position's two cross-polarized elements are always muted together, so the
// full-array activation is diag([a; a]) and active_elements() = 2 * popcount().
class AntennaMask {
  public:
    AntennaMask() = default;

    explicit AntennaMask(const ArrayGeometry &g, bool active = false)
        : geometry_(g), bits_(static_cast<std::size_t>(g.per_pol()), active ? 1 : 0) {}

    static AntennaMask all_active(const ArrayGeometry &g) { return AntennaMask(g, true); }
    static AntennaMask none(const ArrayGeometry &g) { return AntennaMask(g, false); }

    // Positions belonging to columns 0..class_index (inclusive). Class indices
    // enumerate the fixed-column activation patterns, so class_index must lie
    // in [0, m_col).
    static AntennaMask from_column_class(const ArrayGeometry &g, int class_index) {
        if (class_index < 0 || class_index >= g.m_col)
            throw std::invalid_argument("AntennaMask: column class out of range");
        AntennaMask m(g, false);
        for (int c = 0; c <= class_index; ++c)
            for (int r = 0; r < g.m_row; ++r)
                m.set(g.element_index(0, c, r), true);
        return m;
    }

    // Fixed-row counterpart: positions belonging to rows 0..class_index across
    // every column. Not the labeling default; provided behind the same class
    // interface.
    static AntennaMask from_row_class(const ArrayGeometry &g, int class_index) {
        if (class_index < 0 || class_index >= g.m_row)
            throw std::invalid_argument("AntennaMask: row class out of range");
        AntennaMask m(g, false);
        for (int c = 0; c < g.m_col; ++c)
            for (int r = 0; r <= class_index; ++r)
                m.set(g.element_index(0, c, r), true);
        return m;
    }

    const ArrayGeometry &geometry() const { return geometry_; }
    int size() const { return static_cast<int>(bits_.size()); }

    bool bit(int i) const { return bits_.at(static_cast<std::size_t>(i)) != 0; }
    void set(int i, bool v) { bits_.at(static_cast<std::size_t>(i)) = v ? 1 : 0; }

    int popcount() const {
        int n = 0;
        for (auto b : bits_)
            n += b;
        return n;
    }
    int active_elements() const { return 2 * popcount(); }

    // Active per-polarization position indices, ascending.
    arma::uvec active_positions() const {
        arma::uvec idx(static_cast<arma::uword>(popcount()));
        arma::uword n = 0;
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i])
                idx[n++] = static_cast<arma::uword>(i);
        return idx;
    }

    // Active full-array antenna indices (both polarization blocks), ascending.
    arma::uvec active_antennas() const {
        const arma::uvec pos = active_positions();
        const arma::uword p = static_cast<arma::uword>(geometry_.per_pol());
        arma::uvec idx(2 * pos.n_elem);
        for (arma::uword i = 0; i < pos.n_elem; ++i) {
            idx[i] = pos[i];
            idx[pos.n_elem + i] = pos[i] + p;
        }
        return idx;
    }

    bool operator==(const AntennaMask &o) const {
        return bits_ == o.bits_ && geometry_.m_col == o.geometry_.m_col &&
               geometry_.m_row == o.geometry_.m_row;
    }

  private:
    ArrayGeometry geometry_;
    std::vector<std::uint8_t> bits_;
};

// Fixed-column activation class: class y activates columns 0..y, giving
// (y+1) * m_row active positions. The class count equals m_col.
struct ColumnClass {
    int index = 0;
};

inline AntennaMask class_to_mask(const ArrayGeometry &g, ColumnClass c) {
    return AntennaMask::from_column_class(g, c.index);
}

inline int n_column_classes(const ArrayGeometry &g) { return g.m_col; }

// Zeroes the muted columns of a channel matrix (both polarization blocks).
inline arma::cx_mat apply_mask(const arma::cx_mat &h, const AntennaMask &mask) {
    if (h.n_cols != static_cast<arma::uword>(mask.geometry().total()))
        throw std::invalid_argument("apply_mask: channel columns do not match geometry");
    const arma::uword p = static_cast<arma::uword>(mask.geometry().per_pol());
    arma::cx_mat out = h;
    for (int i = 0; i < mask.size(); ++i)
        if (!mask.bit(i)) {
            out.col(static_cast<arma::uword>(i)).zeros();
            out.col(static_cast<arma::uword>(i) + p).zeros();
        }
    return out;
}

inline arma::cx_cube apply_mask(const arma::cx_cube &h, const AntennaMask &mask) {
    if (h.n_cols != static_cast<arma::uword>(mask.geometry().total()))
        throw std::invalid_argument("apply_mask: channel columns do not match geometry");
    arma::cx_cube out = h;
    const arma::uword p = static_cast<arma::uword>(mask.geometry().per_pol());
    for (int i = 0; i < mask.size(); ++i)
        if (!mask.bit(i))
            for (arma::uword t = 0; t < out.n_slices; ++t) {
                out.slice(t).col(static_cast<arma::uword>(i)).zeros();
                out.slice(t).col(static_cast<arma::uword>(i) + p).zeros();
            }
    return out;
}

} // namespace tamlab
