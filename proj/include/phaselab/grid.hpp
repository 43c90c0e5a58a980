#pragma once

// Uniform configuration grids (1-D / 2-D, periodic or box-doubled) and the
// phase-space product grid built on top of them. Node coordinates are
// derived from integer indices only, so identical inputs give bit-identical
// grids.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace phaselab {

inline constexpr int kMaxDim = 2;

enum class Boundary { periodic, box_doubled };

/// Parity of the doubling extension carried by fields on box-doubled grids.
/// Odd extension (f(2L - x) = -f(x)) suits wavefunctions vanishing at walls,
/// even extension suits densities.
enum class Extension : std::uint8_t { none = 0, even = 1, odd = 2 };

class ConfigGrid {
public:
    ConfigGrid() = default;

    ConfigGrid(int dim, std::array<double, kMaxDim> lo, std::array<double, kMaxDim> hi,
               std::array<int, kMaxDim> points, Boundary boundary)
        : dim_(dim), lo_(lo), hi_(hi), pts_(points), boundary_(boundary) {
        if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("ConfigGrid: dim must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            if (pts_[a] < 8) throw std::invalid_argument("ConfigGrid: need >= 8 points per axis");
            if (!(hi_[a] > lo_[a])) throw std::invalid_argument("ConfigGrid: non-positive extent");
        }
        for (int a = dim; a < kMaxDim; ++a) { lo_[a] = 0; hi_[a] = 0; pts_[a] = 1; }
    }

    int dim() const { return dim_; }
    Boundary boundary() const { return boundary_; }
    bool is_doubled() const { return boundary_ == Boundary::box_doubled; }

    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }
    double length(int axis) const { return hi_[axis] - lo_[axis]; }
    /// Physical points per axis as constructed (walls excluded on doubled grids).
    int points(int axis) const { return pts_[axis]; }
    double spacing(int axis) const { return length(axis) / pts_[axis]; }

    /// Storage size per axis: doubled grids store the mirror half as well.
    int storage_points(int axis) const { return is_doubled() ? 2 * pts_[axis] : pts_[axis]; }
    /// Period of the computational (possibly doubled) domain.
    double storage_length(int axis) const { return is_doubled() ? 2 * length(axis) : length(axis); }

    std::int64_t node_count() const {
        std::int64_t n = 1;
        for (int a = 0; a < dim_; ++a) n *= storage_points(a);
        return n;
    }

    /// Coordinate of storage node i along an axis (i may index into the
    /// mirror half of a doubled grid).
    double node(int axis, int i) const { return lo_[axis] + spacing(axis) * i; }

    /// Row-major flat index, axis 0 slowest.
    std::int64_t flat_index(int i0, int i1 = 0) const {
        return static_cast<std::int64_t>(i0) * (dim_ == 2 ? storage_points(1) : 1) + i1;
    }

    bool operator==(const ConfigGrid& o) const {
        if (dim_ != o.dim_ || boundary_ != o.boundary_) return false;
        for (int a = 0; a < dim_; ++a)
            if (lo_[a] != o.lo_[a] || hi_[a] != o.hi_[a] || pts_[a] != o.pts_[a]) return false;
        return true;
    }
    bool operator!=(const ConfigGrid& o) const { return !(*this == o); }

private:
    int dim_ = 1;
    std::array<double, kMaxDim> lo_{{0, 0}};
    std::array<double, kMaxDim> hi_{{1, 1}};
    std::array<int, kMaxDim> pts_{{8, 1}};
    Boundary boundary_ = Boundary::periodic;
};

inline ConfigGrid make_uniform_grid(int dim, std::array<double, kMaxDim> lo,
                                    std::array<double, kMaxDim> hi,
                                    std::array<int, kMaxDim> points, Boundary boundary) {
    return ConfigGrid(dim, lo, hi, points, boundary);
}

inline ConfigGrid make_uniform_grid(double lo, double hi, int points, Boundary boundary) {
    return ConfigGrid(1, {lo, 0}, {hi, 0}, {points, 1}, boundary);
}

/// Cotangent-bundle grid: configuration grid times a uniform momentum box.
/// The momentum axes are handled spectrally like periodic axes; densities
/// must decay inside the box for that to be meaningful.
class PhaseGrid {
public:
    PhaseGrid() = default;

    PhaseGrid(ConfigGrid x, std::array<double, kMaxDim> p_lo, std::array<double, kMaxDim> p_hi,
              std::array<int, kMaxDim> p_points)
        : x_(x), plo_(p_lo), phi_(p_hi), ppts_(p_points) {
        if (x.is_doubled())
            throw std::invalid_argument("PhaseGrid: configuration grid must be periodic");
        for (int a = 0; a < x.dim(); ++a) {
            if (ppts_[a] < 8) throw std::invalid_argument("PhaseGrid: need >= 8 momentum points");
            if (!(phi_[a] > plo_[a])) throw std::invalid_argument("PhaseGrid: bad momentum extent");
        }
        for (int a = x.dim(); a < kMaxDim; ++a) { plo_[a] = 0; phi_[a] = 0; ppts_[a] = 1; }
    }

    const ConfigGrid& xgrid() const { return x_; }
    int dim() const { return x_.dim(); }

    double p_lo(int axis) const { return plo_[axis]; }
    double p_hi(int axis) const { return phi_[axis]; }
    double p_length(int axis) const { return phi_[axis] - plo_[axis]; }
    int p_points(int axis) const { return ppts_[axis]; }
    double p_spacing(int axis) const { return p_length(axis) / ppts_[axis]; }
    double p_node(int axis, int i) const { return plo_[axis] + p_spacing(axis) * i; }
    double p_center(int axis) const { return 0.5 * (plo_[axis] + phi_[axis]); }

    /// Total number of phase-space nodes.
    std::int64_t node_count() const {
        std::int64_t n = x_.node_count();
        for (int a = 0; a < dim(); ++a) n *= ppts_[a];
        return n;
    }

    /// Phase-space volume element.
    double cell_volume() const {
        double v = 1;
        for (int a = 0; a < dim(); ++a) v *= x_.spacing(a) * p_spacing(a);
        return v;
    }

    bool operator==(const PhaseGrid& o) const {
        if (!(x_ == o.x_)) return false;
        for (int a = 0; a < dim(); ++a)
            if (plo_[a] != o.plo_[a] || phi_[a] != o.phi_[a] || ppts_[a] != o.ppts_[a]) return false;
        return true;
    }
    bool operator!=(const PhaseGrid& o) const { return !(*this == o); }

private:
    ConfigGrid x_;
    std::array<double, kMaxDim> plo_{{0, 0}};
    std::array<double, kMaxDim> phi_{{0, 0}};
    std::array<int, kMaxDim> ppts_{{1, 1}};
};

inline PhaseGrid make_phase_grid(const ConfigGrid& x, double p_lo, double p_hi, int p_points) {
    return PhaseGrid(x, {p_lo, p_lo}, {p_hi, p_hi}, {p_points, p_points});
}

} // namespace phaselab
