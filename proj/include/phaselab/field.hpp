#pragma once

// Fields sampled on configuration grids. Values live on the storage grid
// (the doubled domain for box grids) so every spectral operation sees a
// plain periodic array. Construction from physical samples fills the mirror
// half according to the extension parity.

#include "phaselab/grid.hpp"

#include <complex>
#include <functional>
#include <type_traits>
#include <span>
#include <stdexcept>
#include <vector>

namespace phaselab {

using cplx = std::complex<double>;

template <typename T>
class GridField {
public:
    GridField() = default;

    GridField(ConfigGrid grid, T fill = T{},
              std::array<Extension, kMaxDim> ext = {Extension::none, Extension::none})
        : grid_(grid), v_(static_cast<size_t>(grid.node_count()), fill), ext_(ext) {
        default_extension();
    }

    GridField(ConfigGrid grid, std::vector<T> values,
              std::array<Extension, kMaxDim> ext = {Extension::none, Extension::none})
        : grid_(grid), v_(std::move(values)), ext_(ext) {
        if (static_cast<std::int64_t>(v_.size()) != grid_.node_count())
            throw std::invalid_argument("GridField: value count does not match grid");
        default_extension();
    }

    const ConfigGrid& grid() const { return grid_; }
    std::span<const T> values() const { return v_; }
    std::span<T> values() { return v_; }
    std::int64_t size() const { return static_cast<std::int64_t>(v_.size()); }

    T& operator[](std::int64_t i) { return v_[static_cast<size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return v_[static_cast<size_t>(i)]; }

    T& at(int i0, int i1 = 0) { return v_[static_cast<size_t>(grid_.flat_index(i0, i1))]; }
    const T& at(int i0, int i1 = 0) const { return v_[static_cast<size_t>(grid_.flat_index(i0, i1))]; }

    Extension extension(int axis) const { return ext_[axis]; }
    void set_extension(int axis, Extension e) { ext_[axis] = e; }

    /// Enforce the doubling symmetry from the physical half [0, P] onto the
    /// mirror half. Node P (the far wall) belongs to the stored array.
    void apply_extension() {
        if (!grid_.is_doubled()) return;
        const int n0 = grid_.storage_points(0);
        const int p0 = grid_.points(0);
        if (grid_.dim() == 1) {
            for (int i = 1; i < p0; ++i)
                v_[static_cast<size_t>(n0 - i)] = mirror(v_[static_cast<size_t>(i)], ext_[0]);
            if (ext_[0] == Extension::odd) { v_[0] = T{}; v_[static_cast<size_t>(p0)] = T{}; }
        } else {
            const int n1 = grid_.storage_points(1);
            const int p1 = grid_.points(1);
            for (int i = 0; i < n0; ++i)
                for (int j = 1; j < p1; ++j)
                    at(i, n1 - j) = mirror(at(i, j), ext_[1]);
            for (int i = 1; i < p0; ++i)
                for (int j = 0; j < n1; ++j)
                    at(n0 - i, j) = mirror(at(i, j), ext_[0]);
            if (ext_[0] == Extension::odd)
                for (int j = 0; j < n1; ++j) { at(0, j) = T{}; at(p0, j) = T{}; }
            if (ext_[1] == Extension::odd)
                for (int i = 0; i < n0; ++i) { at(i, 0) = T{}; at(i, p1) = T{}; }
        }
    }

    bool same_grid(const GridField& o) const { return grid_ == o.grid_; }

private:
    static T mirror(const T& x, Extension e) { return e == Extension::odd ? T(-x) : x; }

    void default_extension() {
        if (grid_.is_doubled())
            for (int a = 0; a < grid_.dim(); ++a)
                if (ext_[a] == Extension::none) ext_[a] = Extension::even;
    }

    ConfigGrid grid_;
    std::vector<T> v_;
    std::array<Extension, kMaxDim> ext_{Extension::none, Extension::none};
};

using ScalarField = GridField<double>;
using ComplexField = GridField<cplx>;

/// Covector (1-form) field: one scalar component per configuration axis.
struct CovectorField {
    std::vector<ScalarField> comp;

    CovectorField() = default;
    explicit CovectorField(const ConfigGrid& g) {
        for (int a = 0; a < g.dim(); ++a) comp.emplace_back(g);
    }
    int dim() const { return static_cast<int>(comp.size()); }
    const ConfigGrid& grid() const { return comp.at(0).grid(); }
};

template <typename T, typename F>
GridField<T> sample_field(const ConfigGrid& g, F&& f,
                          std::array<Extension, kMaxDim> ext = {Extension::none, Extension::none}) {
    GridField<T> out(g, T{}, ext);
    if (g.dim() == 2) {
        if constexpr (std::is_invocable_v<F&, double, double>) {
            for (int i = 0; i < g.storage_points(0); ++i)
                for (int j = 0; j < g.storage_points(1); ++j)
                    out.at(i, j) = f(g.node(0, i), g.node(1, j));
        } else {
            throw std::invalid_argument("sample_field: sampler does not take two coordinates");
        }
    } else {
        if constexpr (std::is_invocable_v<F&, double>) {
            for (int i = 0; i < g.storage_points(0); ++i) out.at(i) = f(g.node(0, i));
        } else {
            throw std::invalid_argument("sample_field: sampler does not take one coordinate");
        }
    }
    return out;
}

inline ScalarField sample_scalar(const ConfigGrid& g, const std::function<double(double)>& f) {
    return sample_field<double>(g, f);
}

/// Unit-modulus section stored through its continuous (unwrapped) phase
/// theta, with the doubled-exponent convention eta = exp(2i theta). The
/// constant part of the phase plays the role of the global offset zeta.
class SynchronicityField {
public:
    SynchronicityField() = default;
    SynchronicityField(ScalarField phase, double hbar) : phase_(std::move(phase)), hbar_(hbar) {
        if (!(hbar > 0)) throw std::invalid_argument("SynchronicityField: hbar must be positive");
    }

    const ScalarField& phase() const { return phase_; }
    double hbar() const { return hbar_; }
    const ConfigGrid& grid() const { return phase_.grid(); }

    /// eta = exp(2i theta); unit modulus by construction.
    ComplexField complex_values() const {
        ComplexField out(phase_.grid());
        for (std::int64_t i = 0; i < phase_.size(); ++i)
            out[i] = std::exp(cplx(0.0, 2.0 * phase_[i]));
        return out;
    }

private:
    ScalarField phase_;
    double hbar_ = 1.0;
};

} // namespace phaselab
