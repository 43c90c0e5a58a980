#pragma once

// Density matrices from Fourier coefficient tables on the periodic chart:
// rho = sum_{n,n'} rhot(n, n') |n><n'| over integer plane waves
// <x|n> = e^{i n x} / sqrt(V), stored against the convention
// rhot(n, n')^* = rhot(n', n) that keeps the position density real. The
// leaf label of an entry is the half-sum (n + n')/2 and the offset the
// difference, matching the transport picture's (k + k'/2, k - k'/2)
// indexing.

#include "phaselab/quantum.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace phaselab {

class FourierDensity {
public:
    FourierDensity() = default;

    /// Table over wavenumbers n in [k_min, k_max] (inclusive).
    FourierDensity(int k_min, int k_max)
        : kmin_(k_min), kmax_(k_max),
          table_(Matrix::Zero(k_max - k_min + 1, k_max - k_min + 1)) {
        if (k_max < k_min) throw std::invalid_argument("FourierDensity: empty wavenumber range");
    }

    int k_min() const { return kmin_; }
    int k_max() const { return kmax_; }
    int modes() const { return kmax_ - kmin_ + 1; }

    cplx& at(int n, int np) { return table_(n - kmin_, np - kmin_); }
    cplx at(int n, int np) const { return table_(n - kmin_, np - kmin_); }
    const Matrix& table() const { return table_; }

    /// max |rhot(n,n')^* - rhot(n',n)|
    double symmetry_residual() const {
        return (table_ - table_.adjoint()).cwiseAbs().maxCoeff();
    }

    double trace_real() const { return table_.trace().real(); }

private:
    int kmin_ = 0, kmax_ = 0;
    Matrix table_;
};

namespace detail {

/// Plane-wave synthesis matrix: columns <x_i|n> = e^{i n x_i} / sqrt(V).
inline Matrix plane_wave_basis(const ConfigGrid& g, int k_min, int k_max) {
    if (g.dim() != 1 || g.is_doubled())
        throw std::invalid_argument("FourierDensity: needs a 1-D periodic chart");
    const int n = g.storage_points(0);
    const double volume = g.length(0);
    Matrix b(n, k_max - k_min + 1);
    for (int i = 0; i < n; ++i)
        for (int m = k_min; m <= k_max; ++m)
            b(i, m - k_min) =
                std::exp(cplx(0, m * (2.0 * std::numbers::pi / volume) * g.node(0, i))) /
                std::sqrt(volume);
    return b;
}

} // namespace detail

/// Assemble rho in the grid basis. Wavenumbers must fit under the grid
/// Nyquist; the table must satisfy the hermitian symmetry.
inline DensityMatrix density_from_fourier(const FourierDensity& f, const ConfigGrid& g,
                                          double hbar, double sym_tol = 1e-10) {
    if (f.symmetry_residual() > sym_tol)
        throw std::invalid_argument("density_from_fourier: table violates rhot(n,n')* = rhot(n',n)");
    if (std::max(std::abs(f.k_min()), std::abs(f.k_max())) >= g.storage_points(0) / 2)
        throw std::invalid_argument("density_from_fourier: wavenumbers exceed the grid bandwidth");
    Matrix b = detail::plane_wave_basis(g, f.k_min(), f.k_max());
    Matrix rho = b * f.table() * b.adjoint() * cell_weight(g);
    return DensityMatrix(g, std::move(rho), hbar);
}

/// Project a grid-basis density matrix back onto the plane-wave table:
/// rhot(n, n') = <n| rho |n'>. Mutual inverse of density_from_fourier on
/// band-limited input.
inline FourierDensity fourier_from_density(const DensityMatrix& rho, int k_min, int k_max) {
    const ConfigGrid& g = rho.grid();
    if (std::max(std::abs(k_min), std::abs(k_max)) >= g.storage_points(0) / 2)
        throw std::invalid_argument("fourier_from_density: wavenumbers exceed the grid bandwidth");
    Matrix b = detail::plane_wave_basis(g, k_min, k_max);
    // <n|rho|n'>: the matrix already carries one quadrature weight (nodal
    // action), the bra-side integral contributes the other
    Matrix t = b.adjoint() * rho.matrix() * b * cell_weight(g);
    FourierDensity out(k_min, k_max);
    for (int n = k_min; n <= k_max; ++n)
        for (int np = k_min; np <= k_max; ++np) out.at(n, np) = t(n - k_min, np - k_min);
    return out;
}

} // namespace phaselab
