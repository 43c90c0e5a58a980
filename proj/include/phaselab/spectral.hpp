#pragma once

// Spectral derivative and quadrature kernels for periodic (and doubled)
// uniform grids, plus phase unwrapping and the synchronicity -> momentum map
// p = -i (hbar/2) eta^{-1} d eta realized on stored half-phases.

#include "phaselab/fft.hpp"
#include "phaselab/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace phaselab {

namespace detail {

/// In-place spectral d/dx along `axis` of a row-major rank-`rank` complex
/// array with extents shape[0..rank). `period` is the domain length of that
/// axis. The Nyquist mode of even-length axes is dropped (standard for first
/// derivatives of real data).
inline void spectral_derivative_inplace(cplx* data, const int* shape, int rank, int axis,
                                        double period) {
    if (axis < 0 || axis >= rank) throw std::invalid_argument("spectral_derivative: axis out of range");
    const int n = shape[axis];
    std::int64_t stride = 1;
    for (int a = axis + 1; a < rank; ++a) stride *= shape[a];
    std::int64_t outer = 1;
    for (int a = 0; a < axis; ++a) outer *= shape[a];

    std::vector<cplx> ik(static_cast<size_t>(n));
    const double k0 = 2.0 * std::numbers::pi / period;
    for (int i = 0; i < n; ++i) {
        int m = fft::mode_index(i, n);
        if (n % 2 == 0 && i == n / 2) m = 0; // Nyquist
        ik[static_cast<size_t>(i)] = cplx(0.0, k0 * m);
    }

    const double inv_n = 1.0 / n;
    for (std::int64_t o = 0; o < outer; ++o) {
        cplx* block = data + o * n * stride;
        fft::transform_lines(block, n, static_cast<int>(stride), static_cast<int>(stride), 1,
                             FFTW_FORWARD);
        for (int i = 0; i < n; ++i) {
            const cplx f = ik[static_cast<size_t>(i)] * inv_n;
            cplx* line = block + static_cast<std::int64_t>(i) * stride;
            for (std::int64_t s = 0; s < stride; ++s) line[s] *= f;
        }
        fft::transform_lines(block, n, static_cast<int>(stride), static_cast<int>(stride), 1,
                             FFTW_BACKWARD);
    }
}

inline Extension flip(Extension e) {
    if (e == Extension::even) return Extension::odd;
    if (e == Extension::odd) return Extension::even;
    return e;
}

/// Kahan-compensated sequential sum; fixed order for reproducibility.
template <typename T>
T stable_sum(std::span<const T> v) {
    T s{}, c{};
    for (const T& x : v) {
        T y = x - c;
        T t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

} // namespace detail

/// d(field)/dx^axis on the storage (periodic) domain. Exact to round-off for
/// band-limited fields. Differentiation flips the extension parity of box
/// fields along that axis.
inline ComplexField spectral_derivative(const ComplexField& f, int axis) {
    const ConfigGrid& g = f.grid();
    if (axis < 0 || axis >= g.dim()) throw std::invalid_argument("spectral_derivative: axis out of range");
    ComplexField out = f;
    int shape[kMaxDim] = {g.storage_points(0), g.dim() == 2 ? g.storage_points(1) : 1};
    detail::spectral_derivative_inplace(out.values().data(), shape, g.dim() == 2 ? 2 : 1, axis,
                                        g.storage_length(axis));
    out.set_extension(axis, detail::flip(f.extension(axis)));
    return out;
}

inline ScalarField spectral_derivative(const ScalarField& f, int axis) {
    const ConfigGrid& g = f.grid();
    if (axis < 0 || axis >= g.dim()) throw std::invalid_argument("spectral_derivative: axis out of range");
    std::vector<cplx> buf(f.values().begin(), f.values().end());
    int shape[kMaxDim] = {g.storage_points(0), g.dim() == 2 ? g.storage_points(1) : 1};
    detail::spectral_derivative_inplace(buf.data(), shape, g.dim() == 2 ? 2 : 1, axis,
                                        g.storage_length(axis));
    ScalarField out(g);
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = buf[static_cast<size_t>(i)].real();
    out.set_extension(axis, detail::flip(f.extension(axis)));
    return out;
}

/// Quadrature-consistent integral over the physical domain: rectangle rule
/// on periodic grids, trapezoid (= half the doubled rectangle sum) on box
/// grids. Fixed summation order.
template <typename T>
T integrate(const GridField<T>& f) {
    const ConfigGrid& g = f.grid();
    double cell = 1.0;
    for (int a = 0; a < g.dim(); ++a) cell *= g.spacing(a);
    if (g.is_doubled())
        for (int a = 0; a < g.dim(); ++a) cell *= 0.5; // mirror half counted once
    return detail::stable_sum(f.values()) * cell;
}

/// L2 norm squared with the same quadrature.
inline double norm_squared(const ComplexField& f) {
    ScalarField mag(f.grid());
    for (std::int64_t i = 0; i < f.size(); ++i) mag[i] = std::norm(f[i]);
    for (int a = 0; a < f.grid().dim(); ++a) mag.set_extension(a, Extension::even);
    return integrate(mag);
}

/// Continuous phase from complex samples: sequential unwrap with 2 pi jumps,
/// rows first then the leading column in 2-D. Returns false (and leaves the
/// residue count in *residues) when plaquette residues indicate a phase
/// vortex, in which case the unwrap is not globally consistent.
inline bool unwrap_phase(const ComplexField& f, ScalarField& phase_out, int* residues = nullptr) {
    const ConfigGrid& g = f.grid();
    const double two_pi = 2.0 * std::numbers::pi;
    auto principal = [&](double a) { return a - two_pi * std::round(a / two_pi); };
    ScalarField theta(g);
    if (g.dim() == 1) {
        const int n = g.storage_points(0);
        theta.at(0) = std::arg(f.at(0));
        for (int i = 1; i < n; ++i)
            theta.at(i) = theta.at(i - 1) + principal(std::arg(f.at(i)) - theta.at(i - 1));
        if (residues) *residues = 0;
        phase_out = theta;
        return true;
    }
    const int n0 = g.storage_points(0), n1 = g.storage_points(1);
    theta.at(0, 0) = std::arg(f.at(0, 0));
    for (int i = 1; i < n0; ++i)
        theta.at(i, 0) = theta.at(i - 1, 0) + principal(std::arg(f.at(i, 0)) - theta.at(i - 1, 0));
    for (int i = 0; i < n0; ++i)
        for (int j = 1; j < n1; ++j)
            theta.at(i, j) = theta.at(i, j - 1) + principal(std::arg(f.at(i, j)) - theta.at(i, j - 1));
    // Residue check: wrapped gradients around each plaquette must cancel.
    int bad = 0;
    for (int i = 0; i + 1 < n0; ++i)
        for (int j = 0; j + 1 < n1; ++j) {
            double cyc = principal(std::arg(f.at(i + 1, j)) - std::arg(f.at(i, j))) +
                         principal(std::arg(f.at(i + 1, j + 1)) - std::arg(f.at(i + 1, j))) +
                         principal(std::arg(f.at(i, j + 1)) - std::arg(f.at(i + 1, j + 1))) +
                         principal(std::arg(f.at(i, j)) - std::arg(f.at(i, j + 1)));
            if (std::abs(cyc) > 1e-6) ++bad;
        }
    if (residues) *residues = bad;
    phase_out = theta;
    return bad == 0;
}

/// Spectral gradient of an unwrapped phase that may wind around periodic
/// axes: the integer winding is split off as a linear part, the periodic
/// remainder is differentiated spectrally.
inline ScalarField phase_gradient(const ScalarField& theta, int axis) {
    const ConfigGrid& g = theta.grid();
    const double L = g.storage_length(axis);
    const double two_pi = 2.0 * std::numbers::pi;
    const int n = g.storage_points(axis);

    // Estimate winding from the first line along `axis`.
    double first, last, prev;
    if (g.dim() == 1) {
        first = theta.at(0); last = theta.at(n - 1); prev = theta.at(n - 2);
    } else if (axis == 0) {
        first = theta.at(0, 0); last = theta.at(n - 1, 0); prev = theta.at(n - 2, 0);
    } else {
        first = theta.at(0, 0); last = theta.at(0, n - 1); prev = theta.at(0, n - 2);
    }
    const double extrapolated = last + (last - prev);
    const double winding = std::round((extrapolated - first) / two_pi);
    const double slope = winding * two_pi / L;

    ScalarField residual = theta;
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) residual.at(i) -= slope * (g.node(0, i) - g.lo(0));
    } else {
        for (int i = 0; i < g.storage_points(0); ++i)
            for (int j = 0; j < g.storage_points(1); ++j)
                residual.at(i, j) -= slope * (g.node(axis, axis == 0 ? i : j) - g.lo(axis));
    }
    ScalarField grad = spectral_derivative(residual, axis);
    for (std::int64_t i = 0; i < grad.size(); ++i) grad[i] += slope;
    return grad;
}

/// p = -i (hbar/2) eta^{-1} d eta. With eta = exp(2i theta) this is
/// hbar * grad theta; real-valued, linear in the phase and insensitive to
/// constant offsets.
inline CovectorField momentum_of_synchronicity(const SynchronicityField& eta) {
    const ConfigGrid& g = eta.grid();
    CovectorField p(g);
    for (int a = 0; a < g.dim(); ++a) {
        p.comp[a] = phase_gradient(eta.phase(), a);
        for (std::int64_t i = 0; i < p.comp[a].size(); ++i) p.comp[a][i] *= eta.hbar();
    }
    return p;
}

/// Band-limited (trigonometric) interpolant of a periodic sampled field and
/// its partial derivatives; O(N) per evaluation. Intended for tabulated
/// potentials queried off-grid by particle integrators.
class TrigInterpolant {
public:
    explicit TrigInterpolant(const ScalarField& f) : grid_(f.grid()) {
        const ConfigGrid& g = grid_;
        n0_ = g.storage_points(0);
        n1_ = g.dim() == 2 ? g.storage_points(1) : 1;
        coef_.assign(f.values().begin(), f.values().end());
        int shape[2] = {n0_, n1_};
        cplx* d = coef_.data();
        fft::transform_lines(d, n1_ == 1 ? n0_ : n1_, 1, n1_ == 1 ? 1 : n0_, n1_, FFTW_FORWARD);
        if (n1_ > 1) fft::transform_lines(d, n0_, n1_, n1_, 1, FFTW_FORWARD);
        (void)shape;
        const double s = 1.0 / (static_cast<double>(n0_) * n1_);
        for (auto& c : coef_) c *= s;
    }

    double value(const double* x) const { return eval(x, -1); }
    double partial(const double* x, int axis) const { return eval(x, axis); }

private:
    double eval(const double* x, int daxis) const {
        const ConfigGrid& g = grid_;
        const double two_pi = 2.0 * std::numbers::pi;
        cplx acc = 0;
        for (int i = 0; i < n0_; ++i) {
            int m0 = fft::mode_index(i, n0_);
            if (n0_ % 2 == 0 && i == n0_ / 2 && daxis == 0) continue;
            const double k0v = two_pi * m0 / g.storage_length(0);
            for (int j = 0; j < n1_; ++j) {
                int m1 = fft::mode_index(j, n1_);
                if (n1_ % 2 == 0 && j == n1_ / 2 && daxis == 1) continue;
                const double k1v = n1_ > 1 ? two_pi * m1 / g.storage_length(1) : 0.0;
                double ph = k0v * (x[0] - g.lo(0));
                if (n1_ > 1) ph += k1v * (x[1] - g.lo(1));
                cplx term = coef_[static_cast<size_t>(i) * n1_ + j] * std::exp(cplx(0.0, ph));
                if (daxis == 0) term *= cplx(0.0, k0v);
                if (daxis == 1) term *= cplx(0.0, k1v);
                acc += term;
            }
        }
        return acc.real();
    }

    ConfigGrid grid_;
    int n0_ = 0, n1_ = 0;
    std::vector<cplx> coef_;
};

} // namespace phaselab
