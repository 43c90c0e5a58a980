#pragma once

// Quantum layer for the canonical Hamiltonian class
//   Hop = 1/2 (p + A) h (p + A) + U,   p = -i hbar d
// on periodic and box-doubled grids: wavefunction evolution by Strang
// split-step Fourier (Crank-Nicolson when A varies in space), density
// matrices in the grid basis evolved by unitary conjugation, polynomial
// observables, Madelung field extraction, moment-equation checks and the
// Heisenberg picture.
//
// Conventions. Inner products carry the quadrature weight: <phi|psi> =
// sum conj(phi) psi * w with w the cell volume (halved per doubled axis).
// Density matrices satisfy trace(rho) = 1 with rho = |psi><psi| w for pure
// states. Operator matrices act nodally (no weight).

#include "phaselab/hamiltonian.hpp"
#include "phaselab/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace phaselab {

using Matrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline double cell_weight(const ConfigGrid& g) {
    double w = 1;
    for (int a = 0; a < g.dim(); ++a) {
        w *= g.spacing(a);
        if (g.is_doubled()) w *= 0.5;
    }
    return w;
}

// ---------------------------------------------------------------------------
// WaveFunction
// ---------------------------------------------------------------------------

class WaveFunction {
public:
    WaveFunction() = default;
    WaveFunction(ComplexField values, double hbar) : v_(std::move(values)), hbar_(hbar) {
        if (!(hbar > 0)) throw std::invalid_argument("WaveFunction: hbar must be positive");
    }

    const ConfigGrid& grid() const { return v_.grid(); }
    double hbar() const { return hbar_; }
    ComplexField& field() { return v_; }
    const ComplexField& field() const { return v_; }
    std::int64_t size() const { return v_.size(); }
    cplx& operator[](std::int64_t i) { return v_[i]; }
    const cplx& operator[](std::int64_t i) const { return v_[i]; }

    double norm_sq() const { return norm_squared(v_); }

    void normalize() {
        const double n = std::sqrt(norm_sq());
        if (!(n > 0)) throw std::invalid_argument("WaveFunction: zero norm");
        for (std::int64_t i = 0; i < v_.size(); ++i) v_[i] /= n;
    }

    CVector to_vector() const {
        CVector out(v_.size());
        for (std::int64_t i = 0; i < v_.size(); ++i) out[i] = v_[i];
        return out;
    }
    static WaveFunction from_vector(const ConfigGrid& g, const CVector& v, double hbar) {
        ComplexField f(g);
        for (std::int64_t i = 0; i < f.size(); ++i) f[i] = v[i];
        return WaveFunction(std::move(f), hbar);
    }

    template <typename F>
    static WaveFunction sample(const ConfigGrid& g, double hbar, F&& f, bool normalize_it = true,
                               Extension ext = Extension::none) {
        std::array<Extension, kMaxDim> exts{ext, ext};
        auto fld = sample_field<cplx>(g, std::forward<F>(f), exts);
        if (g.is_doubled()) fld.apply_extension();
        WaveFunction psi(std::move(fld), hbar);
        if (normalize_it) psi.normalize();
        return psi;
    }

    /// Coherent-state-like Gaussian exp(-(x-x0)^2/(4 sx^2) + i p0 x / hbar).
    static WaveFunction gaussian(const ConfigGrid& g, double hbar, Vec x0, Vec p0,
                                 double sigma_x) {
        return sample(g, hbar, [&](auto... xs) {
            const double x[] = {static_cast<double>(xs)...};
            double e = 0, ph = 0;
            for (int a = 0; a < g.dim(); ++a) {
                e += (x[a] - x0[a]) * (x[a] - x0[a]) / (4 * sigma_x * sigma_x);
                ph += p0[a] * x[a] / hbar;
            }
            return std::exp(cplx(-e, ph));
        });
    }

private:
    ComplexField v_;
    double hbar_ = 1.0;
};

inline cplx inner(const WaveFunction& a, const WaveFunction& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("inner: mismatched grids");
    cplx s = 0, c = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        cplx y = std::conj(a[i]) * b[i] - c;
        cplx t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s * cell_weight(a.grid());
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

struct OperatorRep {
    Matrix mat;
    bool hermitian = false;

    double hermiticity_residual() const { return (mat - mat.adjoint()).cwiseAbs().maxCoeff(); }
};

namespace detail {

/// Signed wavenumber (angular) for bin i along an axis; Nyquist dropped.
inline double axis_wavenumber(const ConfigGrid& g, int axis, int i) {
    const int n = g.storage_points(axis);
    int m = fft::mode_index(i, n);
    if (n % 2 == 0 && i == n / 2) m = 0;
    return 2.0 * std::numbers::pi * m / g.storage_length(axis);
}

inline void fft_axis(cplx* data, const ConfigGrid& g, int axis, int sign) {
    const int n0 = g.storage_points(0);
    const int n1 = g.dim() == 2 ? g.storage_points(1) : 1;
    if (axis == 0)
        fft::transform_lines(data, n0, n1, n1, 1, sign);
    else
        fft::transform_lines(data, n1, 1, n0, n1, sign);
}

} // namespace detail

/// Dense momentum operator matrix -i hbar d/dx^axis via the spectral
/// derivative (Nyquist dropped, hence hermitian with a real symmetric
/// spectrum on the plane-wave basis).
inline OperatorRep momentum_operator(const ConfigGrid& g, double hbar, int axis = 0) {
    const std::int64_t n = g.node_count();
    Matrix m(n, n);
    std::vector<cplx> col(static_cast<size_t>(n));
    const int n0 = g.storage_points(0), n1 = g.dim() == 2 ? g.storage_points(1) : 1;
    const double scale = 1.0 / (axis == 0 ? n0 : n1);
    for (std::int64_t j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), cplx(0));
        col[static_cast<size_t>(j)] = 1;
        detail::fft_axis(col.data(), g, axis, FFTW_FORWARD);
        std::int64_t idx = 0;
        for (int i0 = 0; i0 < n0; ++i0)
            for (int i1 = 0; i1 < n1; ++i1, ++idx) {
                const double k = axis == 0 ? detail::axis_wavenumber(g, 0, i0)
                                           : detail::axis_wavenumber(g, 1, i1);
                col[static_cast<size_t>(idx)] *= hbar * k;
            }
        detail::fft_axis(col.data(), g, axis, FFTW_BACKWARD);
        for (std::int64_t i = 0; i < n; ++i) m(i, j) = col[static_cast<size_t>(i)] * scale;
    }
    return OperatorRep{std::move(m), true};
}

/// Diagonal multiplication operator.
inline OperatorRep function_operator(const ScalarField& f) {
    const std::int64_t n = f.size();
    Matrix m = Matrix::Zero(n, n);
    for (std::int64_t i = 0; i < n; ++i) m(i, i) = f[i];
    return OperatorRep{std::move(m), true};
}

/// Observable from polynomial terms: order 0 contributes the plain
/// multiplication operator; order n >= 1 contributes the anticommutator
/// f p^n + p^n f. Weights must be real; orders above 4 are rejected.
struct ObservableTerm {
    int order = 0;
    ScalarField weight;
    int axis = 0;
};

inline OperatorRep build_observable(const std::vector<ObservableTerm>& terms,
                                    const ConfigGrid& g, double hbar) {
    const std::int64_t n = g.node_count();
    Matrix acc = Matrix::Zero(n, n);
    Matrix pmat[kMaxDim];
    bool have_p[kMaxDim] = {false, false};
    for (const auto& t : terms) {
        if (t.order < 0 || t.order > 4)
            throw std::invalid_argument("build_observable: order must be in [0, 4]");
        if (!(t.weight.grid() == g))
            throw std::invalid_argument("build_observable: weight grid mismatch");
        if (t.axis < 0 || t.axis >= g.dim())
            throw std::invalid_argument("build_observable: axis out of range");
        for (std::int64_t i = 0; i < t.weight.size(); ++i)
            if (!std::isfinite(t.weight[i]))
                throw std::invalid_argument("build_observable: weight must be real and finite");
        Matrix f = function_operator(t.weight).mat;
        if (t.order == 0) {
            acc += f;
            continue;
        }
        if (!have_p[t.axis]) {
            pmat[t.axis] = momentum_operator(g, hbar, t.axis).mat;
            have_p[t.axis] = true;
        }
        Matrix pn = pmat[t.axis];
        for (int k = 1; k < t.order; ++k) pn = pn * pmat[t.axis];
        acc += f * pn + pn * f;
    }
    return OperatorRep{std::move(acc), true};
}

/// Operator of a quadratic charge Q = A^{ij} p_i p_j + B_i p_i + p_i B_i + C.
inline OperatorRep observable_of_charge(const ChargeSpec& q, const ConfigGrid& g, double hbar) {
    const std::int64_t n = g.node_count();
    Matrix acc = Matrix::Zero(n, n);
    Matrix p[kMaxDim];
    for (int a = 0; a < q.dim; ++a) p[a] = momentum_operator(g, hbar, a).mat;
    for (int i = 0; i < q.dim; ++i)
        for (int j = 0; j < q.dim; ++j)
            if (q.quadratic.h[i][j] != 0) acc += q.quadratic.h[i][j] * p[i] * p[j];
    for (int i = 0; i < q.dim; ++i) {
        ScalarField b = sample_field<double>(g, [&](auto... xs) {
            const double xv[] = {static_cast<double>(xs)...};
            Vec x{xv[0], sizeof...(xs) == 2 ? xv[sizeof...(xs) - 1] : 0.0};
            return q.B[i].value(x);
        });
        bool nonzero = false;
        for (std::int64_t k = 0; k < b.size(); ++k)
            if (b[k] != 0) { nonzero = true; break; }
        if (!nonzero) continue;
        Matrix bm = function_operator(b).mat;
        acc += bm * p[i] + p[i] * bm;
    }
    ScalarField c = sample_field<double>(g, [&](auto... xs) {
        const double xv[] = {static_cast<double>(xs)...};
        Vec x{xv[0], sizeof...(xs) == 2 ? xv[sizeof...(xs) - 1] : 0.0};
        return q.C.value(x);
    });
    acc += function_operator(c).mat;
    return OperatorRep{std::move(acc), true};
}

/// Dense Hamiltonian matrix 1/2 (p + A) h (p + A) + U.
inline OperatorRep hamiltonian_operator(const HamiltonianSpec& H, const ConfigGrid& g,
                                        double hbar) {
    if (H.dim() != g.dim()) throw std::invalid_argument("hamiltonian_operator: dim mismatch");
    const std::int64_t n = g.node_count();
    Matrix acc = Matrix::Zero(n, n);
    for (int i = 0; i < H.dim(); ++i) {
        Matrix qi = momentum_operator(g, hbar, i).mat;
        if (!H.vector_potential_zero()) {
            ScalarField ai = sample_field<double>(g, [&](auto... xs) {
                const double xv[] = {static_cast<double>(xs)...};
                Vec x{xv[0], sizeof...(xs) == 2 ? xv[sizeof...(xs) - 1] : 0.0};
                return H.vector_potential(i, x);
            });
            qi += function_operator(ai).mat;
        }
        for (int j = 0; j < H.dim(); ++j) {
            if (H.metric().h[i][j] == 0) continue;
            Matrix qj = momentum_operator(g, hbar, j).mat;
            if (!H.vector_potential_zero()) {
                ScalarField aj = sample_field<double>(g, [&](auto... xs) {
                    const double xv[] = {static_cast<double>(xs)...};
                    Vec x{xv[0], sizeof...(xs) == 2 ? xv[sizeof...(xs) - 1] : 0.0};
                    return H.vector_potential(j, x);
                });
                qj += function_operator(aj).mat;
            }
            acc += 0.5 * H.metric().h[i][j] * qi * qj;
        }
    }
    ScalarField u = sample_field<double>(g, [&](auto... xs) {
        const double xv[] = {static_cast<double>(xs)...};
        Vec x{xv[0], sizeof...(xs) == 2 ? xv[sizeof...(xs) - 1] : 0.0};
        return H.potential(x);
    });
    acc += function_operator(u).mat;
    return OperatorRep{std::move(acc), true};
}

inline cplx expectation(const WaveFunction& psi, const OperatorRep& F) {
    CVector v = psi.to_vector();
    return (v.adjoint() * (F.mat * v))(0) * cell_weight(psi.grid());
}

// ---------------------------------------------------------------------------
// Propagator
// ---------------------------------------------------------------------------

/// One-step evolution operator for a fixed (H, grid, hbar, dt): Strang
/// split-step Fourier when the vector potential is constant (the Fourier
/// multiplier absorbs it through p -> hbar k + A), Crank-Nicolson with a
/// cached LU factorization otherwise (1-D only).
class SchrodingerPropagator {
public:
    SchrodingerPropagator(const HamiltonianSpec& H, const ConfigGrid& g, double hbar, double dt)
        : grid_(g), hbar_(hbar), dt_(dt) {
        if (H.dim() != g.dim()) throw std::invalid_argument("propagator: dimension mismatch");
        if (!(dt != 0)) throw std::invalid_argument("propagator: dt must be nonzero");
        split_ = H.vector_potential_constant();
        if (split_) {
            build_split(H);
        } else {
            if (g.dim() != 1)
                throw std::invalid_argument(
                    "propagator: position-dependent A is supported in 1-D only");
            build_cn(H);
        }
    }

    const ConfigGrid& grid() const { return grid_; }
    double dt() const { return dt_; }

    /// In-place application to a grid-ordered state vector.
    void apply(cplx* psi) const {
        if (split_) {
            apply_half_potential(psi);
            apply_kinetic(psi);
            apply_half_potential(psi);
        } else {
            Eigen::Map<CVector> v(psi, grid_.node_count());
            CVector rhs = rhs_ * v;
            v = lu_.solve(rhs);
        }
    }

    void apply(WaveFunction& psi) const {
        if (!(psi.grid() == grid_)) throw std::invalid_argument("propagator: grid mismatch");
        apply(psi.field().values().data());
    }

    /// Dense matrix of the one-step propagator (columns = evolved basis
    /// vectors); used by the Heisenberg picture.
    Matrix dense() const {
        const std::int64_t n = grid_.node_count();
        Matrix u(n, n);
        std::vector<cplx> col(static_cast<size_t>(n));
        for (std::int64_t j = 0; j < n; ++j) {
            std::fill(col.begin(), col.end(), cplx(0));
            col[static_cast<size_t>(j)] = 1;
            apply(col.data());
            for (std::int64_t i = 0; i < n; ++i) u(i, j) = col[static_cast<size_t>(i)];
        }
        return u;
    }

private:
    void build_split(const HamiltonianSpec& H) {
        const ConfigGrid& g = grid_;
        const std::int64_t n = g.node_count();
        halfv_.resize(static_cast<size_t>(n));
        std::int64_t idx = 0;
        const int n0 = g.storage_points(0), n1 = g.dim() == 2 ? g.storage_points(1) : 1;
        for (int i0 = 0; i0 < n0; ++i0)
            for (int i1 = 0; i1 < n1; ++i1, ++idx) {
                Vec x{g.node(0, i0), g.dim() == 2 ? g.node(1, i1) : 0.0};
                halfv_[static_cast<size_t>(idx)] =
                    std::exp(cplx(0, -0.5 * dt_ * H.potential(x) / hbar_));
            }
        kin_.resize(static_cast<size_t>(n));
        Vec a{};
        for (int i = 0; i < g.dim(); ++i) a[i] = H.vector_potential(i, Vec{0, 0});
        idx = 0;
        for (int i0 = 0; i0 < n0; ++i0)
            for (int i1 = 0; i1 < n1; ++i1, ++idx) {
                Vec q{hbar_ * detail::axis_wavenumber(g, 0, i0) + a[0],
                      g.dim() == 2 ? hbar_ * detail::axis_wavenumber(g, 1, i1) + a[1] : 0.0};
                const double t = 0.5 * H.metric().contract({q.data(), size_t(g.dim())},
                                                           {q.data(), size_t(g.dim())});
                kin_[static_cast<size_t>(idx)] =
                    std::exp(cplx(0, -dt_ * t / hbar_)) / static_cast<double>(n0 * n1);
            }
    }

    void build_cn(const HamiltonianSpec& H) {
        Matrix h = hamiltonian_operator(H, grid_, hbar_).mat;
        const std::int64_t n = grid_.node_count();
        Matrix eye = Matrix::Identity(n, n);
        const cplx z(0, 0.5 * dt_ / hbar_);
        rhs_ = eye - z * h;
        lu_ = Eigen::PartialPivLU<Matrix>(eye + z * h);
    }

    void apply_half_potential(cplx* psi) const {
        const std::int64_t n = grid_.node_count();
        for (std::int64_t i = 0; i < n; ++i) psi[i] *= halfv_[static_cast<size_t>(i)];
    }

    void apply_kinetic(cplx* psi) const {
        detail::fft_axis(psi, grid_, 0, FFTW_FORWARD);
        if (grid_.dim() == 2) detail::fft_axis(psi, grid_, 1, FFTW_FORWARD);
        const std::int64_t n = grid_.node_count();
        for (std::int64_t i = 0; i < n; ++i) psi[i] *= kin_[static_cast<size_t>(i)];
        detail::fft_axis(psi, grid_, 0, FFTW_BACKWARD);
        if (grid_.dim() == 2) detail::fft_axis(psi, grid_, 1, FFTW_BACKWARD);
    }

    ConfigGrid grid_;
    double hbar_;
    double dt_;
    bool split_ = true;
    std::vector<cplx> halfv_, kin_; // split-step multipliers (kin_ absorbs 1/N)
    Matrix rhs_;
    Eigen::PartialPivLU<Matrix> lu_;
};

inline WaveFunction step_schrodinger(const HamiltonianSpec& H, const WaveFunction& psi,
                                     double dt) {
    if (dt == 0) return psi;
    SchrodingerPropagator u(H, psi.grid(), psi.hbar(), dt);
    WaveFunction out = psi;
    u.apply(out);
    return out;
}

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

inline constexpr int kDensityMatrixCap = 256;

class DensityMatrix {
public:
    DensityMatrix() = default;

    DensityMatrix(const ConfigGrid& g, Matrix rho, double hbar, bool allow_signed = false)
        : grid_(g), rho_(std::move(rho)), hbar_(hbar), allow_signed_(allow_signed) {
        if (g.node_count() > kDensityMatrixCap)
            throw std::invalid_argument("DensityMatrix: grid exceeds the dense-basis cap");
        if (rho_.rows() != g.node_count() || rho_.cols() != g.node_count())
            throw std::invalid_argument("DensityMatrix: matrix size does not match grid");
    }

    static DensityMatrix pure(const WaveFunction& psi, bool allow_signed = false) {
        CVector v = psi.to_vector();
        Matrix rho = v * v.adjoint() * cell_weight(psi.grid());
        return DensityMatrix(psi.grid(), std::move(rho), psi.hbar(), allow_signed);
    }

    const ConfigGrid& grid() const { return grid_; }
    double hbar() const { return hbar_; }
    int basis_size() const { return static_cast<int>(rho_.rows()); }
    Matrix& matrix() { return rho_; }
    const Matrix& matrix() const { return rho_; }
    bool allow_signed() const { return allow_signed_; }

    double trace_real() const { return rho_.trace().real(); }
    double hermiticity_residual() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

    void check_valid(double herm_tol = 1e-12, double trace_tol = 1e-10) const {
        if (hermiticity_residual() > herm_tol)
            throw std::invalid_argument("DensityMatrix: not hermitian");
        if (std::abs(trace_real() - 1.0) > trace_tol)
            throw std::invalid_argument("DensityMatrix: trace is not one");
    }

    /// Least eigenvalue; negative spectra are legitimate only for signed
    /// (indefinite-weight) representations.
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho_ + rho_.adjoint()),
                                                 Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    /// Diagonal position density <x|rho|x> / w (a density over x).
    ScalarField diagonal_density() const {
        ScalarField out(grid_);
        const double w = cell_weight(grid_);
        for (std::int64_t i = 0; i < out.size(); ++i) out[i] = rho_(i, i).real() / w;
        return out;
    }

    double expectation(const OperatorRep& F) const { return (rho_ * F.mat).trace().real(); }

private:
    ConfigGrid grid_;
    Matrix rho_;
    double hbar_ = 1.0;
    bool allow_signed_ = false;
};

/// rho -> U rho U^dagger with the split-step propagator applied column-wise.
inline DensityMatrix step_quantum_liouville(const HamiltonianSpec& H, const DensityMatrix& rho,
                                            double dt, double herm_tol = 1e-10) {
    if (rho.hermiticity_residual() > herm_tol)
        throw std::invalid_argument("step_quantum_liouville: input is not hermitian");
    if (dt == 0) return rho;
    SchrodingerPropagator u(H, rho.grid(), rho.hbar(), dt);
    Matrix m = rho.matrix();
    const std::int64_t n = m.rows();
    for (std::int64_t j = 0; j < n; ++j) u.apply(m.col(j).data()); // U rho
    m.adjointInPlace();
    for (std::int64_t j = 0; j < n; ++j) u.apply(m.col(j).data()); // U (U rho)^dagger
    m.adjointInPlace();                                            // U rho U^dagger
    return DensityMatrix(rho.grid(), std::move(m), rho.hbar(), rho.allow_signed());
}

// ---------------------------------------------------------------------------
// Madelung / Einstein-de Broglie extraction
// ---------------------------------------------------------------------------

struct MadelungFields {
    ScalarField density;              // |psi|^2
    CovectorField momentum;           // hbar * grad(arg psi), valid on the mask
    std::vector<std::uint8_t> mask;   // 1 where |psi| is above the node floor
    std::int64_t masked_out = 0;      // number of nodes below the floor
    bool full_mask = false;
};

/// Unwrapped phase of psi as a synchronicity section (eta = exp(2i theta)
/// doubles the wavefunction phase). Requires the phase to unwrap globally.
inline SynchronicityField synchronicity_of(const WaveFunction& psi) {
    ScalarField theta;
    int residues = 0;
    if (!unwrap_phase(psi.field(), theta, &residues))
        throw std::invalid_argument("synchronicity_of: phase has vortices and cannot unwrap");
    return SynchronicityField(theta, psi.hbar());
}

/// rho = |psi|^2 and p = hbar grad(arg psi). With a full mask the gradient
/// is spectral through the winding split; with a partial mask it falls back
/// to FD4 restricted to nodes whose stencil stays inside the mask, and
/// everything else is masked out and reported.
inline MadelungFields madelung_fields(const WaveFunction& psi, double floor_rel = 1e-8) {
    const ConfigGrid& g = psi.grid();
    MadelungFields out{ScalarField(g), CovectorField(g), {}, 0, false};

    double amax = 0;
    for (std::int64_t i = 0; i < psi.size(); ++i) amax = std::max(amax, std::abs(psi[i]));
    const double floor = floor_rel * amax;
    out.mask.assign(static_cast<size_t>(psi.size()), 0);
    for (std::int64_t i = 0; i < psi.size(); ++i) {
        out.density[i] = std::norm(psi[i]);
        out.mask[static_cast<size_t>(i)] = std::abs(psi[i]) >= floor ? 1 : 0;
        if (!out.mask[static_cast<size_t>(i)]) ++out.masked_out;
    }
    out.full_mask = out.masked_out == 0;

    ScalarField theta;
    int residues = 0;
    const bool clean = unwrap_phase(psi.field(), theta, &residues);

    if (out.full_mask) {
        if (!clean)
            throw std::invalid_argument("madelung_fields: phase vortices inside the mask");
        for (int a = 0; a < g.dim(); ++a) {
            out.momentum.comp[a] = phase_gradient(theta, a);
            for (std::int64_t i = 0; i < out.momentum.comp[a].size(); ++i)
                out.momentum.comp[a][i] *= psi.hbar();
        }
        return out;
    }

    if (g.dim() != 1)
        throw std::invalid_argument(
            "madelung_fields: partial masks are supported in 1-D only; nodes below the floor "
            "regionalize the 2-D unwrap");

    // FD4 on masked interior nodes; stencil must stay inside the mask
    const int n = g.storage_points(0);
    const double h = g.spacing(0);
    auto ok = [&](int i) { return i >= 0 && i < n && out.mask[static_cast<size_t>(i)]; };
    for (int i = 0; i < n; ++i) {
        if (!ok(i) || !ok(i - 2) || !ok(i - 1) || !ok(i + 1) || !ok(i + 2)) {
            if (ok(i)) {
                out.mask[static_cast<size_t>(i)] = 0;
                ++out.masked_out;
            }
            continue;
        }
        out.momentum.comp[0].at(i) = psi.hbar() *
            (-theta.at(i + 2) + 8 * theta.at(i + 1) - 8 * theta.at(i - 1) + theta.at(i - 2)) /
            (12 * h);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Moment equations and the Heisenberg picture
// ---------------------------------------------------------------------------

struct MomentReport {
    double density_residual = 0;  // max |d/dt <x|rho|x> - commutator RHS|
    double momentum_residual = 0; // max |d/dt <x|(rho p + p rho)/2|x> - RHS|
};

/// Centered finite differences of the evolved state against the
/// commutator/anticommutator right-hand sides at time t. Residuals are
/// O(dt^2): the FD truncation and the splitting error of the propagator.
inline MomentReport verify_moment_equations(const HamiltonianSpec& H, const DensityMatrix& rho,
                                            double dt) {
    const ConfigGrid& g = rho.grid();
    const double hbar = rho.hbar();
    Matrix hmat = hamiltonian_operator(H, g, hbar).mat;
    Matrix pmat = momentum_operator(g, hbar, 0).mat;

    DensityMatrix fwd = step_quantum_liouville(H, rho, dt);
    DensityMatrix bwd = step_quantum_liouville(H, rho, -dt);
    const Matrix& r0 = rho.matrix();

    Matrix ddt = (fwd.matrix() - bwd.matrix()) / (2 * dt);
    const cplx minus_inv_ihbar = cplx(0, 1) / hbar; // -1/(i hbar)

    Matrix comm = r0 * hmat - hmat * r0;
    MomentReport rep;
    {
        Matrix rhs = minus_inv_ihbar * comm;
        rep.density_residual = (ddt.diagonal() - rhs.diagonal()).cwiseAbs().maxCoeff();
    }
    {
        Matrix lhs = 0.5 * (ddt * pmat + pmat * ddt);
        Matrix half = 0.5 * (comm * pmat + pmat * comm);
        Matrix rhs = minus_inv_ihbar * half;
        rep.momentum_residual = (lhs.diagonal() - rhs.diagonal()).cwiseAbs().maxCoeff();
    }
    return rep;
}

struct HeisenbergResult {
    double heisenberg = 0;  // <psi0| U^dag F U |psi0>
    double schrodinger = 0; // <psi_t| F |psi_t>
    double gap = 0;
};

/// Evolve to t = steps * dt once through the dense propagator power
/// (Heisenberg side) and once by repeated state stepping (Schroedinger
/// side); the two expectations must agree.
inline HeisenbergResult heisenberg_expectation(const HamiltonianSpec& H, const OperatorRep& F,
                                               const WaveFunction& psi0, double dt, int steps) {
    SchrodingerPropagator u(H, psi0.grid(), psi0.hbar(), dt);
    Matrix ustep = u.dense();
    Matrix ut = Matrix::Identity(ustep.rows(), ustep.cols());
    for (int s = 0; s < steps; ++s) ut = ustep * ut;
    Matrix ftilde = ut.adjoint() * F.mat * ut;

    CVector v0 = psi0.to_vector();
    const double w = cell_weight(psi0.grid());
    HeisenbergResult res;
    res.heisenberg = ((v0.adjoint() * (ftilde * v0))(0) * w).real();

    WaveFunction psi = psi0;
    for (int s = 0; s < steps; ++s) u.apply(psi);
    CVector vt = psi.to_vector();
    res.schrodinger = ((vt.adjoint() * (F.mat * vt))(0) * w).real();
    res.gap = std::abs(res.heisenberg - res.schrodinger);
    return res;
}

// ---------------------------------------------------------------------------
// Box eigenstates
// ---------------------------------------------------------------------------

/// sin(n x) sqrt(2/L) modes of the box [0, L] realized on the odd-extended
/// doubled grid; each is an eigenvector of the free Hamiltonian there.
inline std::vector<WaveFunction> box_eigenstates(const ConfigGrid& g, int n_max, double hbar) {
    if (!g.is_doubled() || g.dim() != 1)
        throw std::invalid_argument("box_eigenstates: need a 1-D box-doubled grid");
    if (n_max < 1 || n_max >= g.points(0))
        throw std::invalid_argument("box_eigenstates: mode count exceeds the grid bandwidth");
    const double L = g.length(0);
    std::vector<WaveFunction> out;
    out.reserve(static_cast<size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) {
        auto f = [&](double x) {
            return cplx(std::sqrt(2.0 / L) * std::sin(n * std::numbers::pi * x / L), 0.0);
        };
        out.push_back(WaveFunction::sample(g, hbar, f, false, Extension::odd));
    }
    return out;
}

} // namespace phaselab
