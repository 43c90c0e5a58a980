#pragma once

// The canonical Hamiltonian class H(x,p) = 1/2 h^{ij}(p_i + A_i)(p_j + A_j)
// + U(x) with a constant symmetric positive-definite metric, its derived
// quantities (gradients, Lagrangian), quadratic charge functions, and the
// Poisson bracket on sampled phase-space fields.
//
// Bracket sign convention, kept exactly as our dynamics equations expect it:
//     {A, B} = dA/dp_j dB/dx^j - dB/dp_j dA/dx^j,
// the transpose of the more common one; it gives {p, x} = +1 and the
// Liouville equation in the form drho/dt = {rho, H}.

#include "phaselab/field.hpp"
#include "phaselab/grid.hpp"
#include "phaselab/spectral.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace phaselab {

using Vec = std::array<double, kMaxDim>;

/// Constant symmetric positive-definite inverse-mass matrix h^{ij}.
struct Metric {
    int dim = 1;
    std::array<std::array<double, kMaxDim>, kMaxDim> h{{{1, 0}, {0, 1}}};

    static Metric identity(int dim) {
        Metric m;
        m.dim = dim;
        return m;
    }
    static Metric scalar(int dim, double value) {
        Metric m = identity(dim);
        for (int i = 0; i < dim; ++i) m.h[i][i] = value;
        return m;
    }

    void validate() const {
        if (std::abs(h[0][1] - h[1][0]) > 1e-14) throw std::invalid_argument("Metric: not symmetric");
        if (dim == 1) {
            if (h[0][0] <= 0) throw std::invalid_argument("Metric: not positive-definite");
        } else {
            if (h[0][0] <= 0 || h[0][0] * h[1][1] - h[0][1] * h[1][0] <= 0)
                throw std::invalid_argument("Metric: not positive-definite");
        }
    }

    /// h^{ij} a_i b_j
    double contract(std::span<const double> a, std::span<const double> b) const {
        double s = 0;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) s += h[i][j] * a[i] * b[j];
        return s;
    }
};

using ScalarFn = std::function<double(const Vec&)>;
using PartialFn = std::function<double(const Vec&, int)>;

namespace detail {

/// Wrap a sampled periodic field as value/partial callables through its
/// trigonometric interpolant.
struct TabulatedTerm {
    std::shared_ptr<TrigInterpolant> interp;
    ScalarFn value() const {
        auto ip = interp;
        return [ip](const Vec& x) { return ip->value(x.data()); };
    }
    PartialFn partial() const {
        auto ip = interp;
        return [ip](const Vec& x, int axis) { return ip->partial(x.data(), axis); };
    }
};

} // namespace detail

/// One scalar term of the Hamiltonian (U or a component of A): an analytic
/// callable pair from the presets, or a tabulated field differentiated
/// spectrally through its interpolant.
struct PotentialTerm {
    ScalarFn value;
    PartialFn partial;
    bool is_zero = false;
    bool is_constant = false;
    double constant_value = 0.0;

    static PotentialTerm zero() {
        PotentialTerm t;
        t.value = [](const Vec&) { return 0.0; };
        t.partial = [](const Vec&, int) { return 0.0; };
        t.is_zero = true;
        t.is_constant = true;
        return t;
    }
    static PotentialTerm constant(double c) {
        PotentialTerm t;
        t.value = [c](const Vec&) { return c; };
        t.partial = [](const Vec&, int) { return 0.0; };
        t.is_constant = true;
        t.constant_value = c;
        t.is_zero = (c == 0.0);
        return t;
    }
    static PotentialTerm analytic(ScalarFn v, PartialFn dv) {
        PotentialTerm t;
        t.value = std::move(v);
        t.partial = std::move(dv);
        return t;
    }
    static PotentialTerm tabulated(const ScalarField& f) {
        detail::TabulatedTerm tt{std::make_shared<TrigInterpolant>(f)};
        PotentialTerm t;
        t.value = tt.value();
        t.partial = tt.partial();
        return t;
    }
};

class HamiltonianSpec {
public:
    HamiltonianSpec() : HamiltonianSpec(Metric::identity(1)) {}

    explicit HamiltonianSpec(Metric metric)
        : metric_(metric), u_(PotentialTerm::zero()) {
        metric_.validate();
        for (int i = 0; i < kMaxDim; ++i) a_[i] = PotentialTerm::zero();
    }

    int dim() const { return metric_.dim; }
    const Metric& metric() const { return metric_; }

    HamiltonianSpec& set_potential(PotentialTerm u) {
        u_ = std::move(u);
        return *this;
    }
    HamiltonianSpec& set_vector_potential(int comp, PotentialTerm a) {
        a_[comp] = std::move(a);
        return *this;
    }

    bool vector_potential_zero() const {
        for (int i = 0; i < dim(); ++i)
            if (!a_[i].is_zero) return false;
        return true;
    }
    bool vector_potential_constant() const {
        for (int i = 0; i < dim(); ++i)
            if (!a_[i].is_constant) return false;
        return true;
    }

    double potential(const Vec& x) const { return u_.value(x); }
    double potential_partial(const Vec& x, int axis) const { return u_.partial(x, axis); }
    double vector_potential(int comp, const Vec& x) const { return a_[comp].value(x); }
    double vector_potential_partial(int comp, const Vec& x, int axis) const {
        return a_[comp].partial(x, axis);
    }

    /// H(x, p) = 1/2 h^{ij}(p_i + A_i)(p_j + A_j) + U(x)
    double value(const Vec& x, const Vec& p) const {
        std::array<double, kMaxDim> q{};
        for (int i = 0; i < dim(); ++i) q[i] = p[i] + a_[i].value(x);
        return 0.5 * metric_.contract({q.data(), size_t(dim())}, {q.data(), size_t(dim())}) +
               u_.value(x);
    }

    /// dH/dp_j = h^{ij}(p_i + A_i)
    Vec grad_p(const Vec& x, const Vec& p) const {
        std::array<double, kMaxDim> q{};
        for (int i = 0; i < dim(); ++i) q[i] = p[i] + a_[i].value(x);
        Vec out{};
        for (int j = 0; j < dim(); ++j) {
            double s = 0;
            for (int i = 0; i < dim(); ++i) s += metric_.h[i][j] * q[i];
            out[j] = s;
        }
        return out;
    }

    /// dH/dx^k = h^{ij}(p_i + A_i) d_k A_j + d_k U
    Vec grad_x(const Vec& x, const Vec& p) const {
        Vec v = grad_p(x, p); // h^{ij}(p_i + A_i)
        Vec out{};
        for (int k = 0; k < dim(); ++k) {
            double s = u_.partial(x, k);
            for (int j = 0; j < dim(); ++j)
                if (!a_[j].is_constant) s += v[j] * a_[j].partial(x, k);
            out[k] = s;
        }
        return out;
    }

    /// L = p . dH/dp - H
    double lagrangian(const Vec& x, const Vec& p) const {
        Vec v = grad_p(x, p);
        double s = 0;
        for (int i = 0; i < dim(); ++i) s += p[i] * v[i];
        return s - value(x, p);
    }

private:
    Metric metric_;
    PotentialTerm u_;
    std::array<PotentialTerm, kMaxDim> a_;
};

inline double eval_hamiltonian(const HamiltonianSpec& H, const Vec& x, const Vec& p) {
    return H.value(x, p);
}

inline std::pair<Vec, Vec> hamiltonian_gradients(const HamiltonianSpec& H, const Vec& x,
                                                 const Vec& p) {
    return {H.grad_p(x, p), H.grad_x(x, p)};
}

inline double lagrangian_of(const HamiltonianSpec& H, const Vec& x, const Vec& p) {
    return H.lagrangian(x, p);
}

/// Quadratic charge Q(x,p) = A^{ij} p_i p_j + B_i(x) p_i + C(x).
struct ChargeSpec {
    Metric quadratic;                       // A^{ij}, may be zero matrix
    std::array<PotentialTerm, kMaxDim> B{}; // linear part
    PotentialTerm C = PotentialTerm::zero();
    int dim = 1;

    static ChargeSpec zero(int dim) {
        ChargeSpec q;
        q.dim = dim;
        q.quadratic = Metric::scalar(dim, 0.0);
        for (int i = 0; i < kMaxDim; ++i) q.B[i] = PotentialTerm::zero();
        return q;
    }

    double value(const Vec& x, const Vec& p) const {
        double s = C.value(x);
        for (int i = 0; i < dim; ++i) {
            s += B[i].value(x) * p[i];
            for (int j = 0; j < dim; ++j) s += quadratic.h[i][j] * p[i] * p[j];
        }
        return s;
    }

    Vec grad_p(const Vec& x, const Vec& p) const {
        Vec out{};
        for (int j = 0; j < dim; ++j) {
            double s = B[j].value(x);
            for (int i = 0; i < dim; ++i) s += (quadratic.h[i][j] + quadratic.h[j][i]) * p[i];
            out[j] = s;
        }
        return out;
    }

    Vec grad_x(const Vec& x, const Vec& p) const {
        Vec out{};
        for (int k = 0; k < dim; ++k) {
            double s = C.partial(x, k);
            for (int i = 0; i < dim; ++i) s += B[i].partial(x, k) * p[i];
            out[k] = s;
        }
        return out;
    }
};

/// Angular momentum about the origin, L3 = x p_y - y p_x (2-D only).
inline ChargeSpec angular_momentum_charge() {
    ChargeSpec q = ChargeSpec::zero(2);
    q.B[0] = PotentialTerm::analytic([](const Vec& x) { return -x[1]; },
                                     [](const Vec&, int axis) { return axis == 1 ? -1.0 : 0.0; });
    q.B[1] = PotentialTerm::analytic([](const Vec& x) { return x[0]; },
                                     [](const Vec&, int axis) { return axis == 0 ? 1.0 : 0.0; });
    return q;
}

// ---------------------------------------------------------------------------
// Sampled phase-space fields and the Poisson bracket
// ---------------------------------------------------------------------------

enum class DerivScheme {
    fd4,     // centered 4th order, one-sided at edges; exact on low-degree polynomials
    spectral // periodic-smooth fields only
};

/// Per-group derivative choice: configuration axes vs momentum axes.
struct PhaseSchemes {
    DerivScheme x = DerivScheme::fd4;
    DerivScheme p = DerivScheme::fd4;
};

/// A real function sampled over the full phase grid, row-major with layout
/// [x0, (x1,) p0, (p1)].
class PhaseField {
public:
    PhaseField() = default;
    explicit PhaseField(PhaseGrid grid, double fill = 0.0)
        : grid_(grid), v_(static_cast<size_t>(grid.node_count()), fill) {}

    const PhaseGrid& grid() const { return grid_; }
    std::span<double> values() { return v_; }
    std::span<const double> values() const { return v_; }
    std::int64_t size() const { return static_cast<std::int64_t>(v_.size()); }
    double& operator[](std::int64_t i) { return v_[static_cast<size_t>(i)]; }
    double operator[](std::int64_t i) const { return v_[static_cast<size_t>(i)]; }

    int rank() const { return 2 * grid_.dim(); }
    int extent(int axis) const {
        const int d = grid_.dim();
        return axis < d ? grid_.xgrid().storage_points(axis) : grid_.p_points(axis - d);
    }
    double axis_spacing(int axis) const {
        const int d = grid_.dim();
        return axis < d ? grid_.xgrid().spacing(axis) : grid_.p_spacing(axis - d);
    }
    double axis_length(int axis) const {
        const int d = grid_.dim();
        return axis < d ? grid_.xgrid().storage_length(axis) : grid_.p_length(axis - d);
    }

    template <typename F>
    static PhaseField sample(const PhaseGrid& g, F&& f) {
        PhaseField out(g);
        const int d = g.dim();
        const ConfigGrid& xg = g.xgrid();
        std::int64_t idx = 0;
        if (d == 1) {
            for (int i = 0; i < xg.storage_points(0); ++i)
                for (int a = 0; a < g.p_points(0); ++a)
                    out[idx++] = f(Vec{xg.node(0, i), 0}, Vec{g.p_node(0, a), 0});
        } else {
            for (int i = 0; i < xg.storage_points(0); ++i)
                for (int j = 0; j < xg.storage_points(1); ++j)
                    for (int a = 0; a < g.p_points(0); ++a)
                        for (int b = 0; b < g.p_points(1); ++b)
                            out[idx++] = f(Vec{xg.node(0, i), xg.node(1, j)},
                                           Vec{g.p_node(0, a), g.p_node(1, b)});
        }
        return out;
    }

private:
    PhaseGrid grid_;
    std::vector<double> v_;
};

namespace detail {

/// d/d(axis) of a row-major rank-r real array by centered FD4 with 4th-order
/// one-sided closures at the array edges.
inline void fd4_derivative(const double* in, double* out, const int* shape, int rank, int axis,
                           double h) {
    std::int64_t stride = 1;
    for (int a = axis + 1; a < rank; ++a) stride *= shape[a];
    std::int64_t outer = 1;
    for (int a = 0; a < axis; ++a) outer *= shape[a];
    const int n = shape[axis];
    if (n < 5) throw std::invalid_argument("fd4 derivative needs >= 5 points");
    const double inv12h = 1.0 / (12.0 * h);

    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t s = 0; s < stride; ++s) {
            const double* f = in + o * n * stride + s;
            double* g = out + o * n * stride + s;
            auto F = [&](int i) { return f[static_cast<std::int64_t>(i) * stride]; };
            g[0] = (-25 * F(0) + 48 * F(1) - 36 * F(2) + 16 * F(3) - 3 * F(4)) * inv12h;
            g[stride] = (-3 * F(0) - 10 * F(1) + 18 * F(2) - 6 * F(3) + F(4)) * inv12h;
            for (int i = 2; i < n - 2; ++i)
                g[static_cast<std::int64_t>(i) * stride] =
                    (-F(i + 2) + 8 * F(i + 1) - 8 * F(i - 1) + F(i - 2)) * inv12h;
            g[static_cast<std::int64_t>(n - 2) * stride] =
                (3 * F(n - 1) + 10 * F(n - 2) - 18 * F(n - 3) + 6 * F(n - 4) - F(n - 5)) * inv12h;
            g[static_cast<std::int64_t>(n - 1) * stride] =
                (25 * F(n - 1) - 48 * F(n - 2) + 36 * F(n - 3) - 16 * F(n - 4) + 3 * F(n - 5)) *
                inv12h;
        }
}

inline void spectral_derivative_real(const double* in, double* out, const int* shape, int rank,
                                     int axis, double period) {
    std::int64_t total = 1;
    for (int a = 0; a < rank; ++a) total *= shape[a];
    std::vector<cplx> buf(in, in + total);
    spectral_derivative_inplace(buf.data(), shape, rank, axis, period);
    for (std::int64_t i = 0; i < total; ++i) out[i] = buf[static_cast<size_t>(i)].real();
}

} // namespace detail

/// Partial derivative of a phase field along phase axis (0..2 dim-1).
inline PhaseField phase_derivative(const PhaseField& f, int axis, DerivScheme scheme) {
    const int rank = f.rank();
    if (axis < 0 || axis >= rank) throw std::invalid_argument("phase_derivative: axis out of range");
    int shape[2 * kMaxDim];
    for (int a = 0; a < rank; ++a) shape[a] = f.extent(a);
    PhaseField out(f.grid());
    if (scheme == DerivScheme::fd4)
        detail::fd4_derivative(f.values().data(), out.values().data(), shape, rank, axis,
                               f.axis_spacing(axis));
    else
        detail::spectral_derivative_real(f.values().data(), out.values().data(), shape, rank, axis,
                                         f.axis_length(axis));
    return out;
}

/// {F, G} = dF/dp_j dG/dx^j - dG/dp_j dF/dx^j
inline PhaseField poisson_bracket(const PhaseField& F, const PhaseField& G,
                                  PhaseSchemes schemeF = {}, PhaseSchemes schemeG = {}) {
    if (F.grid() != G.grid()) throw std::invalid_argument("poisson_bracket: mismatched grids");
    const int d = F.grid().dim();
    PhaseField out(F.grid());
    for (int j = 0; j < d; ++j) {
        PhaseField Fp = phase_derivative(F, d + j, schemeF.p);
        PhaseField Gx = phase_derivative(G, j, schemeG.x);
        PhaseField Gp = phase_derivative(G, d + j, schemeG.p);
        PhaseField Fx = phase_derivative(F, j, schemeF.x);
        for (std::int64_t i = 0; i < out.size(); ++i) out[i] += Fp[i] * Gx[i] - Gp[i] * Fx[i];
    }
    return out;
}

inline PhaseField sample_phase(const PhaseGrid& g, const HamiltonianSpec& H) {
    return PhaseField::sample(g, [&](const Vec& x, const Vec& p) { return H.value(x, p); });
}

inline PhaseField sample_phase(const PhaseGrid& g, const ChargeSpec& Q) {
    return PhaseField::sample(g, [&](const Vec& x, const Vec& p) { return Q.value(x, p); });
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline HamiltonianSpec make_free_hamiltonian(int dim = 1, double hscale = 1.0) {
    return HamiltonianSpec(Metric::scalar(dim, hscale));
}

/// U = 1/2 omega^2 |x - c|^2
inline HamiltonianSpec make_harmonic_hamiltonian(int dim = 1, double omega = 1.0,
                                                 Vec center = {0, 0}) {
    HamiltonianSpec H(Metric::identity(dim));
    const double w2 = omega * omega;
    H.set_potential(PotentialTerm::analytic(
        [dim, w2, center](const Vec& x) {
            double s = 0;
            for (int i = 0; i < dim; ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
            return 0.5 * w2 * s;
        },
        [w2, center](const Vec& x, int axis) { return w2 * (x[axis] - center[axis]); }));
    return H;
}

/// Constant vector potential with optional scalar potential.
inline HamiltonianSpec make_vector_potential_hamiltonian(int dim, Vec a0) {
    HamiltonianSpec H(Metric::identity(dim));
    for (int i = 0; i < dim; ++i) H.set_vector_potential(i, PotentialTerm::constant(a0[i]));
    return H;
}

/// 2-D rotation-invariant Gaussian well U(r) = -depth exp(-r^2 / (2 w^2)).
/// Smooth and effectively periodic when w is small against the box.
inline HamiltonianSpec make_central_hamiltonian(double depth = 1.0, double width = 1.0,
                                                Vec center = {0, 0}) {
    HamiltonianSpec H(Metric::identity(2));
    H.set_potential(PotentialTerm::analytic(
        [depth, width, center](const Vec& x) {
            const double dx = x[0] - center[0], dy = x[1] - center[1];
            return -depth * std::exp(-(dx * dx + dy * dy) / (2 * width * width));
        },
        [depth, width, center](const Vec& x, int axis) {
            const double dx = x[0] - center[0], dy = x[1] - center[1];
            const double u = -depth * std::exp(-(dx * dx + dy * dy) / (2 * width * width));
            return -u * (axis == 0 ? dx : dy) / (width * width);
        }));
    return H;
}

/// Pendulum well U = -u0 cos(x), periodic-smooth; used for classical-limit
/// studies where an anharmonic term is required.
inline HamiltonianSpec make_pendulum_hamiltonian(double u0 = 1.0) {
    HamiltonianSpec H(Metric::identity(1));
    H.set_potential(PotentialTerm::analytic(
        [u0](const Vec& x) { return -u0 * std::cos(x[0]); },
        [u0](const Vec& x, int axis) { return axis == 0 ? u0 * std::sin(x[0]) : 0.0; }));
    return H;
}

} // namespace phaselab
