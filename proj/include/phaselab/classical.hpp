#pragma once

// Classical transport: the grid Liouville equation drho/dt = {rho, H} solved
// spectrally in conservative form with RK4 time stepping, and the canonical
// characteristic flow dx/dt = dH/dp, dp/dt = -dH/dx stepped symplectically.
//
// The conservative form {rho, H} = d/dp_j (rho dH/dx^j) - d/dx^j (rho dH/dp_j)
// makes the rectangle-rule mass integral of the right-hand side vanish
// identically on the periodic grid, so mass is conserved to round-off per
// stage, not just per step.

#include "phaselab/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace phaselab {

// ---------------------------------------------------------------------------
// Characteristics
// ---------------------------------------------------------------------------

struct PhasePoint {
    Vec x{};
    Vec p{};
};

struct Trajectory {
    std::vector<double> t;
    std::vector<PhasePoint> state;
};

namespace detail {

inline void check_finite(const PhasePoint& s, int dim) {
    for (int i = 0; i < dim; ++i)
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.p[i]))
            throw std::invalid_argument("step_characteristics: nonfinite state");
}

} // namespace detail

/// One Strang (kick-drift-kick) step. Exactly symplectic for Hamiltonians
/// that separate as T(p) + V(x), which covers zero or constant vector
/// potentials; position-dependent A falls back to the implicit midpoint
/// rule, also symplectic and second order.
inline PhasePoint step_characteristics(const HamiltonianSpec& H, PhasePoint s, double dt) {
    const int d = H.dim();
    detail::check_finite(s, d);
    if (!(dt > 0)) throw std::invalid_argument("step_characteristics: dt must be positive");

    if (H.vector_potential_constant()) {
        Vec gx = H.grad_x(s.x, s.p);
        for (int i = 0; i < d; ++i) s.p[i] -= 0.5 * dt * gx[i];
        Vec gp = H.grad_p(s.x, s.p);
        for (int i = 0; i < d; ++i) s.x[i] += dt * gp[i];
        gx = H.grad_x(s.x, s.p);
        for (int i = 0; i < d; ++i) s.p[i] -= 0.5 * dt * gx[i];
        return s;
    }

    // implicit midpoint: z' = z + dt f((z + z')/2)
    PhasePoint z = s;
    for (int iter = 0; iter < 64; ++iter) {
        PhasePoint mid;
        for (int i = 0; i < d; ++i) {
            mid.x[i] = 0.5 * (s.x[i] + z.x[i]);
            mid.p[i] = 0.5 * (s.p[i] + z.p[i]);
        }
        Vec gp = H.grad_p(mid.x, mid.p);
        Vec gx = H.grad_x(mid.x, mid.p);
        double delta = 0;
        for (int i = 0; i < d; ++i) {
            double nx = s.x[i] + dt * gp[i];
            double np = s.p[i] - dt * gx[i];
            delta = std::max({delta, std::abs(nx - z.x[i]), std::abs(np - z.p[i])});
            z.x[i] = nx;
            z.p[i] = np;
        }
        if (delta < 1e-14) break;
    }
    return z;
}

inline Trajectory integrate_characteristics(const HamiltonianSpec& H, PhasePoint s0, double dt,
                                            int steps, int record_every = 1) {
    Trajectory out;
    out.t.push_back(0);
    out.state.push_back(s0);
    PhasePoint s = s0;
    for (int n = 1; n <= steps; ++n) {
        s = step_characteristics(H, s, dt);
        if (n % record_every == 0 || n == steps) {
            out.t.push_back(n * dt);
            out.state.push_back(s);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grid Liouville
// ---------------------------------------------------------------------------

class PhaseSpaceDensity {
public:
    PhaseSpaceDensity() = default;
    PhaseSpaceDensity(PhaseGrid grid, std::vector<double> rho)
        : grid_(grid), v_(std::move(rho)) {
        if (static_cast<std::int64_t>(v_.size()) != grid_.node_count())
            throw std::invalid_argument("PhaseSpaceDensity: value count does not match grid");
    }

    template <typename F>
    static PhaseSpaceDensity sample(const PhaseGrid& g, F&& f, bool normalize = true) {
        PhaseField fld = PhaseField::sample(g, std::forward<F>(f));
        PhaseSpaceDensity rho(g, std::vector<double>(fld.values().begin(), fld.values().end()));
        if (normalize) rho.normalize();
        return rho;
    }

    /// Isotropic Gaussian blob centered at (x0, p0).
    static PhaseSpaceDensity gaussian(const PhaseGrid& g, Vec x0, Vec p0, double sigma_x,
                                      double sigma_p) {
        return sample(g, [&](const Vec& x, const Vec& p) {
            double e = 0;
            for (int i = 0; i < g.dim(); ++i) {
                e += (x[i] - x0[i]) * (x[i] - x0[i]) / (2 * sigma_x * sigma_x);
                e += (p[i] - p0[i]) * (p[i] - p0[i]) / (2 * sigma_p * sigma_p);
            }
            return std::exp(-e);
        });
    }

    const PhaseGrid& grid() const { return grid_; }
    std::span<double> values() { return v_; }
    std::span<const double> values() const { return v_; }
    std::int64_t size() const { return static_cast<std::int64_t>(v_.size()); }
    double& operator[](std::int64_t i) { return v_[static_cast<size_t>(i)]; }
    double operator[](std::int64_t i) const { return v_[static_cast<size_t>(i)]; }

    double mass() const {
        return detail::stable_sum(std::span<const double>(v_)) * grid_.cell_volume();
    }

    double normalize() {
        double m = mass();
        if (!(m > 0)) throw std::invalid_argument("PhaseSpaceDensity: nonpositive mass");
        for (double& x : v_) x /= m;
        return m;
    }

private:
    PhaseGrid grid_;
    std::vector<double> v_;
};

inline double l1_distance(const PhaseSpaceDensity& a, const PhaseSpaceDensity& b) {
    if (a.grid() != b.grid()) throw std::invalid_argument("l1_distance: mismatched grids");
    std::vector<double> diff(static_cast<size_t>(a.size()));
    for (std::int64_t i = 0; i < a.size(); ++i) diff[static_cast<size_t>(i)] = std::abs(a[i] - b[i]);
    return detail::stable_sum(std::span<const double>(diff)) * a.grid().cell_volume();
}

/// Precomputed coefficient tables dH/dp and dH/dx on the phase grid plus the
/// CFL bound for the spectral RK4 stepper.
class LiouvilleOperator {
public:
    LiouvilleOperator(const HamiltonianSpec& H, const PhaseGrid& g) : grid_(g), dim_(g.dim()) {
        if (H.dim() != g.dim()) throw std::invalid_argument("LiouvilleOperator: dimension mismatch");
        for (int j = 0; j < dim_; ++j) {
            hp_[j] = PhaseField::sample(g, [&](const Vec& x, const Vec& p) { return H.grad_p(x, p)[j]; });
            hx_[j] = PhaseField::sample(g, [&](const Vec& x, const Vec& p) { return H.grad_x(x, p)[j]; });
        }
        double rate = 0;
        for (int j = 0; j < dim_; ++j) {
            double vmax = 0, fmax = 0;
            for (std::int64_t i = 0; i < hp_[j].size(); ++i) {
                vmax = std::max(vmax, std::abs(hp_[j][i]));
                fmax = std::max(fmax, std::abs(hx_[j][i]));
            }
            const double kx = std::numbers::pi / g.xgrid().spacing(j);
            const double kp = std::numbers::pi / g.p_spacing(j);
            rate += vmax * kx + fmax * kp;
        }
        cfl_dt_ = rate > 0 ? 2.8 / rate : std::numeric_limits<double>::infinity();
    }

    double cfl_limit() const { return cfl_dt_; }
    const PhaseGrid& grid() const { return grid_; }

    /// {rho, H} in conservative form, on a reusable complex workspace.
    void rhs(const PhaseField& rho, PhaseField& out) const {
        const std::int64_t n = rho.size();
        int shape[2 * kMaxDim];
        const int rank = rho.rank();
        for (int a = 0; a < rank; ++a) shape[a] = rho.extent(a);
        if (static_cast<std::int64_t>(work_.size()) != n) work_.resize(static_cast<size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) out[i] = 0;
        for (int j = 0; j < dim_; ++j) {
            // + d/dp_j (rho dH/dx^j)
            for (std::int64_t i = 0; i < n; ++i)
                work_[static_cast<size_t>(i)] = rho[i] * hx_[j][i];
            detail::spectral_derivative_inplace(work_.data(), shape, rank, dim_ + j,
                                                rho.axis_length(dim_ + j));
            for (std::int64_t i = 0; i < n; ++i) out[i] += work_[static_cast<size_t>(i)].real();
            // - d/dx^j (rho dH/dp_j)
            for (std::int64_t i = 0; i < n; ++i)
                work_[static_cast<size_t>(i)] = rho[i] * hp_[j][i];
            detail::spectral_derivative_inplace(work_.data(), shape, rank, j, rho.axis_length(j));
            for (std::int64_t i = 0; i < n; ++i) out[i] -= work_[static_cast<size_t>(i)].real();
        }
    }

    void step_rk4(PhaseField& rho, double dt) const {
        PhaseField k1(grid_), k2(grid_), k3(grid_), k4(grid_), tmp(grid_);
        rhs(rho, k1);
        for (std::int64_t i = 0; i < rho.size(); ++i) tmp[i] = rho[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::int64_t i = 0; i < rho.size(); ++i) tmp[i] = rho[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::int64_t i = 0; i < rho.size(); ++i) tmp[i] = rho[i] + dt * k3[i];
        rhs(tmp, k4);
        for (std::int64_t i = 0; i < rho.size(); ++i)
            rho[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }

private:
    PhaseGrid grid_;
    int dim_;
    PhaseField hp_[kMaxDim];
    PhaseField hx_[kMaxDim];
    double cfl_dt_ = 0;
    mutable std::vector<cplx> work_;
};

/// One RK4 step of drho/dt = {rho, H}. dt = 0 returns the input unchanged.
inline PhaseSpaceDensity step_liouville(const HamiltonianSpec& H, const PhaseSpaceDensity& rho,
                                        double dt) {
    if (dt == 0) return rho;
    LiouvilleOperator op(H, rho.grid());
    if (dt > op.cfl_limit())
        throw std::invalid_argument("step_liouville: dt exceeds the CFL bound");
    PhaseField f(rho.grid());
    for (std::int64_t i = 0; i < f.size(); ++i) f[i] = rho[i];
    op.step_rk4(f, dt);
    return PhaseSpaceDensity(rho.grid(),
                             std::vector<double>(f.values().begin(), f.values().end()));
}

/// Evolve to time T with a fixed number of steps, reusing the operator.
inline PhaseSpaceDensity evolve_liouville(const HamiltonianSpec& H, const PhaseSpaceDensity& rho0,
                                          double T, int steps) {
    if (steps <= 0 || T == 0) return rho0;
    LiouvilleOperator op(H, rho0.grid());
    const double dt = T / steps;
    if (dt > op.cfl_limit())
        throw std::invalid_argument("evolve_liouville: dt exceeds the CFL bound");
    PhaseField f(rho0.grid());
    for (std::int64_t i = 0; i < f.size(); ++i) f[i] = rho0[i];
    for (int n = 0; n < steps; ++n) op.step_rk4(f, dt);
    return PhaseSpaceDensity(rho0.grid(),
                             std::vector<double>(f.values().begin(), f.values().end()));
}

// ---------------------------------------------------------------------------
// Characteristics ensemble with kernel re-deposition
// ---------------------------------------------------------------------------

namespace detail {

/// Undo the deposition kernel's transfer function below the 2/3 band. The
/// one-cell Gaussian kernel multiplies the spectrum by exp(-(k h)^2 / 2);
/// without this correction the deposit carries an O(h^2) smoothing bias that
/// dominates every other error of the ensemble route.
inline void sharpen_deposit(PhaseField& f) {
    const int rank = f.rank();
    int shape[2 * kMaxDim];
    std::int64_t total = 1;
    for (int a = 0; a < rank; ++a) {
        shape[a] = f.extent(a);
        total *= shape[a];
    }
    std::vector<cplx> buf(f.values().begin(), f.values().end());

    for (int axis = 0; axis < rank; ++axis) {
        std::int64_t stride = 1;
        for (int a = axis + 1; a < rank; ++a) stride *= shape[a];
        std::int64_t outer = total / (stride * shape[axis]);
        for (std::int64_t o = 0; o < outer; ++o)
            fft::transform_lines(buf.data() + o * shape[axis] * stride, shape[axis],
                                 static_cast<int>(stride), static_cast<int>(stride), 1,
                                 FFTW_FORWARD);
    }
    for (std::int64_t idx = 0; idx < total; ++idx) {
        std::int64_t rem = idx;
        double factor = 1.0 / total;
        for (int a = rank - 1; a >= 0; --a) {
            const int i = static_cast<int>(rem % shape[a]);
            rem /= shape[a];
            const int m = fft::mode_index(i, shape[a]);
            const double kh = 2.0 * std::numbers::pi * m / shape[a];
            if (std::abs(kh) > 2.0 * std::numbers::pi / 3.0) {
                factor = 0;
                break;
            }
            factor *= std::exp(0.5 * kh * kh);
        }
        buf[static_cast<size_t>(idx)] *= factor;
    }
    for (int axis = 0; axis < rank; ++axis) {
        std::int64_t stride = 1;
        for (int a = axis + 1; a < rank; ++a) stride *= shape[a];
        std::int64_t outer = total / (stride * shape[axis]);
        for (std::int64_t o = 0; o < outer; ++o)
            fft::transform_lines(buf.data() + o * shape[axis] * stride, shape[axis],
                                 static_cast<int>(stride), static_cast<int>(stride), 1,
                                 FFTW_BACKWARD);
    }
    for (std::int64_t i = 0; i < total; ++i)
        f[i] = std::max(buf[static_cast<size_t>(i)].real(), 0.0);
}

} // namespace detail

/// Seed one weighted particle per phase node, advance all of them with the
/// symplectic stepper, then deposit back with a Gaussian kernel one grid
/// cell wide (truncated at four cells). Positions wrap periodically; the
/// result is renormalized.
inline PhaseSpaceDensity evolve_characteristics_ensemble(const HamiltonianSpec& H,
                                                         const PhaseSpaceDensity& rho0, double T,
                                                         int steps) {
    const PhaseGrid& g = rho0.grid();
    const int d = g.dim();
    const ConfigGrid& xg = g.xgrid();

    std::vector<PhasePoint> pts;
    std::vector<double> w;
    pts.reserve(static_cast<size_t>(g.node_count()));
    w.reserve(pts.capacity());
    {
        std::int64_t idx = 0;
        const int nx0 = xg.storage_points(0), nx1 = d == 2 ? xg.storage_points(1) : 1;
        const int np0 = g.p_points(0), np1 = d == 2 ? g.p_points(1) : 1;
        for (int i = 0; i < nx0; ++i)
            for (int j = 0; j < nx1; ++j)
                for (int a = 0; a < np0; ++a)
                    for (int b = 0; b < np1; ++b) {
                        double weight = rho0[idx++];
                        if (weight <= 0) continue;
                        PhasePoint s;
                        s.x = {xg.node(0, i), d == 2 ? xg.node(1, j) : 0};
                        s.p = {g.p_node(0, a), d == 2 ? g.p_node(1, b) : 0};
                        pts.push_back(s);
                        w.push_back(weight);
                    }
    }

    const double dt = T / steps;
    for (int n = 0; n < steps; ++n)
        for (auto& s : pts) s = step_characteristics(H, s, dt);

    // Gaussian deposition, sigma = one cell per axis.
    PhaseField acc(g);
    const int halo = 4;
    const int nx0 = xg.storage_points(0), nx1 = d == 2 ? xg.storage_points(1) : 1;
    const int np0 = g.p_points(0), np1 = d == 2 ? g.p_points(1) : 1;
    auto wrap = [](int i, int n) { return ((i % n) + n) % n; };

    std::vector<double> kx(2 * halo + 1), kp(2 * halo + 1);
    for (int o = -halo; o <= halo; ++o) {
        kx[static_cast<size_t>(o + halo)] = 0; // filled per-particle below
        kp[static_cast<size_t>(o + halo)] = 0;
    }

    for (size_t m = 0; m < pts.size(); ++m) {
        const PhasePoint& s = pts[m];
        // nearest node along each axis plus fractional offset
        int base[4];
        double frac[4];
        for (int ax = 0; ax < 2 * d; ++ax) {
            const bool is_x = ax < d;
            const int a = is_x ? ax : ax - d;
            const double lo = is_x ? xg.lo(a) : g.p_lo(a);
            const double h = is_x ? xg.spacing(a) : g.p_spacing(a);
            const double rel = (is_x ? s.x[a] : s.p[a]) / h - lo / h;
            base[ax] = static_cast<int>(std::floor(rel));
            frac[ax] = rel - base[ax];
        }
        auto kernel = [&](int axis, int off) {
            const double r = off - frac[axis];
            return std::exp(-0.5 * r * r);
        };
        double kern[4][2 * halo + 1];
        double ksum[4];
        for (int ax = 0; ax < 2 * d; ++ax) {
            ksum[ax] = 0;
            for (int o = -halo + 1; o <= halo; ++o) {
                kern[ax][o + halo - 1] = kernel(ax, o);
                ksum[ax] += kern[ax][o + halo - 1];
            }
        }
        const double wm = w[m];
        if (d == 1) {
            for (int oi = -halo + 1; oi <= halo; ++oi) {
                const int i = wrap(base[0] + oi, nx0);
                const double wx = kern[0][oi + halo - 1] / ksum[0];
                for (int oa = -halo + 1; oa <= halo; ++oa) {
                    const int a = wrap(base[1] + oa, np0);
                    acc[static_cast<std::int64_t>(i) * np0 + a] +=
                        wm * wx * kern[1][oa + halo - 1] / ksum[1];
                }
            }
        } else {
            for (int oi = -halo + 1; oi <= halo; ++oi) {
                const int i = wrap(base[0] + oi, nx0);
                const double w0 = kern[0][oi + halo - 1] / ksum[0];
                for (int oj = -halo + 1; oj <= halo; ++oj) {
                    const int j = wrap(base[1] + oj, nx1);
                    const double w1 = w0 * kern[1][oj + halo - 1] / ksum[1];
                    for (int oa = -halo + 1; oa <= halo; ++oa) {
                        const int a = wrap(base[2] + oa, np0);
                        const double w2 = w1 * kern[2][oa + halo - 1] / ksum[2];
                        for (int ob = -halo + 1; ob <= halo; ++ob) {
                            const int b = wrap(base[3] + ob, np1);
                            acc[((static_cast<std::int64_t>(i) * nx1 + j) * np0 + a) * np1 + b] +=
                                wm * w2 * kern[3][ob + halo - 1] / ksum[3];
                        }
                    }
                }
            }
        }
    }

    detail::sharpen_deposit(acc);
    PhaseSpaceDensity out(g, std::vector<double>(acc.values().begin(), acc.values().end()));
    out.normalize();
    return out;
}

} // namespace phaselab
