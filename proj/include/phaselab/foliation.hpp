#pragma once

// Lie-Poisson transport of a Lagrange foliation: each leaf carries a
// momentum field pbar[k](x) and a leaf density rhobar[k](x) advanced by
//
//   d rhobar / dt = - d/dx ( dH/dp (x, pbar) rhobar )
//   d pbar   / dt = - dH/dx (x, pbar) - dH/dp (x, pbar) d pbar / dx
//
// with the Jacobian sigma[k] = d pbar / dk relating leaf densities to the
// phase-space PDF through rhobar sqrt = sigma rho(x, pbar(x)). Leaves are
// independent between reconstruction events.
//
// x-derivatives use centered FD4 with one-sided closures: leaf momentum
// fields grow linear-in-x parts (shear) that are not periodic, and the
// closure is exact on such fields. Sigma is a cross-leaf derivative,
// refreshed after stepping.
//
// A foliation that shears long enough stops being a graph over x (sigma
// runs away or hits zero). Transport therefore supports relabeling:
// reconstruct the PDF mid-run and re-slice into fresh horizontal leaves,
// which is the labeling-time freedom of the underlying theory.

#include "phaselab/classical.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace phaselab {

struct CausticError : std::runtime_error {
    double time;
    double min_sigma;
    CausticError(double t, double s)
        : std::runtime_error("leaf transport hit a caustic (sigma floor) at t = " +
                             std::to_string(t)),
          time(t), min_sigma(s) {}
};

struct FoliationLeaf {
    double k = 0;        // leaf label
    ScalarField pbar;    // momentum field on the configuration grid
    ScalarField rhobar;  // leaf density
    ScalarField sigma;   // d pbar / dk, maintained by the ensemble
};

/// Per-leaf dual-space state (rhobar pbar, rhobar).
struct EmergenceMomentum {
    ScalarField current; // rhobar * pbar
    ScalarField density; // rhobar
};

inline EmergenceMomentum emergence_momentum_of(const FoliationLeaf& leaf) {
    EmergenceMomentum em{leaf.pbar, leaf.rhobar};
    for (std::int64_t i = 0; i < em.current.size(); ++i) em.current[i] *= leaf.rhobar[i];
    return em;
}

namespace detail {

inline ScalarField fd4_field_derivative(const ScalarField& f) {
    const ConfigGrid& g = f.grid();
    ScalarField out(g);
    int shape[1] = {g.storage_points(0)};
    fd4_derivative(f.values().data(), out.values().data(), shape, 1, 0, g.spacing(0));
    return out;
}

/// Monotone (shape-preserving) cubic Hermite slopes, Fritsch-Carlson.
inline std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y) {
    const int n = static_cast<int>(x.size());
    std::vector<double> d(static_cast<size_t>(n), 0.0);
    if (n < 2) return d;
    std::vector<double> h(static_cast<size_t>(n - 1)), del(static_cast<size_t>(n - 1));
    for (int i = 0; i < n - 1; ++i) {
        h[i] = x[i + 1] - x[i];
        del[i] = (y[i + 1] - y[i]) / h[i];
    }
    for (int i = 1; i < n - 1; ++i) {
        if (del[i - 1] * del[i] <= 0) {
            d[i] = 0;
        } else {
            const double w1 = 2 * h[i] + h[i - 1];
            const double w2 = h[i] + 2 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    auto edge = [&](int i0, int i1, double h0, double h1, double d0, double d1) {
        double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0) s = 0;
        else if (d0 * d1 <= 0 && std::abs(s) > 3 * std::abs(d0)) s = 3 * d0;
        (void)i0; (void)i1;
        return s;
    };
    d[0] = n > 2 ? edge(0, 1, h[0], h[1], del[0], del[1]) : del[0];
    d[static_cast<size_t>(n - 1)] =
        n > 2 ? edge(n - 1, n - 2, h[n - 2], h[n - 3], del[n - 2], del[n - 3]) : del[n - 2];
    return d;
}

inline double hermite_eval(double x0, double x1, double y0, double y1, double d0, double d1,
                           double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y0 * (2 * t3 - 3 * t2 + 1) + h * d0 * (t3 - 2 * t2 + t) + y1 * (-2 * t3 + 3 * t2) +
           h * d1 * (t3 - t2);
}

} // namespace detail

namespace detail {

/// Cosine ramp pinning the outer `width` nodes of the box: leaf dynamics is
/// frozen there. Leaf transport assumes densities concentrated away from the
/// edges; without the pin, the one-sided closure of the momentum advection
/// amplifies round-off at inflow boundaries. Cached per grid size: the same
/// profile is consumed once per leaf per stage.
inline const std::vector<double>& edge_taper(const ConfigGrid& g, int width = 4) {
    static std::mutex mu;
    static std::map<int, std::vector<double>> cache;
    std::lock_guard<std::mutex> lk(mu);
    const int n = g.storage_points(0);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> w(static_cast<size_t>(n), 1.0);
    auto ramp = [&](double t) {
        if (t <= 0) return 0.0;
        if (t >= 1) return 1.0;
        return t * t * (3 - 2 * t);
    };
    for (int i = 0; i < n; ++i)
        w[static_cast<size_t>(i)] = ramp(static_cast<double>(i) / width) *
                                    ramp(static_cast<double>(n - 1 - i) / width);
    return cache.emplace(n, std::move(w)).first->second;
}

} // namespace detail

/// Right-hand sides of the leaf equations (flat metric, sqrt = 1). The
/// density flux dH/dp(x, pbar) rhobar is compact whenever rhobar is, so its
/// divergence is taken spectrally (exactly mass conserving); the momentum
/// advection uses FD4 because pbar itself grows non-periodic shear.
inline void leaf_rhs(const HamiltonianSpec& H, const ScalarField& pbar, const ScalarField& rhobar,
                     ScalarField& drho, ScalarField& dp) {
    const ConfigGrid& g = pbar.grid();
    ScalarField flux(g); // dH/dp (x, pbar) * rhobar
    ScalarField hp(g), hx(g);
    for (int i = 0; i < g.storage_points(0); ++i) {
        Vec x{g.node(0, i), 0}, p{pbar.at(i), 0};
        hp.at(i) = H.grad_p(x, p)[0];
        hx.at(i) = H.grad_x(x, p)[0];
        flux.at(i) = hp.at(i) * rhobar.at(i);
    }
    drho = spectral_derivative(flux, 0);
    ScalarField dpdx = detail::fd4_field_derivative(pbar);
    const auto& taper = detail::edge_taper(g);
    dp = hx;
    for (std::int64_t i = 0; i < dp.size(); ++i) {
        const double w = taper[static_cast<size_t>(i)];
        drho[i] = -w * drho[i];
        dp[i] = -w * (hx[i] + hp[i] * dpdx[i]);
    }
}

/// The momentum-form right-hand side for d/dt (rhobar pbar): flux term,
/// coefficient term and the Lagrangian source. Used to cross-check that the
/// (rhobar, pbar) stepping satisfies the dual-space equation.
inline ScalarField leaf_momentum_rhs(const HamiltonianSpec& H, const FoliationLeaf& leaf) {
    const ConfigGrid& g = leaf.pbar.grid();
    ScalarField hp(g), lag(g), flux(g);
    for (int i = 0; i < g.storage_points(0); ++i) {
        Vec x{g.node(0, i), 0}, p{leaf.pbar.at(i), 0};
        hp.at(i) = H.grad_p(x, p)[0];
        lag.at(i) = H.lagrangian(x, p);
        flux.at(i) = hp.at(i) * leaf.rhobar.at(i) * leaf.pbar.at(i);
    }
    // same derivative policy as leaf_rhs: spectral for the compact flux,
    // FD4 for the non-periodic coefficient fields
    ScalarField dflux = spectral_derivative(flux, 0);
    ScalarField dhp = detail::fd4_field_derivative(hp);
    ScalarField dlag = detail::fd4_field_derivative(lag);
    ScalarField out(g);
    for (std::int64_t i = 0; i < out.size(); ++i)
        out[i] = -dflux[i] - leaf.rhobar[i] * leaf.pbar[i] * dhp[i] + leaf.rhobar[i] * dlag[i];
    return out;
}

/// One RK4 step of a single leaf. The Jacobian field is left untouched; it
/// is a cross-leaf quantity refreshed by the owning foliation.
inline FoliationLeaf step_lie_poisson_leaf(const HamiltonianSpec& H, const FoliationLeaf& leaf,
                                           double dt) {
    if (dt == 0) return leaf;
    const ConfigGrid& g = leaf.pbar.grid();
    auto axpy = [&](const ScalarField& a, const ScalarField& b, double c) {
        ScalarField r(g);
        for (std::int64_t i = 0; i < r.size(); ++i) r[i] = a[i] + c * b[i];
        return r;
    };
    ScalarField kr1, kp1, kr2, kp2, kr3, kp3, kr4, kp4;
    leaf_rhs(H, leaf.pbar, leaf.rhobar, kr1, kp1);
    leaf_rhs(H, axpy(leaf.pbar, kp1, dt / 2), axpy(leaf.rhobar, kr1, dt / 2), kr2, kp2);
    leaf_rhs(H, axpy(leaf.pbar, kp2, dt / 2), axpy(leaf.rhobar, kr2, dt / 2), kr3, kp3);
    leaf_rhs(H, axpy(leaf.pbar, kp3, dt), axpy(leaf.rhobar, kr3, dt), kr4, kp4);
    FoliationLeaf out = leaf;
    for (std::int64_t i = 0; i < out.pbar.size(); ++i) {
        out.pbar[i] += dt / 6 * (kp1[i] + 2 * kp2[i] + 2 * kp3[i] + kp4[i]);
        out.rhobar[i] += dt / 6 * (kr1[i] + 2 * kr2[i] + 2 * kr3[i] + kr4[i]);
    }
    return out;
}

/// The full leaf ensemble over a regular k-grid matching the phase grid's
/// momentum axis (leaf count = momentum resolution).
class LeafFoliation {
public:
    LeafFoliation() = default;

    /// Horizontal slice pbar[k](x) = k of a phase-space density: sigma = 1,
    /// rhobar[k](x) = rho(x, k). The leaf label is the supremum of pbar.
    static LeafFoliation slice(const PhaseSpaceDensity& rho) {
        return from_map(rho, [](double k, double) { return k; });
    }

    /// General initial foliation pbar[k](x) = map(k, x); must be monotone
    /// increasing in k. rhobar is set from rhobar = sigma rho(x, pbar(x))
    /// with rho sampled by linear interpolation along p.
    template <typename Map>
    static LeafFoliation from_map(const PhaseSpaceDensity& rho, Map&& map) {
        const PhaseGrid& g = rho.grid();
        if (g.dim() != 1)
            throw std::invalid_argument("LeafFoliation: only 1-D configuration grids supported");
        LeafFoliation f;
        f.grid_ = g;
        const int nk = g.p_points(0);
        const int nx = g.xgrid().storage_points(0);
        f.pbar_.reserve(static_cast<size_t>(nk));
        f.rhobar_.reserve(static_cast<size_t>(nk));
        for (int a = 0; a < nk; ++a) {
            const double k = g.p_node(0, a);
            ScalarField pb(g.xgrid());
            for (int i = 0; i < nx; ++i) pb.at(i) = map(k, g.xgrid().node(0, i));
            f.pbar_.push_back(std::move(pb));
            f.rhobar_.emplace_back(g.xgrid());
        }
        f.refresh_sigma();
        // rhobar = sigma * rho(x, pbar(x)), rho interpolated linearly in p
        for (int a = 0; a < nk; ++a)
            for (int i = 0; i < nx; ++i) {
                const double p = f.pbar_[static_cast<size_t>(a)].at(i);
                const double rel = (p - g.p_lo(0)) / g.p_spacing(0);
                const int j = static_cast<int>(std::floor(rel));
                double v = 0;
                if (j >= 0 && j + 1 < nk) {
                    const double fr = rel - j;
                    v = (1 - fr) * rho[static_cast<std::int64_t>(i) * nk + j] +
                        fr * rho[static_cast<std::int64_t>(i) * nk + j + 1];
                } else if (j == nk - 1 && rel <= nk - 1 + 1e-12) {
                    v = rho[static_cast<std::int64_t>(i) * nk + j];
                }
                f.rhobar_[static_cast<size_t>(a)].at(i) =
                    f.sigma_[static_cast<size_t>(a)].at(i) * v;
            }
        return f;
    }

    int leaf_count() const { return static_cast<int>(pbar_.size()); }
    const PhaseGrid& grid() const { return grid_; }

    FoliationLeaf leaf(int a) const {
        return FoliationLeaf{grid_.p_node(0, a), pbar_[static_cast<size_t>(a)],
                             rhobar_[static_cast<size_t>(a)], sigma_[static_cast<size_t>(a)]};
    }

    /// Smallest Jacobian value over the dynamically active region (the
    /// pinned edge zone is excluded: its boundary layer carries no density).
    /// NaN when any entry is not finite.
    double min_sigma() const {
        double m = std::numeric_limits<double>::infinity();
        const int skip = 8;
        for (const auto& s : sigma_) {
            const std::int64_t n = s.size();
            for (std::int64_t i = 0; i < n; ++i) {
                if (!std::isfinite(s[i])) return std::numeric_limits<double>::quiet_NaN();
                if (i < skip || i >= n - skip) continue;
                m = std::min(m, s[i]);
            }
        }
        return m;
    }

    /// Sum over leaves of the leaf-density integrals (times dk): the total
    /// mass carried by the foliation.
    double mass() const {
        double m = 0;
        for (const auto& r : rhobar_) m += integrate(r);
        return m * grid_.p_spacing(0);
    }

    /// Advance every leaf by dt and refresh the Jacobians; throws
    /// CausticError when min sigma falls under the floor. `t_now` only
    /// labels the error.
    void step(const HamiltonianSpec& H, double dt, double t_now = 0, double sigma_floor = 1e-6) {
        for (auto aidx = 0u; aidx < pbar_.size(); ++aidx) {
            FoliationLeaf l{0, pbar_[aidx], rhobar_[aidx], sigma_[aidx]};
            FoliationLeaf next = step_lie_poisson_leaf(H, l, dt);
            pbar_[aidx] = std::move(next.pbar);
            rhobar_[aidx] = std::move(next.rhobar);
        }
        refresh_sigma();
        const double ms = min_sigma();
        if (!(ms > sigma_floor)) throw CausticError(t_now + dt, ms);
    }

    /// rho(x, p) from the leaves: per x-column the samples
    /// (pbar[k](x), rhobar[k](x) / sigma[k](x)) are interpolated onto the
    /// momentum nodes by a monotone cubic; nodes outside the leaves' span
    /// get zero. The result is renormalized and the factor reported.
    PhaseSpaceDensity reconstruct(double* renorm_factor = nullptr,
                                  double sigma_floor = 1e-6) const {
        const int nk = leaf_count();
        const int nx = grid_.xgrid().storage_points(0);
        const double ms = min_sigma();
        if (!(ms > sigma_floor)) throw CausticError(0, ms);

        std::vector<double> out(static_cast<size_t>(grid_.node_count()), 0.0);
        std::vector<double> P(static_cast<size_t>(nk)), V(static_cast<size_t>(nk));
        for (int i = 0; i < nx; ++i) {
            for (int a = 0; a < nk; ++a) {
                P[static_cast<size_t>(a)] = pbar_[static_cast<size_t>(a)].at(i);
                V[static_cast<size_t>(a)] =
                    rhobar_[static_cast<size_t>(a)].at(i) / sigma_[static_cast<size_t>(a)].at(i);
            }
            for (int a = 1; a < nk; ++a)
                if (P[static_cast<size_t>(a)] <= P[static_cast<size_t>(a - 1)])
                    throw CausticError(0, 0);
            auto slopes = detail::pchip_slopes(P, V);
            int seg = 0;
            for (int j = 0; j < grid_.p_points(0); ++j) {
                const double p = grid_.p_node(0, j);
                if (p < P.front() || p > P.back()) continue; // outside leaf coverage
                while (seg + 2 < nk && P[static_cast<size_t>(seg + 1)] < p) ++seg;
                const size_t s = static_cast<size_t>(seg);
                double v = detail::hermite_eval(P[s], P[s + 1], V[s], V[s + 1], slopes[s],
                                                slopes[s + 1], p);
                out[static_cast<size_t>(i) * grid_.p_points(0) + static_cast<size_t>(j)] =
                    std::max(v, 0.0);
            }
        }
        PhaseSpaceDensity rho(grid_, std::move(out));
        const double factor = rho.normalize();
        if (renorm_factor) *renorm_factor = factor;
        return rho;
    }

    void refresh_sigma() {
        const int nk = leaf_count();
        const int nx = grid_.xgrid().storage_points(0);
        sigma_.assign(static_cast<size_t>(nk), ScalarField(grid_.xgrid()));
        // FD4 across the leaf label at fixed x
        std::vector<double> line(static_cast<size_t>(nk)), dline(static_cast<size_t>(nk));
        int shape[1] = {nk};
        for (int i = 0; i < nx; ++i) {
            for (int a = 0; a < nk; ++a) line[static_cast<size_t>(a)] = pbar_[static_cast<size_t>(a)].at(i);
            detail::fd4_derivative(line.data(), dline.data(), shape, 1, 0, grid_.p_spacing(0));
            for (int a = 0; a < nk; ++a) sigma_[static_cast<size_t>(a)].at(i) = dline[static_cast<size_t>(a)];
        }
    }

private:
    PhaseGrid grid_;
    std::vector<ScalarField> pbar_;
    std::vector<ScalarField> rhobar_;
    std::vector<ScalarField> sigma_;
};

/// Spec-level entry point: the phase-space density carried by a foliation.
inline PhaseSpaceDensity reconstruct_phase_density(const LeafFoliation& leaves,
                                                   double* renorm_factor = nullptr,
                                                   double sigma_floor = 1e-6) {
    return leaves.reconstruct(renorm_factor, sigma_floor);
}

struct LeafTransportResult {
    PhaseSpaceDensity rho;
    double min_sigma = 1;
    int relabel_events = 0;
    double renorm_factor = 1;
};

/// Evolve rho0 by leaf transport to time T with `steps` RK4 steps,
/// re-slicing every `relabel_every` steps (0 = never). Caustic errors
/// propagate with the caustic time recorded.
inline LeafTransportResult evolve_leaf_transport(const HamiltonianSpec& H,
                                                 const PhaseSpaceDensity& rho0, double T,
                                                 int steps, int relabel_every = 0) {
    LeafTransportResult res{rho0, 1.0, 0, 1.0};
    if (steps <= 0 || T == 0) return res;
    const double dt = T / steps;
    LeafFoliation fol = LeafFoliation::slice(rho0);
    double worst_sigma = std::numeric_limits<double>::infinity();
    for (int n = 0; n < steps; ++n) {
        fol.step(H, dt, n * dt);
        worst_sigma = std::min(worst_sigma, fol.min_sigma());
        const bool last = (n == steps - 1);
        if (!last && relabel_every > 0 && (n + 1) % relabel_every == 0) {
            double f = 1;
            PhaseSpaceDensity mid = fol.reconstruct(&f);
            fol = LeafFoliation::slice(mid);
            ++res.relabel_events;
        }
    }
    res.rho = fol.reconstruct(&res.renorm_factor);
    res.min_sigma = worst_sigma;
    return res;
}

} // namespace phaselab
