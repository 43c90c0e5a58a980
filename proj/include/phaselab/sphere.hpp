#pragma once

// Sphere grid (Gauss-Legendre colatitudes x uniform azimuths, poles
// excluded), quadrature, spin-weighted fields for s in {0, 1/2}, and exact
// spectral theta/phi derivatives through the Wigner-d basis. A weight-s
// field is phi-(anti)periodic with azimuthal orders n + s and carries the
// fiber derivative d/dchi as multiplication by i s.

#include "phaselab/fft.hpp"
#include "phaselab/wigner.hpp"

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace phaselab {

using spin_cplx = std::complex<double>;

class SphericalGrid {
public:
    SphericalGrid() = default;

    explicit SphericalGrid(int l_max)
        : l_max_(l_max), n_theta_(l_max + 1), n_phi_(2 * (l_max + 1)) {
        if (l_max < 2) throw std::invalid_argument("SphericalGrid: l_max must be at least 2");
        std::vector<double> x;
        wigner::gauss_legendre(n_theta_, x, w_);
        theta_.resize(static_cast<size_t>(n_theta_));
        for (int i = 0; i < n_theta_; ++i)
            theta_[static_cast<size_t>(i)] = std::acos(x[static_cast<size_t>(n_theta_ - 1 - i)]);
        std::reverse(w_.begin(), w_.end()); // match the descending-x = ascending-theta order
    }

    int l_max() const { return l_max_; }
    int n_theta() const { return n_theta_; }
    int n_phi() const { return n_phi_; }
    std::int64_t node_count() const { return static_cast<std::int64_t>(n_theta_) * n_phi_; }

    double theta(int i) const { return theta_[static_cast<size_t>(i)]; }
    double theta_weight(int i) const { return w_[static_cast<size_t>(i)]; } // for d(cos theta)
    double phi(int j) const { return 2.0 * std::numbers::pi * j / n_phi_; }
    double phi_weight() const { return 2.0 * std::numbers::pi / n_phi_; }

    std::int64_t index(int i, int j) const { return static_cast<std::int64_t>(i) * n_phi_ + j; }

    bool operator==(const SphericalGrid& o) const { return l_max_ == o.l_max_; }
    bool operator!=(const SphericalGrid& o) const { return !(*this == o); }

private:
    int l_max_ = 0;
    int n_theta_ = 0;
    int n_phi_ = 0;
    std::vector<double> theta_;
    std::vector<double> w_;
};

/// Spin-weighted function sampled on the sphere grid; two_s in {0, 1}.
class SpinField {
public:
    SpinField() = default;
    SpinField(SphericalGrid grid, int two_s, double hbar = 1.0)
        : grid_(grid), two_s_(two_s), hbar_(hbar),
          v_(static_cast<size_t>(grid.node_count()), spin_cplx(0)) {
        if (two_s != 0 && two_s != 1)
            throw std::invalid_argument("SpinField: spin weight must be 0 or 1/2");
    }

    const SphericalGrid& grid() const { return grid_; }
    int two_s() const { return two_s_; }
    double spin_weight() const { return 0.5 * two_s_; }
    double hbar() const { return hbar_; }

    spin_cplx& at(int i, int j) { return v_[static_cast<size_t>(grid_.index(i, j))]; }
    spin_cplx at(int i, int j) const { return v_[static_cast<size_t>(grid_.index(i, j))]; }
    std::vector<spin_cplx>& values() { return v_; }
    const std::vector<spin_cplx>& values() const { return v_; }

    template <typename F>
    static SpinField sample(const SphericalGrid& g, int two_s, F&& f, double hbar = 1.0) {
        SpinField out(g, two_s, hbar);
        for (int i = 0; i < g.n_theta(); ++i)
            for (int j = 0; j < g.n_phi(); ++j) out.at(i, j) = f(g.theta(i), g.phi(j));
        return out;
    }

private:
    SphericalGrid grid_;
    int two_s_ = 0;
    double hbar_ = 1.0;
    std::vector<spin_cplx> v_;
};

inline spin_cplx sphere_inner(const SpinField& a, const SpinField& b) {
    if (a.grid() != b.grid() || a.two_s() != b.two_s())
        throw std::invalid_argument("sphere_inner: mismatched fields");
    const SphericalGrid& g = a.grid();
    spin_cplx s = 0;
    for (int i = 0; i < g.n_theta(); ++i) {
        spin_cplx row = 0;
        for (int j = 0; j < g.n_phi(); ++j) row += std::conj(a.at(i, j)) * b.at(i, j);
        s += g.theta_weight(i) * row;
    }
    return s * g.phi_weight();
}

inline double sphere_norm(const SpinField& f) { return std::sqrt(sphere_inner(f, f).real()); }

/// Quadrature integral of a scalar sampled on the sphere.
inline double sphere_integral(const SpinField& f) {
    const SphericalGrid& g = f.grid();
    spin_cplx s = 0;
    for (int i = 0; i < g.n_theta(); ++i) {
        spin_cplx row = 0;
        for (int j = 0; j < g.n_phi(); ++j) row += f.at(i, j);
        s += g.theta_weight(i) * row;
    }
    return (s * g.phi_weight()).real();
}

namespace detail {

/// Cached Wigner-d profile tables per (l_max, two_s, mu): values and
/// theta-derivatives of the orthonormal profiles sqrt((2j+1)/2) d^j_{mu,s}
/// at the grid colatitudes, j from max(|mu|, s) to l_max + s.
class SphereBasis {
public:
    SphereBasis(const SphericalGrid& g, int two_s) : grid_(g), two_s_(two_s) {}

    struct ModeTable {
        int two_j_min = 0;
        int count = 0;
        std::vector<double> val;  // [j_index * n_theta + i]
        std::vector<double> dval;
    };

    const ModeTable& mode(int two_mu) {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = tables_.find(two_mu);
        if (it != tables_.end()) return it->second;
        ModeTable t;
        const int two_j_cap = 2 * grid_.l_max() + two_s_;
        t.two_j_min = std::max(std::abs(two_mu), two_s_);
        if ((t.two_j_min - two_s_) % 2 != 0) t.two_j_min += 1; // ladder parity
        t.count = t.two_j_min <= two_j_cap ? (two_j_cap - t.two_j_min) / 2 + 1 : 0;
        const int nt = grid_.n_theta();
        t.val.resize(static_cast<size_t>(t.count) * nt);
        t.dval.resize(static_cast<size_t>(t.count) * nt);
        std::vector<double> theta(static_cast<size_t>(nt));
        for (int i = 0; i < nt; ++i) theta[static_cast<size_t>(i)] = grid_.theta(i);
        for (int a = 0; a < t.count; ++a) {
            const int two_j = t.two_j_min + 2 * a;
            std::span<double> v(t.val.data() + static_cast<size_t>(a) * nt, static_cast<size_t>(nt));
            std::span<double> dv(t.dval.data() + static_cast<size_t>(a) * nt, static_cast<size_t>(nt));
            wigner::small_d_profile(two_j, two_mu, two_s_, theta, v, dv);
            const double norm = std::sqrt((two_j + 1.0) / 2.0);
            for (int i = 0; i < nt; ++i) {
                v[static_cast<size_t>(i)] *= norm;
                dv[static_cast<size_t>(i)] *= norm;
            }
        }
        return tables_.emplace(two_mu, std::move(t)).first->second;
    }

private:
    SphericalGrid grid_;
    int two_s_;
    std::mutex mu_;
    std::map<int, ModeTable> tables_;
};

inline SphereBasis& sphere_basis(const SphericalGrid& g, int two_s) {
    static std::mutex reg_mu;
    static std::map<std::pair<int, int>, std::unique_ptr<SphereBasis>> registry;
    std::lock_guard<std::mutex> lk(reg_mu);
    auto key = std::make_pair(g.l_max(), two_s);
    auto it = registry.find(key);
    if (it == registry.end())
        it = registry.emplace(key, std::make_unique<SphereBasis>(g, two_s)).first;
    return *it->second;
}

} // namespace detail

/// Exact partial derivatives of a band-limited spin-weighted field at the
/// nodes. d/dphi descreens the half-integer order, transforms rows, scales
/// by i (n + s) and rescreens; d/dtheta analyzes each azimuthal order in
/// the orthonormal Wigner basis and synthesizes from the derivative table.
struct SphereDerivatives {
    SpinField dtheta;
    SpinField dphi;
};

inline SphereDerivatives sphere_derivatives(const SpinField& f) {
    const SphericalGrid& g = f.grid();
    const int nt = g.n_theta(), np = g.n_phi();
    const double s = f.spin_weight();
    SphereDerivatives out{SpinField(g, f.two_s(), f.hbar()), SpinField(g, f.two_s(), f.hbar())};

    // descreen: h = e^{-i s phi} f, periodic rows
    std::vector<spin_cplx> h(static_cast<size_t>(g.node_count()));
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < np; ++j)
            h[static_cast<size_t>(g.index(i, j))] =
                f.at(i, j) * std::exp(spin_cplx(0, -s * g.phi(j)));
    fft::transform_lines(h.data(), np, 1, nt, np, FFTW_FORWARD);

    auto& basis = detail::sphere_basis(g, f.two_s());
    std::vector<spin_cplx> dth(h.size(), spin_cplx(0)), dph(h.size());
    std::vector<spin_cplx> coef;
    for (int m = 0; m < np; ++m) {
        int n = fft::mode_index(m, np);
        if (np % 2 == 0 && m == np / 2) n = -np / 2;
        const double mu = n + s;
        // phi derivative in mode space
        for (int i = 0; i < nt; ++i)
            dph[static_cast<size_t>(i * np + m)] =
                h[static_cast<size_t>(i * np + m)] * spin_cplx(0, mu);
        // theta derivative per mode via the basis
        const auto& tab = basis.mode(2 * n + f.two_s());
        coef.assign(static_cast<size_t>(tab.count), spin_cplx(0));
        for (int a = 0; a < tab.count; ++a) {
            spin_cplx c = 0;
            for (int i = 0; i < nt; ++i)
                c += g.theta_weight(i) * tab.val[static_cast<size_t>(a) * nt + i] *
                     h[static_cast<size_t>(i * np + m)];
            coef[static_cast<size_t>(a)] = c;
        }
        for (int i = 0; i < nt; ++i) {
            spin_cplx acc = 0;
            for (int a = 0; a < tab.count; ++a)
                acc += coef[static_cast<size_t>(a)] * tab.dval[static_cast<size_t>(a) * nt + i];
            dth[static_cast<size_t>(i * np + m)] = acc;
        }
    }
    fft::transform_lines(dth.data(), np, 1, nt, np, FFTW_BACKWARD);
    fft::transform_lines(dph.data(), np, 1, nt, np, FFTW_BACKWARD);
    const double invn = 1.0 / np;
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < np; ++j) {
            const spin_cplx screen = std::exp(spin_cplx(0, s * g.phi(j))) * invn;
            out.dtheta.at(i, j) = dth[static_cast<size_t>(i * np + j)] * screen;
            out.dphi.at(i, j) = dph[static_cast<size_t>(i * np + j)] * screen;
        }
    return out;
}

/// Standard spherical harmonic Y_l^m (Condon-Shortley) sampled on the grid.
inline SpinField spherical_harmonic(const SphericalGrid& g, int l, int m, double hbar = 1.0) {
    if (std::abs(m) > l || l > g.l_max())
        throw std::invalid_argument("spherical_harmonic: invalid (l, m)");
    const int nt = g.n_theta();
    std::vector<double> theta(static_cast<size_t>(nt)), val(static_cast<size_t>(nt)),
        dval(static_cast<size_t>(nt));
    for (int i = 0; i < nt; ++i) theta[static_cast<size_t>(i)] = g.theta(i);
    wigner::small_d_profile(2 * l, 2 * m, 0, theta, val, dval);
    const double norm = ((m % 2 == 0) ? 1.0 : -1.0) *
                        std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi));
    SpinField out(g, 0, hbar);
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < g.n_phi(); ++j)
            out.at(i, j) = norm * val[static_cast<size_t>(i)] *
                           std::exp(spin_cplx(0, m * g.phi(j)));
    return out;
}

/// Half-spin doublet: |+> = e^{i phi/2} cos(theta/2) / sqrt(2 pi),
/// |-> = e^{-i phi/2} sin(theta/2) / sqrt(2 pi) (gauge phase zero).
inline SpinField half_spin_plus(const SphericalGrid& g, double hbar = 1.0) {
    return SpinField::sample(g, 1, [](double th, double ph) {
        return std::exp(spin_cplx(0, 0.5 * ph)) * std::cos(0.5 * th) /
               std::sqrt(2.0 * std::numbers::pi);
    }, hbar);
}

inline SpinField half_spin_minus(const SphericalGrid& g, double hbar = 1.0) {
    return SpinField::sample(g, 1, [](double th, double ph) {
        return std::exp(spin_cplx(0, -0.5 * ph)) * std::sin(0.5 * th) /
               std::sqrt(2.0 * std::numbers::pi);
    }, hbar);
}

/// |l + 1/2, m + 1/2> built from the weighted combination of Y_l^m and
/// Y_l^{m+1} with the half-angle factors; m runs in [-l-1, l].
inline SpinField half_spin_state(const SphericalGrid& g, int l, int m, double hbar = 1.0) {
    if (m < -l - 1 || m > l) throw std::invalid_argument("half_spin_state: m out of range");
    SpinField out(g, 1, hbar);
    const double c_up = (m >= -l && m <= l) ? std::sqrt((l + m + 1.0) / (2.0 * l + 1.0)) : 0.0;
    const double c_dn = (m + 1 >= -l && m + 1 <= l) ? std::sqrt((l - m) / (2.0 * l + 1.0)) : 0.0;
    if (c_up > 0) {
        SpinField y = spherical_harmonic(g, l, m, hbar);
        for (int i = 0; i < g.n_theta(); ++i)
            for (int j = 0; j < g.n_phi(); ++j)
                out.at(i, j) += c_up * std::exp(spin_cplx(0, 0.5 * g.phi(j))) *
                                std::cos(0.5 * g.theta(i)) * y.at(i, j);
    }
    if (c_dn > 0) {
        SpinField y = spherical_harmonic(g, l, m + 1, hbar);
        for (int i = 0; i < g.n_theta(); ++i)
            for (int j = 0; j < g.n_phi(); ++j)
                out.at(i, j) += c_dn * std::exp(spin_cplx(0, -0.5 * g.phi(j))) *
                                std::sin(0.5 * g.theta(i)) * y.at(i, j);
    }
    // the combination's normalization constant is fixed numerically
    const double n = sphere_norm(out);
    for (auto& v : out.values()) v /= n;
    return out;
}

} // namespace phaselab
