#pragma once

// Wigner small-d profiles d^j_{mu,s}(theta) and their theta-derivatives,
// evaluated through Jacobi polynomials:
//
//   d^j_{m',m} = N (sin t/2)^{m'-m} (cos t/2)^{m'+m} P^{(m'-m, m'+m)}_{j-m'}(cos t)
//   N = sqrt( (j+m')! (j-m')! / ((j+m)! (j-m)!) )
//
// valid for m'-m >= 0 and m'+m >= 0; other index regions are reached with
// d^j_{m',m} = (-1)^{m-m'} d^j_{m,m'} = (-1)^{m-m'} d^j_{-m',-m}.
// Half-integers are carried as doubled ints.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace phaselab::wigner {

namespace detail {

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

/// P_k^{(a,b)}(x) and d/dx values by the three-term recurrence; the
/// derivative uses dP_k^{(a,b)}/dx = (k+a+b+1)/2 P_{k-1}^{(a+1,b+1)}.
inline void jacobi_with_derivative(int k, int a, int b, std::span<const double> x,
                                   std::span<double> p, std::span<double> dp) {
    const size_t n = x.size();
    std::vector<double> pm1(n), pm2(n);
    auto eval = [&](int kk, int aa, int bb, std::span<double> out) {
        for (size_t i = 0; i < n; ++i) pm2[i] = 1.0;
        if (kk == 0) {
            for (size_t i = 0; i < n; ++i) out[i] = 1.0;
            return;
        }
        for (size_t i = 0; i < n; ++i)
            pm1[i] = 0.5 * (aa - bb) + 0.5 * (aa + bb + 2) * x[i];
        if (kk == 1) {
            for (size_t i = 0; i < n; ++i) out[i] = pm1[i];
            return;
        }
        std::vector<double> cur(n);
        for (int m = 2; m <= kk; ++m) {
            const double c1 = 2.0 * m * (m + aa + bb) * (2 * m + aa + bb - 2);
            const double c2 = (2.0 * m + aa + bb - 1) *
                              (static_cast<double>(aa) * aa - static_cast<double>(bb) * bb);
            const double c3 = (2.0 * m + aa + bb - 2) * (2.0 * m + aa + bb - 1) *
                              (2.0 * m + aa + bb);
            const double c4 = 2.0 * (m + aa - 1) * (m + bb - 1) * (2.0 * m + aa + bb);
            for (size_t i = 0; i < n; ++i)
                cur[i] = ((c2 + c3 * x[i]) * pm1[i] - c4 * pm2[i]) / c1;
            std::swap(pm2, pm1);
            std::swap(pm1, cur);
        }
        for (size_t i = 0; i < n; ++i) out[i] = pm1[i];
    };
    eval(k, a, b, p);
    if (k == 0) {
        for (size_t i = 0; i < n; ++i) dp[i] = 0.0;
    } else {
        eval(k - 1, a + 1, b + 1, dp);
        const double f = 0.5 * (k + a + b + 1);
        for (size_t i = 0; i < n; ++i) dp[i] *= f;
    }
}

} // namespace detail

/// d^j_{mu,s}(theta_i) and d/dtheta values at the given colatitudes.
/// Indices are doubled (two_j = 2j, ...); theta must avoid the poles.
inline void small_d_profile(int two_j, int two_mu, int two_s, std::span<const double> theta,
                            std::span<double> val, std::span<double> dval) {
    if ((two_j - two_mu) % 2 != 0 || (two_j - two_s) % 2 != 0)
        throw std::invalid_argument("small_d_profile: indices must share the ladder parity");
    if (std::abs(two_mu) > two_j || std::abs(two_s) > two_j)
        throw std::invalid_argument("small_d_profile: |mu|, |s| must not exceed j");

    // reduce to the canonical region m' - m >= 0, m' + m >= 0
    int tm_p = two_mu, tm = two_s;
    double sign = 1.0;
    if (tm_p - tm < 0 || tm_p + tm < 0) {
        if (tm - tm_p >= 0 && tm + tm_p >= 0) {
            sign = ((tm - tm_p) / 2) % 2 == 0 ? 1.0 : -1.0; // swap indices
            std::swap(tm_p, tm);
        } else {
            sign = ((tm - tm_p) / 2) % 2 == 0 ? 1.0 : -1.0; // negate both
            tm_p = -two_mu;
            tm = -two_s;
        }
    }
    const int a = (tm_p - tm) / 2;
    const int b = (tm_p + tm) / 2;
    const int k = (two_j - tm_p) / 2;

    const double logn = 0.5 * (detail::log_factorial((two_j + tm_p) / 2) +
                               detail::log_factorial((two_j - tm_p) / 2) -
                               detail::log_factorial((two_j + tm) / 2) -
                               detail::log_factorial((two_j - tm) / 2));
    const double norm = sign * std::exp(logn);

    const size_t n = theta.size();
    std::vector<double> x(n), p(n), dp(n);
    for (size_t i = 0; i < n; ++i) x[i] = std::cos(theta[i]);
    detail::jacobi_with_derivative(k, a, b, x, p, dp);

    for (size_t i = 0; i < n; ++i) {
        const double u = std::sin(0.5 * theta[i]);
        const double v = std::cos(0.5 * theta[i]);
        const double ua = std::pow(u, a), vb = std::pow(v, b);
        val[i] = norm * ua * vb * p[i];
        // d/dtheta [u^a v^b P(cos t)] =
        //   (a/2) u^{a-1} v^{b+1} P - (b/2) u^{a+1} v^{b-1} P - 2 u^{a+1} v^{b+1} P'
        double d = -2.0 * ua * u * vb * v * dp[i];
        if (a > 0) d += 0.5 * a * std::pow(u, a - 1) * vb * v * p[i];
        if (b > 0) d -= 0.5 * b * ua * u * std::pow(v, b - 1) * p[i];
        dval[i] = norm * d;
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence; bit-deterministic for a given n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<size_t>(n), 0.0);
    w.assign(static_cast<size_t>(n), 0.0);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k + 1.0) * z * p1 - k * p2) / (k + 1);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<size_t>(i)] = -z;
        x[static_cast<size_t>(n - 1 - i)] = z;
        const double wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<size_t>(i)] = wi;
        w[static_cast<size_t>(n - 1 - i)] = wi;
    }
}

} // namespace phaselab::wigner
