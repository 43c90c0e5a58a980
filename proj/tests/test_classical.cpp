#include <catch2/catch_amalgamated.hpp>

#include "phaselab/classical.hpp"
#include "phaselab/equivalence.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace phaselab;
constexpr double pi = std::numbers::pi;

namespace {
PhaseGrid harmonic_grid(int n) {
    auto xg = make_uniform_grid(-6, 6, n, Boundary::periodic);
    return make_phase_grid(xg, -6, 6, n);
}
} // namespace

TEST_CASE("characteristics: free particle moves uniformly") {
    auto H = make_free_hamiltonian();
    auto s = step_characteristics(H, {{0, 0}, {2, 0}}, 0.5);
    CHECK(s.x[0] == Catch::Approx(1.0).margin(1e-14));
    CHECK(s.p[0] == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("characteristics: harmonic quarter period rotates the state") {
    // analytic oracle: (x,p)(t) = (x0 cos t + p0 sin t, p0 cos t - x0 sin t)
    auto H = make_harmonic_hamiltonian();
    PhasePoint s{{1, 0}, {0, 0}};
    const double T = pi / 2;
    const int steps = static_cast<int>(std::lround(T / 1e-3));
    const double dt = T / steps;
    for (int i = 0; i < steps; ++i) s = step_characteristics(H, s, dt);
    CHECK(s.x[0] == Catch::Approx(0.0).margin(1e-5));
    CHECK(s.p[0] == Catch::Approx(-1.0).margin(1e-5));
}

TEST_CASE("characteristics: constant potential leaves p unchanged") {
    HamiltonianSpec H(Metric::identity(1));
    H.set_potential(PotentialTerm::constant(3.0));
    auto s = step_characteristics(H, {{0.4, 0}, {1.7, 0}}, 0.37);
    CHECK(s.p[0] == Catch::Approx(1.7).margin(1e-15));
}

TEST_CASE("characteristics: rejects nonfinite state and bad dt") {
    auto H = make_free_hamiltonian();
    CHECK_THROWS_AS(step_characteristics(H, {{std::nan(""), 0}, {0, 0}}, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(step_characteristics(H, {{0, 0}, {0, 0}}, -0.1), std::invalid_argument);
}

TEST_CASE("characteristics: bounded energy error over a million steps") {
    auto H = make_harmonic_hamiltonian();
    PhasePoint s{{1, 0}, {0.5, 0}};
    const double e0 = eval_hamiltonian(H, s.x, s.p);
    const double dt = 1e-2;
    double emax = 0;
    for (int i = 0; i < 1000000; ++i) {
        s = step_characteristics(H, s, dt);
        if (i % 997 == 0) emax = std::max(emax, std::abs(eval_hamiltonian(H, s.x, s.p) - e0));
    }
    // symplectic: energy oscillates at O(dt^2) with no secular drift
    CHECK(emax < 1e-3);
}

TEST_CASE("characteristics: implicit midpoint handles position-dependent A") {
    HamiltonianSpec H(Metric::identity(1));
    H.set_vector_potential(
        0, PotentialTerm::analytic([](const Vec& x) { return 0.3 * std::sin(x[0]); },
                                   [](const Vec& x, int) { return 0.3 * std::cos(x[0]); }));
    PhasePoint s{{1, 0}, {0.7, 0}};
    const double e0 = eval_hamiltonian(H, s.x, s.p);
    for (int i = 0; i < 2000; ++i) s = step_characteristics(H, s, 1e-2);
    CHECK(std::abs(eval_hamiltonian(H, s.x, s.p) - e0) < 1e-4);
}

TEST_CASE("liouville: uniform density is stationary") {
    auto g = harmonic_grid(32);
    PhaseSpaceDensity rho = PhaseSpaceDensity::sample(g, [](const Vec&, const Vec&) { return 1.0; });
    auto out = step_liouville(make_harmonic_hamiltonian(), rho, 1e-3);
    for (std::int64_t i = 0; i < out.size(); ++i)
        CHECK(out[i] == Catch::Approx(rho[i]).margin(1e-12));
}

TEST_CASE("liouville: dt = 0 is the identity") {
    auto g = harmonic_grid(32);
    auto rho = PhaseSpaceDensity::gaussian(g, {1, 0}, {0, 0}, 0.6, 0.6);
    auto out = step_liouville(make_harmonic_hamiltonian(), rho, 0.0);
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == rho[i]);
}

TEST_CASE("liouville: CFL guard rejects large steps") {
    auto g = harmonic_grid(64);
    auto rho = PhaseSpaceDensity::gaussian(g, {1, 0}, {0, 0}, 0.6, 0.6);
    CHECK_THROWS_AS(step_liouville(make_harmonic_hamiltonian(), rho, 1.0), std::invalid_argument);
}

TEST_CASE("liouville: mass conserved per step") {
    auto g = harmonic_grid(64);
    auto rho = PhaseSpaceDensity::gaussian(g, {1, 0}, {0, 0}, 0.6, 0.6);
    const double m0 = rho.mass();
    auto out = rho;
    for (int i = 0; i < 20; ++i) out = step_liouville(make_harmonic_hamiltonian(), out, 5e-3);
    CHECK(std::abs(out.mass() - m0) < 1e-10);
}

TEST_CASE("liouville: harmonic blob returns after one period") {
    // analytic oracle: the flow is a rigid rotation of phase space
    auto g = harmonic_grid(128);
    auto rho0 = PhaseSpaceDensity::gaussian(g, {1.2, 0}, {0, 0}, 0.5, 0.5);
    auto out = evolve_liouville(make_harmonic_hamiltonian(), rho0, 2 * pi, 1400);
    CHECK(l1_distance(out, rho0) < 5e-3);
}

TEST_CASE("liouville: free-particle shear matches the characteristics oracle") {
    // rho_t(x, p) = rho_0(x - p t, p)
    auto g = harmonic_grid(128);
    const double sx = 0.5, sp = 0.5, T = 1.0;
    auto blob = [&](double x, double p) {
        return std::exp(-x * x / (2 * sx * sx) - p * p / (2 * sp * sp));
    };
    auto rho0 =
        PhaseSpaceDensity::sample(g, [&](const Vec& x, const Vec& p) { return blob(x[0], p[0]); });
    auto out = evolve_liouville(make_free_hamiltonian(), rho0, T, 400);
    auto ref = PhaseSpaceDensity::sample(
        g, [&](const Vec& x, const Vec& p) { return blob(x[0] - p[0] * T, p[0]); });
    CHECK(l1_distance(out, ref) < 1e-4);
}

TEST_CASE("liouville: density is constant along characteristics") {
    auto g = harmonic_grid(128);
    auto H = make_harmonic_hamiltonian();
    auto rho0 = PhaseSpaceDensity::gaussian(g, {1.0, 0}, {0.5, 0}, 0.6, 0.6);
    const double T = 0.8;
    auto rhoT = evolve_liouville(H, rho0, T, 240);

    // seed at an exact node near the blob, follow its characteristic
    const ConfigGrid& xg = g.xgrid();
    const int np = g.p_points(0);
    const int i0 = 70, j0 = 70; // node inside the blob
    PhasePoint s{{xg.node(0, i0), 0}, {g.p_node(0, j0), 0}};
    const double v0 = rho0[static_cast<std::int64_t>(i0) * np + j0];
    for (int i = 0; i < 4000; ++i) s = step_characteristics(H, s, T / 4000);

    // bilinear sample of rhoT at the evolved point
    const double rx = (s.x[0] - xg.lo(0)) / xg.spacing(0);
    const double rp = (s.p[0] - g.p_lo(0)) / g.p_spacing(0);
    const int a = static_cast<int>(std::floor(rx)), b = static_cast<int>(std::floor(rp));
    const double fx = rx - a, fp = rp - b;
    auto val = [&](int i, int j) { return rhoT[static_cast<std::int64_t>(i) * np + j]; };
    const double interp = (1 - fx) * ((1 - fp) * val(a, b) + fp * val(a, b + 1)) +
                          fx * ((1 - fp) * val(a + 1, b) + fp * val(a + 1, b + 1));
    CHECK(interp == Catch::Approx(v0).epsilon(5e-3));
}

TEST_CASE("charge conservation along the flow") {
    // {H, L3} = 0 for a central potential: L3 must not drift along orbits
    auto H = make_central_hamiltonian(1.0, 0.8);
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto q = angular_momentum_charge();
    double drift_max = 0;
    for (int n = 0; n < 50; ++n) {
        PhasePoint s{{u(rng), u(rng)}, {u(rng), u(rng)}};
        const double q0 = q.value(s.x, s.p);
        for (int i = 0; i < 1000; ++i) s = step_characteristics(H, s, 1e-3);
        drift_max = std::max(drift_max, std::abs(q.value(s.x, s.p) - q0));
    }
    CHECK(drift_max < 1e-8); // per unit time
}

TEST_CASE("ensemble deposition reproduces a transported blob") {
    auto g = harmonic_grid(128);
    auto H = make_harmonic_hamiltonian();
    auto rho0 = PhaseSpaceDensity::gaussian(g, {1.2, 0}, {0, 0}, 0.5, 0.5);
    auto grid_result = evolve_liouville(H, rho0, pi / 2, 400);
    auto ens_result = evolve_characteristics_ensemble(H, rho0, pi / 2, 400);
    CHECK(l1_distance(grid_result, ens_result) < 5e-3);
}

TEST_CASE("trajectory recording keeps energy bounded") {
    auto H = make_harmonic_hamiltonian();
    auto traj = integrate_characteristics(H, {{1, 0}, {0, 0}}, 1e-2, 2000, 100);
    REQUIRE(traj.t.size() == traj.state.size());
    REQUIRE(traj.t.size() == 21);
    const double e0 = eval_hamiltonian(H, traj.state.front().x, traj.state.front().p);
    for (const auto& s : traj.state)
        CHECK(std::abs(eval_hamiltonian(H, s.x, s.p) - e0) < 1e-3);
}
