#include <catch2/catch_amalgamated.hpp>

#include "phaselab/classical.hpp"
#include "phaselab/quantum.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace phaselab;
constexpr double pi = std::numbers::pi;

namespace {
ConfigGrid line(int n = 128, double lo = -8, double hi = 8) {
    return make_uniform_grid(lo, hi, n, Boundary::periodic);
}

WaveFunction plane_wave(const ConfigGrid& g, int mode, double hbar) {
    const double k = 2 * pi * mode / g.length(0);
    return WaveFunction::sample(g, hbar, [&](double x) { return std::exp(cplx(0, k * x)); });
}
} // namespace

TEST_CASE("position operator is diagonal with node eigenvalues") {
    auto g = line(32);
    auto x = sample_scalar(g, [](double v) { return v; });
    auto op = build_observable({{0, x, 0}}, g, 1.0);
    CHECK(op.hermiticity_residual() < 1e-12);
    for (int i = 0; i < 32; ++i) {
        CHECK(op.mat(i, i).real() == Catch::Approx(g.node(0, i)).margin(1e-12));
        for (int j = 0; j < 32; ++j)
            if (i != j) CHECK(std::abs(op.mat(i, j)) < 1e-12);
    }
}

TEST_CASE("momentum observable has plane-wave eigenvectors") {
    auto g = line(64, 0, 2 * pi);
    const double hbar = 0.7;
    ScalarField half(g, 0.5);
    auto op = build_observable({{1, half, 0}}, g, hbar);
    auto psi = plane_wave(g, 3, hbar);
    CVector v = psi.to_vector();
    CVector got = op.mat * v;
    for (int i = 0; i < 64; ++i)
        CHECK(std::abs(got[i] - hbar * 3.0 * v[i]) < 1e-10);
}

TEST_CASE("commutator identity [p, f] = (hbar/i) df") {
    auto g = line(128, 0, 2 * pi);
    const double hbar = 1.0;
    auto f = sample_scalar(g, [](double x) { return std::cos(2 * x) + 0.3 * std::sin(5 * x); });
    auto df = sample_scalar(g, [](double x) { return -2 * std::sin(2 * x) + 1.5 * std::cos(5 * x); });
    auto p = momentum_operator(g, hbar, 0);
    auto fop = function_operator(f);
    Matrix comm = p.mat * fop.mat - fop.mat * p.mat;

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> amp(-1, 1);
    ComplexField probe(g);
    for (int m = -10; m <= 10; ++m) {
        const double ar = amp(rng), ai = amp(rng);
        for (int i = 0; i < 128; ++i)
            probe.at(i) += cplx(ar, ai) * std::exp(cplx(0, m * g.node(0, i)));
    }
    CVector v(128);
    for (int i = 0; i < 128; ++i) v[i] = probe.at(i);
    CVector lhs = comm * v;
    for (int i = 0; i < 128; ++i) {
        cplx rhs = (hbar / cplx(0, 1)) * df.at(i) * v[i];
        CHECK(std::abs(lhs[i] - rhs) < 1e-10);
    }
}

TEST_CASE("build_observable validation") {
    auto g = line(32);
    ScalarField f(g, 1.0);
    CHECK_THROWS_AS(build_observable({{5, f, 0}}, g, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_observable({{1, f, 1}}, g, 1.0), std::invalid_argument);
    ScalarField bad(g, std::nan(""));
    CHECK_THROWS_AS(build_observable({{1, bad, 0}}, g, 1.0), std::invalid_argument);
}

TEST_CASE("split step: plane wave picks up the kinetic phase only") {
    auto g = line(64, 0, 2 * pi);
    const double hbar = 1.0;
    auto psi = plane_wave(g, 3, hbar);
    const double dt = 1e-2;
    auto out = step_schrodinger(make_free_hamiltonian(), psi, dt);
    const cplx expected_phase = std::exp(cplx(0, -hbar * 9.0 * dt / 2.0));
    for (int i = 0; i < 64; ++i) {
        CHECK(std::abs(std::abs(out[i]) - std::abs(psi[i])) < 1e-12);
        CHECK(std::abs(out[i] - expected_phase * psi[i]) < 1e-12);
    }
}

TEST_CASE("split step: harmonic ground state is stationary") {
    auto g = line(128);
    const double hbar = 1.0;
    auto psi0 = WaveFunction::sample(
        g, hbar, [&](double x) { return cplx(std::exp(-x * x / (2 * hbar)), 0); });
    auto H = make_harmonic_hamiltonian();
    const double T = 10 * 2 * pi; // ten periods
    const double dt = 5e-5;
    const int steps = static_cast<int>(std::lround(T / dt));
    SchrodingerPropagator u(H, g, hbar, dt);
    WaveFunction psi = psi0;
    for (int n = 0; n < steps; ++n) u.apply(psi);
    double dev = 0;
    for (std::int64_t i = 0; i < psi.size(); ++i)
        dev = std::max(dev, std::abs(std::abs(psi[i]) - std::abs(psi0[i])));
    CHECK(dev < 1e-8);
}

TEST_CASE("split step: norm preserved over a thousand steps") {
    auto g = line(128);
    auto psi = WaveFunction::gaussian(g, 1.0, {0.8, 0}, {0.4, 0}, 0.7);
    SchrodingerPropagator u(make_harmonic_hamiltonian(), g, 1.0, 1e-3);
    const double n0 = psi.norm_sq();
    for (int i = 0; i < 1000; ++i) u.apply(psi);
    CHECK(std::abs(psi.norm_sq() - n0) < 1e-10);
}

TEST_CASE("coherent state tracks the classical trajectory") {
    // Ehrenfest oracle: for the harmonic oscillator <x>(t) = x0 cos t
    auto g = line(256);
    const double hbar = 1.0;
    const double x0 = 1.0;
    auto psi = WaveFunction::gaussian(g, hbar, {x0, 0}, {0, 0}, std::sqrt(hbar / 2));
    auto H = make_harmonic_hamiltonian();
    auto xop = build_observable({{0, sample_scalar(g, [](double x) { return x; }), 0}}, g, hbar);
    const double T = 2 * pi;
    const int steps = 4000;
    SchrodingerPropagator u(H, g, hbar, T / steps);
    double maxdev = 0;
    for (int n = 0; n < steps; ++n) {
        u.apply(psi);
        if (n % 50 == 0) {
            const double t = (n + 1) * T / steps;
            maxdev = std::max(maxdev,
                              std::abs(expectation(psi, xop).real() - x0 * std::cos(t)));
        }
    }
    CHECK(maxdev < 1e-4);
}

TEST_CASE("Crank-Nicolson branch handles varying A and preserves norm") {
    auto g = line(64, 0, 2 * pi);
    HamiltonianSpec H(Metric::identity(1));
    H.set_vector_potential(
        0, PotentialTerm::analytic([](const Vec& x) { return 0.4 * std::sin(x[0]); },
                                   [](const Vec& x, int) { return 0.4 * std::cos(x[0]); }));
    auto psi = WaveFunction::gaussian(g, 1.0, {pi, 0}, {1, 0}, 0.5);
    SchrodingerPropagator u(H, g, 1.0, 1e-3);
    const double n0 = psi.norm_sq();
    for (int i = 0; i < 500; ++i) u.apply(psi);
    CHECK(std::abs(psi.norm_sq() - n0) < 1e-10);
}

TEST_CASE("quantum liouville: eigenprojector is stationary") {
    auto g = make_uniform_grid(0.0, pi, 64, Boundary::box_doubled);
    auto states = box_eigenstates(g, 1, 1.0);
    auto rho = DensityMatrix::pure(states[0]);
    auto out = rho;
    for (int i = 0; i < 10; ++i) out = step_quantum_liouville(make_free_hamiltonian(), out, 1e-2);
    CHECK((out.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("quantum liouville: pure state consistency with the wavefunction route") {
    auto g = line(128);
    auto H = make_harmonic_hamiltonian();
    auto psi = WaveFunction::gaussian(g, 1.0, {1, 0}, {0, 0}, 0.6);
    auto rho = DensityMatrix::pure(psi);
    const double dt = 2e-3;
    SchrodingerPropagator u(H, g, 1.0, dt);
    for (int n = 0; n < 100; ++n) {
        rho = step_quantum_liouville(H, rho, dt);
        u.apply(psi);
    }
    auto proj = DensityMatrix::pure(psi);
    CHECK((rho.matrix() - proj.matrix()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("quantum liouville: trace and hermiticity preserved; non-hermitian rejected") {
    auto g = line(96);
    auto H = make_harmonic_hamiltonian();
    auto a = DensityMatrix::pure(WaveFunction::gaussian(g, 1.0, {1, 0}, {0, 0}, 0.6));
    auto b = DensityMatrix::pure(WaveFunction::gaussian(g, 1.0, {-0.5, 0}, {0.4, 0}, 0.7));
    DensityMatrix rho(g, 0.5 * (a.matrix() + b.matrix()), 1.0);
    for (int i = 0; i < 1000; ++i) rho = step_quantum_liouville(H, rho, 1e-3);
    CHECK(std::abs(rho.trace_real() - 1.0) < 1e-9);
    CHECK(rho.hermiticity_residual() < 1e-12);
    Matrix bad = rho.matrix();
    bad(0, 1) += 1.0;
    CHECK_THROWS_AS(step_quantum_liouville(H, DensityMatrix(g, bad, 1.0), 1e-3),
                    std::invalid_argument);
}

TEST_CASE("madelung: plane wave gives constant density and p = hbar k") {
    auto g = line(64, 0, 2 * pi);
    const double hbar = 0.7;
    auto psi = plane_wave(g, 3, hbar);
    auto mf = madelung_fields(psi);
    REQUIRE(mf.full_mask);
    const double expect_p = hbar * 3.0;
    for (int i = 0; i < 64; ++i) {
        CHECK(mf.momentum.comp[0].at(i) == Catch::Approx(expect_p).margin(1e-10));
        CHECK(mf.density.at(i) == Catch::Approx(mf.density.at(0)).margin(1e-12));
    }
}

TEST_CASE("madelung: real wavefunction has zero momentum") {
    auto g = line(128);
    auto psi = WaveFunction::gaussian(g, 1.0, {0, 0}, {0, 0}, 0.9);
    auto mf = madelung_fields(psi);
    for (std::int64_t i = 0; i < psi.size(); ++i)
        if (mf.mask[static_cast<size_t>(i)])
            CHECK(std::abs(mf.momentum.comp[0][i]) < 1e-9);
}

TEST_CASE("madelung: modulated phase matches the analytic gradient") {
    // oracle: d/dx (k x + 0.2 sin x) = k + 0.2 cos x
    auto g = line(256, 0, 2 * pi);
    const double hbar = 1.0;
    const int mode = 2;
    auto psi = WaveFunction::sample(g, hbar, [&](double x) {
        const double amp = std::exp(-0.5 * (x - pi) * (x - pi) / (1.1 * 1.1));
        return amp * std::exp(cplx(0, mode * x + 0.2 * std::sin(x)));
    });
    auto mf = madelung_fields(psi);
    REQUIRE(mf.full_mask); // wide envelope keeps every node above the floor
    for (int i = 0; i < 256; ++i) {
        const double expect = hbar * (mode + 0.2 * std::cos(g.node(0, i)));
        CHECK(mf.momentum.comp[0].at(i) == Catch::Approx(expect).margin(1e-8));
    }
    auto eta = synchronicity_of(psi);
    auto p2 = momentum_of_synchronicity(eta);
    for (int i = 0; i < 256; ++i)
        CHECK(mf.momentum.comp[0].at(i) == Catch::Approx(p2.comp[0].at(i)).margin(1e-10));
}

TEST_CASE("madelung: nodes below the floor are masked and reported") {
    auto g = line(256);
    auto psi = WaveFunction::gaussian(g, 1.0, {0, 0}, {2.0, 0}, 0.35);
    auto mf = madelung_fields(psi);
    CHECK_FALSE(mf.full_mask);
    CHECK(mf.masked_out > 0);
    for (int i = 0; i < 256; ++i)
        if (mf.mask[static_cast<size_t>(i)])
            CHECK(mf.momentum.comp[0].at(i) == Catch::Approx(2.0).margin(1e-5));
}

TEST_CASE("continuity equation holds on pure states") {
    // d/dt |psi|^2 = -d_j (h (p_j + A_j) |psi|^2) with p from the phase
    auto g = line(256);
    auto H = make_harmonic_hamiltonian();
    const double dt = 1e-4;
    auto psi = WaveFunction::gaussian(g, 1.0, {0.9, 0}, {0.3, 0}, 0.8);
    auto fwd = step_schrodinger(H, psi, dt);
    auto bwd = step_schrodinger(H, psi, -dt);
    auto mf = madelung_fields(psi);
    ScalarField flux(g);
    for (std::int64_t i = 0; i < flux.size(); ++i)
        flux[i] = mf.momentum.comp[0][i] * mf.density[i];
    auto dflux = spectral_derivative(flux, 0);
    double maxres = 0;
    for (std::int64_t i = 0; i < flux.size(); ++i) {
        if (!mf.mask[static_cast<size_t>(i)]) continue;
        const double lhs = (std::norm(fwd[i]) - std::norm(bwd[i])) / (2 * dt);
        maxres = std::max(maxres, std::abs(lhs + dflux[i]));
    }
    CHECK(maxres < 1e-6);
}

TEST_CASE("moment equations: eigenprojector gives vanishing residual") {
    auto g = make_uniform_grid(0.0, pi, 64, Boundary::box_doubled);
    auto states = box_eigenstates(g, 2, 1.0);
    auto rho = DensityMatrix::pure(states[1]);
    auto rep = verify_moment_equations(make_free_hamiltonian(), rho, 1e-3);
    CHECK(rep.density_residual < 1e-9);
    CHECK(rep.momentum_residual < 1e-9);
}

TEST_CASE("moment equations: residual scales as dt^2") {
    auto g = line(96);
    auto H = make_harmonic_hamiltonian();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> amp(-1, 1);
    auto psi = WaveFunction::sample(g, 1.0, [&](double x) {
        cplx s = 0;
        for (int m = -4; m <= 4; ++m)
            s += cplx(amp(rng), amp(rng)) *
                 std::exp(cplx(0, 2 * pi * m * x / 16.0)) * std::exp(-x * x / 2.0);
        return s;
    });
    auto rho = DensityMatrix::pure(psi);
    auto r1 = verify_moment_equations(H, rho, 5e-3);
    auto r2 = verify_moment_equations(H, rho, 2.5e-3);
    const double ratio_d = r1.density_residual / r2.density_residual;
    const double ratio_m = r1.momentum_residual / r2.momentum_residual;
    CHECK(ratio_d > 3.5);
    CHECK(ratio_d < 4.5);
    CHECK(ratio_m > 3.5);
    CHECK(ratio_m < 4.5);
}

TEST_CASE("heisenberg picture: identity expectation is one") {
    auto g = line(64);
    auto psi = WaveFunction::gaussian(g, 1.0, {0.5, 0}, {0, 0}, 0.7);
    // the identity acts nodally, so its matrix is the plain identity
    OperatorRep eye{Matrix::Identity(64, 64), true};
    auto res = heisenberg_expectation(make_harmonic_hamiltonian(), eye, psi, 1e-2, 50);
    CHECK(res.heisenberg == Catch::Approx(1.0).margin(1e-9));
    CHECK(res.gap < 1e-9);
}

TEST_CASE("heisenberg picture: conserved charge stays constant") {
    auto g = line(64);
    auto H = make_free_hamiltonian();
    auto psi = WaveFunction::gaussian(g, 1.0, {0, 0}, {1, 0}, 0.8);
    ScalarField half(g, 0.5);
    auto p = build_observable({{1, half, 0}}, g, 1.0); // commutes with the free H
    const double v0 = expectation(psi, p).real();
    auto res = heisenberg_expectation(H, p, psi, 5e-3, 100);
    CHECK(res.gap < 1e-9);
    CHECK(res.schrodinger == Catch::Approx(v0).margin(1e-9));
}

TEST_CASE("heisenberg picture: position follows the cosine trajectory") {
    auto g = line(128);
    auto H = make_harmonic_hamiltonian();
    const double hbar = 1.0;
    auto psi = WaveFunction::gaussian(g, hbar, {1, 0}, {0, 0}, std::sqrt(hbar / 2));
    auto xop = build_observable({{0, sample_scalar(g, [](double x) { return x; }), 0}}, g, hbar);
    const double T = pi / 3;
    const int steps = 400;
    auto res = heisenberg_expectation(H, xop, psi, T / steps, steps);
    CHECK(res.gap < 1e-9);
    CHECK(res.heisenberg == Catch::Approx(std::cos(T)).margin(1e-5));
}

TEST_CASE("box eigenstates: spectrum, walls and stationarity") {
    auto g = make_uniform_grid(0.0, pi, 64, Boundary::box_doubled);
    const double hbar = 1.0;
    auto states = box_eigenstates(g, 4, hbar);
    auto hop = hamiltonian_operator(make_free_hamiltonian(), g, hbar);
    for (int n = 1; n <= 4; ++n) {
        const auto& psi = states[static_cast<size_t>(n - 1)];
        CHECK(psi.norm_sq() == Catch::Approx(1.0).margin(1e-12));
        const double e = expectation(psi, hop).real();
        CHECK(e == Catch::Approx(n * n * hbar * hbar / 2).margin(1e-10));
        CHECK(std::abs(psi[0]) < 1e-12);
        CHECK(std::abs(psi[g.points(0)]) < 1e-12);
    }
    CHECK_THROWS_AS(box_eigenstates(g, 64, hbar), std::invalid_argument);
}

TEST_CASE("classical limit: coherent-state deviation shrinks linearly in hbar") {
    // pendulum well (anharmonic): the packet-center deviation from the
    // classical trajectory scales with hbar through the packet width
    auto g = make_uniform_grid(-pi, pi, 512, Boundary::periodic);
    auto H = make_pendulum_hamiltonian();
    const double T = 3.0;
    const int steps = 3000;

    PhasePoint cl{{1.2, 0}, {0, 0}};
    for (int i = 0; i < 20000; ++i) cl = step_characteristics(H, cl, T / 20000);

    std::vector<double> devs;
    for (double hbar : {0.2, 0.1, 0.05}) {
        auto psi = WaveFunction::gaussian(g, hbar, {1.2, 0}, {0, 0}, std::sqrt(hbar / 2));
        SchrodingerPropagator u(H, g, hbar, T / steps);
        for (int n = 0; n < steps; ++n) u.apply(psi);
        auto xop = build_observable({{0, sample_scalar(g, [](double x) { return x; }), 0}}, g, hbar);
        devs.push_back(std::abs(expectation(psi, xop).real() - cl.x[0]));
    }
    CHECK(devs[1] < devs[0]);
    CHECK(devs[2] < devs[1]);
    const double order = std::log2(devs[0] / devs[2]) / 2;
    CHECK(order >= 0.9);
}

TEST_CASE("density matrices admit signed spectra only behind the flag") {
    auto g = line(48);
    auto a = DensityMatrix::pure(WaveFunction::gaussian(g, 1.0, {0.5, 0}, {0, 0}, 0.6));
    auto b = DensityMatrix::pure(WaveFunction::gaussian(g, 1.0, {-0.5, 0}, {0, 0}, 0.6));
    // an indefinite (signed) combination with unit trace
    Matrix m = 1.5 * a.matrix() - 0.5 * b.matrix();
    DensityMatrix signed_rho(g, m, 1.0, true);
    CHECK(signed_rho.allow_signed());
    CHECK(signed_rho.min_eigenvalue() < -1e-6);
    CHECK(std::abs(signed_rho.trace_real() - 1.0) < 1e-10);
    signed_rho.check_valid(); // hermitian, unit trace: representationally fine
    // ordinary states have nonnegative spectra
    CHECK(a.min_eigenvalue() > -1e-12);
}
