#include <catch2/catch_amalgamated.hpp>

#include "phaselab/field.hpp"
#include "phaselab/grid.hpp"

#include <cmath>
#include <numbers>

using namespace phaselab;
constexpr double pi = std::numbers::pi;

TEST_CASE("uniform grid construction") {
    auto g = make_uniform_grid(0.0, 2 * pi, 64, Boundary::periodic);
    CHECK(g.spacing(0) == Catch::Approx(2 * pi / 64).epsilon(0));
    CHECK(g.points(0) == 64);
    CHECK(g.storage_points(0) == 64);

    auto gb = make_uniform_grid(0.0, pi, 64, Boundary::box_doubled);
    CHECK(gb.storage_length(0) == Catch::Approx(2 * pi).epsilon(0));
    CHECK(gb.storage_points(0) == 128);

    auto g2 = make_uniform_grid(2, {0, 0}, {2 * pi, 2 * pi}, {32, 32}, Boundary::periodic);
    CHECK(g2.node_count() == 1024);
}

TEST_CASE("grid construction rejects bad input") {
    CHECK_THROWS_AS(make_uniform_grid(0.0, 2 * pi, 4, Boundary::periodic), std::invalid_argument);
    CHECK_THROWS_AS(make_uniform_grid(0.0, -1.0, 64, Boundary::periodic), std::invalid_argument);
    CHECK_THROWS_AS(ConfigGrid(3, {0, 0}, {1, 1}, {16, 16}, Boundary::periodic),
                    std::invalid_argument);
}

TEST_CASE("grid construction is bit deterministic") {
    auto a = make_uniform_grid(-3.7, 5.1, 128, Boundary::periodic);
    auto b = make_uniform_grid(-3.7, 5.1, 128, Boundary::periodic);
    REQUIRE(a == b);
    for (int i = 0; i < 128; ++i) {
        // bit-identical, not approximately equal
        CHECK(std::memcmp(&a, &b, 0) == 0);
        double na = a.node(0, i), nb = b.node(0, i);
        CHECK(na == nb);
    }
}

TEST_CASE("field value count matches grid") {
    auto g = make_uniform_grid(0.0, 1.0, 16, Boundary::periodic);
    ScalarField f(g, 1.0);
    CHECK(f.size() == 16);
    CHECK_THROWS_AS(ScalarField(g, std::vector<double>(15)), std::invalid_argument);
}

TEST_CASE("odd extension vanishes at both walls") {
    auto g = make_uniform_grid(0.0, pi, 32, Boundary::box_doubled);
    ScalarField f(g, 0.0, {Extension::odd, Extension::none});
    for (int i = 0; i <= 32; ++i) f.at(i) = std::sin(2.0 * g.node(0, i));
    f.apply_extension();
    CHECK(f.at(0) == 0.0);
    CHECK(f.at(32) == 0.0);
    // mirror half carries the sign-flipped values
    CHECK(f.at(64 - 5) == Catch::Approx(-f.at(5)).margin(1e-15));
}

TEST_CASE("even extension mirrors values") {
    auto g = make_uniform_grid(0.0, pi, 32, Boundary::box_doubled);
    ScalarField f(g, 0.0, {Extension::even, Extension::none});
    for (int i = 0; i <= 32; ++i) f.at(i) = std::cos(g.node(0, i));
    f.apply_extension();
    CHECK(f.at(64 - 7) == Catch::Approx(f.at(7)).margin(1e-15));
}

TEST_CASE("synchronicity export has unit modulus") {
    auto g = make_uniform_grid(0.0, 2 * pi, 64, Boundary::periodic);
    auto phase = sample_scalar(g, [](double x) { return 3 * x + 0.4 * std::sin(x) + 1.1; });
    SynchronicityField eta(phase, 1.0);
    auto vals = eta.complex_values();
    for (std::int64_t i = 0; i < vals.size(); ++i)
        CHECK(std::abs(vals[i]) == Catch::Approx(1.0).margin(1e-14));
    CHECK_THROWS_AS(SynchronicityField(phase, -1.0), std::invalid_argument);
}
