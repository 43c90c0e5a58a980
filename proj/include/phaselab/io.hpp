#pragma once

// State I/O in a little-endian binary layout and deterministic CSV writing.
//
// Field files:
//   u32 dim
//   per axis: u32 points, f64 lo, f64 hi
//   u8 boundary (0 periodic, 1 box-doubled)
//   f64 hbar
//   payload: storage nodes in row-major order, interleaved re/im f64 pairs
//
// Sphere exports use the same shape with points = (n_theta, n_phi) and
// extents ([0, pi], [0, 2 pi)); they are write-only here.
//
// CSV values are printed with %.17g so reruns are byte-identical.

#include "phaselab/quantum.hpp"
#include "phaselab/sphere.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace phaselab::io {

namespace detail {

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("state file truncated");
    return v;
}

} // namespace detail

inline void write_state(const std::string& path, const WaveFunction& psi) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    const ConfigGrid& g = psi.grid();
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
    for (int a = 0; a < g.dim(); ++a) {
        detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.points(a)));
        detail::put<double>(os, g.lo(a));
        detail::put<double>(os, g.hi(a));
    }
    detail::put<std::uint8_t>(os, g.is_doubled() ? 1 : 0);
    detail::put<double>(os, psi.hbar());
    for (std::int64_t i = 0; i < psi.size(); ++i) {
        detail::put<double>(os, psi[i].real());
        detail::put<double>(os, psi[i].imag());
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline WaveFunction read_state(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    const auto dim = detail::get<std::uint32_t>(is);
    if (dim < 1 || dim > 2) throw std::runtime_error("state file: bad dimension");
    std::array<int, kMaxDim> pts{1, 1};
    std::array<double, kMaxDim> lo{0, 0}, hi{1, 1};
    for (std::uint32_t a = 0; a < dim; ++a) {
        pts[a] = static_cast<int>(detail::get<std::uint32_t>(is));
        lo[a] = detail::get<double>(is);
        hi[a] = detail::get<double>(is);
    }
    const auto boundary = detail::get<std::uint8_t>(is);
    const double hbar = detail::get<double>(is);
    ConfigGrid g(static_cast<int>(dim), lo, hi, pts,
                 boundary ? Boundary::box_doubled : Boundary::periodic);
    ComplexField f(g);
    for (std::int64_t i = 0; i < f.size(); ++i) {
        const double re = detail::get<double>(is);
        const double im = detail::get<double>(is);
        f[i] = cplx(re, im);
    }
    return WaveFunction(std::move(f), hbar);
}

inline void write_spin_field(const std::string& path, const SpinField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    const SphericalGrid& g = f.grid();
    detail::put<std::uint32_t>(os, 2);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n_theta()));
    detail::put<double>(os, 0.0);
    detail::put<double>(os, std::numbers::pi);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n_phi()));
    detail::put<double>(os, 0.0);
    detail::put<double>(os, 2 * std::numbers::pi);
    detail::put<std::uint8_t>(os, 0);
    detail::put<double>(os, f.hbar());
    for (const auto& v : f.values()) {
        detail::put<double>(os, v.real());
        detail::put<double>(os, v.imag());
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

/// Deterministic CSV writer: fixed column order, %.17g floats, '\n' rows.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns) : os_(path) {
        if (!os_) throw std::runtime_error("cannot open for writing: " + path);
        for (size_t i = 0; i < columns.size(); ++i)
            os_ << (i ? "," : "") << columns[i];
        os_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << "\n";
    }

    static std::string num(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

private:
    std::ofstream os_;
};

} // namespace phaselab::io
