#pragma once

// Euler-angle angular-momentum and spin operators on the sphere grid:
//
//   L1 = (hbar/i) (-sin phi d_theta - cot theta cos phi d_phi)
//   L2 = (hbar/i) ( cos phi d_theta - cot theta sin phi d_phi)
//   L3 = (hbar/i) d_phi
//   S1 = L1 + hbar s cos phi / sin theta          (d_chi -> i s)
//   S2 = L2 + hbar s sin phi / sin theta
//   S3 = L3
//   S+- = hbar e^{+-i phi} ( +-d_theta + i cot theta d_phi + s / sin theta )
//
// plus the Casimirs by double application, eigenvalue checks, the Pauli
// block reconstruction in the half-spin doublet, commutator tables and the
// rigid-rotor Hamiltonian expectation.

#include "phaselab/sphere.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace phaselab {

enum class SpinOpKind { L1, L2, L3, S1, S2, S3, Splus, Sminus, LL, SS };

inline const char* spin_op_name(SpinOpKind k) {
    switch (k) {
        case SpinOpKind::L1: return "L1";
        case SpinOpKind::L2: return "L2";
        case SpinOpKind::L3: return "L3";
        case SpinOpKind::S1: return "S1";
        case SpinOpKind::S2: return "S2";
        case SpinOpKind::S3: return "S3";
        case SpinOpKind::Splus: return "S+";
        case SpinOpKind::Sminus: return "S-";
        case SpinOpKind::LL: return "L.L";
        case SpinOpKind::SS: return "S.S";
    }
    return "?";
}

struct SpinOperator {
    SpinOpKind kind;
    double hbar = 1.0;
};

namespace detail {

inline bool needs_half_weight(SpinOpKind k) {
    switch (k) {
        case SpinOpKind::S1:
        case SpinOpKind::S2:
        case SpinOpKind::Splus:
        case SpinOpKind::Sminus:
        case SpinOpKind::SS: return true;
        default: return false;
    }
}

} // namespace detail

inline SpinField apply_angular_operator(const SpinOperator& op, const SpinField& f) {
    const SphericalGrid& g = f.grid();
    if (detail::needs_half_weight(op.kind) && f.two_s() != 1)
        throw std::invalid_argument(
            "apply_angular_operator: S-family operators act on weight-1/2 fields");
    const double hbar = op.hbar;
    const double s = f.spin_weight();
    const spin_cplx hov_i = hbar / spin_cplx(0, 1); // hbar / i

    if (op.kind == SpinOpKind::LL || op.kind == SpinOpKind::SS) {
        const bool spin = op.kind == SpinOpKind::SS;
        SpinOperator c1{spin ? SpinOpKind::S1 : SpinOpKind::L1, hbar};
        SpinOperator c2{spin ? SpinOpKind::S2 : SpinOpKind::L2, hbar};
        SpinOperator c3{spin ? SpinOpKind::S3 : SpinOpKind::L3, hbar};
        SpinField out(g, f.two_s(), f.hbar());
        for (const auto& c : {c1, c2, c3}) {
            SpinField once = apply_angular_operator(c, f);
            SpinField twice = apply_angular_operator(c, once);
            for (size_t i = 0; i < out.values().size(); ++i)
                out.values()[i] += twice.values()[i];
        }
        return out;
    }

    auto d = sphere_derivatives(f);
    SpinField out(g, f.two_s(), f.hbar());
    for (int i = 0; i < g.n_theta(); ++i) {
        const double th = g.theta(i);
        const double cot = std::cos(th) / std::sin(th);
        const double inv_sin = 1.0 / std::sin(th);
        for (int j = 0; j < g.n_phi(); ++j) {
            const double ph = g.phi(j);
            const spin_cplx dth = d.dtheta.at(i, j);
            const spin_cplx dph = d.dphi.at(i, j);
            const spin_cplx val = f.at(i, j);
            spin_cplx r;
            switch (op.kind) {
                case SpinOpKind::L1:
                    r = hov_i * (-std::sin(ph) * dth - cot * std::cos(ph) * dph);
                    break;
                case SpinOpKind::L2:
                    r = hov_i * (std::cos(ph) * dth - cot * std::sin(ph) * dph);
                    break;
                case SpinOpKind::L3:
                    r = hov_i * dph;
                    break;
                case SpinOpKind::S1:
                    r = hov_i * (-std::sin(ph) * dth - cot * std::cos(ph) * dph) +
                        hbar * s * std::cos(ph) * inv_sin * val;
                    break;
                case SpinOpKind::S2:
                    r = hov_i * (std::cos(ph) * dth - cot * std::sin(ph) * dph) +
                        hbar * s * std::sin(ph) * inv_sin * val;
                    break;
                case SpinOpKind::S3:
                    r = hov_i * dph;
                    break;
                case SpinOpKind::Splus:
                    r = hbar * std::exp(spin_cplx(0, ph)) *
                        (dth + spin_cplx(0, 1) * cot * dph + s * inv_sin * val);
                    break;
                case SpinOpKind::Sminus:
                    r = hbar * std::exp(spin_cplx(0, -ph)) *
                        (-dth + spin_cplx(0, 1) * cot * dph + s * inv_sin * val);
                    break;
                default:
                    r = 0;
            }
            out.at(i, j) = r;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Eigenvalue checks
// ---------------------------------------------------------------------------

struct SpinEigenCheck {
    double casimir = 0;          // <S.S> (or <L.L> on weight-0 fields)
    double z_component = 0;      // <S3>
    double casimir_residual = 0; // || Op state - <Op> state ||
    double z_residual = 0;
};

inline SpinEigenCheck spin_eigencheck(const SpinField& state) {
    const double hbar = state.hbar();
    const bool spin = state.two_s() == 1;
    SpinOperator casimir{spin ? SpinOpKind::SS : SpinOpKind::LL, hbar};
    SpinOperator z{spin ? SpinOpKind::S3 : SpinOpKind::L3, hbar};

    SpinEigenCheck out;
    SpinField cs = apply_angular_operator(casimir, state);
    out.casimir = sphere_inner(state, cs).real();
    SpinField zs = apply_angular_operator(z, state);
    out.z_component = sphere_inner(state, zs).real();

    SpinField rc = cs, rz = zs;
    for (size_t i = 0; i < rc.values().size(); ++i) {
        rc.values()[i] -= out.casimir * state.values()[i];
        rz.values()[i] -= out.z_component * state.values()[i];
    }
    out.casimir_residual = sphere_norm(rc);
    out.z_residual = sphere_norm(rz);
    return out;
}

// ---------------------------------------------------------------------------
// Pauli reconstruction
// ---------------------------------------------------------------------------

struct PauliBlocks {
    Eigen::Matrix2cd sigma1, sigma2, sigma3, sigma_plus, sigma_minus;
    double max_leakage = 0; // off-block component of S |+->, quadrature norm
};

/// (2/hbar) x the matrix of each S operator in the {|+>, |->} doublet.
/// Throws when the doublet leaks into higher multipoles beyond `leak_tol`.
inline PauliBlocks pauli_reconstruct(const SphericalGrid& g, double hbar = 1.0,
                                     double leak_tol = 1e-6) {
    std::vector<SpinField> basis{half_spin_plus(g, hbar), half_spin_minus(g, hbar)};
    PauliBlocks out;
    auto block = [&](SpinOpKind kind) {
        Eigen::Matrix2cd m;
        for (int b = 0; b < 2; ++b) {
            SpinField applied = apply_angular_operator({kind, hbar}, basis[static_cast<size_t>(b)]);
            for (int a = 0; a < 2; ++a)
                m(a, b) = sphere_inner(basis[static_cast<size_t>(a)], applied);
            // leakage: component of the image outside the doublet
            SpinField rem = applied;
            for (int a = 0; a < 2; ++a)
                for (size_t i = 0; i < rem.values().size(); ++i)
                    rem.values()[i] -= m(a, b) * basis[static_cast<size_t>(a)].values()[i];
            out.max_leakage = std::max(out.max_leakage, sphere_norm(rem));
        }
        return m;
    };
    out.sigma1 = (2.0 / hbar) * block(SpinOpKind::S1);
    out.sigma2 = (2.0 / hbar) * block(SpinOpKind::S2);
    out.sigma3 = (2.0 / hbar) * block(SpinOpKind::S3);
    out.sigma_plus = (2.0 / hbar) * block(SpinOpKind::Splus);
    out.sigma_minus = (2.0 / hbar) * block(SpinOpKind::Sminus);
    if (out.max_leakage > leak_tol)
        throw std::runtime_error("pauli_reconstruct: doublet leakage exceeds tolerance");
    return out;
}

// ---------------------------------------------------------------------------
// Commutator table
// ---------------------------------------------------------------------------

struct CommutatorEntry {
    std::string name;
    double residual = 0;
};

namespace detail {

/// su(2): [O_i, O_j] = i hbar eps_{ijk} O_k within either family.
inline bool su2_partner(SpinOpKind a, SpinOpKind b, SpinOpKind& c, double& sign) {
    auto idx = [](SpinOpKind k, bool& is_s) -> int {
        switch (k) {
            case SpinOpKind::L1: is_s = false; return 0;
            case SpinOpKind::L2: is_s = false; return 1;
            case SpinOpKind::L3: is_s = false; return 2;
            case SpinOpKind::S1: is_s = true; return 0;
            case SpinOpKind::S2: is_s = true; return 1;
            case SpinOpKind::S3: is_s = true; return 2;
            default: is_s = false; return -1;
        }
    };
    bool sa, sb;
    const int ia = idx(a, sa), ib = idx(b, sb);
    if (ia < 0 || ib < 0 || sa != sb || ia == ib) return false;
    const int ic = 3 - ia - ib;
    static const SpinOpKind lfam[3] = {SpinOpKind::L1, SpinOpKind::L2, SpinOpKind::L3};
    static const SpinOpKind sfam[3] = {SpinOpKind::S1, SpinOpKind::S2, SpinOpKind::S3};
    c = sa ? sfam[ic] : lfam[ic];
    // eps_{ia ib ic}
    sign = ((ib - ia + 3) % 3 == 1) ? 1.0 : -1.0;
    return true;
}

} // namespace detail

/// Residuals || [Op_i, Op_j] f - i hbar eps_{ijk} Op_k f || over the probe
/// fields for every same-family pair in `ops`; Casimir pairs (S.S or L.L
/// with a component) are checked against zero.
inline std::vector<CommutatorEntry> commutator_table(const std::vector<SpinOperator>& ops,
                                                     const std::vector<SpinField>& probes) {
    std::vector<CommutatorEntry> table;
    for (size_t i = 0; i < ops.size(); ++i)
        for (size_t j = i + 1; j < ops.size(); ++j) {
            SpinOpKind partner;
            double sign = 0;
            const bool su2 = detail::su2_partner(ops[i].kind, ops[j].kind, partner, sign);
            const bool casimir =
                (ops[i].kind == SpinOpKind::SS || ops[i].kind == SpinOpKind::LL ||
                 ops[j].kind == SpinOpKind::SS || ops[j].kind == SpinOpKind::LL);
            if (!su2 && !casimir) continue;
            const double hbar = ops[i].hbar;
            double worst = 0;
            for (const auto& f : probes) {
                SpinField ab = apply_angular_operator(ops[i], apply_angular_operator(ops[j], f));
                SpinField ba = apply_angular_operator(ops[j], apply_angular_operator(ops[i], f));
                for (size_t m = 0; m < ab.values().size(); ++m)
                    ab.values()[m] -= ba.values()[m];
                if (su2) {
                    SpinField rhs = apply_angular_operator({partner, hbar}, f);
                    const spin_cplx factor = spin_cplx(0, -sign * hbar); // minus i hbar eps
                    for (size_t m = 0; m < ab.values().size(); ++m)
                        ab.values()[m] += factor * rhs.values()[m];
                }
                worst = std::max(worst, sphere_norm(ab));
            }
            table.push_back({std::string("[") + spin_op_name(ops[i].kind) + "," +
                                 spin_op_name(ops[j].kind) + "]",
                             worst});
        }
    return table;
}

// ---------------------------------------------------------------------------
// Rigid rotor
// ---------------------------------------------------------------------------

/// < I^{-1} S.S + 1/2 (S.B + B.S) > on the given state.
inline double rotor_hamiltonian_expectation(const std::array<double, 3>& B, double inertia,
                                            const SpinField& state) {
    if (!(inertia > 0)) throw std::invalid_argument("rotor: inertia must be positive");
    const double hbar = state.hbar();
    double val =
        sphere_inner(state, apply_angular_operator({SpinOpKind::SS, hbar}, state)).real() /
        inertia;
    const SpinOpKind comps[3] = {SpinOpKind::S1, SpinOpKind::S2, SpinOpKind::S3};
    for (int k = 0; k < 3; ++k) {
        if (B[static_cast<size_t>(k)] == 0) continue;
        val += B[static_cast<size_t>(k)] *
               sphere_inner(state, apply_angular_operator({comps[k], hbar}, state)).real();
    }
    return val;
}

/// Larmor evolution of the doublet amplitudes under the 2x2 rotor block:
/// returns <S3>(t) for c(t) = exp(-i H2 t / hbar) c0.
inline double rotor_s3_evolution(const PauliBlocks& pb, const std::array<double, 3>& B,
                                 double inertia, const Eigen::Vector2cd& c0, double hbar,
                                 double t) {
    Eigen::Matrix2cd h2 = (0.75 * hbar * hbar / inertia) * Eigen::Matrix2cd::Identity();
    h2 += 0.5 * hbar * (B[0] * pb.sigma1 + B[1] * pb.sigma2 + B[2] * pb.sigma3);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h2);
    Eigen::Vector2cd phases;
    for (int i = 0; i < 2; ++i)
        phases[i] = std::exp(spin_cplx(0, -es.eigenvalues()[i] * t / hbar));
    Eigen::Matrix2cd u = es.eigenvectors() * phases.asDiagonal() *
                         es.eigenvectors().adjoint();
    Eigen::Vector2cd c = u * c0;
    Eigen::Matrix2cd s3 = 0.5 * hbar * pb.sigma3;
    return (c.adjoint() * s3 * c)(0).real();
}

} // namespace phaselab
