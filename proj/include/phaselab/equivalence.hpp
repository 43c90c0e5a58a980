#pragma once

// Three-route transport comparison: grid Liouville vs characteristics
// ensemble vs leaf transport, with pairwise L1 distances and observed
// convergence order under grid refinement.

#include "phaselab/foliation.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace phaselab {

struct EquivalenceOptions {
    double T = 2 * std::numbers::pi;
    int steps = 1200;
    int relabel_every = 60;       // leaf re-slice cadence (steps); 0 = never
    bool run_leaf = true;
    std::optional<std::function<PhaseSpaceDensity(const PhaseGrid&)>> reference;
};

struct EquivalenceReport {
    double l1_liouville_vs_characteristics = 0;
    double l1_liouville_vs_leaf = 0;
    double l1_characteristics_vs_leaf = 0;
    double l1_liouville_vs_reference = 0; // when an analytic reference is supplied
    double min_sigma = 1;
    int relabel_events = 0;
    bool caustic_hit = false;
    double caustic_time = 0;
    double mass_drift = 0; // Liouville route, |mass(T) - mass(0)|
};

/// Run the three schemes from the same initial density.
inline EquivalenceReport verify_classical_equivalence(const HamiltonianSpec& H,
                                                      const PhaseSpaceDensity& rho0,
                                                      const EquivalenceOptions& opt) {
    EquivalenceReport rep;
    if (opt.T == 0 || opt.steps <= 0) {
        // degenerate run: every method is the identity
        return rep;
    }
    const double mass0 = rho0.mass();
    PhaseSpaceDensity a = evolve_liouville(H, rho0, opt.T, opt.steps);
    rep.mass_drift = std::abs(a.mass() - mass0);
    PhaseSpaceDensity b = evolve_characteristics_ensemble(H, rho0, opt.T, opt.steps);
    rep.l1_liouville_vs_characteristics = l1_distance(a, b);

    if (opt.run_leaf) {
        try {
            LeafTransportResult c = evolve_leaf_transport(H, rho0, opt.T, opt.steps, opt.relabel_every);
            rep.l1_liouville_vs_leaf = l1_distance(a, c.rho);
            rep.l1_characteristics_vs_leaf = l1_distance(b, c.rho);
            rep.min_sigma = c.min_sigma;
            rep.relabel_events = c.relabel_events;
        } catch (const CausticError& e) {
            rep.caustic_hit = true;
            rep.caustic_time = e.time;
            rep.min_sigma = e.min_sigma;
        }
    }
    if (opt.reference) {
        PhaseSpaceDensity ref = (*opt.reference)(rho0.grid());
        rep.l1_liouville_vs_reference = l1_distance(a, ref);
    }
    return rep;
}

struct ConvergenceReport {
    std::vector<int> resolutions;
    std::vector<double> errors; // Liouville vs analytic reference
    std::vector<double> orders; // log2(e[i] / e[i+1])
};

/// Refinement study of the Liouville solver against an analytic transport
/// oracle; the initial density and the reference are sampled per grid.
inline ConvergenceReport
liouville_convergence(const HamiltonianSpec& H,
                      const std::function<PhaseSpaceDensity(const PhaseGrid&)>& initial,
                      const std::function<PhaseSpaceDensity(const PhaseGrid&)>& reference,
                      const std::function<PhaseGrid(int)>& grid_of, const std::vector<int>& res,
                      double T, int steps) {
    ConvergenceReport rep;
    rep.resolutions = res;
    for (int n : res) {
        PhaseGrid g = grid_of(n);
        PhaseSpaceDensity rho0 = initial(g);
        PhaseSpaceDensity rhoT = evolve_liouville(H, rho0, T, steps);
        rep.errors.push_back(l1_distance(rhoT, reference(g)));
    }
    for (size_t i = 0; i + 1 < rep.errors.size(); ++i)
        rep.orders.push_back(std::log2(rep.errors[i] / rep.errors[i + 1]));
    return rep;
}

} // namespace phaselab
