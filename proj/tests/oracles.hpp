#pragma once

// Independent reference implementations used by the tests: a linear-space
// brute-force partition sum and small random-instance generators. These stay
// deliberately naive (direct products over all 2^n states) so they share no
// code path with the library engines they check.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "spinlab/graph.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/two_spin.hpp"

namespace oracle {

inline double state_weight(const spinlab::MultiGraph& g, const spinlab::CanonicalModel& m,
                           std::uint32_t mask) {
    using spinlab::Spin;
    double w = 1.0;
    for (int v = 0; v < g.n; ++v) {
        w *= m.vertex_weight((mask >> v) & 1u ? Spin::plus : Spin::minus);
    }
    for (const auto& [u, v] : g.edges) {
        w *= m.edge_weight((mask >> u) & 1u ? Spin::plus : Spin::minus,
                           (mask >> v) & 1u ? Spin::plus : Spin::minus);
    }
    return w;
}

inline std::vector<double> state_weights(const spinlab::MultiGraph& g,
                                         const spinlab::CanonicalModel& m) {
    std::vector<double> w(std::size_t{1} << g.n);
    for (std::uint32_t s = 0; s < w.size(); ++s) w[s] = state_weight(g, m, s);
    return w;
}

inline double log_z(const spinlab::MultiGraph& g, const spinlab::CanonicalModel& m) {
    double z = 0.0;
    for (std::uint32_t s = 0; s < (1u << g.n); ++s) z += state_weight(g, m, s);
    return std::log(z);
}

// Phase of a state: sign of sum_v tau_v sigma_v, zero counted as +.
inline int state_phase(const spinlab::MultiGraph& g, std::uint32_t mask) {
    int dot = 0;
    const auto& tau = *g.coloring;
    for (int v = 0; v < g.n; ++v) dot += tau[v] * (((mask >> v) & 1u) ? 1 : -1);
    return dot >= 0 ? +1 : -1;
}

inline std::pair<double, double> phase_split(const spinlab::MultiGraph& g,
                                             const spinlab::CanonicalModel& m) {
    double zp = 0.0, zm = 0.0;
    for (std::uint32_t s = 0; s < (1u << g.n); ++s) {
        (state_phase(g, s) > 0 ? zp : zm) += state_weight(g, m, s);
    }
    return {std::log(zp), std::log(zm)};
}

inline spinlab::MultiGraph random_graph(spinlab::Rng& rng, int max_n, bool allow_loops = true,
                                        bool colored = false) {
    spinlab::MultiGraph g;
    g.n = 1 + static_cast<int>(rng.below(max_n));
    const int m = static_cast<int>(rng.below(2 * g.n + 1));
    for (int e = 0; e < m; ++e) {
        int u = static_cast<int>(rng.below(g.n));
        int v = static_cast<int>(rng.below(g.n));
        if (!allow_loops && u == v) continue;
        g.edges.emplace_back(u, v);
    }
    if (colored) {
        std::vector<int8_t> tau(g.n);
        for (auto& t : tau) t = rng.below(2) ? int8_t{1} : int8_t{-1};
        g.coloring = std::move(tau);
    }
    return g;
}

inline double unit_range(spinlab::Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * rng.unit();
}

// Random canonical model spanning all four kinds (degenerate ones rare).
inline spinlab::CanonicalModel random_model(spinlab::Rng& rng) {
    const int d = 3 + static_cast<int>(rng.below(3));
    const auto pick = rng.below(8);
    if (pick < 3) return spinlab::hardcore_model(unit_range(rng, 0.05, 6.0), d);
    if (pick < 6) {
        return spinlab::ising_model(unit_range(rng, -1.2, 1.2), unit_range(rng, -1.0, 1.0), d);
    }
    spinlab::TwoSpinSpec spec;
    if (pick == 6) {
        spec.psi = {{{1.0, 0.0}, {0.0, unit_range(rng, 0.2, 2.0)}}};
    } else {
        spec.psi = {{{0.0, 1.0}, {1.0, 0.0}}};
    }
    return spinlab::classify(spec, d);
}

}  // namespace oracle
