#pragma once

// Single-site heat-bath (Glauber) dynamics for canonical two-spin models.
// One sweep = n sequential site updates in vertex order; all randomness runs
// through the seed-stable Rng so trajectories are reproducible. Hard-core
// states are independent sets by construction and asserted in debug builds.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinlab/graph.hpp"
#include "spinlab/two_spin.hpp"

namespace spinlab {

enum class ChainInit { all_minus, phase_plus, phase_minus, random_state };

struct ChainConfig {
    std::uint64_t steps = 1000;    // recorded sweeps
    std::uint64_t burn_in = 100;   // discarded sweeps
    std::uint64_t seed = 1;
    ChainInit init = ChainInit::all_minus;
    int thin = 1;                  // record every thin-th sweep
    std::vector<int> watch;        // vertices whose marginals to estimate
};

struct ChainStats {
    std::uint64_t samples = 0;
    // (1/n) * Y(sigma) * sum_i tau_i sigma_i averaged over recorded sweeps
    // (0 when the graph has no coloring).
    double signed_magnetization = 0;
    double signed_magnetization_se = 0;
    double phase_plus_fraction = 0;
    std::vector<double> watch_p_plus;
    std::vector<double> watch_se;
    bool phase_flip_seen = false;
    std::string to_json(bool pretty = false) const;
};

ChainStats run_chain(const MultiGraph& g, const CanonicalModel& model,
                     const ChainConfig& cfg);

// Empirical distribution over all 2^n states (n <= 20), for stationarity
// tests: index bit v set = sigma_v = +.
std::vector<double> empirical_state_distribution(const MultiGraph& g,
                                                 const CanonicalModel& model,
                                                 const ChainConfig& cfg);

struct ConditionalWEstimate {
    // Per phase: joint frequency table over the gadget's distinct W vertices
    // (bit i = i-th W vertex is +), plus per-vertex occupation frequencies.
    std::vector<int> w_vertices;
    std::vector<double> joint_plus, joint_minus;
    std::vector<double> p_plus_given_plus, p_plus_given_minus;
    std::vector<double> se_given_plus, se_given_minus;
    std::uint64_t samples_plus = 0, samples_minus = 0;
    bool phase_flip_seen = false;
};

// Two chains initialized in opposite phase states; samples are binned by the
// phase observed at recording time, so metastability breaks are data, not
// bias. Used by the sampled certification path.
ConditionalWEstimate estimate_conditional_w(const Gadget& gadget,
                                            const CanonicalModel& model,
                                            const ChainConfig& cfg);

} // namespace spinlab
