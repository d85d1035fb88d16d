#pragma once

// Partition-function-to-MAX-CUT reduction: certify gadgets against the tree
// product law, search over seeds, and convert the partition ratio of the
// wired product graph against its disjoint baseline into rigorous cut bounds
//   lower = [logZ(HG) - logZ(hat) - 2k|E| log Gamma - m log(1+eps)] / (2k log(Theta/Gamma))
//   upper = same with - m log((1-eps)/2),
// which inverts the sandwich
//   Gamma^{2k|E|} (Theta/Gamma)^{2k MAXCUT} ((1-eps)/2)^m <= Z(HG)/Z(hat)
//     <= Gamma^{2k|E|} (Theta/Gamma)^{2k MAXCUT} (1+eps)^m.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinlab/bethe.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/graph.hpp"
#include "spinlab/sampler.hpp"
#include "spinlab/two_spin.hpp"

namespace spinlab {

enum class CertifyMethod { exact, sampled };
enum class CertifyStatus { passed, failed, indeterminate };

struct CertifiedGadget {
    Gadget gadget;
    double epsilon = 1;        // max of the phase-balance and ratio deviations
    double phase_balance = 0;  // nu(Y = +)
    double max_product_ratio = 1; // per-vertex conditional marginal over the
    double min_product_ratio = 1; // tree product factor, extremes over W
    bool degenerate_ratio = false; // Theta == Gamma (uniqueness regime)
    CertifyMethod method = CertifyMethod::exact;
    CertifyStatus status = CertifyStatus::failed;
    std::string to_json(bool pretty = false) const;
};

// Measure phase balance and the W-marginal-to-product deviations exactly
// (enumeration) or by chains when the gadget exceeds the exact caps. The
// sampled path returns indeterminate when the confidence interval straddles
// target_eps.
CertifiedGadget certify_gadget(const Gadget& gadget, const CanonicalModel& model,
                               double target_eps,
                               const ExactOptions& opts = {},
                               const ChainConfig& chain = {});

struct GadgetSearchResult {
    CertifiedGadget certified;
    int attempts = 0;
    std::vector<std::uint64_t> seeds_tried;
};

// Derive per-attempt seeds from the master seed, build + certify until one
// passes target_eps; search_failure carries the best candidate's epsilon.
GadgetSearchResult search_gadget(int n, int d, int k, const CanonicalModel& model,
                                 double target_eps, int max_attempts,
                                 std::uint64_t seed, const ExactOptions& opts = {});

struct CutBoundInputs {
    double log_z_hg = 0;
    double log_z_hat = 0;
    double gamma = 0;
    double theta = 0;
    double epsilon = 0;
    int k = 0;
    int m = 0;       // |V(H)|
    int edges_h = 0; // |E(H)|
};

struct CutBounds {
    double lower = 0;
    double upper = 0;
    std::optional<int> exact; // brute-force MAX-CUT when within capacity
    CutBoundInputs inputs;
    std::string to_json(bool pretty = false) const;
};

// Requires theta > gamma (throws search_failure: the gadget is useless in the
// uniqueness regime) and 0 <= eps < 1 (throws invalid_input).
CutBounds cut_bounds(const CutBoundInputs& in);

// Exact MAX-CUT by Gray-code scan over 2^(n-1) sides; |V| <= 30.
int maxcut_bruteforce(const MultiGraph& g, int threads = 0);

struct ReductionResult {
    CutBounds bounds;
    CertifiedGadget certificate;
    ProductGraph product;
    double log_z_gadget = 0;
    std::vector<std::uint64_t> seeds;
    int attempts = 0;
    std::string to_json(bool pretty = false) const;
};

// End-to-end pipeline: search a certified gadget (built with 3k deletions),
// wire the copies over H, compute both exact partition values, and emit
// bounds. When |V(H)| is small enough the exact MAX-CUT is attached and the
// sandwich containment lower <= MAXCUT <= upper is asserted.
ReductionResult run_reduction(const MultiGraph& h, const CanonicalModel& model,
                              int n, int k, double target_eps, std::uint64_t seed,
                              const ExactOptions& opts = {});

} // namespace spinlab
