#pragma once

// Bethe free-energy functional on the d-regular tree, evaluated at BP fixed
// points: Phi = Phi_vx - Phi_e with
//   Phi_vx(h) = log sum_s psi_bar(s) * (sum_{s'} psi(s,s') h(s'))^d
//   Phi_e     = (d/2) log z(h (x)_psi h')
//   z(h (x)_psi h') = sum_{s,s'} h(s) psi(s,s') h'(s').
// Anti-ferromagnetic models maximize at the alternating two-step pair (the
// average of the two root colorings); ferromagnetic Ising at the fixed point
// matching sign(B). Hard-core values additionally have closed forms in the
// vacancy coordinates, kept as an independent code path and cross-checked
// against the generic sums.

#include "spinlab/tree.hpp"
#include "spinlab/two_spin.hpp"

namespace spinlab {

enum class BetheMaximizer { star, alternating_pair, sign_of_field };

struct BetheResult {
    double phi = 0;     // value at the maximizer
    double phi_vx = 0;
    double phi_e = 0;
    double phi_star = 0; // value at the F fixed point, for comparison
    BetheMaximizer maximizer = BetheMaximizer::star;
    bool tie_at_zero_field = false; // ferro B=0: both extremes attain phi
};

BetheResult bethe_free_energy(const CanonicalModel& model, const FixedPoints& fp);

// Generic-sum evaluation at an explicit two-step pair (m, F(m)); used for the
// Ising path and as the cross-check for the hard-core closed forms.
double bethe_value_at_pair(const CanonicalModel& model, const Message& a, const Message& b);
double bethe_vertex_term(const CanonicalModel& model, const Message& incoming);
double pair_partition(const CanonicalModel& model, const Message& a, const Message& b);

struct PairConstants {
    double gamma = 0; // z(h+ (x) h+) * z(h- (x) h-)
    double theta = 0; // z(h+ (x) h-)^2
    double ratio = 1; // theta / gamma; > 1 exactly in the non-uniqueness regime
};

PairConstants pair_constants(const CanonicalModel& model, const FixedPoints& fp);

// The extreme messages ordered by + mass: first = larger p_plus.
std::pair<Message, Message> extreme_pair(const FixedPoints& fp);

struct LocalExpectation {
    double a_vx = 0; // <d/dB of the vertex energy at the root>
    double a_e = 0;  // (1/2) sum over edges of <d/dbeta of the edge energy>
};

// Expectations under the depth-one tree measure with d i.i.d. boundary
// messages h: the root conditional law nu^h(sigma) ~ psi_bar(sigma_o)
// prod_j psi(sigma_o, sigma_j) h(sigma_j). Ising: a_vx = <sigma_o>,
// a_e = (d/2) <sigma_o sigma_1>; hard-core: a_vx = P(occupied), a_e = 0.
LocalExpectation local_expectation(const CanonicalModel& model, const Message& h);

// a_vx averaged over the maximizing boundary (the pair for anti-ferro models,
// the sign(B) point for ferro); this is what dPhi/dB equals.
double field_derivative_observable(const CanonicalModel& model, const FixedPoints& fp);

} // namespace spinlab
