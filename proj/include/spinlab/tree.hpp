#pragma once

// Belief-propagation recursion on the infinite d-regular tree: message maps,
// fixed points of the one-step and two-step recursions, uniqueness thresholds,
// and the root marginals the two extremal boundary conditions induce.
//
// Messages are points of the 2-simplex stored by their + mass. Hard-core work
// is done in the vacancy coordinate q = 1 - p_plus where the depth recursion
// is F(q) = 1/(1 + lambda q^(d-1)); Ising work is done in the log-odds
// coordinate t = log(p/(1-p)) where F(t) = 2B + (d-1) log((e^t + th)/(th e^t + 1)),
// th = exp(-2 beta). Both maps are evaluated in numerically stable forms.

#include <optional>
#include <vector>

#include "spinlab/two_spin.hpp"

namespace spinlab {

struct Message {
    double p_plus = 0.5;

    double q() const { return 1.0 - p_plus; }
    double t() const;                  // log odds, clamped to +-700
    static Message from_q(double q) { return Message{1.0 - q}; }
    static Message from_t(double t);   // inverse logit
};

struct FixedPoints {
    Message star;   // fixed point of F itself (middle one for ferro Ising)
    Message plus;   // extreme fixed point of F(F(.)): max q for hard-core,
                    // max t for Ising
    Message minus;  // its image under F (the other extreme)
    bool unique = false;
    double gprime_at_star = 0.0; // derivative of F(F(.)) at star
    bool near_critical = false;  // within 1e-8 of the model's threshold
};

// One BP step at a degree-d vertex: combine the d-1 incoming messages through
// psi and reweight by psi_bar. Throws invalid_input for degenerate models or
// when incoming.size() != d-1.
Message bp_step(const CanonicalModel& model, const std::vector<Message>& incoming);

// Scalar recursions (exposed for tests and derivative work).
double hardcore_step_q(double lambda, int d, double q);
double ising_step_t(double beta, double field, int d, double t);
double hardcore_step_dq(double lambda, int d, double q);   // dF/dq
double ising_step_dt(double beta, int d, double t);        // dF/dt (field-free)

FixedPoints find_fixed_points(const CanonicalModel& model);

// Uniqueness threshold of the hard-core model: (d-1)^(d-1)/(d-2)^d.
double lambda_c(int d);

// The unique beta < 0 where the two-step recursion's derivative at the fixed
// point reaches 1, located by bisection in beta. At B = 0 this equals
// -log(d/(d-2))/2.
double beta_c_af(double field, int d);

// Ferromagnetic threshold in the field: smallest B >= 0 at which the lower
// pair of fixed points merges, by bisection on the fixed-point count. Empty
// when F is a contraction at B=0 (then the fixed point is unique for all B).
std::optional<double> b_c_ferro(double beta, int d);

struct RootMarginals {
    double mu_plus_occ = 0;  // root + probability under the maximizing boundary
    double mu_minus_occ = 0; // and under the minimizing one
    double magnetization_gap = 0; // mu_plus_occ - mu_minus_occ
};

// Degree-d root update fed with d copies of each extreme message.
RootMarginals root_marginals(const CanonicalModel& model, const FixedPoints& fp);

// Marginal at a degree-d root receiving d copies of m.
double root_plus_probability(const CanonicalModel& model, const Message& m, int degree);

} // namespace spinlab
