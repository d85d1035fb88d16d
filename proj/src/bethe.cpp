#include "spinlab/bethe.hpp"

#include <cmath>
#include <limits>

#include "spinlab/errors.hpp"

namespace spinlab {

namespace {

// Sum over the neighbor spin through one edge factor.
double edge_fold(const CanonicalModel& model, Spin at, const Message& m) {
    return model.edge_weight(at, Spin::minus) * (1.0 - m.p_plus) +
           model.edge_weight(at, Spin::plus) * m.p_plus;
}

bool antiferro_like(const CanonicalModel& model) {
    return model.kind == ModelKind::hard_core ||
           (model.kind == ModelKind::ising && model.beta < 0);
}

void reject_degenerate(const CanonicalModel& model, const char* what) {
    if (model.degenerate()) {
        throw invalid_input(std::string(what) +
                            " is defined for hard-core and Ising models only");
    }
}

} // namespace

double bethe_vertex_term(const CanonicalModel& model, const Message& incoming) {
    reject_degenerate(model, "bethe vertex term");
    double total = 0.0;
    bool first = true;
    for (Spin s : {Spin::minus, Spin::plus}) {
        const double f = edge_fold(model, s, incoming);
        if (!(f > 0)) continue; // hard constraint kills this root spin
        const double a = std::log(model.vertex_weight(s)) +
                         model.d * checked_log(f, "bethe vertex fold");
        if (first) {
            total = a;
            first = false;
        } else {
            const double m = std::max(total, a);
            total = m + std::log1p(std::exp(std::min(total, a) - m));
        }
    }
    if (first) throw invalid_input("bethe vertex term: all root spins excluded");
    return total;
}

double pair_partition(const CanonicalModel& model, const Message& a, const Message& b) {
    reject_degenerate(model, "pair partition");
    double z = 0.0;
    for (Spin s : {Spin::minus, Spin::plus}) {
        const double ha = (s == Spin::plus) ? a.p_plus : 1.0 - a.p_plus;
        z += ha * edge_fold(model, s, b);
    }
    return z;
}

double bethe_value_at_pair(const CanonicalModel& model, const Message& a, const Message& b) {
    const double vx = 0.5 * (bethe_vertex_term(model, a) + bethe_vertex_term(model, b));
    const double e =
        0.5 * model.d * checked_log(pair_partition(model, a, b), "bethe edge term");
    return vx - e;
}

BetheResult bethe_free_energy(const CanonicalModel& model, const FixedPoints& fp) {
    reject_degenerate(model, "bethe free energy");
    BetheResult out;
    out.phi_star = bethe_value_at_pair(model, fp.star, fp.star);

    Message a = fp.star, b = fp.star;
    if (fp.unique) {
        out.maximizer = BetheMaximizer::star;
    } else if (antiferro_like(model)) {
        // The alternating pair assigns one extreme to each tree coloring;
        // phi averages the two root classes.
        out.maximizer = BetheMaximizer::alternating_pair;
        a = fp.plus;
        b = fp.minus;
    } else {
        out.maximizer = BetheMaximizer::sign_of_field;
        if (model.field > 0) {
            a = b = fp.plus;
        } else if (model.field < 0) {
            a = b = fp.minus;
        } else {
            a = b = fp.plus;
            out.tie_at_zero_field = true;
        }
    }

    out.phi_vx = 0.5 * (bethe_vertex_term(model, a) + bethe_vertex_term(model, b));
    out.phi_e = 0.5 * model.d * checked_log(pair_partition(model, a, b), "bethe edge term");
    out.phi = out.phi_vx - out.phi_e;
    return out;
}

std::pair<Message, Message> extreme_pair(const FixedPoints& fp) {
    if (fp.plus.p_plus >= fp.minus.p_plus) return {fp.plus, fp.minus};
    return {fp.minus, fp.plus};
}

PairConstants pair_constants(const CanonicalModel& model, const FixedPoints& fp) {
    reject_degenerate(model, "pair constants");
    const auto [hi, lo] = extreme_pair(fp);
    PairConstants pc;
    pc.gamma = pair_partition(model, hi, hi) * pair_partition(model, lo, lo);
    pc.theta = pair_partition(model, hi, lo);
    pc.theta *= pc.theta;
    pc.ratio = pc.theta / pc.gamma;
    return pc;
}

LocalExpectation local_expectation(const CanonicalModel& model, const Message& h) {
    reject_degenerate(model, "local expectation");
    const int d = model.d;
    double w[2], f[2];
    for (int s = 0; s < 2; ++s) {
        const Spin so = (s == 0) ? Spin::minus : Spin::plus;
        f[s] = edge_fold(model, so, h);
        w[s] = model.vertex_weight(so) * std::pow(f[s], d);
    }
    const double z = w[0] + w[1];
    if (!(z > 0)) throw invalid_input("local expectation: empty tree measure");

    LocalExpectation le;
    if (model.kind == ModelKind::hard_core) {
        le.a_vx = w[1] / z; // occupation probability of the root
        le.a_e = 0.0;
    } else {
        le.a_vx = (w[1] - w[0]) / z;
        // <sigma_o sigma_1>: expose one child edge, keep d-1 folded.
        double cor = 0.0;
        for (int s = 0; s < 2; ++s) {
            const Spin so = (s == 0) ? Spin::minus : Spin::plus;
            const double base =
                model.vertex_weight(so) * std::pow(f[s], d - 1);
            const double child =
                model.edge_weight(so, Spin::plus) * h.p_plus -
                model.edge_weight(so, Spin::minus) * (1.0 - h.p_plus);
            cor += (s == 0 ? -1.0 : 1.0) * base * child;
        }
        le.a_e = 0.5 * d * cor / z;
    }
    return le;
}

double field_derivative_observable(const CanonicalModel& model, const FixedPoints& fp) {
    reject_degenerate(model, "field derivative observable");
    if (fp.unique) return local_expectation(model, fp.star).a_vx;
    if (antiferro_like(model)) {
        return 0.5 * (local_expectation(model, fp.plus).a_vx +
                      local_expectation(model, fp.minus).a_vx);
    }
    const Message& h = model.field < 0 ? fp.minus : fp.plus;
    return local_expectation(model, h).a_vx;
}

} // namespace spinlab
