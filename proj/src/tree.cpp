#include "spinlab/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinlab/errors.hpp"

namespace spinlab {

namespace {

constexpr double kTClamp = 700.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_t(double t) { return std::clamp(t, -kTClamp, kTClamp); }

double logaddexp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Converge the increasing map G from a starting point; the iterates are
// monotone from endpoint starts, so plain iteration is safe if slow near
// tangencies.
template <typename Map>
double iterate_map(Map&& G, double x, int iters, double tol) {
    for (int i = 0; i < iters; ++i) {
        const double nx = G(x);
        if (std::abs(nx - x) <= tol * std::max(1.0, std::abs(nx))) return nx;
        x = nx;
    }
    return x;
}

// Newton polish of a fixed point of G inside [lo, hi]; keeps the input when
// the step leaves the bracket or the derivative degenerates (tangency).
template <typename Map, typename Deriv>
double polish_fixed_point(Map&& G, Deriv&& Gp, double x, double lo, double hi) {
    for (int i = 0; i < 80; ++i) {
        const double g = G(x) - x;
        const double gp = Gp(x) - 1.0;
        if (std::abs(gp) < 1e-13) break;
        const double nx = x - g / gp;
        if (!(nx >= lo && nx <= hi)) break;
        const bool done = std::abs(nx - x) <= 1e-16 * std::max(1.0, std::abs(x));
        x = nx;
        if (done) break;
    }
    return x;
}

template <typename Fn>
double bisect_root(Fn&& f, double lo, double hi, int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((flo <= 0) == (fm <= 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Smallest field > 0 at which the lower fixed-point pair of the ferro map
// becomes tangent: F' is independent of B and even in t, so F'(t)=1 reduces
// to a quadratic in e^t; the negative root is where the merge happens, and
// the fixed-point equation then gives B.
std::optional<double> ferro_tangency_field(double beta, int d) {
    if ((d - 1) * std::tanh(beta) <= 1.0) return std::nullopt;
    const double a = std::exp(2.0 * beta);
    const double b = 1.0 + a * a - (d - 1) * (a * a - 1.0);
    const double disc = b * b - 4.0 * a * a;
    if (disc <= 0) return std::nullopt;
    // Roots multiply to 1; the one below 1 marks the lower-pair merge.
    const double u = (-b - std::sqrt(disc)) / (2.0 * a);
    if (!(u > 0)) return std::nullopt;
    const double t = std::log(u);
    const double shift =
        (d - 1) * (logaddexp(t, -2.0 * beta) - logaddexp(t - 2.0 * beta, 0.0));
    return 0.5 * (t - shift);
}

} // namespace

double Message::t() const {
    if (p_plus <= 0.0) return -kTClamp;
    if (p_plus >= 1.0) return kTClamp;
    return clamp_t(std::log(p_plus) - std::log1p(-p_plus));
}

Message Message::from_t(double t) { return Message{sigmoid(clamp_t(t))}; }

double hardcore_step_q(double lambda, int d, double q) {
    return 1.0 / (1.0 + lambda * std::pow(q, d - 1));
}

double hardcore_step_dq(double lambda, int d, double q) {
    const double f = hardcore_step_q(lambda, d, q);
    return -lambda * (d - 1) * std::pow(q, d - 2) * f * f;
}

double ising_step_t(double beta, double field, int d, double t) {
    t = clamp_t(t);
    return clamp_t(2.0 * field +
                   (d - 1) * (logaddexp(t, -2.0 * beta) -
                              logaddexp(t - 2.0 * beta, 0.0)));
}

double ising_step_dt(double beta, int d, double t) {
    return (d - 1) * (sigmoid(t + 2.0 * beta) - sigmoid(t - 2.0 * beta));
}

Message bp_step(const CanonicalModel& model, const std::vector<Message>& incoming) {
    if (model.degenerate()) {
        throw invalid_input("bp_step is defined for hard-core and Ising models only");
    }
    if (static_cast<int>(incoming.size()) != model.d - 1) {
        throw invalid_input("bp_step expects exactly d-1 incoming messages");
    }
    double logw[2];
    for (int s = 0; s < 2; ++s) {
        const Spin so = (s == 0) ? Spin::minus : Spin::plus;
        double acc = std::log(model.vertex_weight(so));
        for (const Message& m : incoming) {
            const double f = model.edge_weight(so, Spin::minus) * (1.0 - m.p_plus) +
                             model.edge_weight(so, Spin::plus) * m.p_plus;
            if (!(f > 0)) {
                acc = -kInf;
                break;
            }
            acc += std::log(f);
        }
        logw[s] = acc;
    }
    if (logw[1] == -kInf) return Message{0.0};
    if (logw[0] == -kInf) return Message{1.0};
    return Message{sigmoid(logw[1] - logw[0])};
}

FixedPoints find_fixed_points(const CanonicalModel& model) {
    if (model.degenerate()) {
        throw invalid_input("fixed points are defined for hard-core and Ising models only");
    }
    const int d = model.d;
    FixedPoints fp;

    if (model.kind == ModelKind::hard_core) {
        const double lam = model.lambda;
        auto F = [&](double q) { return hardcore_step_q(lam, d, q); };
        auto Fp = [&](double q) { return hardcore_step_dq(lam, d, q); };
        auto G = [&](double q) { return F(F(q)); };
        auto Gp = [&](double q) { return Fp(F(q)) * Fp(q); };

        const double qs = bisect_root([&](double q) { return q - F(q); }, 0.0, 1.0);
        double qhi = iterate_map(G, 1.0, 200000, 1e-16);
        double qlo = iterate_map(G, F(1.0), 200000, 1e-16);
        qhi = polish_fixed_point(G, Gp, qhi, 0.0, 1.0);
        qlo = polish_fixed_point(G, Gp, qlo, 0.0, 1.0);

        fp.star = Message::from_q(qs);
        fp.plus = Message::from_q(qhi);
        fp.minus = Message::from_q(qlo);
        fp.gprime_at_star = Fp(qs) * Fp(qs);
        fp.unique = std::abs(fp.plus.p_plus - fp.minus.p_plus) <= 1e-10;
        fp.near_critical = d >= 3 && std::abs(lam - lambda_c(d)) <= 1e-8;
    } else {
        const double beta = model.beta;
        const double field = model.field;
        auto F = [&](double t) { return ising_step_t(beta, field, d, t); };
        auto Fp = [&](double t) { return ising_step_dt(beta, d, t); };
        auto G = [&](double t) { return F(F(t)); };
        auto Gp = [&](double t) { return Fp(F(t)) * Fp(t); };

        double thi = iterate_map(G, kTClamp, 200000, 1e-16);
        double tlo = iterate_map(G, -kTClamp, 200000, 1e-16);
        thi = polish_fixed_point(G, Gp, thi, -kTClamp, kTClamp);
        tlo = polish_fixed_point(G, Gp, tlo, -kTClamp, kTClamp);

        double ts;
        if (beta > 0 && std::abs(thi - tlo) > 1e-9 * std::max(1.0, std::abs(thi))) {
            // Three fixed points of the increasing F: the middle one is the
            // only crossing of F(t)-t between the extremes.
            const double pad = 1e-7 * std::max(1.0, std::abs(thi) + std::abs(tlo));
            ts = bisect_root([&](double t) { return F(t) - t; }, tlo + pad, thi - pad);
        } else if (beta > 0) {
            ts = thi;
        } else {
            ts = bisect_root([&](double t) { return ising_step_t(beta, field, d, t) - t; },
                             -kTClamp - 1, kTClamp + 1);
        }

        fp.star = Message::from_t(ts);
        fp.plus = Message::from_t(thi);
        fp.minus = Message::from_t(tlo);
        fp.gprime_at_star = Fp(ts) * Fp(ts);
        fp.unique = std::abs(fp.plus.p_plus - fp.minus.p_plus) <= 1e-10;
        if (beta < 0) {
            fp.near_critical = std::abs(beta - beta_c_af(field, d)) <= 1e-8;
        } else if (field == 0.0) {
            fp.near_critical = std::abs(beta - std::atanh(1.0 / (d - 1))) <= 1e-8;
        } else {
            const auto bc = ferro_tangency_field(beta, d);
            fp.near_critical = bc && std::abs(std::abs(field) - *bc) <= 1e-8;
        }
    }

    if (fp.unique) {
        fp.plus = fp.star;
        fp.minus = fp.star;
    }
    return fp;
}

double lambda_c(int d) {
    if (d < 3) throw invalid_input("uniqueness threshold requires degree >= 3");
    return std::pow(d - 1, d - 1) / std::pow(d - 2, d);
}

double beta_c_af(double field, int d) {
    if (d < 3) throw invalid_input("uniqueness threshold requires degree >= 3");
    auto two_step_slope = [&](double beta) {
        // F is non-increasing for beta <= 0, so t - F(t) crosses zero once.
        const double ts =
            bisect_root([&](double t) { return t - ising_step_t(beta, field, d, t); },
                        -kTClamp - 1, kTClamp + 1);
        const double fp = ising_step_dt(beta, d, ts);
        return fp * fp;
    };
    double hi = 0.0;
    double lo = -1.0;
    while (two_step_slope(lo) < 1.0) {
        hi = lo;
        lo *= 2.0;
        if (lo < -128.0) {
            throw search_failure("no anti-ferromagnetic threshold found in beta > -128");
        }
    }
    return bisect_root([&](double beta) { return two_step_slope(beta) - 1.0; }, lo, hi);
}

std::optional<double> b_c_ferro(double beta, int d) {
    if (d < 3) throw invalid_input("uniqueness threshold requires degree >= 3");
    if (beta < 0) throw invalid_input("ferromagnetic threshold requires beta >= 0");
    if ((d - 1) * std::tanh(beta) <= 1.0) return std::nullopt;

    auto distinct = [&](double field) {
        auto G = [&](double t) {
            return ising_step_t(beta, field, d, ising_step_t(beta, field, d, t));
        };
        const double thi = iterate_map(G, kTClamp, 50000, 1e-14);
        const double tlo = iterate_map(G, -kTClamp, 50000, 1e-14);
        return std::abs(thi - tlo) > 1e-6 * std::max(1.0, std::abs(thi));
    };

    double lo = 0.0, hi = 1.0;
    while (distinct(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw search_failure("fixed-point merge not found below B = 1e6");
    }
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (distinct(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double root_plus_probability(const CanonicalModel& model, const Message& m, int degree) {
    if (model.degenerate()) {
        throw invalid_input("root marginals are defined for hard-core and Ising models only");
    }
    double logw[2];
    for (int s = 0; s < 2; ++s) {
        const Spin so = (s == 0) ? Spin::minus : Spin::plus;
        const double f = model.edge_weight(so, Spin::minus) * (1.0 - m.p_plus) +
                         model.edge_weight(so, Spin::plus) * m.p_plus;
        logw[s] = (f > 0) ? std::log(model.vertex_weight(so)) + degree * std::log(f)
                          : -kInf;
    }
    if (logw[1] == -kInf) return 0.0;
    if (logw[0] == -kInf) return 1.0;
    return sigmoid(logw[1] - logw[0]);
}

RootMarginals root_marginals(const CanonicalModel& model, const FixedPoints& fp) {
    RootMarginals rm;
    rm.mu_plus_occ = root_plus_probability(model, fp.plus, model.d);
    rm.mu_minus_occ = root_plus_probability(model, fp.minus, model.d);
    if (rm.mu_plus_occ < rm.mu_minus_occ) std::swap(rm.mu_plus_occ, rm.mu_minus_occ);
    rm.magnetization_gap = rm.mu_plus_occ - rm.mu_minus_occ;
    return rm;
}

} // namespace spinlab
