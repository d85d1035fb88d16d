#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "spinlab/bethe.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/tree.hpp"
#include "spinlab/two_spin.hpp"

using namespace spinlab;

namespace {

// Hand evaluation of the functional at a two-step pair (a, b):
//   (Phi_vx(a->root) + Phi_vx(b->root))/2 - (d/2) log z(a (x) b)
// written out directly from the model weights, no library sums.
double hand_phi_pair(const CanonicalModel& m, double pa, double pb) {
    const int d = m.d;
    auto vx = [&](double p_in) {
        double total = 0.0;
        for (int s = 0; s < 2; ++s) {
            const Spin so = s ? Spin::plus : Spin::minus;
            const double inner = m.edge_weight(so, Spin::plus) * p_in +
                                 m.edge_weight(so, Spin::minus) * (1 - p_in);
            total += m.vertex_weight(so) * std::pow(inner, d);
        }
        return std::log(total);
    };
    double z = 0.0;
    for (int s = 0; s < 2; ++s) {
        for (int t = 0; t < 2; ++t) {
            z += (s ? pa : 1 - pa) * (t ? pb : 1 - pb) *
                 m.edge_weight(s ? Spin::plus : Spin::minus, t ? Spin::plus : Spin::minus);
        }
    }
    return 0.5 * (vx(pb) + vx(pa)) - 0.5 * d * std::log(z);
}

double bisect_hardcore_star(double lambda, int d) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (lambda * std::pow(mid, d - 1) * mid + mid - 1.0 < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("hard-core free energy in the uniqueness regime against the hand formula") {
    const auto m = hardcore_model(1.0, 3);
    const auto res = bethe_free_energy(m, find_fixed_points(m));
    CHECK(res.maximizer == BetheMaximizer::star);

    // Phi = log(1 + lambda q^3) - (3/2) log(1 - p^2) at the depth fixed point
    const double q = bisect_hardcore_star(1.0, 3);
    const double p = 1 - q;
    const double hand = std::log(1 + q * q * q) - 1.5 * std::log(1 - p * p);
    CHECK(res.phi == doctest::Approx(hand).epsilon(1e-12));
    CHECK(res.phi == doctest::Approx(0.435434282722676).epsilon(1e-9));
    CHECK(res.phi_vx == doctest::Approx(std::log(1 + q * q * q)).epsilon(1e-10));
    CHECK(res.phi_e == doctest::Approx(1.5 * std::log(1 - p * p)).epsilon(1e-10));
}

TEST_CASE("hard-core free energy at lambda=5 picks the alternating pair") {
    const auto m = hardcore_model(5.0, 3);
    const auto fp = find_fixed_points(m);
    const auto res = bethe_free_energy(m, fp);
    CHECK(res.maximizer == BetheMaximizer::alternating_pair);

    // exact two-step roots q^2 - q + 1/5 = 0
    const double r = std::sqrt(0.2);
    const double qp = (1 + r) / 2, qm = (1 - r) / 2;
    const double hand = hand_phi_pair(m, 1 - qp, 1 - qm);
    CHECK(res.phi == doctest::Approx(hand).epsilon(1e-11));
    CHECK(res.phi == doctest::Approx(0.916290731874155).epsilon(1e-9));
    CHECK(res.phi > res.phi_star);
}

TEST_CASE("the two extreme boundary conditions carry the same free energy") {
    Rng rng(808);
    int done = 0;
    while (done < 60) {
        CanonicalModel m;
        if (rng.below(2)) {
            m = hardcore_model(oracle::unit_range(rng, 4.5, 9.0), 3);
        } else {
            m = ising_model(oracle::unit_range(rng, -1.3, -0.7),
                            oracle::unit_range(rng, -0.2, 0.2), 3);
        }
        const auto fp = find_fixed_points(m);
        if (fp.unique || fp.near_critical) continue;
        ++done;
        const auto [hi, lo] = extreme_pair(fp);
        const double a = bethe_value_at_pair(m, hi, lo);
        const double b = bethe_value_at_pair(m, lo, hi);
        CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
}

TEST_CASE("pair constants at lambda=5 are exactly 0.44 and 0.64") {
    const auto m = hardcore_model(5.0, 3);
    const auto pc = pair_constants(m, find_fixed_points(m));
    CHECK(std::abs(pc.gamma - 0.44) <= 1e-12);
    CHECK(std::abs(pc.theta - 0.64) <= 1e-12);
    CHECK(pc.ratio == doctest::Approx(16.0 / 11.0).epsilon(1e-12));
}

TEST_CASE("pair constants collapse in the uniqueness regime") {
    const auto m = hardcore_model(1.0, 3);
    const auto pc = pair_constants(m, find_fixed_points(m));
    CHECK(pc.theta == doctest::Approx(pc.gamma).epsilon(1e-9));
    CHECK(pc.ratio == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ferromagnetic maximizer follows the sign of the field") {
    const auto up = ising_model(0.9, 0.04, 3);
    const auto res_up = bethe_free_energy(up, find_fixed_points(up));
    CHECK(res_up.maximizer == BetheMaximizer::sign_of_field);
    CHECK_FALSE(res_up.tie_at_zero_field);

    const auto tie = ising_model(0.9, 0.0, 3);
    const auto res_tie = bethe_free_energy(tie, find_fixed_points(tie));
    CHECK(res_tie.tie_at_zero_field);

    // at B = 0 the two pure boundary values agree by symmetry
    const auto fp = find_fixed_points(tie);
    const auto [hi, lo] = extreme_pair(fp);
    CHECK(bethe_value_at_pair(tie, hi, hi) ==
          doctest::Approx(bethe_value_at_pair(tie, lo, lo)).epsilon(1e-10));
}

TEST_CASE("local expectations at the lambda=5 pair average to 3/8") {
    const auto m = hardcore_model(5.0, 3);
    const auto fp = find_fixed_points(m);
    const auto [hi, lo] = extreme_pair(fp);
    const auto eh = local_expectation(m, hi);
    const auto el = local_expectation(m, lo);
    CHECK(eh.a_e == 0.0);
    CHECK(0.5 * (eh.a_vx + el.a_vx) == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(field_derivative_observable(m, fp) == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("field derivative of the free energy matches the local observable") {
    // hard-core: d Phi / d log(lambda) = occupation probability of the root
    const double h = 1e-5;
    for (double lambda : {0.5, 1.0, 2.5, 5.0, 7.0}) {
        const auto m = hardcore_model(lambda, 3);
        auto phi_at = [&](double l) {
            const auto mm = hardcore_model(l, 3);
            return bethe_free_energy(mm, find_fixed_points(mm)).phi;
        };
        const double fd =
            (phi_at(lambda * std::exp(h)) - phi_at(lambda * std::exp(-h))) / (2 * h);
        const double avx = field_derivative_observable(m, find_fixed_points(m));
        CHECK(fd == doctest::Approx(avx).epsilon(1e-6));
    }
    // Ising: d Phi / d B, on both sides of the antiferromagnetic threshold
    for (double beta : {0.4, -0.3, -0.9}) {
        for (double field : {-0.35, 0.15, 0.6}) {
            auto phi_at = [&](double b) {
                const auto mm = ising_model(beta, b, 3);
                return bethe_free_energy(mm, find_fixed_points(mm)).phi;
            };
            const auto m = ising_model(beta, field, 3);
            const double fd = (phi_at(field + h) - phi_at(field - h)) / (2 * h);
            const double avx = field_derivative_observable(m, find_fixed_points(m));
            CHECK(fd == doctest::Approx(avx).epsilon(1e-6));
        }
    }
}

TEST_CASE("generic pair partition agrees with the closed forms at lambda=5") {
    const auto m = hardcore_model(5.0, 3);
    const auto [hi, lo] = extreme_pair(find_fixed_points(m));
    CHECK(pair_partition(m, hi, lo) == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(pair_partition(m, hi, hi) * pair_partition(m, lo, lo) ==
          doctest::Approx(0.44).epsilon(1e-9));
}
