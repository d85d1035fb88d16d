// Acceptance gate: ten end-to-end checks of the toolkit, one verdict line
// each, with pinned tolerances. Statistical checks (criterion 9) use frozen
// seeds and a single documented rerun. The exit code is the number of failed
// criteria, so the test runner treats any red line as a failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spinlab/bethe.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/graph.hpp"
#include "spinlab/reduction.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/sampler.hpp"
#include "spinlab/tree.hpp"
#include "spinlab/two_spin.hpp"

using namespace spinlab;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string format(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

double bisect_hardcore_star(double lambda, int d) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (lambda * std::pow(mid, d - 1) * mid + mid - 1.0 < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Hand evaluation of the free-energy functional at a two-step pair (a, b),
// written out directly from the model weights. Shares nothing with the
// library's accumulation path.
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

MultiGraph petersen() {
    MultiGraph g;
    g.n = 10;
    for (int i = 0; i < 5; ++i) {
        g.edges.emplace_back(i, (i + 1) % 5);
        g.edges.emplace_back(i, 5 + i);
        g.edges.emplace_back(5 + i, 5 + (i + 2) % 5);
    }
    return g;
}

// --- criterion 1: closed-form uniqueness thresholds --------------------------

bool crit_thresholds(std::string& note) {
    Timer t;
    const double e3 = std::fabs(lambda_c(3) - 4.0);
    const double e4 = std::fabs(lambda_c(4) - 1.6875);
    const double e5 = std::fabs(lambda_c(5) - 256.0 / 243.0);
    const double eb = std::fabs(beta_c_af(0.0, 3) + 0.5 * std::log(3.0));
    const double secs = t.elapsed();
    note = format("lambda_c errors %.1e/%.1e/%.1e, antiferro threshold error %.1e, %.3fs",
                  e3, e4, e5, eb, secs);
    return e3 <= 1e-12 && e4 <= 1e-12 && e5 <= 1e-12 && eb <= 1e-9 && secs < 1.0;
}

// --- criterion 2: fixed points and recursion residuals -----------------------

bool crit_fixed_points(std::string& note) {
    Timer t;
    const double r = std::sqrt(0.2);
    const auto fp5 = find_fixed_points(hardcore_model(5.0, 3));
    const double eplus = std::fabs(fp5.plus.q() - (1 + r) / 2);
    const double eminus = std::fabs(fp5.minus.q() - (1 - r) / 2);

    Rng rng(314159);
    double worst = 0.0;
    int checked = 0;
    while (checked < 1000) {
        CanonicalModel m;
        if (rng.below(2)) {
            m = hardcore_model(oracle::unit_range(rng, 0.05, 8.0), 3 + rng.below(3));
            if (std::abs(m.lambda - lambda_c(m.d)) < 1e-4) continue;
        } else {
            m = ising_model(oracle::unit_range(rng, -1.2, 1.2),
                            oracle::unit_range(rng, -1.0, 1.0), 3 + rng.below(3));
        }
        const auto fp = find_fixed_points(m);
        if (fp.near_critical) continue;
        ++checked;
        double res;
        if (m.kind == ModelKind::hard_core) {
            // one BP step fixes the star and swaps the extreme pair
            res = std::fabs(hardcore_step_q(m.lambda, m.d, fp.star.q()) - fp.star.q());
            res = std::max(res, std::fabs(hardcore_step_q(m.lambda, m.d, fp.plus.q()) - fp.minus.q()));
            res = std::max(res, std::fabs(hardcore_step_q(m.lambda, m.d, fp.minus.q()) - fp.plus.q()));
        } else {
            const bool swap = m.beta < 0;
            res = std::fabs(ising_step_t(m.beta, m.field, m.d, fp.star.t()) - fp.star.t());
            res = std::max(res, std::fabs(ising_step_t(m.beta, m.field, m.d, fp.plus.t()) -
                                          (swap ? fp.minus : fp.plus).t()));
            res = std::max(res, std::fabs(ising_step_t(m.beta, m.field, m.d, fp.minus.t()) -
                                          (swap ? fp.plus : fp.minus).t()));
        }
        worst = std::max(worst, res);
    }
    const double secs = t.elapsed();
    note = format("pair root errors %.1e/%.1e, worst residual %.1e over 1000 models, %.2fs",
                  eplus, eminus, worst, secs);
    return eplus <= 1e-9 && eminus <= 1e-9 && worst <= 1e-10 && secs < 5.0;
}

// --- criterion 3: free-energy values against hand formulas -------------------

bool crit_bethe_values(std::string& note) {
    const auto m1 = hardcore_model(1.0, 3);
    const double phi1 = bethe_free_energy(m1, find_fixed_points(m1)).phi;
    const double q1 = bisect_hardcore_star(1.0, 3);
    const double p1 = 1 - q1;
    const double hand1 = std::log(1 + q1 * q1 * q1) - 1.5 * std::log(1 - p1 * p1);

    const auto m5 = hardcore_model(5.0, 3);
    const double phi5 = bethe_free_energy(m5, find_fixed_points(m5)).phi;
    const double r = std::sqrt(0.2);
    const double hand5 = hand_phi_pair(m5, 1 - (1 + r) / 2, 1 - (1 - r) / 2);

    // the two extreme boundary conditions carry the same value once the
    // recursion splits
    double sym = 0.0;
    std::vector<CanonicalModel> split = {m5, ising_model(-0.9, 0.1, 3), ising_model(-1.1, -0.15, 3)};
    for (const auto& m : split) {
        const auto fp = find_fixed_points(m);
        if (fp.unique) return false;
        const auto [hi, lo] = extreme_pair(fp);
        sym = std::max(sym, std::fabs(bethe_value_at_pair(m, hi, lo) - bethe_value_at_pair(m, lo, hi)));
    }
    note = format("Phi(1)=%.9f vs hand %.9f, Phi(5)=%.9f vs hand %.9f, pair symmetry gap %.1e",
                  phi1, hand1, phi5, hand5, sym);
    return std::fabs(phi1 - hand1) <= 1e-6 && std::fabs(phi5 - hand5) <= 1e-6 && sym <= 1e-9;
}

// --- criterion 4: finite covers converge to the tree value -------------------

bool crit_convergence(std::string& note) {
    bool ok = true;
    std::string parts;
    for (double lam : {1.0, 5.0}) {
        const auto m = hardcore_model(lam, 3);
        const double big_phi = bethe_free_energy(m, find_fixed_points(m)).phi;
        double mean[2] = {0.0, 0.0};
        const int halves[2] = {6, 14};
        for (int i = 0; i < 2; ++i) {
            for (std::uint64_t seed = 1; seed <= 20; ++seed) {
                const auto cover = double_cover(configuration_model(halves[i], 3, seed));
                mean[i] += std::fabs(log_partition(cover, m).phi - big_phi);
            }
            mean[i] /= 20.0;
        }
        ok = ok && mean[1] <= 0.12 && mean[1] < mean[0];
        parts += format("%slambda=%g: mean|phi_n-Phi| %.4f @12 -> %.4f @28",
                        parts.empty() ? "" : "; ", lam, mean[0], mean[1]);
    }
    note = parts;
    return ok;
}

// --- criterion 5: field derivative equals the local observable ---------------

bool crit_derivative(std::string& note) {
    const double h = 1e-5;
    double worst_hc = 0.0;
    for (double lam : {0.3, 0.6, 0.9, 1.2, 1.5, 1.9, 2.3, 2.7, 3.1, 3.5,
                       4.5, 4.8, 5.2, 5.6, 6.0, 6.4, 6.8, 7.2, 7.6, 8.0}) {
        auto phi_at = [&](double l) {
            const auto mm = hardcore_model(l, 3);
            return bethe_free_energy(mm, find_fixed_points(mm)).phi;
        };
        const double fd = (phi_at(lam * std::exp(h)) - phi_at(lam * std::exp(-h))) / (2 * h);
        const auto m = hardcore_model(lam, 3);
        worst_hc = std::max(worst_hc,
                            std::fabs(fd - field_derivative_observable(m, find_fixed_points(m))));
    }
    double worst_is = 0.0;
    for (double beta : {0.4, 0.8, -0.3, -0.9}) {
        for (double field : {-0.6, -0.35, 0.15, 0.6, 0.9}) {
            auto phi_at = [&](double b) {
                const auto mm = ising_model(beta, b, 3);
                return bethe_free_energy(mm, find_fixed_points(mm)).phi;
            };
            const double fd = (phi_at(field + h) - phi_at(field - h)) / (2 * h);
            const auto m = ising_model(beta, field, 3);
            worst_is = std::max(worst_is,
                                std::fabs(fd - field_derivative_observable(m, find_fixed_points(m))));
        }
    }
    note = format("worst |FD - observable|: hard-core %.1e, Ising %.1e over 20 points each",
                  worst_hc, worst_is);
    return worst_hc <= 1e-6 && worst_is <= 1e-6;
}

// --- criterion 6: agree/disagree pair constants -------------------------------

bool crit_pair_constants(std::string& note) {
    const auto m5 = hardcore_model(5.0, 3);
    const auto pc5 = pair_constants(m5, find_fixed_points(m5));
    const auto m1 = hardcore_model(1.0, 3);
    const auto pc1 = pair_constants(m1, find_fixed_points(m1));
    note = format("gamma=%.17g theta=%.17g at lambda=5; |theta-gamma|=%.1e at lambda=1",
                  pc5.gamma, pc5.theta, std::fabs(pc1.theta - pc1.gamma));
    return std::fabs(pc5.gamma - 0.44) <= 1e-12 && std::fabs(pc5.theta - 0.64) <= 1e-12 &&
           std::fabs(pc1.theta - pc1.gamma) <= 1e-9;
}

// --- criterion 7: full reduction pipeline on K4 -------------------------------

bool crit_reduction(std::string& note) {
    Timer t;
    const auto res = run_reduction(complete_graph(4), hardcore_model(5.0, 3), 4, 1, 0.9, 1);
    const double secs = t.elapsed();
    if (!res.bounds.exact.has_value()) {
        note = "exact max cut missing";
        return false;
    }
    const bool bracket = *res.bounds.exact == 4 && res.bounds.lower <= 4.0 && 4.0 <= res.bounds.upper;

    // sandwich inequality with the measured epsilon: for the optimal cut of
    // size m = 4 on |E(H)| = 6 edges at k = 1,
    //   2k|E| log(gamma) + 2km log(theta/gamma) + m log((1-eps)/2)
    //     <= log Z(H_G) - log Z(hat H_G) <=
    //   2k|E| log(gamma) + 2km log(theta/gamma) + m log(1+eps)
    const double diff = res.bounds.inputs.log_z_hg - res.bounds.inputs.log_z_hat;
    const double ratio = res.bounds.inputs.theta / res.bounds.inputs.gamma;
    const double base = 2.0 * 1 * 6 * std::log(res.bounds.inputs.gamma) +
                        2.0 * 1 * 4 * std::log(ratio);
    const double eps = res.certificate.epsilon;
    const bool sandwich =
        base + 4 * std::log((1 - eps) / 2) <= diff && diff <= base + 4 * std::log(1 + eps);
    note = format("bounds [%.4f, %.4f] around cut 4, eps=%.4f, sandwich %s, %.2fs",
                  res.bounds.lower, res.bounds.upper, eps, sandwich ? "holds" : "violated", secs);
    return bracket && sandwich && secs <= 600.0;
}

// --- criterion 8: phase split recombines to the partition value ---------------

bool crit_phase_split(std::string& note) {
    Rng rng(271828);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto g = oracle::random_graph(rng, 8, true, true);
        const auto m = oracle::random_model(rng);
        const auto sum = log_partition(g, m);
        const double both = log_add_exp(*sum.log_z_plus, *sum.log_z_minus);
        if (std::isinf(both) || std::isinf(sum.log_z)) {
            if (both != sum.log_z) return false;
            continue;
        }
        worst = std::max(worst, std::fabs(both - sum.log_z));
    }

    const auto c4 = log_partition(cycle_graph(4), hardcore_model(1.0, 3));
    const double e_total = std::fabs(c4.log_z - std::log(7.0));
    const double e_plus = std::fabs(*c4.log_z_plus - std::log(4.0));
    const double e_minus = std::fabs(*c4.log_z_minus - std::log(3.0));
    note = format("worst recombination gap %.1e over 1000 instances; C4 (7,4,3) errors %.1e/%.1e/%.1e",
                  worst, e_total, e_plus, e_minus);
    return worst <= 1e-10 && e_total <= 1e-12 && e_plus <= 1e-12 && e_minus <= 1e-12;
}

// --- criterion 9: Glauber dynamics against exact laws --------------------------

// Chi-square goodness of fit of the empirical state histogram against the
// direct Boltzmann law, expected counts below 10 pooled into a tail cell;
// the statistic (chi2 - df) / sqrt(2 df) is approximately standard normal.
bool chain_matches_law(const MultiGraph& g, const CanonicalModel& m, std::uint64_t seed,
                       double& z_out) {
    ChainConfig cfg;
    cfg.steps = 20000;
    cfg.burn_in = 500;
    cfg.thin = 16;
    cfg.seed = seed;
    const auto emp = empirical_state_distribution(g, m, cfg);
    const auto w = oracle::state_weights(g, m);
    double total = 0.0;
    for (const double x : w) total += x;

    const double n_samples = static_cast<double>(cfg.steps);
    double chi2 = 0.0, tail_obs = 0.0, tail_exp = 0.0;
    int cells = 0;
    for (std::size_t s = 0; s < w.size(); ++s) {
        const double p = w[s] / total;
        if (p == 0.0) {
            if (emp[s] != 0.0) return false;  // forbidden state visited
            continue;
        }
        const double e = p * n_samples, o = emp[s] * n_samples;
        if (e < 10.0) {
            tail_obs += o;
            tail_exp += e;
            continue;
        }
        chi2 += (o - e) * (o - e) / e;
        ++cells;
    }
    if (tail_exp > 0.0) {
        chi2 += (tail_obs - tail_exp) * (tail_obs - tail_exp) / tail_exp;
        ++cells;
    }
    const int df = cells - 1;
    if (df < 1) return false;
    z_out = (chi2 - df) / std::sqrt(2.0 * df);
    return std::fabs(z_out) <= 3.0;
}

bool crit_sampler(std::string& note) {
    struct Combo {
        MultiGraph g;
        CanonicalModel m;
        std::uint64_t seed;
    };
    std::vector<Combo> combos;
    combos.push_back({cycle_graph(4), hardcore_model(1.0, 3), 101});
    combos.push_back({cycle_graph(5), hardcore_model(3.0, 3), 102});
    combos.push_back({cycle_graph(6), ising_model(-0.5, -0.1, 3), 103});
    combos.push_back({complete_graph(4), ising_model(0.3, 0.2, 3), 104});
    combos.push_back({complete_bipartite(3, 3), hardcore_model(2.0, 3), 105});
    combos.push_back({petersen(), hardcore_model(0.8, 3), 106});
    combos.push_back({double_cover(configuration_model(5, 4, 7)), hardcore_model(5.0, 3), 107});
    combos.push_back({cycle_graph(7), ising_model(0.6, 0.0, 3), 108});
    combos.push_back({complete_bipartite(2, 3), ising_model(-0.7, 0.3, 3), 109});
    combos.push_back({cycle_graph(9), hardcore_model(1.5, 3), 110});

    double worst_z = 0.0;
    for (const auto& c : combos) {
        double z = 0.0;
        if (!chain_matches_law(c.g, c.m, c.seed, z)) {
            note = format("state law mismatch on a %d-vertex graph (z=%.2f)", c.g.n, z);
            return false;
        }
        worst_z = std::max(worst_z, std::fabs(z));
    }

    // magnetization on a 200-vertex cover against the tree-marginal gap:
    // eight plus-initialized chains burned in well past the relaxation of the
    // aligned start (the per-chain mean is flat after ~500 sweeps), median of
    // the per-chain means, and one rerun on fresh seeds since the check is
    // statistical. The chain estimator itself is validated against exact
    // enumeration at 2n <= 24 and by the state-law checks above.
    const auto cover = double_cover(configuration_model(100, 3, 11));
    const auto m5 = hardcore_model(5.0, 3);
    const double gap = root_marginals(m5, find_fixed_points(m5)).magnetization_gap;
    auto median_of_eight = [&](std::uint64_t first_seed) {
        std::vector<double> mags;
        for (std::uint64_t s = first_seed; s < first_seed + 8; ++s) {
            ChainConfig cfg;
            cfg.steps = 2000;
            cfg.burn_in = 1000;
            cfg.thin = 1;
            cfg.seed = s;
            cfg.init = ChainInit::phase_plus;
            mags.push_back(run_chain(cover, m5, cfg).signed_magnetization);
        }
        std::sort(mags.begin(), mags.end());
        return 0.5 * (mags[3] + mags[4]);
    };
    double med = median_of_eight(1);
    bool mag_ok = std::fabs(med - gap) <= 0.05;
    if (!mag_ok) {
        med = median_of_eight(9);
        mag_ok = std::fabs(med - gap) <= 0.05;
    }
    note = format("worst chi-square z %.2f over 10 graphs; cover magnetization %.4f vs tree gap %.4f"
                  "%s",
                  worst_z, med, gap,
                  mag_ok ? "" : " (equilibrium at this size undershoots the tree limit; "
                                "the 0.05 band is first reached near 2n=1000)");
    return mag_ok;
}

// --- criterion 10: expansion certification -------------------------------------

struct SubsetScan {
    bool certified = true;
    int witness_size = 0;
    int witness_boundary = 0;
};

// Direct subset loop over the size window, counting boundary edges per subset.
SubsetScan expansion_by_subsets(const MultiGraph& g, double delta, double gamma, double lambda) {
    SubsetScan out;
    for (std::uint32_t s = 1; s < (1u << g.n); ++s) {
        const int size = __builtin_popcount(s);
        if (size < delta * g.n || size > gamma * g.n) continue;
        int boundary = 0;
        for (const auto& [u, v] : g.edges) {
            if (((s >> u) & 1u) != ((s >> v) & 1u)) ++boundary;
        }
        if (boundary < lambda * size) {
            out.certified = false;
            out.witness_size = size;
            out.witness_boundary = boundary;
            return out;
        }
    }
    return out;
}

bool crit_expansion(std::string& note) {
    Rng rng(161803);
    int done = 0;
    while (done < 50) {
        const auto g = oracle::random_graph(rng, 14, false);
        if (g.n < 4) continue;
        ++done;
        const double delta = oracle::unit_range(rng, 0.05, 0.3);
        const double gamma = oracle::unit_range(rng, delta, 0.5);
        const double lambda = oracle::unit_range(rng, 0.1, 1.0);
        const auto rep = expansion_check(g, delta, gamma, lambda);
        const auto ref = expansion_by_subsets(g, delta, gamma, lambda);
        if (!rep.exhaustive || rep.certified != ref.certified) {
            note = format("disagreement on a %d-vertex graph", g.n);
            return false;
        }
        if (!rep.certified) {
            if (!rep.witness.has_value()) return false;
            const int size = static_cast<int>(rep.witness->size());
            std::vector<char> in(g.n, 0);
            for (int v : *rep.witness) in[v] = 1;
            int boundary = 0;
            for (const auto& [u, v] : g.edges) boundary += in[u] != in[v];
            if (size < delta * g.n || size > gamma * g.n || boundary >= lambda * size) {
                note = "reported witness does not violate the expansion bound";
                return false;
            }
        }
    }

    // 8-cycle: a half arc has 2 boundary edges over 4 vertices, so expansion
    // holds at rate 0.5 and fails just above it
    const auto c8 = cycle_graph(8);
    const auto ok = expansion_check(c8, 0.25, 0.5, 0.5);
    const auto bad = expansion_check(c8, 0.25, 0.5, 0.6);
    const bool boundary_case = ok.certified && std::fabs(ok.worst_ratio - 0.5) <= 1e-12 &&
                               !bad.certified && bad.witness.has_value() &&
                               bad.witness->size() == 4;
    note = format("50 random graphs agree with the subset scan; C8 boundary ratio %.3f %s",
                  ok.worst_ratio, boundary_case ? "reproduced" : "WRONG");
    return boundary_case;
}

}  // namespace

int main() {
    struct Criterion {
        const char* title;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"tree uniqueness thresholds", crit_thresholds},
        {"recursion fixed points", crit_fixed_points},
        {"free-energy values", crit_bethe_values},
        {"finite-size convergence", crit_convergence},
        {"field-derivative identity", crit_derivative},
        {"agree/disagree pair constants", crit_pair_constants},
        {"max-cut reduction on K4", crit_reduction},
        {"phase-split partition values", crit_phase_split},
        {"sampler validity", crit_sampler},
        {"expansion certification", crit_expansion},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string note;
        bool ok = false;
        try {
            ok = criteria[i].run(note);
        } catch (const std::exception& e) {
            note = format("exception: %s", e.what());
        }
        if (!ok) ++failures;
        std::printf("[%s] criterion %zu: %s (%s)\n", ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].title, note.c_str());
        std::fflush(stdout);
    }
    if (failures == 0) {
        std::printf("all %zu criteria passed\n", criteria.size());
    } else {
        std::printf("%d of %zu criteria FAILED\n", failures, criteria.size());
    }
    return failures;
}
