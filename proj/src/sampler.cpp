#include "spinlab/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>

#include <json.hpp>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab {

namespace {

// Mean plus batch-means standard error: sqrt(|xs|) equal batches, standard
// deviation of the batch means over sqrt(batches). Robust to the sweep-to-
// sweep autocorrelation a single-site chain always has.
std::pair<double, double> mean_and_batch_se(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (const double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    const std::size_t nb = static_cast<std::size_t>(std::sqrt(static_cast<double>(xs.size())));
    if (nb < 2) return {mean, 0.0};
    const std::size_t len = xs.size() / nb;
    std::vector<double> bm(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t i = 0; i < len; ++i) bm[b] += xs[b * len + i];
        bm[b] /= static_cast<double>(len);
    }
    double bmean = 0.0;
    for (const double m : bm) bmean += m;
    bmean /= static_cast<double>(nb);
    double var = 0.0;
    for (const double m : bm) var += (m - bmean) * (m - bmean);
    var /= static_cast<double>(nb - 1);
    return {mean, std::sqrt(var / static_cast<double>(nb))};
}

struct Chain {
    const MultiGraph& g;
    const CanonicalModel& model;
    std::vector<std::vector<int>> inc;  // incident vertices, multiplicity kept
    std::vector<int8_t> state;          // +1 / -1
    Rng rng;
    long tau_dot = 0;  // sum_i tau_i sigma_i, maintained when colored

    Chain(const MultiGraph& graph, const CanonicalModel& m, std::uint64_t seed)
        : g(graph), model(m), inc(graph.n), state(graph.n, -1), rng(seed) {
        g.check_edge_endpoints();
        if (m.degenerate()) {
            throw invalid_input("dynamics needs a non-degenerate model; degenerate partition "
                                "values have closed forms");
        }
        for (const auto& [u, v] : g.edges) {
            inc[u].push_back(v);
            if (u != v) inc[v].push_back(u);
        }
    }

    bool hardcore() const { return model.kind == ModelKind::hard_core; }

    void reset_tau_dot() {
        tau_dot = 0;
        if (!g.coloring) return;
        for (int v = 0; v < g.n; ++v) tau_dot += (*g.coloring)[v] * state[v];
    }

    void assert_independent() const {
#ifndef NDEBUG
        if (!hardcore()) return;
        for (const auto& [u, v] : g.edges) {
            assert(!(state[u] > 0 && state[v] > 0));
        }
#endif
    }

    void init(ChainInit kind) {
        switch (kind) {
            case ChainInit::all_minus:
                std::fill(state.begin(), state.end(), int8_t{-1});
                break;
            case ChainInit::phase_plus:
            case ChainInit::phase_minus: {
                if (!g.coloring) throw invalid_input("phase init needs a colored graph");
                const int8_t sign = kind == ChainInit::phase_plus ? 1 : -1;
                for (int v = 0; v < g.n; ++v) state[v] = static_cast<int8_t>(sign * (*g.coloring)[v]);
                if (hardcore()) {
                    for (const auto& [u, v] : g.edges) {
                        if (state[u] > 0 && state[v] > 0) {
                            throw invalid_input("phase init is not an independent set");
                        }
                    }
                }
                break;
            }
            case ChainInit::random_state: {
                if (hardcore()) {
                    std::fill(state.begin(), state.end(), int8_t{-1});
                    const double p = model.lambda / (1.0 + model.lambda);
                    for (int v = 0; v < g.n; ++v) {
                        bool free_site = true;
                        for (const int u : inc[v]) {
                            if (state[u] > 0 || u == v) { free_site = false; break; }
                        }
                        if (free_site && rng.unit() < p) state[v] = 1;
                    }
                } else {
                    for (int v = 0; v < g.n; ++v) state[v] = rng.unit() < 0.5 ? 1 : -1;
                }
                break;
            }
        }
        reset_tau_dot();
        assert_independent();
    }

    void update(int v) {
        double lp = 0.0, lm = 0.0;
        bool zp = false, zm = false;
        auto fold = [&](double w, double& acc, bool& zero) {
            if (w > 0) acc += std::log(w);
            else zero = true;
        };
        fold(model.vertex_weight(Spin::plus), lp, zp);
        fold(model.vertex_weight(Spin::minus), lm, zm);
        for (const int u : inc[v]) {
            if (u == v) {
                fold(model.edge_weight(Spin::plus, Spin::plus), lp, zp);
                fold(model.edge_weight(Spin::minus, Spin::minus), lm, zm);
            } else {
                const Spin su = state[u] > 0 ? Spin::plus : Spin::minus;
                fold(model.edge_weight(Spin::plus, su), lp, zp);
                fold(model.edge_weight(Spin::minus, su), lm, zm);
            }
        }
        double p;
        if (zp && zm) throw invalid_input("site has no admissible spin");
        else if (zp) p = 0.0;
        else if (zm) p = 1.0;
        else p = 1.0 / (1.0 + std::exp(lm - lp));
        const int8_t next = rng.unit() < p ? 1 : -1;
        if (next != state[v]) {
            if (g.coloring) tau_dot += 2L * (*g.coloring)[v] * next;
            state[v] = next;
        }
    }

    void sweep() {
        for (int v = 0; v < g.n; ++v) update(v);
        assert_independent();
    }

    int phase() const { return tau_dot >= 0 ? 1 : -1; }
};

void validate_config(const ChainConfig& cfg, const MultiGraph& g) {
    if (cfg.steps == 0) throw invalid_input("chain needs at least one recorded sweep");
    if (cfg.thin < 1) throw invalid_input("thinning factor must be positive");
    for (const int v : cfg.watch) {
        if (v < 0 || v >= g.n) throw invalid_input("watched vertex out of range");
    }
}

}  // namespace

ChainStats run_chain(const MultiGraph& g, const CanonicalModel& model, const ChainConfig& cfg) {
    validate_config(cfg, g);
    Chain chain(g, model, cfg.seed);
    chain.init(cfg.init);
    for (std::uint64_t s = 0; s < cfg.burn_in; ++s) chain.sweep();

    const bool colored = g.coloring.has_value();
    std::vector<double> mag;
    std::vector<std::vector<double>> watch(cfg.watch.size());
    mag.reserve(cfg.steps);
    std::uint64_t plus_records = 0;
    bool flip = false;
    int prev_phase = 0;
    for (std::uint64_t s = 0; s < cfg.steps; ++s) {
        for (int t = 0; t < cfg.thin; ++t) chain.sweep();
        if (colored) {
            const int y = chain.phase();
            if (prev_phase != 0 && y != prev_phase) flip = true;
            prev_phase = y;
            if (y > 0) ++plus_records;
            mag.push_back(static_cast<double>(y) * static_cast<double>(chain.tau_dot) /
                          static_cast<double>(g.n));
        }
        for (std::size_t i = 0; i < cfg.watch.size(); ++i) {
            watch[i].push_back(chain.state[cfg.watch[i]] > 0 ? 1.0 : 0.0);
        }
    }

    ChainStats out;
    out.samples = cfg.steps;
    if (colored) {
        const auto [m, se] = mean_and_batch_se(mag);
        out.signed_magnetization = m;
        out.signed_magnetization_se = se;
        out.phase_plus_fraction = static_cast<double>(plus_records) / static_cast<double>(cfg.steps);
        out.phase_flip_seen = flip;
    }
    for (std::size_t i = 0; i < cfg.watch.size(); ++i) {
        const auto [m, se] = mean_and_batch_se(watch[i]);
        out.watch_p_plus.push_back(m);
        out.watch_se.push_back(se);
    }
    return out;
}

std::vector<double> empirical_state_distribution(const MultiGraph& g, const CanonicalModel& model,
                                                 const ChainConfig& cfg) {
    if (g.n > 20) throw capacity_error("state histogram capped at 20 vertices");
    validate_config(cfg, g);
    Chain chain(g, model, cfg.seed);
    chain.init(cfg.init);
    for (std::uint64_t s = 0; s < cfg.burn_in; ++s) chain.sweep();

    std::vector<std::uint64_t> counts(std::size_t(1) << g.n, 0);
    for (std::uint64_t s = 0; s < cfg.steps; ++s) {
        for (int t = 0; t < cfg.thin; ++t) chain.sweep();
        std::size_t idx = 0;
        for (int v = 0; v < g.n; ++v) {
            if (chain.state[v] > 0) idx |= std::size_t(1) << v;
        }
        ++counts[idx];
    }
    std::vector<double> freq(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        freq[i] = static_cast<double>(counts[i]) / static_cast<double>(cfg.steps);
    }
    return freq;
}

ConditionalWEstimate estimate_conditional_w(const Gadget& gadget, const CanonicalModel& model,
                                            const ChainConfig& cfg) {
    const MultiGraph& g = gadget.graph;
    validate_config(cfg, g);
    if (!g.coloring) throw invalid_input("gadget graph carries no coloring");

    std::set<int> wset(gadget.w_plus.begin(), gadget.w_plus.end());
    wset.insert(gadget.w_minus.begin(), gadget.w_minus.end());
    std::vector<int> w(wset.begin(), wset.end());
    if (w.empty()) throw invalid_input("gadget has no deficiency vertices");
    if (w.size() > 16) throw capacity_error("joint frequency table capped at 16 vertices");

    ConditionalWEstimate out;
    out.w_vertices = w;
    const std::size_t states = std::size_t(1) << w.size();
    out.joint_plus.assign(states, 0.0);
    out.joint_minus.assign(states, 0.0);

    // One record = (observed phase, W pattern); the two chains start in
    // opposite phase states and bin by what they actually show.
    std::vector<std::pair<int, std::uint32_t>> records;
    records.reserve(2 * cfg.steps);
    for (int c = 0; c < 2; ++c) {
        ChainConfig sub = cfg;
        sub.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(c));
        Chain chain(g, model, sub.seed);
        chain.init(c == 0 ? ChainInit::phase_plus : ChainInit::phase_minus);
        for (std::uint64_t s = 0; s < cfg.burn_in; ++s) chain.sweep();
        int prev_phase = 0;
        for (std::uint64_t s = 0; s < cfg.steps; ++s) {
            for (int t = 0; t < cfg.thin; ++t) chain.sweep();
            const int y = chain.phase();
            if (prev_phase != 0 && y != prev_phase) out.phase_flip_seen = true;
            prev_phase = y;
            std::uint32_t idx = 0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (chain.state[w[i]] > 0) idx |= std::uint32_t(1) << i;
            }
            records.emplace_back(y, idx);
        }
    }

    for (const auto& [y, idx] : records) {
        if (y > 0) {
            ++out.samples_plus;
            out.joint_plus[idx] += 1.0;
        } else {
            ++out.samples_minus;
            out.joint_minus[idx] += 1.0;
        }
    }
    for (auto& f : out.joint_plus) f = out.samples_plus ? f / static_cast<double>(out.samples_plus) : 0.0;
    for (auto& f : out.joint_minus) f = out.samples_minus ? f / static_cast<double>(out.samples_minus) : 0.0;

    for (std::size_t i = 0; i < w.size(); ++i) {
        std::vector<double> plus_series, minus_series;
        for (const auto& [y, idx] : records) {
            const double bit = (idx >> i) & 1 ? 1.0 : 0.0;
            if (y > 0) plus_series.push_back(bit);
            else minus_series.push_back(bit);
        }
        const auto [mp, sp] = mean_and_batch_se(plus_series);
        const auto [mm, sm] = mean_and_batch_se(minus_series);
        out.p_plus_given_plus.push_back(mp);
        out.se_given_plus.push_back(sp);
        out.p_plus_given_minus.push_back(mm);
        out.se_given_minus.push_back(sm);
    }
    return out;
}

std::string ChainStats::to_json(bool pretty) const {
    nlohmann::json j;
    j["samples"] = samples;
    j["signed_magnetization"] = signed_magnetization;
    j["signed_magnetization_se"] = signed_magnetization_se;
    j["phase_plus_fraction"] = phase_plus_fraction;
    j["watch_p_plus"] = watch_p_plus;
    j["watch_se"] = watch_se;
    j["phase_flip_seen"] = phase_flip_seen;
    return j.dump(pretty ? 2 : -1);
}

}  // namespace spinlab
