#include "spinlab/reduction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include <json.hpp>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/tree.hpp"

namespace spinlab {

namespace {

std::vector<int> distinct_w(const Gadget& gadget) {
    std::set<int> wset(gadget.w_plus.begin(), gadget.w_plus.end());
    wset.insert(gadget.w_minus.begin(), gadget.w_minus.end());
    return {wset.begin(), wset.end()};
}

// Deviation of a single ratio from 1; the certification epsilon is the max
// over all tracked ratios plus the phase-imbalance term.
double ratio_deviation(double r) { return std::max(r - 1.0, 1.0 - r); }

const char* method_name(CertifyMethod m) { return m == CertifyMethod::exact ? "exact" : "sampled"; }

const char* status_name(CertifyStatus s) {
    switch (s) {
        case CertifyStatus::passed: return "passed";
        case CertifyStatus::failed: return "failed";
        default: return "indeterminate";
    }
}

CertifiedGadget certify_exact(const Gadget& gadget, const CanonicalModel& model,
                              double target_eps, const ExactOptions& opts) {
    const MultiGraph& g = gadget.graph;
    const auto fp = find_fixed_points(model);
    const auto [hi, lo] = extreme_pair(fp);
    const auto pc = pair_constants(model, fp);
    const auto& tau = *g.coloring;

    CertifiedGadget out;
    out.gadget = gadget;
    out.method = CertifyMethod::exact;
    out.degenerate_ratio = !(pc.theta > pc.gamma);

    const auto part = log_partition(g, model, opts);
    out.phase_balance = std::exp(*part.log_z_plus - part.log_z);

    const auto w = distinct_w(gadget);
    double rmax = 1.0, rmin = 1.0;
    for (const int phase : {+1, -1}) {
        const auto cm = conditional_marginals(g, model, w, phase, {}, false, opts);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double q = phase * tau[w[i]] > 0 ? hi.p_plus : lo.p_plus;
            const double p = cm.p_plus[i];
            for (const double r : {p / q, (1.0 - p) / (1.0 - q)}) {
                rmax = std::max(rmax, r);
                rmin = std::min(rmin, r);
            }
        }
    }
    out.max_product_ratio = rmax;
    out.min_product_ratio = rmin;
    out.epsilon = std::max({std::abs(2.0 * out.phase_balance - 1.0), ratio_deviation(rmax),
                            ratio_deviation(rmin)});
    out.status = out.epsilon <= target_eps ? CertifyStatus::passed : CertifyStatus::failed;
    return out;
}

CertifiedGadget certify_sampled(const Gadget& gadget, const CanonicalModel& model,
                                double target_eps, const ChainConfig& chain) {
    const auto fp = find_fixed_points(model);
    const auto [hi, lo] = extreme_pair(fp);
    const auto pc = pair_constants(model, fp);
    const auto& tau = *gadget.graph.coloring;

    CertifiedGadget out;
    out.gadget = gadget;
    out.method = CertifyMethod::sampled;
    out.degenerate_ratio = !(pc.theta > pc.gamma);

    const auto est = estimate_conditional_w(gadget, model, chain);
    const std::uint64_t total = est.samples_plus + est.samples_minus;
    out.phase_balance = total ? static_cast<double>(est.samples_plus) / static_cast<double>(total) : 0.0;

    double rmax = 1.0, rmin = 1.0;
    double dev_lo = std::abs(2.0 * out.phase_balance - 1.0);
    double dev_hi = dev_lo;
    for (std::size_t i = 0; i < est.w_vertices.size(); ++i) {
        const int v = est.w_vertices[i];
        struct Bin {
            double p, se;
            int phase;
        } bins[2] = {{est.p_plus_given_plus[i], est.se_given_plus[i], +1},
                     {est.p_plus_given_minus[i], est.se_given_minus[i], -1}};
        for (const auto& b : bins) {
            const double q = b.phase * tau[v] > 0 ? hi.p_plus : lo.p_plus;
            const double half = 3.0 * b.se;
            for (const double r : {b.p / q, (1.0 - b.p) / (1.0 - q)}) {
                rmax = std::max(rmax, r);
                rmin = std::min(rmin, r);
            }
            for (const auto [p, ref] : {std::pair{b.p, q}, std::pair{1.0 - b.p, 1.0 - q}}) {
                const double rl = (p - half) / ref;
                const double rh = (p + half) / ref;
                dev_hi = std::max({dev_hi, std::abs(rl - 1.0), std::abs(rh - 1.0)});
                if (rl > 1.0 || rh < 1.0) {
                    dev_lo = std::max(dev_lo, std::min(std::abs(rl - 1.0), std::abs(rh - 1.0)));
                }
            }
        }
    }
    out.max_product_ratio = rmax;
    out.min_product_ratio = rmin;
    out.epsilon = std::max({std::abs(2.0 * out.phase_balance - 1.0), ratio_deviation(rmax),
                            ratio_deviation(rmin)});
    if (dev_hi <= target_eps) out.status = CertifyStatus::passed;
    else if (dev_lo > target_eps) out.status = CertifyStatus::failed;
    else out.status = CertifyStatus::indeterminate;
    return out;
}

}  // namespace

CertifiedGadget certify_gadget(const Gadget& gadget, const CanonicalModel& model,
                               double target_eps, const ExactOptions& opts,
                               const ChainConfig& chain) {
    if (!gadget.graph.coloring) throw invalid_input("gadget graph carries no coloring");
    if (!(target_eps >= 0.0)) throw invalid_input("certification target must be nonnegative");
    if (gadget.graph.n <= opts.max_enum_vertices) {
        return certify_exact(gadget, model, target_eps, opts);
    }
    return certify_sampled(gadget, model, target_eps, chain);
}

GadgetSearchResult search_gadget(int n, int d, int k, const CanonicalModel& model,
                                 double target_eps, int max_attempts, std::uint64_t seed,
                                 const ExactOptions& opts) {
    if (max_attempts < 1) throw invalid_input("need at least one search attempt");
    GadgetSearchResult res;
    double best_eps = std::numeric_limits<double>::infinity();
    for (int i = 0; i < max_attempts; ++i) {
        const std::uint64_t sub = derive_seed(seed, static_cast<std::uint64_t>(i));
        res.seeds_tried.push_back(sub);
        ++res.attempts;
        Gadget g;
        try {
            g = make_gadget(n, d, k, sub);
        } catch (const search_failure&) {
            continue;
        }
        const auto cert = certify_gadget(g, model, target_eps, opts);
        if (cert.epsilon < best_eps) best_eps = cert.epsilon;
        if (cert.status == CertifyStatus::passed) {
            res.certified = cert;
            return res;
        }
    }
    throw search_failure("no gadget passed certification in " + std::to_string(max_attempts) +
                         " attempts; best epsilon " + std::to_string(best_eps));
}

CutBounds cut_bounds(const CutBoundInputs& in) {
    if (!(in.gamma > 0.0) || !(in.theta > 0.0)) throw invalid_input("pair constants must be positive");
    if (!(in.theta > in.gamma)) {
        throw search_failure("agree/disagree pair constants coincide; no cut signal");
    }
    if (!(in.epsilon >= 0.0 && in.epsilon < 1.0)) {
        throw invalid_input("certification epsilon must lie in [0,1)");
    }
    if (in.k < 1 || in.m < 0 || in.edges_h < 0) throw invalid_input("malformed cut-bound inputs");

    const double denom = 2.0 * in.k * std::log(in.theta / in.gamma);
    const double base = in.log_z_hg - in.log_z_hat - 2.0 * in.k * in.edges_h * std::log(in.gamma);
    CutBounds out;
    out.inputs = in;
    out.lower = (base - in.m * std::log1p(in.epsilon)) / denom;
    out.upper = (base - in.m * std::log((1.0 - in.epsilon) / 2.0)) / denom;
    return out;
}

int maxcut_bruteforce(const MultiGraph& g, int threads) {
    g.check_edge_endpoints();
    if (g.n > 30) throw capacity_error("exact MAX-CUT capped at 30 vertices");
    if (g.n == 0 || g.edges.empty()) return 0;

    std::vector<std::vector<int>> inc(g.n);
    for (const auto& [u, v] : g.edges) {
        if (u == v) continue;  // a loop never crosses a cut
        inc[u].push_back(v);
        inc[v].push_back(u);
    }
    const int free_bits = g.n - 1;  // fix the last vertex's side
    const int bb = free_bits > 20 ? std::min(8, free_bits - 20) : 0;
    const int low = free_bits - bb;
    const int nblocks = 1 << bb;

    auto block_max = [&](int block) {
        uint64_t x = static_cast<uint64_t>(block) << low;
        int cut = 0;
        for (const auto& [u, v] : g.edges) {
            if (u != v && (((x >> u) ^ (x >> v)) & 1)) ++cut;
        }
        int best = cut;
        const uint64_t steps = uint64_t(1) << low;
        for (uint64_t i = 1; i < steps; ++i) {
            const int v = __builtin_ctzll(i);
            for (const int u : inc[v]) {
                cut += ((((x >> u) ^ (x >> v)) & 1) ? -1 : 1);
            }
            x ^= uint64_t(1) << v;
            best = std::max(best, cut);
        }
        return best;
    };

    const int nthreads = std::min(resolve_threads(threads), nblocks);
    std::vector<int> per_block(nblocks, 0);
    if (nthreads <= 1) {
        for (int b = 0; b < nblocks; ++b) per_block[b] = block_max(b);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                for (int b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) {
                    per_block[b] = block_max(b);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return *std::max_element(per_block.begin(), per_block.end());
}

ReductionResult run_reduction(const MultiGraph& h, const CanonicalModel& model, int n, int k,
                              double target_eps, std::uint64_t seed, const ExactOptions& opts) {
    h.check_edge_endpoints();
    if (k < 1) throw invalid_input("reduction needs k >= 1");
    if (h.edges.empty()) {
        throw invalid_input(
            "H has no edges: the disjoint union of gadget copies carries no cut information");
    }

    const auto fp = find_fixed_points(model);
    const auto pc = pair_constants(model, fp);

    // Search and wiring retry together: a gadget that certifies but collides
    // when wired is discarded and the seed stream continues.
    constexpr int kMaxAttempts = 64;
    ReductionResult res;
    double best_eps = std::numeric_limits<double>::infinity();
    bool built = false;
    for (int i = 0; i < kMaxAttempts && !built; ++i) {
        const std::uint64_t sub = derive_seed(seed, static_cast<std::uint64_t>(i));
        res.seeds.push_back(sub);
        ++res.attempts;
        Gadget g;
        try {
            g = make_gadget(n, model.d, 3 * k, sub);
        } catch (const search_failure&) {
            continue;
        }
        const auto cert = certify_gadget(g, model, target_eps, opts);
        if (cert.epsilon < best_eps) best_eps = cert.epsilon;
        if (cert.status != CertifyStatus::passed) continue;
        try {
            res.product = build_product(h, g, k);
        } catch (const search_failure&) {
            continue;
        }
        res.certificate = cert;
        built = true;
    }
    if (!built) {
        throw search_failure("no certified gadget produced a wired product in " +
                             std::to_string(kMaxAttempts) + " attempts; best epsilon " +
                             std::to_string(best_eps));
    }

    res.log_z_gadget = log_partition(res.certificate.gadget.graph, model, opts).log_z;
    const double log_z_hg = log_partition(res.product.graph, model, opts).log_z;
    const double log_z_hat = h.n * res.log_z_gadget;

    CutBoundInputs in;
    in.log_z_hg = log_z_hg;
    in.log_z_hat = log_z_hat;
    in.gamma = pc.gamma;
    in.theta = pc.theta;
    in.epsilon = res.certificate.epsilon;
    in.k = k;
    in.m = h.n;
    in.edges_h = static_cast<int>(h.edges.size());
    res.bounds = cut_bounds(in);

    if (h.n <= 30) {
        const int mc = maxcut_bruteforce(h, opts.threads);
        res.bounds.exact = mc;
        if (!(res.bounds.lower <= mc && mc <= res.bounds.upper)) {
            throw search_failure("cut bounds failed to contain the exact optimum");
        }
    }
    return res;
}

std::string CertifiedGadget::to_json(bool pretty) const {
    nlohmann::json j;
    j["epsilon"] = epsilon;
    j["phase_balance"] = phase_balance;
    j["max_product_ratio"] = max_product_ratio;
    j["min_product_ratio"] = min_product_ratio;
    j["degenerate_ratio"] = degenerate_ratio;
    j["method"] = method_name(method);
    j["status"] = status_name(status);
    j["gadget"] = nlohmann::json::parse(gadget.to_json());
    return j.dump(pretty ? 2 : -1);
}

std::string CutBounds::to_json(bool pretty) const {
    nlohmann::json j;
    j["lower"] = lower;
    j["upper"] = upper;
    if (exact) j["exact"] = *exact;
    j["inputs"] = {{"log_z_hg", inputs.log_z_hg}, {"log_z_hat", inputs.log_z_hat},
                   {"gamma", inputs.gamma},       {"theta", inputs.theta},
                   {"epsilon", inputs.epsilon},   {"k", inputs.k},
                   {"m", inputs.m},               {"edges_h", inputs.edges_h}};
    return j.dump(pretty ? 2 : -1);
}

std::string ReductionResult::to_json(bool pretty) const {
    nlohmann::json j;
    j["lower"] = bounds.lower;
    j["upper"] = bounds.upper;
    if (bounds.exact) j["exact"] = *bounds.exact;
    j["epsilon"] = certificate.epsilon;
    j["gamma"] = bounds.inputs.gamma;
    j["theta"] = bounds.inputs.theta;
    j["log_z_hg"] = bounds.inputs.log_z_hg;
    j["log_z_hat"] = bounds.inputs.log_z_hat;
    j["log_z_gadget"] = log_z_gadget;
    j["certificate"] = nlohmann::json::parse(certificate.to_json());
    j["product"] = {{"vertices", product.graph.n},
                    {"crossing_edges", product.added.size()},
                    {"copies", product.vertices_per_copy > 0
                                   ? product.graph.n / product.vertices_per_copy
                                   : 0}};
    j["provenance"] = {{"seeds", seeds}, {"attempts", attempts}};
    return j.dump(pretty ? 2 : -1);
}

}  // namespace spinlab
