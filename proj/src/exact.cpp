#include "spinlab/exact.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include <json.hpp>

#include "spinlab/errors.hpp"

namespace spinlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp: keeps the running peak and a Kahan-compensated sum
// of exp(term - peak). Rescales on the fly when a larger term arrives.
struct LogAccumulator {
    double peak = kNegInf;
    double sum = 0.0;
    double comp = 0.0;

    void add_scaled(double term) {
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }

    void add(double logw) {
        if (logw == kNegInf) return;
        if (logw <= peak) {
            add_scaled(std::exp(logw - peak));
            return;
        }
        if (peak != kNegInf) {
            const double scale = std::exp(peak - logw);
            sum *= scale;
            comp *= scale;
        }
        peak = logw;
        add_scaled(1.0);
    }

    void merge(const LogAccumulator& o) {
        if (o.peak == kNegInf || o.sum <= 0.0) return;
        if (peak == kNegInf) {
            *this = o;
            return;
        }
        if (o.peak <= peak) {
            add_scaled(std::exp(o.peak - peak) * o.sum);
            return;
        }
        const double scaled = sum * std::exp(peak - o.peak);
        peak = o.peak;
        sum = o.sum;
        comp = o.comp;
        add_scaled(scaled);
    }

    double value() const {
        return (peak == kNegInf || sum <= 0.0) ? kNegInf : peak + std::log(sum);
    }
};

// ---------------------------------------------------------------------------
// Generic engine: walk all 2^n configurations in Gray order, maintaining the
// log-weight incrementally (zero factors tracked by count so hard constraints
// never poison the running sum). The space is split into blocks by the
// high-order configuration bits; blocks are enumerated independently and
// merged in index order, so thread count never changes the result.

struct EnumJob {
    const MultiGraph* g = nullptr;
    const CanonicalModel* model = nullptr;
    std::vector<int> copy_of;  // per-vertex copy index; empty = no phase tracking
    std::vector<int8_t> tau;   // coloring, aligned with copy_of
    int ncopies = 0;
    std::vector<int> project;  // joint projection onto these vertices
    bool per_vertex = false;   // accumulate per-vertex plus masses
    bool want_total = true;    // accumulate the unsplit total independently
    int threads = 1;
};

struct EnumAccum {
    LogAccumulator total;
    std::vector<LogAccumulator> phase;   // 1 << ncopies buckets
    std::vector<LogAccumulator> vertex;  // plus mass per vertex
    std::vector<LogAccumulator> joint;   // slots * (1 << |project|)
    int joint_slots = 1;

    void resize_for(const EnumJob& job) {
        if (job.ncopies > 0) phase.resize(std::size_t(1) << job.ncopies);
        if (job.per_vertex) vertex.resize(job.g->n);
        if (!job.project.empty()) {
            joint_slots = job.ncopies > 0 ? 2 : 1;
            joint.resize(std::size_t(joint_slots) << job.project.size());
        }
    }

    void merge(const EnumAccum& o) {
        total.merge(o.total);
        for (std::size_t i = 0; i < phase.size(); ++i) phase[i].merge(o.phase[i]);
        for (std::size_t i = 0; i < vertex.size(); ++i) vertex[i].merge(o.vertex[i]);
        for (std::size_t i = 0; i < joint.size(); ++i) joint[i].merge(o.joint[i]);
    }
};

int block_bits(int n) { return n > 20 ? std::min(12, n - 20) : 0; }

void enumerate_block(const EnumJob& job, int block, int low_bits, EnumAccum& acc) {
    const MultiGraph& g = *job.g;
    const CanonicalModel& model = *job.model;
    const int n = g.n;

    double lvw[2], lw[2][2];
    for (int s = 0; s < 2; ++s) {
        const double w = model.vertex_weight(static_cast<Spin>(s));
        lvw[s] = w > 0 ? std::log(w) : kNegInf;
        for (int s2 = 0; s2 < 2; ++s2) {
            const double e = model.edge_weight(static_cast<Spin>(s), static_cast<Spin>(s2));
            lw[s][s2] = e > 0 ? std::log(e) : kNegInf;
        }
    }

    // Incidence lists; a parallel edge appears once per copy, a loop once.
    std::vector<std::vector<int>> inc(n);
    for (const auto& [u, v] : g.edges) {
        inc[u].push_back(v);
        if (u != v) inc[v].push_back(u);
    }
    std::vector<int> proj_pos(n, -1);
    for (std::size_t i = 0; i < job.project.size(); ++i) proj_pos[job.project[i]] = static_cast<int>(i);

    uint64_t x = static_cast<uint64_t>(block) << low_bits;
    int zero_count = 0;
    double logw = 0.0;
    auto add_factor = [&](double lf) {
        if (lf == kNegInf) ++zero_count;
        else logw += lf;
    };
    auto remove_factor = [&](double lf) {
        if (lf == kNegInf) --zero_count;
        else logw -= lf;
    };

    std::vector<long> copy_sum(std::max(job.ncopies, 1), 0);
    uint32_t phase_key = 0;
    uint32_t jidx = 0;
    for (int v = 0; v < n; ++v) {
        const int b = static_cast<int>((x >> v) & 1);
        add_factor(lvw[b]);
        if (job.ncopies > 0) copy_sum[job.copy_of[v]] += job.tau[v] * (b ? 1 : -1);
        if (b && proj_pos[v] >= 0) jidx |= 1u << proj_pos[v];
    }
    for (const auto& [u, v] : g.edges) {
        add_factor(lw[(x >> u) & 1][(x >> v) & 1]);
    }
    for (int c = 0; c < job.ncopies; ++c) {
        if (copy_sum[c] >= 0) phase_key |= 1u << c;
    }

    const std::size_t w_bits = job.project.size();
    auto contribute = [&]() {
        if (zero_count != 0) return;
        if (!job.project.empty()) {
            const uint32_t slot = acc.joint_slots == 2 ? (phase_key & 1u) : 0u;
            acc.joint[(std::size_t(slot) << w_bits) | jidx].add(logw);
            return;
        }
        if (job.want_total) acc.total.add(logw);
        if (job.ncopies > 0) acc.phase[phase_key].add(logw);
        if (job.per_vertex) {
            uint64_t m = x;
            while (m) {
                const int v = __builtin_ctzll(m);
                m &= m - 1;
                acc.vertex[v].add(logw);
            }
        }
    };

    contribute();
    const uint64_t steps = low_bits >= 0 ? (uint64_t(1) << low_bits) : 1;
    for (uint64_t i = 1; i < steps; ++i) {
        const int v = __builtin_ctzll(i);
        const int ob = static_cast<int>((x >> v) & 1);
        const int nb = ob ^ 1;
        x ^= uint64_t(1) << v;
        remove_factor(lvw[ob]);
        add_factor(lvw[nb]);
        for (const int u : inc[v]) {
            if (u == v) {
                remove_factor(lw[ob][ob]);
                add_factor(lw[nb][nb]);
            } else {
                const int ub = static_cast<int>((x >> u) & 1);
                remove_factor(lw[ob][ub]);
                add_factor(lw[nb][ub]);
            }
        }
        if (job.ncopies > 0) {
            const int c = job.copy_of[v];
            copy_sum[c] += 2L * job.tau[v] * (nb ? 1 : -1);
            phase_key = (phase_key & ~(1u << c)) | ((copy_sum[c] >= 0 ? 1u : 0u) << c);
        }
        if (proj_pos[v] >= 0) jidx ^= 1u << proj_pos[v];
        contribute();
    }
}

EnumAccum enumerate_all(const EnumJob& job) {
    const int n = job.g->n;
    const int b = block_bits(n);
    const int low = n - b;
    const int nblocks = 1 << b;

    EnumAccum global;
    global.resize_for(job);
    const int window = std::max(1, job.threads);
    std::vector<EnumAccum> partial(window);
    for (int w0 = 0; w0 < nblocks; w0 += window) {
        const int count = std::min(window, nblocks - w0);
        for (int i = 0; i < count; ++i) {
            partial[i] = EnumAccum();
            partial[i].resize_for(job);
        }
        if (count == 1 || job.threads <= 1) {
            for (int i = 0; i < count; ++i) enumerate_block(job, w0 + i, low, partial[i]);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(count);
            for (int i = 0; i < count; ++i) {
                pool.emplace_back([&, i] { enumerate_block(job, w0 + i, low, partial[i]); });
            }
            for (auto& t : pool) t.join();
        }
        for (int i = 0; i < count; ++i) global.merge(partial[i]);
    }
    return global;
}

// ---------------------------------------------------------------------------
// Hard-core engine: backtrack over independent sets with neighbor bitmasks.
// Only the occupancy count and the per-copy phase matter for the weight, so
// leaves land in an exact integer histogram counts[phase key][occupancy] and
// log Z comes out of a tiny log-sum-exp at the end.

struct HardcoreHistogram {
    std::vector<std::vector<uint64_t>> counts;  // bucket -> occupancy histogram
    int n = 0;
};

HardcoreHistogram hardcore_histogram(const MultiGraph& g, const std::vector<int>& copy_of,
                                     const std::vector<int8_t>& tau, int ncopies) {
    const int n = g.n;
    std::vector<uint64_t> adj(n, 0);
    uint64_t loop_blocked = 0;
    for (const auto& [u, v] : g.edges) {
        if (u == v) {
            loop_blocked |= uint64_t(1) << u;
        } else {
            adj[u] |= uint64_t(1) << v;
            adj[v] |= uint64_t(1) << u;
        }
    }

    HardcoreHistogram h;
    h.n = n;
    const std::size_t buckets = std::size_t(1) << std::max(ncopies, 0);
    h.counts.assign(buckets, std::vector<uint64_t>(n + 1, 0));

    std::vector<long> sums(std::max(ncopies, 1), 0);
    for (int v = 0; v < n && ncopies > 0; ++v) sums[copy_of[v]] -= tau[v];

    auto rec = [&](auto&& self, int v, uint64_t blocked, int occ) -> void {
        if (v == n) {
            uint32_t key = 0;
            for (int c = 0; c < ncopies; ++c) {
                if (sums[c] >= 0) key |= 1u << c;
            }
            ++h.counts[key][occ];
            return;
        }
        self(self, v + 1, blocked, occ);
        if (!((blocked >> v) & 1)) {
            if (ncopies > 0) sums[copy_of[v]] += 2L * tau[v];
            self(self, v + 1, blocked | adj[v], occ + 1);
            if (ncopies > 0) sums[copy_of[v]] -= 2L * tau[v];
        }
    };
    rec(rec, 0, loop_blocked, 0);
    return h;
}

double histogram_log_z(const std::vector<uint64_t>& hist, double log_lambda) {
    double out = kNegInf;
    for (std::size_t occ = 0; occ < hist.size(); ++occ) {
        if (hist[occ] == 0) continue;
        out = log_add_exp(out, std::log(static_cast<double>(hist[occ])) + double(occ) * log_lambda);
    }
    return out;
}

std::vector<double> histogram_bucket_values(const HardcoreHistogram& h, double log_lambda) {
    std::vector<double> out(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) out[b] = histogram_log_z(h.counts[b], log_lambda);
    return out;
}

double histogram_total(const HardcoreHistogram& h, double log_lambda) {
    std::vector<uint64_t> total(h.n + 1, 0);
    for (const auto& hist : h.counts) {
        for (std::size_t occ = 0; occ < hist.size(); ++occ) total[occ] += hist[occ];
    }
    return histogram_log_z(total, log_lambda);
}

std::vector<int8_t> coloring_tau(const MultiGraph& g) {
    if (!g.coloring) throw invalid_input("graph carries no coloring");
    return *g.coloring;
}

int product_copies(const ProductGraph& pg) {
    if (pg.vertices_per_copy <= 0 || pg.graph.n % pg.vertices_per_copy != 0) {
        throw invalid_input("product graph has no usable copy layout");
    }
    return pg.graph.n / pg.vertices_per_copy;
}

std::vector<double> all_phase_values(const ProductGraph& pg, const CanonicalModel& model,
                                     const ExactOptions& opts) {
    pg.graph.check_edge_endpoints();
    const int ncopies = product_copies(pg);
    if (ncopies > 16) throw capacity_error("phase-vector table needs 2^copies buckets; copies > 16");
    const auto tau = coloring_tau(pg.graph);

    if (model.kind == ModelKind::hard_core) {
        if (pg.graph.n > opts.max_hardcore_vertices) {
            throw capacity_error("hard-core backtracking capped at " +
                                 std::to_string(opts.max_hardcore_vertices) + " vertices; use the sampler beyond that");
        }
        const auto h = hardcore_histogram(pg.graph, pg.copy_of, tau, ncopies);
        return histogram_bucket_values(h, std::log(model.lambda));
    }

    if (pg.graph.n > opts.max_enum_vertices) {
        throw capacity_error("generic enumeration capped at " +
                             std::to_string(opts.max_enum_vertices) + " vertices; use the sampler beyond that");
    }
    EnumJob job;
    job.g = &pg.graph;
    job.model = &model;
    job.copy_of = pg.copy_of;
    job.tau = tau;
    job.ncopies = ncopies;
    job.want_total = false;
    job.threads = resolve_threads(opts.threads);
    const auto acc = enumerate_all(job);
    std::vector<double> out(acc.phase.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc.phase[i].value();
    return out;
}

}  // namespace

PartitionSummary log_partition(const MultiGraph& g, const CanonicalModel& model,
                               const ExactOptions& opts) {
    g.check_edge_endpoints();
    const bool split = g.coloring.has_value();

    PartitionSummary out;
    const bool hardcore_path = model.kind == ModelKind::hard_core && !opts.want_marginals;
    if (hardcore_path) {
        if (g.n > opts.max_hardcore_vertices) {
            throw capacity_error("hard-core backtracking capped at " +
                                 std::to_string(opts.max_hardcore_vertices) + " vertices; use the sampler beyond that");
        }
        std::vector<int> copy_of(g.n, 0);
        const auto h = hardcore_histogram(g, copy_of, split ? *g.coloring : std::vector<int8_t>(g.n, 1),
                                          split ? 1 : 0);
        const double log_lambda = std::log(model.lambda);
        out.log_z = histogram_total(h, log_lambda);
        if (split) {
            const auto buckets = histogram_bucket_values(h, log_lambda);
            out.log_z_minus = buckets[0];
            out.log_z_plus = buckets[1];
        }
    } else {
        if (g.n > opts.max_enum_vertices) {
            throw capacity_error(model.kind == ModelKind::hard_core
                                     ? "marginals use the generic engine, capped at " +
                                           std::to_string(opts.max_enum_vertices) +
                                           " vertices; use the sampler beyond that"
                                     : "generic enumeration capped at " +
                                           std::to_string(opts.max_enum_vertices) +
                                           " vertices; use the sampler beyond that");
        }
        EnumJob job;
        job.g = &g;
        job.model = &model;
        if (split) {
            job.copy_of.assign(g.n, 0);
            job.tau = *g.coloring;
            job.ncopies = 1;
        }
        job.per_vertex = opts.want_marginals;
        job.threads = resolve_threads(opts.threads);
        const auto acc = enumerate_all(job);
        out.log_z = acc.total.value();
        if (split) {
            out.log_z_minus = acc.phase[0].value();
            out.log_z_plus = acc.phase[1].value();
        }
        if (opts.want_marginals) {
            std::vector<double> marg(g.n, 0.0);
            for (int v = 0; v < g.n; ++v) {
                const double lv = acc.vertex[v].value();
                marg[v] = lv == kNegInf ? 0.0 : std::exp(lv - out.log_z);
            }
            out.marginals = std::move(marg);
        }
    }
    out.phi = g.n > 0 ? out.log_z / g.n : 0.0;
    return out;
}

double log_partition_phase_vector(const ProductGraph& pg, const CanonicalModel& model,
                                  const std::vector<int8_t>& phases, const ExactOptions& opts) {
    const int ncopies = product_copies(pg);
    if (static_cast<int>(phases.size()) != ncopies) {
        throw invalid_input("phase vector length does not match the copy count");
    }
    uint32_t key = 0;
    for (int c = 0; c < ncopies; ++c) {
        if (phases[c] != 1 && phases[c] != -1) throw invalid_input("phase entries must be +1 or -1");
        if (phases[c] > 0) key |= 1u << c;
    }
    return all_phase_values(pg, model, opts)[key];
}

std::vector<double> log_partition_all_phase_vectors(const ProductGraph& pg,
                                                    const CanonicalModel& model,
                                                    const ExactOptions& opts) {
    return all_phase_values(pg, model, opts);
}

ConditionalMarginals conditional_marginals(const MultiGraph& g, const CanonicalModel& model,
                                           const std::vector<int>& vertices,
                                           std::optional<int> phase,
                                           const std::vector<double>& reference_p_plus,
                                           bool want_joint, const ExactOptions& opts) {
    g.check_edge_endpoints();
    if (g.n > opts.max_enum_vertices) {
        throw capacity_error("conditional marginals use the generic engine, capped at " +
                             std::to_string(opts.max_enum_vertices) + " vertices; use the sampler beyond that");
    }
    if (vertices.empty()) throw invalid_input("no vertices requested");
    if (vertices.size() > 16) throw capacity_error("joint law capped at 16 vertices");
    for (const int v : vertices) {
        if (v < 0 || v >= g.n) throw invalid_input("requested vertex out of range");
    }
    {
        auto sorted = vertices;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw invalid_input("requested vertices must be distinct");
        }
    }
    if (phase && (*phase != 1 && *phase != -1)) throw invalid_input("phase must be +1 or -1");
    if (phase && !g.coloring) throw invalid_input("phase conditioning needs a colored graph");
    if (!reference_p_plus.empty()) {
        if (reference_p_plus.size() != vertices.size()) {
            throw invalid_input("reference law length does not match the vertex list");
        }
        for (const double p : reference_p_plus) {
            if (!(p > 0.0 && p < 1.0)) throw invalid_input("reference probabilities must lie in (0,1)");
        }
    }

    EnumJob job;
    job.g = &g;
    job.model = &model;
    if (g.coloring) {
        job.copy_of.assign(g.n, 0);
        job.tau = *g.coloring;
        job.ncopies = 1;
    }
    job.project = vertices;
    job.want_total = false;
    job.threads = resolve_threads(opts.threads);
    const auto acc = enumerate_all(job);

    const std::size_t w = vertices.size();
    const std::size_t states = std::size_t(1) << w;
    // Fold the phase slots the conditioning selects.
    std::vector<LogAccumulator> law(states);
    for (std::size_t s = 0; s < states; ++s) {
        if (!phase || *phase > 0) law[s].merge(acc.joint[(acc.joint_slots == 2 ? states : 0) + s]);
        if (!phase || *phase < 0) {
            if (acc.joint_slots == 2) law[s].merge(acc.joint[s]);
        }
    }
    LogAccumulator norm;
    for (std::size_t s = 0; s < states; ++s) norm.merge(law[s]);
    const double log_norm = norm.value();
    if (log_norm == kNegInf) throw invalid_input("conditioning event has probability zero");

    ConditionalMarginals out;
    out.p_plus.assign(w, 0.0);
    for (std::size_t i = 0; i < w; ++i) {
        LogAccumulator hit;
        for (std::size_t s = 0; s < states; ++s) {
            if ((s >> i) & 1) hit.merge(law[s]);
        }
        const double lv = hit.value();
        out.p_plus[i] = lv == kNegInf ? 0.0 : std::exp(lv - log_norm);
    }

    std::vector<double> joint(states, 0.0);
    for (std::size_t s = 0; s < states; ++s) {
        const double lv = law[s].value();
        joint[s] = lv == kNegInf ? 0.0 : std::exp(lv - log_norm);
    }
    if (!reference_p_plus.empty()) {
        double rmax = -std::numeric_limits<double>::infinity();
        double rmin = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < states; ++s) {
            double ref = 1.0;
            for (std::size_t i = 0; i < w; ++i) {
                ref *= ((s >> i) & 1) ? reference_p_plus[i] : 1.0 - reference_p_plus[i];
            }
            if (joint[s] <= 0.0 && ref <= 0.0) continue;
            const double r = joint[s] / ref;
            rmax = std::max(rmax, r);
            rmin = std::min(rmin, r);
        }
        out.max_joint_ratio = rmax;
        out.min_joint_ratio = rmin;
    }
    if (want_joint) out.joint = std::move(joint);
    return out;
}

double free_energy_density(const MultiGraph& g, const CanonicalModel& model,
                           const ExactOptions& opts) {
    return log_partition(g, model, opts).phi;
}

double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SPINLAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string PartitionSummary::to_json(bool pretty) const {
    nlohmann::json j;
    j["log_z"] = log_z;
    j["phi"] = phi;
    if (log_z_plus) j["log_z_plus"] = *log_z_plus;
    if (log_z_minus) j["log_z_minus"] = *log_z_minus;
    if (marginals) j["marginals"] = *marginals;
    return j.dump(pretty ? 2 : -1);
}

}  // namespace spinlab
