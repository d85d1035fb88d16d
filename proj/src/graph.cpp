#include "spinlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab {

namespace {

std::pair<int, int> ordered(int u, int v) { return {std::min(u, v), std::max(u, v)}; }

} // namespace

std::vector<int> MultiGraph::degrees() const {
    std::vector<int> deg(n, 0);
    for (const auto& [u, v] : edges) {
        ++deg[u];
        ++deg[v]; // a self-loop counts twice, as in the half-edge picture
    }
    return deg;
}

bool MultiGraph::is_regular(int d) const {
    for (int x : degrees()) {
        if (x != d) return false;
    }
    return true;
}

bool MultiGraph::is_simple() const {
    std::set<std::pair<int, int>> seen;
    for (const auto& [u, v] : edges) {
        if (u == v) return false;
        if (!seen.insert(ordered(u, v)).second) return false;
    }
    return true;
}

bool MultiGraph::coloring_is_proper() const {
    if (!coloring) return false;
    for (const auto& [u, v] : edges) {
        if ((*coloring)[u] == (*coloring)[v]) return false;
    }
    return true;
}

std::vector<std::vector<int>> MultiGraph::adjacency() const {
    std::vector<std::vector<int>> adj(n);
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        if (u != v) adj[v].push_back(u);
    }
    return adj;
}

std::vector<int> MultiGraph::components() const {
    std::vector<int> comp(n, -1);
    const auto adj = adjacency();
    int next = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[s] != -1) continue;
        comp[s] = next;
        std::vector<int> stack{s};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int u : adj[v]) {
                if (comp[u] == -1) {
                    comp[u] = next;
                    stack.push_back(u);
                }
            }
        }
        ++next;
    }
    return comp;
}

void MultiGraph::check_edge_endpoints() const {
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n) {
            throw invalid_input("edge endpoint out of range");
        }
    }
    if (coloring && static_cast<int>(coloring->size()) != n) {
        throw invalid_input("coloring length does not match vertex count");
    }
}

MultiGraph parse_graph_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto next_line = [&](std::string& out) {
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r\n") != std::string::npos) {
                out = line;
                return true;
            }
        }
        return false;
    };

    std::string header;
    if (!next_line(header)) throw invalid_input("empty graph file");
    std::istringstream hs(header);
    MultiGraph g;
    int m = 0;
    if (!(hs >> g.n >> m) || g.n < 0 || m < 0) {
        throw invalid_input("graph header must be 'n m'");
    }

    std::string second;
    bool have_second = next_line(second);
    // The optional second line holds n +/- tokens.
    if (have_second) {
        std::istringstream cs(second);
        std::vector<int8_t> colors;
        std::string tok;
        bool all_signs = true;
        while (cs >> tok) {
            if (tok == "+") colors.push_back(+1);
            else if (tok == "-") colors.push_back(-1);
            else { all_signs = false; break; }
        }
        if (all_signs && static_cast<int>(colors.size()) == g.n && g.n > 0) {
            g.coloring = std::move(colors);
            have_second = false; // consumed
        }
    }

    auto parse_edge = [&](const std::string& s) {
        std::istringstream es(s);
        int u, v;
        if (!(es >> u >> v)) throw invalid_input("bad edge line: " + s);
        g.edges.emplace_back(u, v);
    };
    if (have_second) parse_edge(second);
    while (static_cast<int>(g.edges.size()) < m) {
        std::string e;
        if (!next_line(e)) throw invalid_input("fewer edge lines than header promised");
        parse_edge(e);
    }
    if (static_cast<int>(g.edges.size()) != m) {
        throw invalid_input("edge count mismatch");
    }
    g.check_edge_endpoints();
    return g;
}

std::string graph_to_text(const MultiGraph& g) {
    std::ostringstream out;
    out << g.n << ' ' << g.edges.size() << '\n';
    if (g.coloring) {
        for (int i = 0; i < g.n; ++i) {
            out << ((*g.coloring)[i] > 0 ? '+' : '-') << (i + 1 == g.n ? '\n' : ' ');
        }
    }
    for (const auto& [u, v] : g.edges) out << u << ' ' << v << '\n';
    return out.str();
}

MultiGraph load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("cannot open graph file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_graph_text(buf.str());
}

void save_graph_file(const MultiGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_input("cannot write graph file: " + path);
    out << graph_to_text(g);
}

MultiGraph configuration_model(int n, int d, std::uint64_t seed) {
    if (n <= 0 || d < 1) throw invalid_input("configuration model needs n >= 1, d >= 1");
    if ((static_cast<long long>(n) * d) % 2 != 0) {
        throw invalid_input("configuration model needs n*d even");
    }
    Rng rng(seed);
    std::vector<int> half(static_cast<size_t>(n) * d);
    for (size_t i = 0; i < half.size(); ++i) half[i] = static_cast<int>(i);
    rng.shuffle(half);
    MultiGraph g;
    g.n = n;
    g.edges.reserve(half.size() / 2);
    for (size_t i = 0; i < half.size(); i += 2) {
        g.edges.emplace_back(half[i] / d, half[i + 1] / d);
    }
    return g;
}

MultiGraph double_cover(const MultiGraph& h) {
    h.check_edge_endpoints();
    MultiGraph g;
    g.n = 2 * h.n;
    g.edges.reserve(2 * h.edges.size());
    for (const auto& [i, j] : h.edges) {
        g.edges.emplace_back(i, h.n + j);
        g.edges.emplace_back(j, h.n + i);
    }
    std::vector<int8_t> colors(g.n);
    for (int i = 0; i < h.n; ++i) {
        colors[i] = +1;
        colors[h.n + i] = -1;
    }
    g.coloring = std::move(colors);
    return g;
}

Gadget make_gadget(int n, int d, int k, std::uint64_t seed, int max_attempts) {
    if (n <= 0 || n % 2 != 0) throw invalid_input("gadget needs even n");
    if (k < 1) throw invalid_input("gadget needs k >= 1");
    if (d < 3) throw invalid_input("gadget needs d >= 3");
    if ((static_cast<long long>(n) * d) % 2 != 0) {
        throw invalid_input("gadget needs n*d even");
    }
    // Full slot distinctness is only achievable when the side can host all
    // 2k deficiency slots; smaller sides fall back to distinct centers and
    // distinct deleted edges, with slot multiplicity absorbed into degrees.
    const bool want_distinct = 2 * k <= n;

    Rng master(seed);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        const std::uint64_t sub = master.next();
        MultiGraph parent = configuration_model(n, d, sub);
        if (!parent.is_simple()) continue; // cover would need merging; reject
        MultiGraph cover = double_cover(parent);

        Rng pick(derive_seed(sub, 0x9a));
        std::vector<int> centers = pick.sample_without_replacement(n, k);
        const auto adj = parent.adjacency();
        std::vector<std::pair<int, int>> pairs;
        std::set<std::pair<int, int>> used_edges;
        std::set<int> used_vertices;
        bool ok = true;
        for (int i : centers) {
            const int j = adj[i][pick.below(adj[i].size())];
            if (!used_edges.insert(ordered(i, j)).second) { ok = false; break; }
            if (want_distinct) {
                if (!used_vertices.insert(i).second || !used_vertices.insert(j).second) {
                    ok = false;
                    break;
                }
            }
            pairs.emplace_back(i, j);
        }
        if (!ok) continue;

        Gadget out;
        out.graph = cover;
        out.k = k;
        out.seed = seed;
        out.attempts = attempt;
        out.slots_distinct = want_distinct;
        std::set<std::pair<int, int>> to_delete;
        for (const auto& [i, j] : pairs) {
            out.w_plus.push_back(i);
            out.w_plus.push_back(j);
            out.w_minus.push_back(n + i);
            out.w_minus.push_back(n + j);
            out.deleted.emplace_back(i, n + j);
            out.deleted.emplace_back(j, n + i);
            to_delete.insert(ordered(i, n + j));
            to_delete.insert(ordered(j, n + i));
        }
        std::vector<std::pair<int, int>> kept;
        kept.reserve(cover.edges.size() - to_delete.size());
        for (const auto& [u, v] : cover.edges) {
            auto it = to_delete.find(ordered(u, v));
            if (it != to_delete.end()) {
                to_delete.erase(it);
            } else {
                kept.push_back({u, v});
            }
        }
        out.graph.edges = std::move(kept);
        return out;
    }
    throw search_failure("gadget construction exhausted " + std::to_string(max_attempts) +
                         " attempts (n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                         ", k=" + std::to_string(k) + ")");
}

std::string Gadget::to_json(bool pretty) const {
    nlohmann::json j;
    j["w_plus"] = w_plus;
    j["w_minus"] = w_minus;
    auto& del = j["deleted"] = nlohmann::json::array();
    for (const auto& [u, v] : deleted) del.push_back({u, v});
    j["k"] = k;
    j["seed"] = seed;
    return pretty ? j.dump(2) : j.dump();
}

namespace {

// Boundary size of the set marked in `in_set`, by direct edge scan.
long long boundary_size(const MultiGraph& g, const std::vector<char>& in_set) {
    long long b = 0;
    for (const auto& [u, v] : g.edges) {
        if (u != v && in_set[u] != in_set[v]) ++b;
    }
    return b;
}

} // namespace

ExpansionReport expansion_check(const MultiGraph& g, double delta, double gamma,
                                double lambda, std::uint64_t seed) {
    g.check_edge_endpoints();
    if (!(delta > 0) || !(delta <= gamma) || !(gamma <= 0.5)) {
        throw invalid_input("expansion check needs 0 < delta <= gamma <= 1/2");
    }
    if (lambda < 0) throw invalid_input("expansion lambda must be nonnegative");
    ExpansionReport rep;
    rep.delta = delta;
    rep.gamma = gamma;
    rep.lambda = lambda;
    rep.certified = true;
    rep.worst_ratio = std::numeric_limits<double>::infinity();

    const int n = g.n;
    const int lo = static_cast<int>(std::ceil(delta * n));
    const int hi = static_cast<int>(std::floor(gamma * n));
    rep.exhaustive = n <= 24;
    if (lo > hi) return rep; // empty size window: vacuously certified

    auto record = [&](const std::vector<char>& in_set, int size, long long b) {
        const double ratio = static_cast<double>(b) / size;
        rep.worst_ratio = std::min(rep.worst_ratio, ratio);
        if (b < lambda * size && !rep.witness) {
            rep.certified = false;
            std::vector<int> w;
            for (int v = 0; v < n; ++v) {
                if (in_set[v]) w.push_back(v);
            }
            rep.witness = std::move(w);
        }
    };

    if (n <= 24) {
        rep.exhaustive = true;
        // Gray-code walk over all subsets, maintaining the boundary size.
        std::vector<std::vector<int>> adj = g.adjacency();
        std::vector<char> in_set(n, 0);
        long long b = 0;
        int size = 0;
        const std::uint64_t total = 1ULL << n;
        for (std::uint64_t i = 1; i < total; ++i) {
            const int v = __builtin_ctzll(i); // bit flipped by the Gray walk
            if (in_set[v]) {
                --size;
                in_set[v] = 0;
                for (int u : adj[v]) {
                    if (u != v) b += in_set[u] ? 1 : -1;
                }
            } else {
                ++size;
                in_set[v] = 1;
                for (int u : adj[v]) {
                    if (u != v) b += in_set[u] ? -1 : 1;
                }
            }
            if (size >= lo && size <= hi) record(in_set, size, b);
            if (rep.witness) return rep;
        }
        return rep;
    }

    // Randomized falsification: hill-climb boundary/|S| from many seeds.
    rep.exhaustive = false;
    Rng rng(seed);
    const int restarts = 200;
    for (int r = 0; r < restarts && !rep.witness; ++r) {
        const int target = lo + static_cast<int>(rng.below(hi - lo + 1));
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        std::vector<char> in_set(n, 0);
        for (int i = 0; i < target; ++i) in_set[order[i]] = 1;
        int size = target;
        long long b = boundary_size(g, in_set);
        record(in_set, size, b);
        bool improved = true;
        while (improved && !rep.witness) {
            improved = false;
            double best = static_cast<double>(b) / size;
            int best_v = -1;
            for (int v = 0; v < n; ++v) {
                const int nsize = size + (in_set[v] ? -1 : +1);
                if (nsize < lo || nsize > hi) continue;
                in_set[v] ^= 1;
                const long long nb = boundary_size(g, in_set);
                in_set[v] ^= 1;
                const double ratio = static_cast<double>(nb) / nsize;
                if (ratio < best - 1e-12) {
                    best = ratio;
                    best_v = v;
                }
            }
            if (best_v >= 0) {
                in_set[best_v] ^= 1;
                size += in_set[best_v] ? 1 : -1;
                b = boundary_size(g, in_set);
                record(in_set, size, b);
                improved = true;
            }
        }
    }
    return rep;
}

std::string ExpansionReport::to_json(bool pretty) const {
    nlohmann::json j;
    j["certified"] = certified;
    j["exhaustive"] = exhaustive;
    j["delta"] = delta;
    j["gamma"] = gamma;
    j["lambda"] = lambda;
    j["worst_ratio"] = worst_ratio;
    if (witness) j["witness"] = *witness;
    return pretty ? j.dump(2) : j.dump();
}

ProductGraph build_product(const MultiGraph& h, const Gadget& gadget, int k) {
    h.check_edge_endpoints();
    if (!h.is_simple() || !h.is_regular(3)) {
        throw invalid_input("product construction needs a 3-regular simple H");
    }
    if (k < 1 || gadget.k != 3 * k) {
        throw invalid_input("product construction needs a gadget with 3k deletions");
    }
    const int n2 = gadget.graph.n;

    ProductGraph pg;
    pg.vertices_per_copy = n2;
    pg.hat.n = h.n * n2;
    pg.copy_of.resize(pg.hat.n);
    std::vector<int8_t> colors(pg.hat.n);
    for (int x = 0; x < h.n; ++x) {
        const int off = x * n2;
        for (int v = 0; v < n2; ++v) {
            pg.copy_of[off + v] = x;
            colors[off + v] = (*gadget.graph.coloring)[v];
        }
        for (const auto& [u, v] : gadget.graph.edges) {
            pg.hat.edges.emplace_back(off + u, off + v);
        }
    }
    pg.hat.coloring = colors;

    // Canonical wiring order: sorted H-edge list; the g-th edge at a vertex
    // (by that list) consumes the g-th group of k deletions in its copy.
    std::vector<std::pair<int, int>> hedges;
    hedges.reserve(h.edges.size());
    for (const auto& [u, v] : h.edges) hedges.push_back(ordered(u, v));
    std::sort(hedges.begin(), hedges.end());
    std::vector<std::vector<int>> incident(h.n);
    for (int e = 0; e < static_cast<int>(hedges.size()); ++e) {
        incident[hedges[e].first].push_back(e);
        incident[hedges[e].second].push_back(e);
    }
    auto group_of = [&](int x, int e) {
        const auto& inc = incident[x];
        return static_cast<int>(std::find(inc.begin(), inc.end(), e) - inc.begin());
    };

    std::set<std::pair<int, int>> existing;
    for (const auto& [u, v] : pg.hat.edges) existing.insert(ordered(u, v));

    auto slot = [&](const std::vector<int>& w, int group, int l) {
        return w[2 * (group * k + l)];
    };
    auto slot_j = [&](const std::vector<int>& w, int group, int l) {
        return w[2 * (group * k + l) + 1];
    };

    for (int e = 0; e < static_cast<int>(hedges.size()); ++e) {
        const auto [x, y] = hedges[e];
        const int gx = group_of(x, e), gy = group_of(y, e);
        const int offx = x * n2, offy = y * n2;
        // i-slots of x pair with j-slots of y and vice versa, so every slot
        // receives exactly one crossing edge. A colliding rotation (possible
        // only with repeated slot vertices) shifts y's pairing index.
        bool wired = false;
        for (int rot = 0; rot < k && !wired; ++rot) {
            std::vector<std::pair<int, int>> batch;
            bool collision = false;
            for (int l = 0; l < k && !collision; ++l) {
                const int lr = (l + rot) % k;
                const std::pair<int, int> cand[4] = {
                    ordered(offx + slot(gadget.w_plus, gx, l), offy + slot_j(gadget.w_plus, gy, lr)),
                    ordered(offx + slot_j(gadget.w_plus, gx, l), offy + slot(gadget.w_plus, gy, lr)),
                    ordered(offx + slot(gadget.w_minus, gx, l), offy + slot_j(gadget.w_minus, gy, lr)),
                    ordered(offx + slot_j(gadget.w_minus, gx, l), offy + slot(gadget.w_minus, gy, lr)),
                };
                for (const auto& c : cand) {
                    if (existing.count(c)) { collision = true; break; }
                    batch.push_back(c);
                }
                for (size_t a = 0; a + 1 < batch.size() && !collision; ++a) {
                    for (size_t b = a + 1; b < batch.size(); ++b) {
                        if (batch[a] == batch[b]) { collision = true; break; }
                    }
                }
            }
            if (!collision) {
                for (const auto& c : batch) {
                    existing.insert(c);
                    pg.added.push_back(c);
                }
                wired = true;
            }
        }
        if (!wired) {
            throw search_failure("crossing-edge wiring collided for every rotation");
        }
    }

    pg.graph = pg.hat;
    for (const auto& c : pg.added) pg.graph.edges.push_back(c);
    return pg;
}

double local_tree_fraction(const MultiGraph& g, int t) {
    g.check_edge_endpoints();
    if (t < 0) throw invalid_input("depth must be nonnegative");
    if (g.n == 0) return 0.0;
    const auto adj = g.adjacency();
    int d = 0;
    for (const auto& a : adj) d = std::max(d, static_cast<int>(a.size()));
    if (d == 0) return 0.0;

    int good = 0;
    std::vector<int> depth(g.n);
    std::vector<int> order;
    for (int root = 0; root < g.n; ++root) {
        std::fill(depth.begin(), depth.end(), -1);
        order.clear();
        order.push_back(root);
        depth[root] = 0;
        for (size_t qi = 0; qi < order.size(); ++qi) {
            const int v = order[qi];
            if (depth[v] == t) continue;
            for (int u : adj[v]) {
                if (depth[u] == -1) {
                    depth[u] = depth[v] + 1;
                    order.push_back(u);
                }
            }
        }
        // The induced ball must be exactly the d-regular depth-t tree: every
        // internal edge joins consecutive depths, the edge count is |ball|-1
        // (no loops, multi-edges, or cross edges survive this), interior
        // vertices are d-regular inside the ball, and colors alternate.
        bool ok = true;
        long long ball_edges = 0;
        std::vector<int> deg_in(order.size(), 0);
        std::vector<int> index(g.n, -1);
        for (size_t i = 0; i < order.size(); ++i) index[order[i]] = static_cast<int>(i);
        for (const auto& [u, v] : g.edges) {
            if (depth[u] == -1 || depth[v] == -1) continue;
            // Edges hanging off depth-t leaves to outside vertices are fine,
            // but anything with both endpoints inside the ball is part of it.
            if (u == v || std::abs(depth[u] - depth[v]) != 1) { ok = false; break; }
            if (g.coloring && (*g.coloring)[u] == (*g.coloring)[v]) { ok = false; break; }
            ++ball_edges;
            ++deg_in[index[u]];
            ++deg_in[index[v]];
        }
        if (ok && ball_edges != static_cast<long long>(order.size()) - 1) ok = false;
        if (ok) {
            for (size_t i = 0; i < order.size(); ++i) {
                if (depth[order[i]] < t && deg_in[i] != d) { ok = false; break; }
            }
        }
        if (ok) ++good;
    }
    return static_cast<double>(good) / g.n;
}

MultiGraph cycle_graph(int n) {
    if (n < 3) throw invalid_input("cycle needs n >= 3");
    MultiGraph g;
    g.n = n;
    for (int i = 0; i < n; ++i) g.edges.emplace_back(i, (i + 1) % n);
    if (n % 2 == 0) {
        std::vector<int8_t> colors(n);
        for (int i = 0; i < n; ++i) colors[i] = (i % 2 == 0) ? +1 : -1;
        g.coloring = std::move(colors);
    }
    return g;
}

MultiGraph complete_graph(int n) {
    if (n < 1) throw invalid_input("complete graph needs n >= 1");
    MultiGraph g;
    g.n = n;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
    }
    return g;
}

MultiGraph complete_bipartite(int a, int b) {
    if (a < 1 || b < 1) throw invalid_input("complete bipartite needs both sides nonempty");
    MultiGraph g;
    g.n = a + b;
    for (int i = 0; i < a; ++i) {
        for (int j = 0; j < b; ++j) g.edges.emplace_back(i, a + j);
    }
    std::vector<int8_t> colors(g.n);
    for (int i = 0; i < a; ++i) colors[i] = +1;
    for (int j = 0; j < b; ++j) colors[a + j] = -1;
    g.coloring = std::move(colors);
    return g;
}

} // namespace spinlab
