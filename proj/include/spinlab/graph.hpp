#pragma once

// Multigraph container plus the generation toolchain: configuration model,
// bipartite double cover, deficiency gadgets, edge expansion checks, and the
// copies-plus-crossing-edges product construction used by the reduction.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spinlab {

struct MultiGraph {
    int n = 0;
    // Unordered edge multiset; self-loops stored as (v, v). Parallel edges
    // appear once per copy and every consumer weights them multiplicatively.
    std::vector<std::pair<int, int>> edges;
    // Optional 2-coloring tau, entries +1/-1, used for phases and bipartite
    // bookkeeping. Present on double covers and everything derived from them.
    std::optional<std::vector<int8_t>> coloring;

    int edge_count() const { return static_cast<int>(edges.size()); }
    std::vector<int> degrees() const;
    bool is_regular(int d) const;
    // No loops, no parallel edges.
    bool is_simple() const;
    // Every edge joins opposite colors (requires coloring).
    bool coloring_is_proper() const;
    std::vector<std::vector<int>> adjacency() const;
    // Component id per vertex, ids dense from 0.
    std::vector<int> components() const;
    void check_edge_endpoints() const; // throws invalid_input on out-of-range
};

// --- text format ----------------------------------------------------------
// line 1: "n m"; line 2 (optional): n tokens of +/-; then m lines "u v".
MultiGraph parse_graph_text(const std::string& text);
std::string graph_to_text(const MultiGraph& g);
MultiGraph load_graph_file(const std::string& path);
void save_graph_file(const MultiGraph& g, const std::string& path);

// --- generators -----------------------------------------------------------

// Uniform pairing of the d*n half-edges (may produce loops and multi-edges);
// requires d*n even. Deterministic for a given seed.
MultiGraph configuration_model(int n, int d, std::uint64_t seed);

// Vertex set doubles to {i+} = i and {i-} = n+i; every edge (i,j) becomes the
// pair (i+, j-), (j+, i-); loops become two parallel (v+, v-) edges. Output
// carries the +/- coloring and inherits d-regularity.
MultiGraph double_cover(const MultiGraph& h);

struct Gadget {
    MultiGraph graph;       // simple bipartite graph on 2n vertices, colored
    // Slot lists, grouped as consecutive pairs (i_l, j_l) per deletion l.
    // A vertex may occupy several slots when 2k > n (then its degree is
    // d - multiplicity); otherwise all slots are distinct vertices.
    std::vector<int> w_plus;
    std::vector<int> w_minus;
    // All 2k deleted parent edges, as vertex pairs of the cover.
    std::vector<std::pair<int, int>> deleted;
    int k = 0;              // number of mirrored deletions
    std::uint64_t seed = 0;
    int merged_multiedges = 0; // parents needing merges are rejected, so 0
    int attempts = 0;          // construction attempts consumed
    bool slots_distinct = true;

    std::string to_json(bool pretty = false) const;
};

// Build a deficiency gadget: sample a parent via the configuration model,
// reject until its double cover is d-regular and simple, pick k distinct
// centers i_l with neighbors j_l (deleted parent edges pairwise distinct;
// all 2k slot vertices distinct whenever 2k <= n), and delete the mirrored
// pair (i_l+, j_l-), (j_l+, i_l-) for each l. Throws search_failure when the
// attempt budget is exhausted.
Gadget make_gadget(int n, int d, int k, std::uint64_t seed, int max_attempts = 1000);

struct ExpansionReport {
    bool certified = false;
    bool exhaustive = false;
    double delta = 0, gamma = 0, lambda = 0;
    // Violating set when not certified.
    std::optional<std::vector<int>> witness;
    double worst_ratio = 0; // min boundary/|S| seen over the checked window
    std::string to_json(bool pretty = false) const;
};

// Every S with delta*|V| <= |S| <= gamma*|V| must have at least lambda*|S|
// boundary edges. Exhaustive for |V| <= 24, randomized falsification above
// (certified=true then only means "no violation found").
ExpansionReport expansion_check(const MultiGraph& g, double delta, double gamma,
                                double lambda, std::uint64_t seed = 1);

struct ProductGraph {
    MultiGraph graph;      // copies of the gadget plus crossing edges
    MultiGraph hat;        // the disjoint copies alone
    std::vector<int> copy_of;              // vertex -> copy index
    std::vector<std::pair<int, int>> added; // the crossing edges
    int vertices_per_copy = 0;
};

// Replace every vertex of a 3-regular simple H by a gadget copy (the gadget
// must have 3k deletions) and, per H-edge, wire the matched deficiency groups
// of the two endpoint copies: 2k edges on the + side (i-slots to j-slots and
// vice versa) and 2k on the - side. Result is d-regular and simple.
ProductGraph build_product(const MultiGraph& h, const Gadget& gadget, int k);

// Fraction of vertices whose depth-t ball is a full d-regular tree (d = max
// degree of g), with alternating colors when a coloring is present.
double local_tree_fraction(const MultiGraph& g, int t);

// Test/CLI conveniences.
MultiGraph cycle_graph(int n);
MultiGraph complete_graph(int n);
MultiGraph complete_bipartite(int a, int b);

} // namespace spinlab
