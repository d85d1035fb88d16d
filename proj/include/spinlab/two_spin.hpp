#pragma once

// Two-spin edge/vertex weight systems on {-1,+1} and their canonical forms.
//
// A configuration sigma on a graph G gets weight
//     prod_{(i,j) in E} psi(sigma_i, sigma_j) * prod_i psi_bar(sigma_i),
// psi symmetric nonnegative, psi_bar positive. On d-regular graphs every such
// system reduces, after absorbing vertex weights into the edges, to one of:
// an Ising model (beta, B), a hard-core model (lambda), or one of two
// degenerate families (perfect agreement / perfect disagreement), plus a
// per-edge constant exp(B0) that is carried as metadata and never folded into
// partition values.

#include <array>
#include <iosfwd>
#include <string>

namespace spinlab {

struct MultiGraph;

enum class Spin : int { minus = 0, plus = 1 };

constexpr int spin_value(Spin s) { return s == Spin::plus ? +1 : -1; }

struct TwoSpinSpec {
    // psi[a][b] with index 0 = spin -, 1 = spin +; must stay symmetric.
    std::array<std::array<double, 2>, 2> psi{};
    // psi_bar[a], strictly positive.
    std::array<double, 2> psi_bar{1.0, 1.0};

    double psi_at(Spin a, Spin b) const {
        return psi[static_cast<int>(a)][static_cast<int>(b)];
    }
    double psi_bar_at(Spin a) const { return psi_bar[static_cast<int>(a)]; }

    // Throws invalid_input unless psi is symmetric, nonnegative and not
    // identically zero, and psi_bar is strictly positive and finite.
    void validate() const;
};

TwoSpinSpec ising_spec(double beta, double field);
TwoSpinSpec hardcore_spec(double lambda);

// Entries within this distance of zero are treated as exact hard constraints.
inline constexpr double kZeroPsiTolerance = 1e-12;

enum class ModelKind { ising, hard_core, degenerate_agree, degenerate_disagree };

const char* to_string(ModelKind kind);

struct CanonicalModel {
    ModelKind kind = ModelKind::ising;
    int d = 3;           // regularity the reduction was performed at
    double beta = 0.0;   // ising
    double field = 0.0;  // ising B; also the residual field of degenerate_agree
    double lambda = 0.0; // hard_core
    double b0 = 0.0;     // per-edge log-constant, metadata only
    bool spins_flipped = false; // hard_core obtained after relabeling +<->-

    // Edge/vertex weights of the canonical system *excluding* exp(b0); these
    // are what exact enumeration and dynamics consume. For degenerate_agree
    // the residual field enters through the edge endpoints (exp(field*s/d) per
    // endpoint), which reproduces a per-vertex field exp(field*s) exactly on
    // d-regular graphs.
    double edge_weight(Spin a, Spin b) const;
    double vertex_weight(Spin a) const;

    bool degenerate() const {
        return kind == ModelKind::degenerate_agree ||
               kind == ModelKind::degenerate_disagree;
    }
};

CanonicalModel ising_model(double beta, double field, int d);
CanonicalModel hardcore_model(double lambda, int d);

// psi'(a,b) = psi(a,b) * psi_bar(a)^(1/d) * psi_bar(b)^(1/d); result has unit
// vertex weights and the same partition function on d-regular graphs.
TwoSpinSpec absorb_vertex_weights(const TwoSpinSpec& spec, int d);

// Classify a spec whose vertex weights are already absorbed (psi_bar == 1).
// Total over valid specs except the one-sided-agreement corner (exactly one
// zero diagonal with psi(+,-) = 0), which is rejected with an explanation.
CanonicalModel classify(const TwoSpinSpec& spec, int d);

// absorb + classify in one step.
CanonicalModel canonicalize(const TwoSpinSpec& spec, int d);

// Exact free-energy density (1/n) log Z_spec for a degenerate model on a given
// graph, including the b0 per-edge term. degenerate_disagree on a non-bipartite
// graph returns -infinity. Throws invalid_input for non-degenerate models.
double degenerate_free_energy(const CanonicalModel& model, const MultiGraph& graph);

// Spec literal {"psi":{"++":..,"+-":..,"--":..},"psi_bar":{"+":..,"-":..}}.
TwoSpinSpec parse_spec_json(const std::string& text);
std::string spec_to_json(const TwoSpinSpec& spec);

std::ostream& operator<<(std::ostream& os, const CanonicalModel& model);

} // namespace spinlab
