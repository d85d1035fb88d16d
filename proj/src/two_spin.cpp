#include "spinlab/two_spin.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "spinlab/errors.hpp"
#include "spinlab/graph.hpp"

namespace spinlab {

namespace {

constexpr int kMinus = 0;
constexpr int kPlus = 1;

bool near_zero(double x) { return std::abs(x) <= kZeroPsiTolerance; }

} // namespace

void TwoSpinSpec::validate() const {
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            if (!std::isfinite(psi[a][b]) || psi[a][b] < 0) {
                throw invalid_input("psi entries must be finite and nonnegative");
            }
        }
        if (!std::isfinite(psi_bar[a]) || psi_bar[a] <= 0) {
            throw invalid_input("psi_bar entries must be finite and strictly positive");
        }
    }
    if (psi[kPlus][kMinus] != psi[kMinus][kPlus]) {
        throw invalid_input("psi must be symmetric");
    }
    if (near_zero(psi[kPlus][kPlus]) && near_zero(psi[kMinus][kMinus]) &&
        near_zero(psi[kPlus][kMinus])) {
        throw invalid_input("psi is identically zero");
    }
}

TwoSpinSpec ising_spec(double beta, double field) {
    TwoSpinSpec s;
    s.psi[kPlus][kPlus] = std::exp(beta);
    s.psi[kMinus][kMinus] = std::exp(beta);
    s.psi[kPlus][kMinus] = s.psi[kMinus][kPlus] = std::exp(-beta);
    s.psi_bar[kPlus] = std::exp(field);
    s.psi_bar[kMinus] = std::exp(-field);
    return s;
}

TwoSpinSpec hardcore_spec(double lambda) {
    if (!(lambda > 0) || !std::isfinite(lambda)) {
        throw invalid_input("hard-core lambda must be positive and finite");
    }
    TwoSpinSpec s;
    s.psi[kPlus][kPlus] = 0.0;
    s.psi[kPlus][kMinus] = s.psi[kMinus][kPlus] = 1.0;
    s.psi[kMinus][kMinus] = 1.0;
    s.psi_bar[kPlus] = lambda;
    s.psi_bar[kMinus] = 1.0;
    return s;
}

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::ising: return "ising";
        case ModelKind::hard_core: return "hard_core";
        case ModelKind::degenerate_agree: return "degenerate_agree";
        case ModelKind::degenerate_disagree: return "degenerate_disagree";
    }
    return "?";
}

double CanonicalModel::edge_weight(Spin a, Spin b) const {
    const int sa = spin_value(a), sb = spin_value(b);
    switch (kind) {
        case ModelKind::ising:
            return std::exp(beta * sa * sb);
        case ModelKind::hard_core:
            return (a == Spin::plus && b == Spin::plus) ? 0.0 : 1.0;
        case ModelKind::degenerate_agree:
            if (a != b) return 0.0;
            return std::exp(field * (sa + sb) / d);
        case ModelKind::degenerate_disagree:
            return a == b ? 0.0 : 1.0;
    }
    return 0.0;
}

double CanonicalModel::vertex_weight(Spin a) const {
    switch (kind) {
        case ModelKind::ising:
            return std::exp(field * spin_value(a));
        case ModelKind::hard_core:
            return a == Spin::plus ? lambda : 1.0;
        default:
            return 1.0;
    }
}

CanonicalModel ising_model(double beta, double field, int d) {
    if (d < 3) throw invalid_input("degree must be at least 3");
    if (!std::isfinite(beta) || !std::isfinite(field)) {
        throw invalid_input("ising parameters must be finite");
    }
    CanonicalModel m;
    m.kind = ModelKind::ising;
    m.beta = beta;
    m.field = field;
    m.d = d;
    return m;
}

CanonicalModel hardcore_model(double lambda, int d) {
    if (d < 3) throw invalid_input("degree must be at least 3");
    if (!(lambda > 0) || !std::isfinite(lambda)) {
        throw invalid_input("hard-core lambda must be positive and finite");
    }
    CanonicalModel m;
    m.kind = ModelKind::hard_core;
    m.lambda = lambda;
    m.d = d;
    return m;
}

TwoSpinSpec absorb_vertex_weights(const TwoSpinSpec& spec, int d) {
    spec.validate();
    if (d < 3) throw invalid_input("degree must be at least 3");
    TwoSpinSpec out = spec;
    for (int a = 0; a < 2; ++a) {
        for (int b = a; b < 2; ++b) {
            // one rounding order for both triangles so symmetry is exact
            const double scaled = spec.psi[a][b] *
                                  (std::pow(spec.psi_bar[a], 1.0 / d) *
                                   std::pow(spec.psi_bar[b], 1.0 / d));
            out.psi[a][b] = scaled;
            out.psi[b][a] = scaled;
        }
    }
    out.psi_bar = {1.0, 1.0};
    return out;
}

CanonicalModel classify(const TwoSpinSpec& spec, int d) {
    spec.validate();
    if (d < 3) throw invalid_input("degree must be at least 3");
    if (std::abs(spec.psi_bar[kPlus] - 1.0) > 1e-9 ||
        std::abs(spec.psi_bar[kMinus] - 1.0) > 1e-9) {
        throw invalid_input("classify expects unit vertex weights; absorb them first");
    }

    double pp = spec.psi[kPlus][kPlus];
    double mm = spec.psi[kMinus][kMinus];
    double pm = spec.psi[kPlus][kMinus];
    if (near_zero(pp)) pp = 0.0;
    if (near_zero(mm)) mm = 0.0;
    if (near_zero(pm)) pm = 0.0;

    CanonicalModel m;
    m.d = d;

    if (pm == 0.0) {
        if (pp == 0.0 || mm == 0.0) {
            // Perfect agreement with only one allowed spin: the (B, B0)
            // parametrization needs an infinite field. Rejected rather than
            // classified.
            throw invalid_input(
                "one-sided agreement spec (psi(+,-) = 0 and a zero diagonal) has no "
                "finite canonical form");
        }
        m.kind = ModelKind::degenerate_agree;
        m.field = d * std::log(pp / mm) / 4.0;
        m.b0 = std::log(pp * mm) / 2.0;
        return m;
    }

    if (pp > 0.0 && mm > 0.0) {
        m.kind = ModelKind::ising;
        m.field = d * std::log(pp / mm) / 4.0;
        m.beta = std::log(pp * mm / (pm * pm)) / 4.0;
        m.b0 = std::log(pp * pm * pm * mm) / 4.0;
        return m;
    }

    if (pp == 0.0 && mm == 0.0) {
        m.kind = ModelKind::degenerate_disagree;
        m.b0 = std::log(pm);
        return m;
    }

    // Exactly one zero diagonal: the hard-core family, with +/- relabeled so
    // the excluded spin is +.
    m.kind = ModelKind::hard_core;
    const double diag = pp > 0.0 ? pp : mm;
    m.spins_flipped = pp > 0.0;
    m.lambda = std::pow(pm / diag, d);
    m.b0 = std::log(diag);
    return m;
}

CanonicalModel canonicalize(const TwoSpinSpec& spec, int d) {
    return classify(absorb_vertex_weights(spec, d), d);
}

double degenerate_free_energy(const CanonicalModel& model, const MultiGraph& graph) {
    if (!model.degenerate()) {
        throw invalid_input("degenerate_free_energy needs a degenerate model");
    }
    if (graph.n <= 0) throw invalid_input("empty graph");
    graph.check_edge_endpoints();

    const std::vector<int> comp = graph.components();
    int ncomp = 0;
    for (int c : comp) ncomp = std::max(ncomp, c + 1);
    const double edge_term = model.b0 * graph.edge_count() / graph.n;

    if (model.kind == ModelKind::degenerate_disagree) {
        // Each bipartite component contributes exactly two proper 2-colorings;
        // any odd structure (including a self-loop) kills the whole sum.
        std::vector<int8_t> side(graph.n, 0);
        std::vector<std::vector<int>> adj = graph.adjacency();
        for (int s = 0; s < graph.n; ++s) {
            if (side[s] != 0) continue;
            side[s] = 1;
            std::vector<int> stack{s};
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                for (int u : adj[v]) {
                    if (side[u] == 0) {
                        side[u] = -side[v];
                        stack.push_back(u);
                    } else if (side[u] == side[v]) {
                        return -std::numeric_limits<double>::infinity();
                    }
                }
            }
        }
        for (const auto& [u, v] : graph.edges) {
            if (u == v) return -std::numeric_limits<double>::infinity();
        }
        return edge_term + std::log(2.0) * ncomp / graph.n;
    }

    // degenerate_agree: all spins agree within a component. A component with
    // edge multiset E_j collects exp(+-2 B |E_j| / d), which on d-regular
    // components equals the per-vertex field exp(+-B |C_j|) exactly.
    std::vector<int> comp_edges(ncomp, 0);
    for (const auto& [u, v] : graph.edges) {
        ++comp_edges[comp[u]];
    }
    double acc = 0.0;
    for (int j = 0; j < ncomp; ++j) {
        const double a = 2.0 * model.field * comp_edges[j] / model.d;
        // log(e^a + e^-a), stable for either sign
        acc += std::abs(a) + std::log1p(std::exp(-2.0 * std::abs(a)));
    }
    return edge_term + acc / graph.n;
}

TwoSpinSpec parse_spec_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("bad spec JSON: ") + e.what());
    }
    if (!j.contains("psi") || !j["psi"].is_object()) {
        throw invalid_input("spec JSON needs a psi object");
    }
    TwoSpinSpec s;
    try {
        s.psi[kPlus][kPlus] = j["psi"].at("++").get<double>();
        s.psi[kPlus][kMinus] = s.psi[kMinus][kPlus] = j["psi"].at("+-").get<double>();
        s.psi[kMinus][kMinus] = j["psi"].at("--").get<double>();
        if (j.contains("psi_bar")) {
            s.psi_bar[kPlus] = j["psi_bar"].at("+").get<double>();
            s.psi_bar[kMinus] = j["psi_bar"].at("-").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("bad spec JSON: ") + e.what());
    }
    s.validate();
    return s;
}

std::string spec_to_json(const TwoSpinSpec& spec) {
    nlohmann::json j;
    j["psi"]["++"] = spec.psi[kPlus][kPlus];
    j["psi"]["+-"] = spec.psi[kPlus][kMinus];
    j["psi"]["--"] = spec.psi[kMinus][kMinus];
    j["psi_bar"]["+"] = spec.psi_bar[kPlus];
    j["psi_bar"]["-"] = spec.psi_bar[kMinus];
    return j.dump();
}

std::ostream& operator<<(std::ostream& os, const CanonicalModel& model) {
    os << to_string(model.kind) << "(d=" << model.d;
    switch (model.kind) {
        case ModelKind::ising:
            os << ", beta=" << model.beta << ", B=" << model.field;
            break;
        case ModelKind::hard_core:
            os << ", lambda=" << model.lambda;
            if (model.spins_flipped) os << ", flipped";
            break;
        case ModelKind::degenerate_agree:
            os << ", B=" << model.field;
            break;
        case ModelKind::degenerate_disagree:
            break;
    }
    if (model.b0 != 0.0) os << ", B0=" << model.b0;
    return os << ")";
}

} // namespace spinlab
