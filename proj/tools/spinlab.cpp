// Command-line front end. Every subcommand prints one JSON object:
//   {"command", "inputs", "outputs", "wall_time_s", "seed"}
// and exits 0 on success, 2 on invalid input, 3 on a capacity limit, 4 when a
// randomized search or construction fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinlab/bethe.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/graph.hpp"
#include "spinlab/reduction.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/sampler.hpp"
#include "spinlab/tree.hpp"
#include "spinlab/two_spin.hpp"

using nlohmann::json;
using namespace spinlab;

namespace {

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw invalid_input(std::string("could not parse ") + what + " from '" + s + "'");
    }
}

CanonicalModel parse_model(const std::string& text, int d) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "hardcore") {
        return hardcore_model(parse_double(rest, "lambda"), d);
    }
    if (head == "ising") {
        const auto c2 = rest.find(':');
        const double beta = parse_double(rest.substr(0, c2), "beta");
        const double field = c2 == std::string::npos ? 0.0 : parse_double(rest.substr(c2 + 1), "field");
        return ising_model(beta, field, d);
    }
    if (head == "spec") {
        std::ifstream f(rest);
        if (!f) throw invalid_input("could not open spec file '" + rest + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return canonicalize(parse_spec_json(ss.str()), d);
    }
    throw invalid_input("model must be hardcore:L, ising:B[:H], or spec:file.json");
}

json model_json(const CanonicalModel& m) {
    json j{{"kind", to_string(m.kind)}, {"d", m.d}, {"b0", m.b0}, {"spins_flipped", m.spins_flipped}};
    if (m.kind == ModelKind::hard_core) j["lambda"] = m.lambda;
    if (m.kind == ModelKind::ising) {
        j["beta"] = m.beta;
        j["field"] = m.field;
    }
    if (m.kind == ModelKind::degenerate_agree) j["field"] = m.field;
    return j;
}

json message_json(const Message& m) {
    return json{{"p_plus", m.p_plus}, {"q", m.q()}, {"t", m.t()}};
}

json fixed_points_json(const FixedPoints& fp) {
    return json{{"star", message_json(fp.star)},
                {"plus", message_json(fp.plus)},
                {"minus", message_json(fp.minus)},
                {"unique", fp.unique},
                {"gprime_at_star", fp.gprime_at_star},
                {"near_critical", fp.near_critical}};
}

const char* maximizer_name(BetheMaximizer m) {
    switch (m) {
        case BetheMaximizer::star: return "star";
        case BetheMaximizer::alternating_pair: return "alternating_pair";
        default: return "sign_of_field";
    }
}

struct Emitter {
    std::string command;
    json inputs;
    std::optional<std::uint64_t> seed;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void print(const json& outputs, bool pretty) const {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json j{{"command", command}, {"inputs", inputs}, {"outputs", outputs}, {"wall_time_s", secs}};
        if (seed) j["seed"] = *seed;
        else j["seed"] = nullptr;
        std::cout << j.dump(pretty ? 2 : -1) << "\n";
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-spin toolkit: tree thresholds, Bethe values, gadget "
                 "certification, exact partition values, Glauber chains, and "
                 "the partition-to-MAX-CUT reduction"};
    app.name("spinlab");
    app.require_subcommand(1);

    bool pretty = false;
    double tol = 1e-12;
    int threads = 0;
    app.add_flag("--pretty", pretty, "indent the JSON output");
    app.add_option("--tol", tol, "internal consistency-check tolerance")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = SPINLAB_THREADS or hardware)")
        ->capture_default_str();

    std::string model_text;
    int d = 3;

    auto add_model = [&](CLI::App* sub, bool need_model = true) {
        auto* o = sub->add_option("--model,-m", model_text, "hardcore:L | ising:B[:H] | spec:file.json");
        if (need_model) o->required();
        sub->add_option("--d", d, "regular degree")->capture_default_str();
    };

    // threshold -------------------------------------------------------------
    auto* c_threshold = app.add_subcommand("threshold", "uniqueness thresholds for the model class");
    add_model(c_threshold);

    // fixpoints -------------------------------------------------------------
    auto* c_fix = app.add_subcommand("fixpoints", "tree recursion fixed points and root marginals");
    add_model(c_fix);

    // bethe -----------------------------------------------------------------
    auto* c_bethe = app.add_subcommand("bethe", "Bethe free energy, pair constants, observables");
    add_model(c_bethe);

    // gen ---------------------------------------------------------------------
    auto* c_gen = app.add_subcommand("gen", "graph generators (text format on request)");
    std::string gen_kind, gen_out;
    int gen_n = 0, gen_k = 0, gen_b = 0;
    std::uint64_t gen_seed = 1;
    c_gen->add_option("--kind", gen_kind, "config | cover | gadget | cycle | complete | biclique")
        ->required();
    c_gen->add_option("--n", gen_n, "vertex count (per side for cover/biclique)")->required();
    c_gen->add_option("--d", d, "regular degree")->capture_default_str();
    c_gen->add_option("--k", gen_k, "gadget deletion count");
    c_gen->add_option("--n2", gen_b, "second side for biclique");
    c_gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
    c_gen->add_option("--out", gen_out, "write the graph text here instead of embedding it");

    // expand ------------------------------------------------------------------
    auto* c_exp = app.add_subcommand("expand", "edge-expansion certificate for vertex windows");
    std::string exp_graph;
    double exp_delta = 0.05, exp_gamma = 0.6, exp_lambda = 0.5;
    std::uint64_t exp_seed = 1;
    int exp_tree_depth = -1;
    c_exp->add_option("--graph", exp_graph, "graph text file")->required();
    c_exp->add_option("--delta", exp_delta, "window lower fraction")->capture_default_str();
    c_exp->add_option("--gamma", exp_gamma, "window upper fraction")->capture_default_str();
    c_exp->add_option("--lambda", exp_lambda, "required boundary-to-size ratio")->capture_default_str();
    c_exp->add_option("--seed", exp_seed, "hill-climb seed (large graphs)")->capture_default_str();
    c_exp->add_option("--tree-depth", exp_tree_depth, "also report the locally-tree-like fraction");

    // partition ---------------------------------------------------------------
    auto* c_part = app.add_subcommand("partition", "exact partition values and phase split");
    std::string part_graph;
    std::vector<int> part_marginals;
    std::vector<double> part_ref;
    int part_phase = 0;
    bool part_joint = false;
    c_part->add_option("--graph", part_graph, "graph text file")->required();
    add_model(c_part);
    c_part->add_option("--marginals", part_marginals, "conditional marginals on these vertices")
        ->delimiter(',');
    c_part->add_option("--phase", part_phase, "condition on the phase (+1 or -1)");
    c_part->add_option("--ref", part_ref, "reference product law for ratio diagnostics")
        ->delimiter(',');
    c_part->add_flag("--joint", part_joint, "emit the conditional joint law");

    // sample --------------------------------------------------------------------
    auto* c_samp = app.add_subcommand("sample", "single-site heat-bath chain");
    std::string samp_graph, samp_init = "all-minus";
    std::uint64_t samp_steps = 1000, samp_burn = 100, samp_seed = 1;
    int samp_thin = 1;
    std::vector<int> samp_watch;
    c_samp->add_option("--graph", samp_graph, "graph text file")->required();
    add_model(c_samp);
    c_samp->add_option("--steps", samp_steps, "recorded sweeps")->capture_default_str();
    c_samp->add_option("--burn", samp_burn, "discarded sweeps")->capture_default_str();
    c_samp->add_option("--thin", samp_thin, "record every thin-th sweep")->capture_default_str();
    c_samp->add_option("--seed", samp_seed, "chain seed")->capture_default_str();
    c_samp->add_option("--init", samp_init, "all-minus | phase-plus | phase-minus | random")
        ->capture_default_str();
    c_samp->add_option("--watch", samp_watch, "vertices whose occupation to track")->delimiter(',');

    // maxcut ---------------------------------------------------------------------
    auto* c_cut = app.add_subcommand("maxcut", "exact MAX-CUT by exhaustive scan");
    std::string cut_graph;
    c_cut->add_option("--graph", cut_graph, "graph text file")->required();

    // reduce ---------------------------------------------------------------------
    auto* c_red = app.add_subcommand("reduce", "partition-to-MAX-CUT pipeline on H");
    std::string red_h;
    int red_n = 0, red_k = 1;
    double red_eps = 0.9;
    std::uint64_t red_seed = 1;
    c_red->add_option("--hgraph", red_h, "3-regular simple graph text file")->required();
    add_model(c_red);
    c_red->add_option("--n", red_n, "gadget half-size (cover side)")->required();
    c_red->add_option("--k", red_k, "crossing-group multiplicity")->capture_default_str();
    c_red->add_option("--eps", red_eps, "certification target")->capture_default_str();
    c_red->add_option("--seed", red_seed, "search seed")->capture_default_str();

    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion") {
            return app.exit(e);
        }
        std::cout << json{{"error", e.what()}}.dump() << "\n";
        return 2;
    }

    Emitter out;
    ExactOptions exact_opts;
    exact_opts.threads = threads;
    try {
        if (*c_threshold) {
            out.command = "threshold";
            out.inputs = {{"model", model_text}, {"d", d}};
            const auto model = parse_model(model_text, d);
            const auto fp = find_fixed_points(model);
            json o{{"model", model_json(model)},
                   {"unique", fp.unique},
                   {"near_critical", fp.near_critical}};
            if (model.kind == ModelKind::hard_core) {
                o["lambda_c"] = lambda_c(model.d);
            } else if (model.beta < 0) {
                o["beta_c_af"] = beta_c_af(model.field, model.d);
            } else if (model.beta > 0) {
                const auto bc = b_c_ferro(model.beta, model.d);
                o["b_c_ferro"] = bc ? json(*bc) : json(nullptr);
            }
            out.print(o, pretty);
        } else if (*c_fix) {
            out.command = "fixpoints";
            out.inputs = {{"model", model_text}, {"d", d}};
            const auto model = parse_model(model_text, d);
            const auto fp = find_fixed_points(model);
            const auto rm = root_marginals(model, fp);
            json o = fixed_points_json(fp);
            o["model"] = model_json(model);
            o["root_marginals"] = {{"mu_plus_occ", rm.mu_plus_occ},
                                   {"mu_minus_occ", rm.mu_minus_occ},
                                   {"magnetization_gap", rm.magnetization_gap}};
            out.print(o, pretty);
        } else if (*c_bethe) {
            out.command = "bethe";
            out.inputs = {{"model", model_text}, {"d", d}};
            const auto model = parse_model(model_text, d);
            const auto fp = find_fixed_points(model);
            const auto br = bethe_free_energy(model, fp);
            const auto pc = pair_constants(model, fp);
            json o{{"model", model_json(model)},
                   {"phi", br.phi},
                   {"phi_vx", br.phi_vx},
                   {"phi_e", br.phi_e},
                   {"phi_star", br.phi_star},
                   {"maximizer", maximizer_name(br.maximizer)},
                   {"tie_at_zero_field", br.tie_at_zero_field},
                   {"pair", {{"gamma", pc.gamma}, {"theta", pc.theta}, {"ratio", pc.ratio}}},
                   {"field_derivative_observable", field_derivative_observable(model, fp)}};
            out.print(o, pretty);
        } else if (*c_gen) {
            out.command = "gen";
            out.seed = gen_seed;
            out.inputs = {{"kind", gen_kind}, {"n", gen_n}, {"d", d},
                          {"k", gen_k},       {"seed", gen_seed}};
            MultiGraph g;
            json extra;
            if (gen_kind == "config") {
                g = configuration_model(gen_n, d, gen_seed);
            } else if (gen_kind == "cover") {
                bool found = false;
                for (int i = 0; i < 1000 && !found; ++i) {
                    const auto parent = configuration_model(gen_n, d, derive_seed(gen_seed, i));
                    if (parent.is_simple()) {
                        g = double_cover(parent);
                        extra["parent_attempts"] = i + 1;
                        found = true;
                    }
                }
                if (!found) throw search_failure("no simple parent graph in 1000 draws");
            } else if (gen_kind == "gadget") {
                const auto gadget = make_gadget(gen_n, d, gen_k, gen_seed);
                g = gadget.graph;
                extra["gadget"] = json::parse(gadget.to_json());
            } else if (gen_kind == "cycle") {
                g = cycle_graph(gen_n);
                out.seed.reset();
            } else if (gen_kind == "complete") {
                g = complete_graph(gen_n);
                out.seed.reset();
            } else if (gen_kind == "biclique") {
                g = complete_bipartite(gen_n, gen_b > 0 ? gen_b : gen_n);
                out.seed.reset();
            } else {
                throw invalid_input("unknown generator kind '" + gen_kind + "'");
            }
            json o{{"n", g.n}, {"edges", g.edges.size()}, {"simple", g.is_simple()}};
            for (auto& [key, val] : extra.items()) o[key] = val;
            if (gen_out.empty()) {
                o["graph_text"] = graph_to_text(g);
            } else {
                save_graph_file(g, gen_out);
                o["path"] = gen_out;
            }
            out.print(o, pretty);
        } else if (*c_exp) {
            out.command = "expand";
            out.seed = exp_seed;
            out.inputs = {{"graph", exp_graph}, {"delta", exp_delta},  {"gamma", exp_gamma},
                          {"lambda", exp_lambda}, {"seed", exp_seed}};
            const auto g = load_graph_file(exp_graph);
            const auto rep = expansion_check(g, exp_delta, exp_gamma, exp_lambda, exp_seed);
            json o = json::parse(rep.to_json());
            if (exp_tree_depth >= 0) o["local_tree_fraction"] = local_tree_fraction(g, exp_tree_depth);
            out.print(o, pretty);
        } else if (*c_part) {
            out.command = "partition";
            out.inputs = {{"graph", part_graph}, {"model", model_text}, {"d", d}};
            const auto g = load_graph_file(part_graph);
            const auto model = parse_model(model_text, d);
            exact_opts.want_marginals = false;
            const auto summary = log_partition(g, model, exact_opts);
            json o = json::parse(summary.to_json());
            o["model"] = model_json(model);
            if (summary.log_z_plus && summary.log_z_minus) {
                const double residual =
                    std::abs(log_add_exp(*summary.log_z_plus, *summary.log_z_minus) - summary.log_z);
                o["phase_split_residual"] = residual;
                o["phase_split_consistent"] = residual <= tol;
            }
            if (model.degenerate()) o["degenerate_phi"] = degenerate_free_energy(model, g);
            if (part_phase != 0 && part_marginals.empty()) {
                throw invalid_input("--phase conditioning needs --marginals");
            }
            if (!part_marginals.empty()) {
                const auto cm = conditional_marginals(
                    g, model, part_marginals,
                    part_phase == 0 ? std::nullopt : std::optional<int>(part_phase), part_ref,
                    part_joint, exact_opts);
                json m{{"vertices", part_marginals}, {"p_plus", cm.p_plus}};
                if (cm.joint) m["joint"] = *cm.joint;
                if (cm.max_joint_ratio) m["max_joint_ratio"] = *cm.max_joint_ratio;
                if (cm.min_joint_ratio) m["min_joint_ratio"] = *cm.min_joint_ratio;
                o["conditional"] = m;
            }
            out.print(o, pretty);
        } else if (*c_samp) {
            out.command = "sample";
            out.seed = samp_seed;
            out.inputs = {{"graph", samp_graph}, {"model", model_text}, {"d", d},
                          {"steps", samp_steps}, {"burn", samp_burn},   {"thin", samp_thin},
                          {"seed", samp_seed},   {"init", samp_init}};
            const auto g = load_graph_file(samp_graph);
            const auto model = parse_model(model_text, d);
            ChainConfig cfg;
            cfg.steps = samp_steps;
            cfg.burn_in = samp_burn;
            cfg.thin = samp_thin;
            cfg.seed = samp_seed;
            cfg.watch = samp_watch;
            if (samp_init == "all-minus") cfg.init = ChainInit::all_minus;
            else if (samp_init == "phase-plus") cfg.init = ChainInit::phase_plus;
            else if (samp_init == "phase-minus") cfg.init = ChainInit::phase_minus;
            else if (samp_init == "random") cfg.init = ChainInit::random_state;
            else throw invalid_input("unknown chain init '" + samp_init + "'");
            const auto stats = run_chain(g, model, cfg);
            out.print(json::parse(stats.to_json()), pretty);
        } else if (*c_cut) {
            out.command = "maxcut";
            out.inputs = {{"graph", cut_graph}};
            const auto g = load_graph_file(cut_graph);
            out.print(json{{"maxcut", maxcut_bruteforce(g, threads)}}, pretty);
        } else if (*c_red) {
            out.command = "reduce";
            out.seed = red_seed;
            out.inputs = {{"hgraph", red_h}, {"model", model_text}, {"d", d},     {"n", red_n},
                          {"k", red_k}, {"eps", red_eps},      {"seed", red_seed}};
            const auto h = load_graph_file(red_h);
            const auto model = parse_model(model_text, d);
            const auto res = run_reduction(h, model, red_n, red_k, red_eps, red_seed, exact_opts);
            out.print(json::parse(res.to_json()), pretty);
        }
    } catch (const invalid_input& e) {
        std::cout << json{{"command", out.command}, {"error", e.what()}}.dump() << "\n";
        return 2;
    } catch (const capacity_error& e) {
        std::cout << json{{"command", out.command}, {"error", e.what()}}.dump() << "\n";
        return 3;
    } catch (const search_failure& e) {
        std::cout << json{{"command", out.command}, {"error", e.what()}}.dump() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cout << json{{"command", out.command}, {"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
