#include "mcbif/cli.hpp"

#include <cmath>
#include <iostream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "mcbif/io.hpp"

namespace mcbif {

using nlohmann::ordered_json;

namespace {

ordered_json run_meta(const std::string& command, const RunConfig& cfg)
{
    ordered_json m;
    m["command"] = command;
    m["config"] = cfg.canonical();
    const auto g = cfg.make_grid();
    m["grid"] = {{"n", g->n}, {"L", g->L}, {"h", g->h}, {"map", "r = L s / (1 - s)"}};
    m["xnorm"] = {{"order", cfg.xnorm_order}};
    m["seed"] = cfg.seed;
    return m;
}

// Runs f, turning any exception into a StageError naming `stage`.
template <class F>
auto stage(const char* name, F&& f)
{
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

} // namespace

std::vector<std::string> cmd_eigen(const RunConfig& cfg, const CommandFlags&)
{
    const auto g = cfg.make_grid();
    const Weight h = reference_h(g);
    const auto sol = stage("eigen solve", [&] { return solve_unperturbed(h, cfg.eigen_m, cfg.eigen_options()); });

    OutputDir out(cfg.output_dir);
    std::string csv = "index,lambda\n";
    for (std::size_t k = 0; k < sol.pairs.size(); ++k) csv += fmt::format("{},{}\n", k, fmt17(sol.pairs[k].lambda));
    out.write("eigenvalues.csv", csv);
    for (std::size_t k = 0; k < sol.pairs.size(); ++k)
        out.write(fmt::format("eigenfield_{}.csv", k), field_csv(sol.pairs[k].u));
    out.write("weight.csv", field_csv(h.values, h.provenance));

    auto meta = run_meta("eigen", cfg);
    ordered_json pairs = ordered_json::array();
    for (const auto& p : sol.pairs)
        pairs.push_back({{"lambda", p.lambda},
                         {"residual", json_real(p.residual)},
                         {"stored_residual", json_real(p.stored_residual)},
                         {"normalization", "D12"}});
    meta["results"] = {{"pairs", pairs},
                       {"residual_target_met", sol.residual_target_met},
                       {"iterations", sol.iterations},
                       {"tolerances", {{"eigen", cfg.tol.eigen}, {"eigen_residual", cfg.tol.eigen_residual}}}};
    out.finish(meta);
    return out.files();
}

std::vector<std::string> cmd_perturb(const RunConfig& cfg, const CommandFlags&)
{
    if (cfg.perturb_eps.empty()) throw ConfigError("perturb.eps_values", "eps list is empty");
    const auto g = cfg.make_grid();
    const Weight h = reference_h(g);
    TraceOptions topt;
    topt.delta = cfg.perturb_delta;
    topt.eigen = cfg.eigen_options();
    const EigenCurve c = stage("trace_curve", [&] { return trace_curve(h, cfg.xnorm(), cfg.perturb_eps, topt); });

    OutputDir out(cfg.output_dir);
    std::string csv = "eps,lambda,alpha,beta,kappa,eta_norm_x_sq\n";
    for (const auto& s : c.samples)
        csv += fmt::format("{},{},{},{},{},{}\n", fmt17(s.eps), fmt17(s.pair.lambda), fmt17(s.alpha), fmt17(s.beta),
                           fmt17(s.kappa), fmt17(s.eta_norm_x_sq));
    out.write("curve.csv", csv);

    bool all_pass = true;
    ordered_json samples = ordered_json::array();
    const double bound2 = c.lambda0_second - c.delta;
    for (const auto& s : c.samples) {
        ordered_json chk;
        auto put = [&](const char* name, bool ok, double value) {
            chk[name] = {{"pass", ok}, {"value", json_real(value)}};
            all_pass = all_pass && ok;
        };
        put("norm_identity", s.identity_norm <= cfg.tol.identity, s.identity_norm);
        if (s.eps > 0.0) {
            put("kappa_identity", s.identity_kappa <= cfg.tol.kappa_identity, s.identity_kappa);
            put("kappa_positive", s.kappa > 0.0, s.kappa);
            put("kappa_le_kappa0", s.kappa <= c.kappa0 * (1.0 + 1e-10), s.kappa - c.kappa0);
            if (c.exceptional) {
                // affine curve: eta = 0 and beta = 0 replace the strict inequality
                const double d = std::max(std::abs(s.beta), s.eta_norm_x_sq);
                put("exceptional_degenerate", d <= 1e-8, d);
            } else {
                put("eta_lt_alpha_beta", s.eta_norm_x_sq < s.alpha * s.beta, s.alpha * s.beta - s.eta_norm_x_sq);
            }
            const double slack = 1e-12 * c.lambda0;
            put("eigbound", s.pair.lambda >= c.lambda0 - slack && s.pair.lambda <= c.lambda0 + s.eps * c.kappa0 + slack,
                s.pair.lambda - c.lambda0);
            if (s.eps <= c.sstar) put("below_second_minus_delta", s.pair.lambda <= bound2, bound2 - s.pair.lambda);
        } else {
            put("trivial_decomposition", s.alpha == 1.0 && s.beta == 0.0, std::abs(s.alpha - 1.0) + std::abs(s.beta));
        }
        samples.push_back({{"eps", s.eps}, {"checks", chk}});
    }
    ordered_json checks = {{"all_pass", all_pass},
                           {"lambda0", c.lambda0},
                           {"lambda0_second", c.lambda0_second},
                           {"kappa0", c.kappa0},
                           {"sstar", c.sstar},
                           {"delta", c.delta},
                           {"exceptional", c.exceptional},
                           {"aux_values", c.aux_values},
                           {"warnings", c.warnings},
                           {"samples", samples}};
    out.write_json("checks.json", checks);

    auto meta = run_meta("perturb", cfg);
    meta["results"] = {{"all_pass", all_pass}, {"samples", c.samples.size()}};
    out.finish(meta);
    return out.files();
}

std::vector<std::string> cmd_continue(const RunConfig& cfg, const CommandFlags& flags)
{
    const ContinuationOptions opt = cfg.continuation();
    try {
        opt.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("continuation", e.what());
    }
    const DiscreteProblem dp = [&] {
        try {
            return DiscreteProblem(cfg.problem());
        } catch (const std::exception& e) {
            throw ConfigError("problem", e.what());
        }
    }();
    const Branch b = stage("continuation", [&] { return continue_branch(dp, opt, cfg.eigen_options()); });

    OutputDir out(cfg.output_dir);
    std::string csv = "step,lambda,arclength,u_norm_x,u_norm_d12,min_u,max_u,residual\n";
    for (const auto& p : b.points)
        csv += fmt::format("{},{},{},{},{},{},{},{}\n", p.step_index, fmt17(p.lambda), fmt17(p.arclength),
                           fmt17(p.u_norm_x), fmt17(p.u_norm_d12), fmt17(p.min_u), fmt17(p.max_u),
                           fmt17(p.residual_norm));
    out.write("branch.csv", csv);
    if (flags.dump_fields)
        for (const auto& p : b.points) out.write(fmt::format("field_{:05d}.csv", p.step_index), field_csv(p.u));

    const auto alt = detect_alternative(b);
    const auto anomalies = monitor_positivity(b, opt.positivity_tol);
    auto meta = run_meta("continue", cfg);
    ordered_json an = ordered_json::array();
    for (const auto& a : anomalies) an.push_back({{"step", a.step}, {"min_u", a.min_u}, {"max_u", a.max_u}});
    meta["results"] = {
        {"termination", to_string(b.termination)},
        {"lambda_star", b.termination_data ? json_real(*b.termination_data) : ordered_json(nullptr)},
        {"note", b.note},
        {"lambda_start", b.lambda_start},
        {"points", b.points.size()},
        {"alternative", to_string(alt.kind)},
        {"nearest_eigenvalue", alt.nearest_eigenvalue ? ordered_json(*alt.nearest_eigenvalue) : ordered_json(nullptr)},
        {"matches_eigenvalue", alt.matches_eigenvalue},
        {"positivity_anomalies", an},
        {"csv_columns", "step,lambda,arclength,u_norm_x,u_norm_d12,min_u,max_u,residual"}};
    out.finish(meta);
    return out.files();
}

std::vector<std::string> cmd_study(const RunConfig& cfg, const CommandFlags&)
{
    if (cfg.study_parameter == "theta" && cfg.eps != 0.0)
        throw ConfigError("problem.eps", fmt::format("a theta study requires problem.eps = 0 (got {})", cfg.eps));
    if (cfg.study_values.empty()) throw ConfigError("study.values", "value list is empty");
    const StudyConfig sc = cfg.study();
    const StudyReport rep = stage("study", [&] {
        return cfg.study_parameter == "eps" ? eps_limit_study(sc, cfg.study_values)
                                            : theta_limit_study(sc, cfg.study_values);
    });

    OutputDir out(cfg.output_dir);
    std::string dcsv = "index,value_a,value_b,distance\n";
    for (std::size_t k = 0; k < rep.distances.size(); ++k)
        dcsv += fmt::format("{},{},{},{}\n", k, fmt17(rep.entries[k].value), fmt17(rep.entries[k + 1].value),
                            fmt17(rep.distances[k]));
    out.write("distances.csv", dcsv);
    // eps study: the branch leaves the trivial line at lambda_0eps itself
    std::string bcsv = "value,lambda_start,bifurcation_lambda\n";
    for (const auto& e : rep.entries)
        bcsv += fmt::format("{},{},{}\n", fmt17(e.value), fmt17(e.lambda_start),
                            fmt17(rep.parameter == "eps" ? e.lambda_start : e.bif_lambda));
    out.write("bifurcation.csv", bcsv);

    ordered_json entries = ordered_json::array();
    for (const auto& e : rep.entries) {
        ordered_json j = {{"value", e.value},
                          {"ok", e.ok},
                          {"error", e.error},
                          {"lambda_start", e.lambda_start},
                          {"points", e.branch.points.size()},
                          {"points_in_ball", e.points_in_ball},
                          {"termination", e.ok ? to_string(e.branch.termination) : "none"}};
        if (rep.parameter == "eps") {
            j["eigbound"] = e.eigbound;
            j["eigbound_ok"] = e.eigbound_ok;
        } else {
            j["bif_lambda"] = e.bif_lambda;
            j["bif_ok"] = e.bif_ok;
            j["h_term_ratio"] = json_real(e.h_term_ratio);
            j["rayleigh_defect"] = json_real(e.rayleigh_defect);
        }
        entries.push_back(j);
    }
    ordered_json dist = ordered_json::array();
    for (double d : rep.distances) dist.push_back(json_real(d));
    ordered_json sj = {{"parameter", rep.parameter},
                       {"lambda0", rep.lambda0},
                       {"u0_l2h_sq", rep.u0_l2h_sq},
                       {"R", rep.R},
                       {"R_cont", rep.R_cont},
                       {"tolerance", rep.tolerance},
                       {"distances", dist},
                       {"insufficient", rep.insufficient},
                       {"distances_nonincreasing", rep.distances_nonincreasing},
                       {"converged", rep.converged},
                       {"bifurcation_monotone", rep.bifurcation_monotone},
                       {"bifurcation_ok", rep.bifurcation_ok},
                       {"bif_tolerance", rep.bif_tolerance},
                       {"entries", entries},
                       {"notes", rep.notes}};
    out.write_json("study.json", sj);

    auto meta = run_meta("study", cfg);
    meta["results"] = {{"converged", rep.converged}, {"insufficient", rep.insufficient}};
    out.finish(meta);
    return out.files();
}

int run_cli(int argc, char** argv)
{
    CLI::App app{"mcbif: bifurcation from the principal eigenvalue of a radial mean curvature problem"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    bool dump = false;
    std::uint64_t seed = 0;
    bool seed_given = false;

    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"eigen", "principal and higher eigenpairs of the weighted problem"},
             {"perturb", "perturbed principal curve over perturb.eps_values"},
             {"continue", "continue the branch bifurcating from (lambda_0eps, 0)"},
             {"study", "eps or theta limit study of the branches"}}) {
        auto* sub = app.add_subcommand(name, help);
        sub->allow_extras();
        sub->add_option("--config", config_path, "config file with flat 'key = value' lines");
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_flag("--dump-fields", dump, "write the field of every branch point");
        sub->add_option("--seed", seed, "seed recorded for randomized sampling")->each([&](const std::string&) {
            seed_given = true;
        });
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    CLI::App* sub = nullptr;
    for (auto* s : subs)
        if (s->parsed()) sub = s;

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        std::vector<std::pair<std::string, std::string>> kv;
        for (const auto& x : sub->remaining()) {
            if (x.rfind("--", 0) != 0 || x.find('=') == std::string::npos)
                throw ConfigError(x, "unexpected argument (overrides are written --key=value)");
            const auto eq = x.find('=');
            kv.emplace_back(x.substr(2, eq - 2), x.substr(eq + 1));
        }
        apply_overrides(cfg, kv);
        if (!out_dir.empty()) set_config_value(cfg, "output.dir", out_dir);
        if (seed_given) cfg.seed = seed;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }

    const CommandFlags flags{dump};
    try {
        std::vector<std::string> files;
        const std::string cmd = sub->get_name();
        if (cmd == "eigen") files = cmd_eigen(cfg, flags);
        else if (cmd == "perturb") files = cmd_perturb(cfg, flags);
        else if (cmd == "continue") files = cmd_continue(cfg, flags);
        else files = cmd_study(cfg, flags);
        std::cout << fmt::format("{}: wrote {} files + manifest.json to {}\n", cmd, files.size(), cfg.output_dir);
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const StageError& e) {
        std::cerr << "solver error in " << e.what() << "\n";
        return exit_solver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver;
    }
}

} // namespace mcbif
