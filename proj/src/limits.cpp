#include "mcbif/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mcbif/parallel.hpp"

namespace mcbif {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

bool nonincreasing(const std::vector<double>& v, std::size_t last_k)
{
    if (v.empty()) return false;
    const std::size_t from = v.size() > last_k ? v.size() - last_k : 0;
    for (std::size_t k = from + 1; k < v.size(); ++k)
        if (!(v[k] <= v[k - 1])) return false;
    return std::all_of(v.begin() + static_cast<std::ptrdiff_t>(from), v.end(),
                       [](double d) { return std::isfinite(d); });
}

} // namespace

std::vector<SamplePoint> truncate_to_ball(const Branch& b, double center, double R)
{
    std::vector<SamplePoint> out;
    for (const auto& pt : b.points) {
        const double dl = pt.lambda - center;
        if (std::sqrt(pt.u_norm_x * pt.u_norm_x + dl * dl) <= R) out.push_back({pt.lambda, pt.u});
    }
    return out;
}

double hausdorff_distance(const std::vector<SamplePoint>& a, const std::vector<SamplePoint>& b,
                          const XNormConfig& cfg)
{
    if (a.empty() || b.empty()) return inf;
    const GridPtr& grid = a.front().u.grid;
    for (const auto* set : {&a, &b})
        for (const auto& p : *set)
            if (!p.u.grid || !p.u.grid->same_as(*grid))
                throw GridMismatchError("hausdorff_distance: branches live on different grids");

    const BandMatrix G = gram_x(*grid, cfg);
    auto prep = [&](const std::vector<SamplePoint>& s, std::vector<std::vector<double>>& Gu, std::vector<double>& nn) {
        for (const auto& p : s) {
            Gu.push_back(G.multiply(p.u.values));
            nn.push_back(dot(p.u.values, Gu.back()));
        }
    };
    std::vector<std::vector<double>> Ga, Gb;
    std::vector<double> na, nb;
    prep(a, Ga, na);
    prep(b, Gb, nb);

    // squared distance; the expanded form cancels for nearby points, so
    // close pairs are recomputed from the difference
    auto d2 = [&](std::size_t i, std::size_t j) {
        const double dl = a[i].lambda - b[j].lambda;
        double du = na[i] + nb[j] - 2.0 * dot(a[i].u.values, Gb[j]);
        if (du < 1e-6 * (na[i] + nb[j])) {
            std::vector<double> diff(a[i].u.values);
            for (std::size_t t = 0; t < diff.size(); ++t) diff[t] -= b[j].u.values[t];
            du = std::sqrt(std::max(0.0, ip_x(*grid, cfg, diff, diff)));
            du *= du;
        }
        return dl * dl + std::max(0.0, du);
    };

    std::vector<double> best_b(b.size(), inf);
    double h_ab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double best = inf;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = d2(i, j);
            best = std::min(best, d);
            best_b[j] = std::min(best_b[j], d);
        }
        h_ab = std::max(h_ab, best);
    }
    const double h_ba = *std::max_element(best_b.begin(), best_b.end());
    return std::sqrt(std::max(h_ab, h_ba));
}

double hausdorff_distance(const Branch& a, const Branch& b, double center, double R)
{
    if (a.problem.xcfg.order != b.problem.xcfg.order)
        throw std::invalid_argument("hausdorff_distance: branches use different X norms");
    return hausdorff_distance(truncate_to_ball(a, center, R), truncate_to_ball(b, center, R), a.problem.xcfg);
}

// ---------------------------------------------------------------------------

namespace {

struct Base {
    double lambda0 = 0.0;
    double u0_l2h_sq = 0.0;
};

Base unperturbed_base(const Weight& h, const XNormConfig& cfg)
{
    const EigenPair p = principal_x_normalized(h, cfg);
    return {p.lambda, ip_l2g(h, p.u, p.u)};
}

RegularizedProblem make_problem(const StudyConfig& cfg, double theta, double eps)
{
    RegularizedProblem p;
    p.weight = reference_h(cfg.grid);
    p.theta = theta;
    p.eps = eps;
    p.flux = cfg.flux;
    p.xcfg = cfg.xcfg;
    return p;
}

void run_entries(StudyReport& rep, const StudyConfig& cfg, bool eps_param)
{
    parallel_for(rep.entries.size(), [&](std::size_t k) {
        StudyEntry& e = rep.entries[k];
        try {
            const double theta = eps_param ? cfg.theta : e.value;
            const double eps = eps_param ? e.value : cfg.eps;
            DiscreteProblem dp(make_problem(cfg, theta, eps));
            const auto& p = dp.problem();
            const double l0e = solve_perturbed(p.weight, p.xcfg, p.eps, 1).pairs.at(0).lambda;
            ContinuationOptions co = cfg.cont;
            co.R = cfg.R + std::abs(l0e - rep.lambda0) + 2.0 * co.ds_max;
            e.branch = continue_branch(dp, co);
            e.lambda_start = e.branch.lambda_start;
            e.ok = true;
            if (e.branch.termination == Termination::corrector_failure)
                e.error = "corrector failure: " + e.branch.note;
        } catch (const std::exception& ex) {
            e.ok = false;
            e.error = ex.what();
        }
    });
}

} // namespace

void finish_study(StudyReport& rep, const StudyConfig& cfg)
{
    rep.R = cfg.R;
    rep.tolerance = cfg.tol_factor * cfg.R;
    rep.insufficient = rep.entries.size() < 3;
    double rc = cfg.R;
    for (auto& e : rep.entries) {
        if (!e.ok) continue;
        e.points_in_ball = truncate_to_ball(e.branch, rep.lambda0, cfg.R).size();
        rc = std::max(rc, cfg.R + std::abs(e.lambda_start - rep.lambda0) + 2.0 * cfg.cont.ds_max);
    }
    rep.R_cont = rc;
    rep.distances.clear();
    for (std::size_t k = 0; k + 1 < rep.entries.size(); ++k) {
        const auto& a = rep.entries[k];
        const auto& b = rep.entries[k + 1];
        rep.distances.push_back(a.ok && b.ok ? hausdorff_distance(a.branch, b.branch, rep.lambda0, cfg.R) : inf);
    }
    if (rep.insufficient) {
        rep.notes.push_back(fmt::format("insufficient: {} parameter values (need >= 3)", rep.entries.size()));
        rep.converged = false;
        rep.distances_nonincreasing = false;
        return;
    }
    rep.distances_nonincreasing = nonincreasing(rep.distances, 3);
    rep.converged = rep.distances_nonincreasing && rep.distances.back() <= rep.tolerance;
}

StudyReport eps_limit_study(const StudyConfig& cfg, const std::vector<double>& eps_values)
{
    if (!cfg.grid) throw std::invalid_argument("eps_limit_study: no grid");
    for (std::size_t k = 0; k < eps_values.size(); ++k) {
        if (!(eps_values[k] >= 0.0)) throw std::invalid_argument("eps_limit_study: eps values must be >= 0");
        if (k > 0 && !(eps_values[k] < eps_values[k - 1]))
            throw std::invalid_argument("eps_limit_study: eps values must be strictly descending");
    }
    StudyReport rep;
    rep.parameter = "eps";
    const Weight h = reference_h(cfg.grid);
    const Base base = unperturbed_base(h, cfg.xcfg);
    rep.lambda0 = base.lambda0;
    rep.u0_l2h_sq = base.u0_l2h_sq;
    for (double v : eps_values) rep.entries.emplace_back().value = v;
    run_entries(rep, cfg, true);

    // bifurcation points: lambda0 <= lambda_0eps <= lambda0 + eps/|u0|^2, nonincreasing toward lambda0
    double prev = inf;
    for (auto& e : rep.entries) {
        if (!e.ok) {
            rep.bifurcation_ok = false;
            continue;
        }
        e.eigbound = e.value / base.u0_l2h_sq;
        const double slack = 1e-10 * base.lambda0;
        e.eigbound_ok = e.lambda_start >= base.lambda0 - slack && e.lambda_start <= base.lambda0 + e.eigbound + slack;
        rep.bifurcation_ok = rep.bifurcation_ok && e.eigbound_ok;
        if (e.lambda_start > prev + 1e-12 * base.lambda0) rep.bifurcation_monotone = false;
        prev = e.lambda_start;
    }
    finish_study(rep, cfg);
    return rep;
}

StudyReport theta_limit_study(const StudyConfig& cfg, const std::vector<double>& theta_values)
{
    if (!cfg.grid) throw std::invalid_argument("theta_limit_study: no grid");
    if (cfg.eps != 0.0)
        throw std::invalid_argument(fmt::format("theta_limit_study: requires eps = 0 (got {})", cfg.eps));
    for (std::size_t k = 0; k < theta_values.size(); ++k) {
        if (!(theta_values[k] > 0.0)) throw std::invalid_argument("theta_limit_study: theta values must be > 0");
        if (k > 0 && !(theta_values[k] < theta_values[k - 1]))
            throw std::invalid_argument("theta_limit_study: theta values must be strictly descending");
    }
    StudyReport rep;
    rep.parameter = "theta";
    const Weight h = reference_h(cfg.grid);
    const Base base = unperturbed_base(h, cfg.xcfg);
    rep.lambda0 = base.lambda0;
    rep.u0_l2h_sq = base.u0_l2h_sq;
    // 3 is the continuum value; the grid reproduces it to ~1e-5, well inside this
    rep.bif_tolerance = 3e-3;
    for (double v : theta_values) rep.entries.emplace_back().value = v;
    run_entries(rep, cfg, false);

    const auto& grid = *cfg.grid;
    for (auto& e : rep.entries) {
        if (!e.ok || e.branch.points.size() < 2) {
            rep.bifurcation_ok = false;
            e.bif_ok = false;
            continue;
        }
        e.bif_lambda = e.branch.points[1].lambda;
        e.bif_ok = std::abs(e.bif_lambda - 3.0) <= rep.bif_tolerance;
        rep.bifurcation_ok = rep.bifurcation_ok && e.bif_ok;

        // normalized Rayleigh identity on the small-amplitude points
        DiscreteProblem dp(make_problem(cfg, e.value, 0.0));
        for (const auto& pt : e.branch.points) {
            if (pt.step_index == 0 || pt.u_norm_x > 1e-3) continue;
            const auto& u = pt.u.values;
            const Field du = differentiate(pt.u);
            const double d12 = ip_d12(grid, u, u);
            double hterm = 0.0, lin = 0.0;
            for (std::size_t i = 0; i < grid.n; ++i) {
                const double H = eval_H_point(pt.lambda, h.values[i], u[i], du.deriv->d1[i], du.deriv->d2[i]);
                const double u2 = u[i] * u[i];
                hterm += grid.quad_w[i] * H * u2 / (u2 + e.value) * u[i];
                lin += grid.quad_w[i] * h.values[i] * u2;
            }
            hterm /= d12;
            lin *= pt.lambda / d12;
            e.h_term_ratio = std::max(e.h_term_ratio, std::abs(hterm) / lin);
            e.rayleigh_defect = std::max(e.rayleigh_defect, std::abs(1.0 - lin - hterm));
            ++e.h_term_samples;
        }
    }
    finish_study(rep, cfg);
    return rep;
}

// ---------------------------------------------------------------------------

Weight constructed_weight(const Weight& h, const BranchPoint& pt, double theta)
{
    if (pt.lambda == 0.0) throw std::invalid_argument("constructed_weight: lambda = 0");
    if (!(theta > 0.0)) throw std::invalid_argument("constructed_weight: theta must be > 0");
    require_same_grid(h.values, pt.u, "constructed_weight");
    const Field du = differentiate(pt.u);
    const Field H = eval_H(h, pt.lambda, du);
    std::vector<double> g(h.values.values);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double u = pt.u[i];
        g[i] += H[i] * u / (u * u + theta) / pt.lambda;
    }
    return Weight(WeightKind::constructed, Field(h.grid(), std::move(g)),
                  fmt::format("constructed from branch step {} (lambda = {:.17g}, |u|_X = {:.17g}, theta = {:.17g})",
                              pt.step_index, pt.lambda, pt.u_norm_x, theta));
}

double lp_norm(const Field& f, double p)
{
    const auto& g = *f.grid;
    double s = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) s += g.quad_w[i] * std::pow(std::abs(f[i]), p);
    return std::pow(s, 1.0 / p);
}

WeightCheckReport weight_sequence_eigencheck(const StudyReport& family, double theta_fixed, double amplitude_fraction,
                                             double tol)
{
    WeightCheckReport rep;
    rep.tolerance = tol;
    const StudyEntry* first = nullptr;
    for (const auto& e : family.entries)
        if (e.ok) {
            first = &e;
            break;
        }
    if (!first) {
        rep.notes.push_back("no usable branch in the family");
        rep.hypothesis_met = false;
        return rep;
    }
    const Weight h = first->branch.problem.weight;
    const EigenPair ref = solve_unperturbed(h, 1).pairs.at(0);
    rep.lambda0 = ref.lambda;
    double u0max = 0.0;
    for (double x : ref.u.values) u0max = std::max(u0max, std::abs(x));

    const double a0 = amplitude_fraction * family.R;
    rep.entries.resize(family.entries.size());
    parallel_for(family.entries.size(), [&](std::size_t k) {
        const StudyEntry& fe = family.entries[k];
        WeightCheckEntry& we = rep.entries[k];
        we.value = fe.value;
        we.target_amplitude = a0 * fe.value / first->value;
        try {
            if (!fe.ok) throw std::runtime_error("branch unavailable: " + fe.error);
            const BranchPoint* best = nullptr;
            for (const auto& pt : fe.branch.points)
                if (pt.step_index > 0 &&
                    (!best || std::abs(pt.u_norm_x - we.target_amplitude) < std::abs(best->u_norm_x - we.target_amplitude)))
                    best = &pt;
            if (!best) throw std::runtime_error("branch has no nontrivial point");
            const double theta = family.parameter == "theta" ? fe.value : theta_fixed;
            const Weight g = constructed_weight(h, *best, theta);
            we.step = best->step_index;
            we.amplitude = best->u_norm_x;
            we.lambda_branch = best->lambda;
            we.weight_positive = g.strictly_positive();
            Field diff = g.values;
            for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= h.values[i];
            we.weight_minus_h_l32 = lp_norm(diff, 1.5);
            const EigenPair v = solve_unperturbed(g, 1).pairs.at(0);
            we.lambda = v.lambda;
            we.lambda_distance = std::abs(v.lambda - ref.lambda);
            double fd = 0.0;
            for (std::size_t i = 0; i < v.u.size(); ++i) fd = std::max(fd, std::abs(v.u[i] - ref.u[i]));
            we.field_distance = fd / u0max;
            we.ok = true;
        } catch (const std::exception& ex) {
            we.ok = false;
            we.error = ex.what();
        }
    });

    std::vector<double> amps, ld, fdist;
    for (const auto& we : rep.entries) {
        if (!we.ok) continue;
        amps.push_back(we.amplitude);
        ld.push_back(we.lambda_distance);
        fdist.push_back(we.field_distance);
    }
    if (ld.size() < 2) {
        rep.notes.push_back("fewer than two usable entries");
        rep.hypothesis_met = false;
        return rep;
    }
    rep.hypothesis_met = nonincreasing(amps, amps.size()) && amps.back() < amps.front();
    if (!rep.hypothesis_met) rep.notes.push_back("hypothesis u* = 0 not met: chosen branch-point norms do not shrink");
    rep.distances_decreasing = nonincreasing(ld, ld.size()) && nonincreasing(fdist, fdist.size());
    rep.final_within_tol = ld.back() <= tol && fdist.back() <= tol;
    return rep;
}

// ---------------------------------------------------------------------------

ProbeReport compactness_probe(const Weight& g0, const std::vector<Weight>& gs, const XNormConfig& cfg, double delta,
                              std::size_t eps_points)
{
    if (eps_points < 2) throw std::invalid_argument("compactness_probe: need at least 2 eps points");
    ProbeReport rep;
    rep.delta = delta;
    rep.sstar = estimate_sstar(g0, cfg, delta); // rejects an invalid delta
    for (std::size_t k = 0; k < eps_points; ++k)
        rep.eps_grid.push_back(rep.sstar * static_cast<double>(eps_points - 1 - k) / static_cast<double>(eps_points - 1));

    TraceOptions topt;
    topt.delta = delta;
    const EigenCurve base = trace_curve(g0, cfg, rep.eps_grid, topt);
    rep.lambda0 = base.lambda0;
    rep.lambda0_second = base.lambda0_second;
    const double bound = base.lambda0_second - delta;
    const auto& grid = *g0.grid();

    rep.entries.resize(gs.size());
    parallel_for(gs.size(), [&](std::size_t n) {
        ProbeEntry& e = rep.entries[n];
        e.index = n;
        try {
            const EigenCurve c = trace_curve(gs[n], cfg, rep.eps_grid, topt);
            e.lambda_n0 = c.lambda0;
            e.exceptional = c.exceptional;
            e.mass_ratio_defect = std::abs(1.0 - c.kappa0 / base.kappa0);
            for (std::size_t k = 0; k < c.samples.size(); ++k) {
                const auto& s = c.samples[k];
                const auto& b = base.samples[k];
                e.max_lambda = std::max(e.max_lambda, s.pair.lambda);
                e.bound_ok = e.bound_ok && s.pair.lambda <= bound;
                if (s.eps > 0.0) e.kappa_ok = e.kappa_ok && s.kappa > 0.0 && s.kappa <= c.kappa0 * (1.0 + 1e-10);
                std::vector<double> du(s.pair.u.values);
                for (std::size_t i = 0; i < du.size(); ++i) du[i] -= b.pair.u[i];
                const double dl = s.pair.lambda - b.pair.lambda;
                e.curve_distance = std::max(e.curve_distance,
                                            std::sqrt(dl * dl + std::max(0.0, ip_x(grid, cfg, du, du))));
            }
        } catch (const std::exception& ex) {
            e.error = ex.what();
            e.bound_ok = e.kappa_ok = false;
            e.curve_distance = inf;
        }
    });

    std::vector<double> dist;
    for (const auto& e : rep.entries) {
        dist.push_back(e.curve_distance);
        rep.uniform_bound = rep.uniform_bound && e.bound_ok;
        rep.kappa_bounds = rep.kappa_bounds && e.kappa_ok;
    }
    rep.distances_decreasing = !dist.empty() && nonincreasing(dist, dist.size());

    // N(delta): first index from which every later entry meets both conditions
    rep.N_delta = gs.size();
    for (std::size_t k = gs.size(); k-- > 0;) {
        const auto& e = rep.entries[k];
        if (!e.error.empty() || !(std::abs(e.lambda_n0 - rep.lambda0) < delta) || !(e.mass_ratio_defect < delta)) break;
        rep.N_delta = k;
    }
    rep.N_capped = rep.N_delta == gs.size();
    if (rep.N_capped) rep.notes.push_back("N(delta) not reached within the sequence (capped at its length)");
    rep.notes.push_back("distance trends spot-check the converse direction only; compactness is not established");
    return rep;
}

} // namespace mcbif
