#include "mcbif/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace mcbif {

const char* to_string(NormKind k)
{
    switch (k) {
    case NormKind::X: return "X";
    case NormKind::D12: return "D12";
    case NormKind::L2g: return "L2g";
    }
    return "?";
}

void orient_principal(std::vector<double>& u)
{
    std::size_t imax = 0;
    for (std::size_t i = 1; i < u.size(); ++i)
        if (std::abs(u[i]) > std::abs(u[imax])) imax = i;
    if (u[imax] < 0.0)
        for (auto& x : u) x = -x;
}

void orient_first_nonzero(std::vector<double>& u)
{
    double mx = 0.0;
    for (double x : u) mx = std::max(mx, std::abs(x));
    for (double x : u)
        if (std::abs(x) > 1e-8 * mx) {
            if (x < 0.0)
                for (auto& y : u) y = -y;
            return;
        }
}

namespace {

EigenSolution solve_generic(const BandMatrixLD& K, const Weight& g, const XNormConfig& cfg, double eps,
                            std::size_t m, NormKind norm, const EigenOptions& opt)
{
    const RadialGrid& grid = *g.grid();
    const BandMatrixLD B = gram_l2g_ld(g);
    PencilOptions popt = opt.pencil;
    if (!opt.warm.empty()) popt.warm = opt.warm;
    const PencilResult pr = solve_pencil(K, B, m, grid.quad_w, popt);

    EigenSolution sol;
    sol.negative_mass_directions = pr.negative_mass_directions;
    sol.residual_target_met = pr.residual_target_met;
    sol.iterations = pr.iterations;
    for (std::size_t k = 0; k < pr.values.size(); ++k) {
        std::vector<double> v = pr.vectors[k];
        std::vector<double> oriented = v;
        if (k == 0)
            orient_principal(oriented);
        else
            orient_first_nonzero(oriented);
        const bool flipped = !v.empty() && oriented != v;
        v = std::move(oriented);
        const double nrm2 = norm == NormKind::X ? ip_x(grid, cfg, v, v)
                            : norm == NormKind::D12 ? ip_d12(grid, v, v)
                                                    : ip_l2g(grid, g.values.values, v, v);
        if (!(nrm2 > 0.0)) throw EigenBreakdownError("eigen: eigenfield with non-positive norm");
        const long double inv = (flipped ? -1.0L : 1.0L) / std::sqrt(static_cast<long double>(nrm2));
        EigenPair p;
        p.u_ext = pr.vectors_ext[k];
        for (auto& x : p.u_ext) x *= inv;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(p.u_ext[i]);
        p.lambda = pr.values[k];
        p.u = Field(g.grid(), std::move(v));
        p.norm_used = norm;
        p.weight = g;
        p.xcfg = cfg;
        p.eps = eps;
        p.residual = pr.residuals[k];
        p.stored_residual = pr.stored_residuals[k];
        sol.pairs.push_back(std::move(p));
    }
    return sol;
}

} // namespace

BandMatrixLD perturbed_stiffness(const RadialGrid& grid, const XNormConfig& cfg, double eps)
{
    const BandMatrixLD X = gram_x_ld(grid, cfg);
    BandMatrixLD K(grid.n, X.lower(), X.upper());
    K.add_scaled(eps, X);
    K.add_scaled(1.0L, gram_d12_ld(grid));
    return K;
}

EigenSolution solve_unperturbed(const Weight& g, std::size_t m, const EigenOptions& opt)
{
    if (m < 1) throw std::invalid_argument("solve_unperturbed: m must be >= 1");
    return solve_generic(gram_d12_ld(*g.grid()), g, XNormConfig{}, 0.0, m, NormKind::D12, opt);
}

EigenSolution solve_perturbed(const Weight& g, const XNormConfig& cfg, double eps, std::size_t m,
                              const EigenOptions& opt)
{
    if (m < 1) throw std::invalid_argument("solve_perturbed: m must be >= 1");
    if (!(eps >= 0.0)) throw std::invalid_argument(fmt::format("solve_perturbed: eps = {} < 0", eps));
    cfg.validate();
    const RadialGrid& grid = *g.grid();
    const BandMatrixLD K = eps > 0.0 ? perturbed_stiffness(grid, cfg, eps) : gram_d12_ld(grid);
    EigenSolution sol = solve_generic(K, g, cfg, eps, m, NormKind::X, opt);
    sol.gram_x_ill_conditioned = eps > 0.0 && gram_x_ill_conditioned(grid, cfg);
    return sol;
}

EigenSolution solve_aux(const Weight& g, const XNormConfig& cfg, std::size_t m, const EigenOptions& opt)
{
    if (m < 1) throw std::invalid_argument("solve_aux: m must be >= 1");
    if (!g.strictly_positive()) throw std::invalid_argument("solve_aux: weight must be strictly positive");
    cfg.validate();
    EigenSolution sol = solve_generic(gram_x_ld(*g.grid(), cfg), g, cfg, 0.0, m, NormKind::X, opt);
    sol.gram_x_ill_conditioned = gram_x_ill_conditioned(*g.grid(), cfg);
    return sol;
}

EigenPair principal_x_normalized(const Weight& g, const XNormConfig& cfg)
{
    EigenPair p = solve_unperturbed(g, 1).pairs.at(0);
    const double nx = norm_x(cfg, p.u);
    for (auto& x : p.u.values) x /= nx;
    for (auto& x : p.u_ext) x /= nx;
    p.norm_used = NormKind::X;
    p.xcfg = cfg;
    return p;
}

double sstar_formula(double lambda0, double lambda2, double u0_l2g_sq, double delta)
{
    if (!(delta > 0.0) || !(2.0 * delta < lambda2 - lambda0))
        throw std::invalid_argument(fmt::format(
            "s*: delta = {} violates 0 < 2 delta < lambda2 - lambda0 = {}", delta, lambda2 - lambda0));
    return (lambda2 - lambda0 - 2.0 * delta) * u0_l2g_sq / (1.0 + delta);
}

double estimate_sstar(const Weight& g0, const XNormConfig& cfg, double delta)
{
    cfg.validate();
    const EigenSolution sol = solve_unperturbed(g0, 2);
    Field u0 = sol.pairs[0].u;
    const double nx = norm_x(cfg, u0);
    for (auto& x : u0.values) x /= nx;
    return sstar_formula(sol.pairs[0].lambda, sol.pairs[1].lambda, ip_l2g(g0, u0, u0), delta);
}

EigenCurve trace_curve(const Weight& g, const XNormConfig& cfg, const std::vector<double>& eps_list,
                       const TraceOptions& opt)
{
    cfg.validate();
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!(eps_list[k] >= 0.0))
            throw std::invalid_argument(fmt::format("trace_curve: eps[{}] = {} is negative", k, eps_list[k]));
        if (k > 0 && eps_list[k] > eps_list[k - 1])
            throw std::invalid_argument("trace_curve: eps list must be sorted descending");
    }
    const RadialGrid& grid = *g.grid();

    EigenCurve c;
    c.xcfg = cfg;
    c.delta = opt.delta;
    const EigenSolution base = solve_unperturbed(g, 2, opt.eigen);
    c.lambda0 = base.pairs[0].lambda;
    c.lambda0_second = base.pairs[1].lambda;
    c.u0 = base.pairs[0];
    {
        const double nx = norm_x(cfg, c.u0.u);
        for (auto& x : c.u0.u.values) x /= nx;
        c.u0.norm_used = NormKind::X;
        c.u0.xcfg = cfg;
    }
    const Field& u0 = c.u0.u;
    const double u0_g = ip_l2g(g, u0, u0);
    c.kappa0 = 1.0 / u0_g;

    if (g.strictly_positive()) {
        const EigenSolution aux = solve_aux(g, cfg, opt.aux_count, opt.eigen);
        for (const auto& p : aux.pairs) c.aux_values.push_back(p.lambda);
        for (std::size_t i = 0; i < c.aux_values.size(); ++i) {
            if (std::abs(c.kappa0 - c.aux_values[i]) <= opt.exceptional_tol * c.kappa0) {
                c.exceptional = true;
                c.exceptional_index = i;
            }
        }
        if (!c.exceptional)
            for (std::size_t i = 0; i + 1 < c.aux_values.size(); ++i)
                if (c.aux_values[i] < c.kappa0 && c.kappa0 < c.aux_values[i + 1]) c.aux_bracket = i;
    } else {
        c.warnings.push_back("weight not strictly positive: auxiliary problem skipped");
    }

    try {
        c.sstar = sstar_formula(c.lambda0, c.lambda0_second, u0_g, opt.delta);
    } catch (const std::invalid_argument& e) {
        c.sstar = std::numeric_limits<double>::quiet_NaN();
        c.warnings.push_back(e.what());
    }

    std::vector<double> warm;
    for (double eps : eps_list) {
        if (std::isfinite(c.sstar) && eps >= c.sstar)
            c.warnings.push_back(fmt::format("eps = {} is not below s* = {}", eps, c.sstar));
        EigenOptions eo = opt.eigen;
        if (opt.warm_start && !warm.empty()) eo.warm = {warm};
        EigenCurveSample smp;
        smp.eps = eps;
        smp.xcfg = cfg;
        // eps = 0 is the unperturbed problem itself: phi(0) = (lambda0, u0) exactly
        smp.pair = eps == 0.0 ? c.u0 : solve_perturbed(g, cfg, eps, 1, eo).pairs.at(0);
        auto& u = smp.pair.u.values;

        double alpha = eps == 0.0 ? 1.0 : ip_x(grid, cfg, u, u0.values);
        if (alpha < 0.0) {
            for (auto& x : u) x = -x;
            alpha = -alpha;
        }
        std::vector<double> eta(grid.n), xi(grid.n), diff(grid.n);
        for (std::size_t i = 0; i < grid.n; ++i) eta[i] = u[i] - alpha * u0[i];
        const double beta = ip_l2g(grid, g.values.values, eta, u0.values) / u0_g;
        for (std::size_t i = 0; i < grid.n; ++i) {
            xi[i] = eta[i] - beta * u0[i];
            diff[i] = u[i] - u0[i];
        }
        smp.alpha = alpha;
        smp.beta = beta;
        smp.beta_cross = -ip_x(grid, cfg, u0.values, xi);
        smp.eta_norm_x_sq = ip_x(grid, cfg, eta, eta);
        smp.xi_norm_d12_sq = ip_d12(grid, xi, xi);
        smp.xi_norm_l2g_sq = ip_l2g(grid, g.values.values, xi, xi);
        smp.kappa = eps > 0.0 ? (smp.pair.lambda - c.lambda0) / eps : c.kappa0;
        smp.identity_norm = std::abs(alpha * alpha + smp.eta_norm_x_sq - 1.0);
        smp.identity_kappa =
            eps > 0.0 ? std::abs(smp.kappa * (alpha + beta) - c.kappa0 * alpha) / (c.kappa0 * alpha) : 0.0;
        smp.identity_410 = std::abs((smp.xi_norm_d12_sq - smp.pair.lambda * smp.xi_norm_l2g_sq) -
                                    eps * (alpha * beta - smp.eta_norm_x_sq));
        smp.u_minus_u0_x = std::sqrt(std::max(0.0, ip_x(grid, cfg, diff, diff)));

        if (smp.identity_kappa > opt.identity_abort)
            throw CurveIdentityError(
                fmt::format("trace_curve: kappa(alpha+beta) = kappa0 alpha violated at eps = {} "
                            "(relative defect {})",
                            eps, smp.identity_kappa),
                eps);
        warm = u;
        c.samples.push_back(std::move(smp));
    }
    return c;
}

SimplicityReport check_simplicity(const EigenPair& pair, const std::vector<EigenPair>& all_pairs)
{
    SimplicityReport rep;
    const RadialGrid& grid = *pair.u.grid;
    const auto& gv = pair.weight.values.values;
    const auto& u = pair.u.values;
    const double uu = std::abs(ip_l2g(grid, gv, u, u));

    bool seen_self = false;
    double next = std::numeric_limits<double>::infinity();
    for (const auto& q : all_pairs) {
        require_same_grid(pair.u, q.u, "check_simplicity");
        if (!seen_self && q.lambda == pair.lambda && q.u.values == u) {
            seen_self = true;
            continue;
        }
        const double vv = std::abs(ip_l2g(grid, gv, q.u.values, q.u.values));
        const double cosv = std::abs(ip_l2g(grid, gv, u, q.u.values)) / std::sqrt(uu * vv);
        const bool same_value = std::abs(q.lambda - pair.lambda) <= 1e-10 * std::abs(pair.lambda);
        if (same_value && cosv >= 1.0 - 1e-8) {
            rep.duplicate_found = true;
            continue;
        }
        rep.max_orthogonality_defect = std::max(rep.max_orthogonality_defect, cosv);
        if (q.lambda > pair.lambda) next = std::min(next, q.lambda);
    }
    rep.orthogonal = rep.max_orthogonality_defect <= 1e-8;
    rep.gap = next - pair.lambda;
    rep.gap_positive = std::isfinite(rep.gap) && rep.gap > 0.0;

    // residual of the null vector in extended precision when available: the
    // double-rounded field carries an O(eps / h^2K) residual floor for X Grams
    const BandMatrixLD K = pair.eps > 0.0 ? perturbed_stiffness(grid, pair.xcfg, pair.eps) : gram_d12_ld(grid);
    std::vector<long double> ue(u.begin(), u.end());
    if (pair.u_ext.size() == grid.n) ue = pair.u_ext;
    const auto Ku = K.multiply(ue);
    const auto Bu = gram_l2g_ld(pair.weight).multiply(ue);
    long double rr = 0.0L, kk = 0.0L, bb = 0.0L;
    for (std::size_t i = 0; i < grid.n; ++i) {
        const long double ri = Ku[i] - pair.lambda * Bu[i];
        rr += ri * ri / grid.quad_w[i];
        kk += Ku[i] * Ku[i] / grid.quad_w[i];
        bb += Bu[i] * Bu[i] / grid.quad_w[i];
    }
    rep.null_residual = static_cast<double>(std::sqrt(rr) / (std::sqrt(kk) + std::abs(pair.lambda) * std::sqrt(bb)));
    rep.rhs_projection = ip_x(grid, pair.xcfg, u, u);
    rep.algebraically_simple = rep.rhs_projection > 0.0 && rep.null_residual <= 1e-8;
    return rep;
}

} // namespace mcbif
