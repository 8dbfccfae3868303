#include "mcbif/nonlinear.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mcbif/eigen.hpp"

namespace mcbif {

const char* to_string(FluxKind k)
{
    switch (k) {
    case FluxKind::mean_curvature: return "mean_curvature";
    case FluxKind::relativistic: return "relativistic";
    case FluxKind::custom: return "custom";
    }
    return "?";
}

FluxKind flux_kind_from_string(const std::string& s)
{
    if (s == "mean_curvature") return FluxKind::mean_curvature;
    if (s == "relativistic") return FluxKind::relativistic;
    if (s == "custom") return FluxKind::custom;
    throw std::invalid_argument(fmt::format("unknown flux kind '{}'", s));
}

namespace {

double param(const std::map<std::string, double>& m, const char* key, double fallback)
{
    auto it = m.find(key);
    return it == m.end() ? fallback : it->second;
}

} // namespace

FluxFunctions FluxModel::functions() const
{
    switch (kind) {
    case FluxKind::mean_curvature:
        return {[](double, double, double p) { return std::sqrt(1.0 + p * p); },
                [](double, double, double) { return 0.0; },
                [](double, double, double p) { return p / std::sqrt(1.0 + p * p); },
                [](double, double, double) { return 0.0; }};
    case FluxKind::relativistic: {
        const double d = param(params, "delta", 1.0);
        const double c1 = param(params, "c1", 1.0);
        auto f = [d, c1](double, double u, double p) { return std::sqrt(d + u * u + c1 * c1 * p * p); };
        return {f, [f](double r, double u, double p) { return u / f(r, u, p); },
                [f, c1](double r, double u, double p) { return c1 * c1 * p / f(r, u, p); },
                [f](double r, double u, double p) { return p * p / f(r, u, p); }};
    }
    case FluxKind::custom:
        if (!custom.f || !custom.f_u || !custom.f_p || !custom.g)
            throw InvalidFluxError("custom flux: f, f_u, f_p and g must all be set");
        return custom;
    }
    throw InvalidFluxError("unknown flux kind");
}

double FluxModel::c() const
{
    switch (kind) {
    case FluxKind::mean_curvature: return 1.0;
    case FluxKind::relativistic: return std::sqrt(param(params, "delta", 1.0));
    case FluxKind::custom: return functions().f(0.0, 0.0, 0.0);
    }
    return 1.0;
}

void RegularizedProblem::validate() const
{
    if (!weight.grid()) throw std::invalid_argument("RegularizedProblem: weight has no grid");
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw std::invalid_argument(fmt::format("RegularizedProblem: theta = {} must be > 0", theta));
    if (!(eps >= 0.0) || !std::isfinite(eps))
        throw std::invalid_argument(fmt::format("RegularizedProblem: eps = {} must be >= 0", eps));
    xcfg.validate();
    if (flux.kind == FluxKind::relativistic) {
        if (!(param(flux.params, "delta", 1.0) > 0.0))
            throw std::invalid_argument("RegularizedProblem: flux.delta must be > 0");
    }
    if (!(flux.c() > 0.0)) throw InvalidFluxError("RegularizedProblem: f(x,0,0) must be > 0");
}

DiscreteProblem::DiscreteProblem(RegularizedProblem p)
    : p_(std::move(p)), st_(derivative_stencils(*p_.grid()))
{
    p_.validate();
    const RadialGrid& g = *p_.grid();
    K_ = p_.eps > 0.0 ? perturbed_stiffness(g, p_.xcfg, p_.eps).cast<double>() : gram_d12(g);
    mass_.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) mass_[i] = g.quad_w[i] * p_.weight.values[i];
}

// ---------------------------------------------------------------------------

double eval_H_point(double lambda, double h, double u, double p, double q)
{
    const double p2 = p * p;
    // p^2 / (1 + sqrt(1+p^2)) = sqrt(1+p^2) - 1 without the cancellation
    return lambda * h * u * p2 / (1.0 + std::sqrt(1.0 + p2)) - q * p2 / (1.0 + p2);
}

Field eval_H(const Weight& h, double lambda, const Field& u)
{
    if (!u.deriv) throw std::invalid_argument("eval_H: field has no derivatives (call differentiate first)");
    require_same_grid(h.values, u, "eval_H");
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        out[i] = eval_H_point(lambda, h.values[i], u[i], u.deriv->d1[i], u.deriv->d2[i]);
    return Field(u.grid, std::move(out));
}

Field theta_factor(const Field& u, double theta)
{
    if (!(theta > 0.0)) throw std::invalid_argument(fmt::format("theta_factor: theta = {} must be > 0", theta));
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double u2 = u[i] * u[i];
        out[i] = u2 / (u2 + theta);
    }
    return Field(u.grid, std::move(out));
}

namespace {

std::vector<double> linear_part(const DiscreteProblem& dp, double lambda_c, std::span<const double> u)
{
    std::vector<double> r = dp.stiffness().multiply(u);
    const auto& m = dp.mass_diag();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= lambda_c * m[i] * u[i];
    return r;
}

double tfac(double u, double theta)
{
    const double u2 = u * u;
    return u2 / (u2 + theta);
}

void check_size(const DiscreteProblem& dp, std::span<const double> u, const char* where)
{
    if (u.size() != dp.grid().n)
        throw GridMismatchError(fmt::format("{}: {} values on a grid with {} nodes", where, u.size(), dp.grid().n));
}

} // namespace

std::vector<double> residual(const DiscreteProblem& dp, double lambda, std::span<const double> u)
{
    check_size(dp, u, "residual");
    const auto& pr = dp.problem();
    std::vector<double> r = linear_part(dp, lambda, u);
    if (pr.linear_only) return r;
    const auto p = dp.stencils().P.multiply(u);
    const auto q = dp.stencils().Q.multiply(u);
    const auto& g = dp.grid();
    const auto& h = pr.weight.values.values;
    for (std::size_t i = 0; i < g.n; ++i)
        r[i] -= g.quad_w[i] * eval_H_point(lambda, h[i], u[i], p[i], q[i]) * tfac(u[i], pr.theta);
    return r;
}

Field residual(const RegularizedProblem& p, double lambda, const Field& u)
{
    require_same_grid(p.weight.values, u, "residual");
    DiscreteProblem dp(p);
    return Field(u.grid, residual(dp, lambda, u.values));
}

namespace {

// Jacobian of the nonlinear term by coloured central differences: the
// nonlinearity at node i only touches nodes i-1..i+1, so three colours
// recover the whole tridiagonal block.
BandMatrix fd_nonlinear_block(const DiscreteProblem& dp, double lambda, std::span<const double> u)
{
    const std::size_t n = u.size();
    const auto& g = dp.grid();
    const double theta = dp.problem().theta;
    BandMatrix out(n, 1, 1);
    std::vector<double> up(u.begin(), u.end()), um(u.begin(), u.end());
    for (std::size_t color = 0; color < 3; ++color) {
        std::vector<double> step(n, 0.0);
        for (std::size_t j = color; j < n; j += 3) {
            step[j] = 1e-7 * std::max(1.0, std::abs(u[j]));
            up[j] = u[j] + step[j];
            um[j] = u[j] - step[j];
        }
        const auto fp = flux_nonlinearity(dp, lambda, up);
        const auto fm = flux_nonlinearity(dp, lambda, um);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = fp[i] * tfac(up[i], theta) - fm[i] * tfac(um[i], theta);
            // the column perturbed in this colour that row i sees
            for (std::size_t j = i > 0 ? i - 1 : 0; j <= std::min(n - 1, i + 1); ++j)
                if (j % 3 == color) out.at(i, j) = g.quad_w[i] * d / (2.0 * step[j]);
        }
        for (std::size_t j = color; j < n; j += 3) up[j] = um[j] = u[j];
    }
    return out;
}

} // namespace

Linearization jacobian(const DiscreteProblem& dp, double lambda, std::span<const double> u)
{
    check_size(dp, u, "jacobian");
    const auto& pr = dp.problem();
    const auto& g = dp.grid();
    const std::size_t n = g.n;
    const double c = pr.flux.c();
    const std::size_t bw = std::max<std::size_t>(dp.stiffness().lower(), 1);

    Linearization lin{dp.stiffness().widened(bw, bw), std::vector<double>(n)};
    const auto& m = dp.mass_diag();
    for (std::size_t i = 0; i < n; ++i) {
        lin.J.add(i, i, -c * lambda * m[i]);
        lin.d_lambda[i] = -c * m[i] * u[i];
    }
    if (pr.linear_only) return lin;

    const auto& h = pr.weight.values.values;
    if (pr.flux.kind != FluxKind::mean_curvature) {
        lin.J.add_scaled(-1.0, fd_nonlinear_block(dp, lambda, u));
        const auto fns = pr.flux.functions();
        const auto p = dp.stencils().P.multiply(u);
        for (std::size_t i = 0; i < n; ++i) {
            const double f = fns.f(g.r[i], u[i], p[i]);
            lin.d_lambda[i] -= g.quad_w[i] * h[i] * u[i] * (f - c) * tfac(u[i], pr.theta);
        }
        return lin;
    }

    const auto& P = dp.stencils().P;
    const auto& Q = dp.stencils().Q;
    const auto p = P.multiply(u);
    const auto q = Q.multiply(u);
    for (std::size_t i = 0; i < n; ++i) {
        const double pi = p[i], p2 = pi * pi, ui = u[i];
        const double S = std::sqrt(1.0 + p2);
        const double sm1 = p2 / (1.0 + S);
        const double N = lambda * h[i] * ui * sm1 - q[i] * p2 / (1.0 + p2);
        const double N_u = lambda * h[i] * sm1;
        const double N_p = lambda * h[i] * ui * pi / S - q[i] * 2.0 * pi / ((1.0 + p2) * (1.0 + p2));
        const double N_q = -p2 / (1.0 + p2);
        const double u2 = ui * ui;
        const double T = u2 / (u2 + pr.theta);
        const double T_u = 2.0 * ui * pr.theta / ((u2 + pr.theta) * (u2 + pr.theta));
        const double w = g.quad_w[i];

        lin.J.add(i, i, -w * (N_u * T + N * T_u));
        for (std::size_t j = i > 0 ? i - 1 : 0; j <= std::min(n - 1, i + 1); ++j)
            lin.J.add(i, j, -w * T * (N_p * P(i, j) + N_q * Q(i, j)));
        lin.d_lambda[i] -= w * h[i] * ui * sm1 * T;
    }
    return lin;
}

Linearization jacobian(const RegularizedProblem& p, double lambda, const Field& u)
{
    require_same_grid(p.weight.values, u, "jacobian");
    DiscreteProblem dp(p);
    return jacobian(dp, lambda, u.values);
}

std::vector<double> flux_nonlinearity(const DiscreteProblem& dp, double lambda, std::span<const double> u)
{
    check_size(dp, u, "flux_nonlinearity");
    const auto& pr = dp.problem();
    const auto& g = dp.grid();
    const auto& h = pr.weight.values.values;
    const auto p = dp.stencils().P.multiply(u);
    const auto q = dp.stencils().Q.multiply(u);
    std::vector<double> out(g.n);
    if (pr.flux.kind == FluxKind::mean_curvature) {
        for (std::size_t i = 0; i < g.n; ++i) out[i] = eval_H_point(lambda, h[i], u[i], p[i], q[i]);
        return out;
    }
    const auto fns = pr.flux.functions();
    const double c = pr.flux.c();
    for (std::size_t i = 0; i < g.n; ++i) {
        const double r = g.r[i];
        const double f = fns.f(r, u[i], p[i]);
        if (!(f > 0.0) || !std::isfinite(f))
            throw InvalidFluxError(fmt::format("flux f = {} at node {} (r = {}, u = {}, u' = {})", f, i, r, u[i], p[i]));
        const double gr = fns.g(r, u[i], p[i]);
        const double dfdr = fns.f_u(r, u[i], p[i]) * p[i] + fns.f_p(r, u[i], p[i]) * q[i];
        out[i] = lambda * h[i] * u[i] * (f - c) + f * gr - p[i] * dfdr / f;
    }
    return out;
}

std::vector<double> flux_residual(const DiscreteProblem& dp, double lambda, std::span<const double> u)
{
    const auto& pr = dp.problem();
    if (pr.flux.kind == FluxKind::mean_curvature) return residual(dp, lambda, u);
    check_size(dp, u, "flux_residual");
    std::vector<double> r = linear_part(dp, pr.flux.c() * lambda, u);
    if (pr.linear_only) return r;
    const auto N = flux_nonlinearity(dp, lambda, u);
    const auto& g = dp.grid();
    for (std::size_t i = 0; i < g.n; ++i) r[i] -= g.quad_w[i] * N[i] * tfac(u[i], pr.theta);
    return r;
}

Field flux_residual(const RegularizedProblem& p, double lambda, const Field& u)
{
    require_same_grid(p.weight.values, u, "flux_residual");
    DiscreteProblem dp(p);
    return Field(u.grid, flux_residual(dp, lambda, u.values));
}

SingularValues extreme_singular_values(const BandMatrix& J, std::size_t iterations)
{
    const std::size_t n = J.size();
    BandMatrix Jt(n, J.upper(), J.lower());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = (i > J.lower() ? i - J.lower() : 0); j <= std::min(n - 1, i + J.upper()); ++j)
            Jt.at(j, i) = J(i, j);

    auto normalize = [](std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        s = std::sqrt(s);
        for (double& x : v) x /= s;
        return s;
    };
    // deterministic, non-symmetric start vector
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
    normalize(v);

    SingularValues sv;
    std::vector<double> x = v;
    for (std::size_t it = 0; it < iterations; ++it) {
        x = Jt.multiply(J.multiply(x));
        const double s = normalize(x);
        if (std::abs(std::sqrt(s) - sv.largest) <= 1e-12 * sv.largest) {
            sv.largest = std::sqrt(s);
            break;
        }
        sv.largest = std::sqrt(s);
    }

    const BandLU lu(J), lut(Jt);
    x = v;
    double prev = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        x = lut.solve(lu.solve(x)); // (J^T J)^-1 x, via J^-1 then J^-T
        normalize(x);
        const auto Jx = J.multiply(x);
        double s = 0.0;
        for (double y : Jx) s += y * y;
        sv.smallest = std::sqrt(s);
        if (it > 2 && std::abs(sv.smallest - prev) <= 1e-10 * std::max(prev, 1e-300)) break;
        prev = sv.smallest;
    }
    return sv;
}

} // namespace mcbif
