#include "mcbif/radial_grid.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace mcbif {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

} // namespace

GridPtr make_grid(std::size_t n_interior, double map_scale)
{
    if (n_interior < 8)
        throw std::invalid_argument(fmt::format("make_grid: n_interior = {} < 8", n_interior));
    if (!(map_scale > 0.0) || !std::isfinite(map_scale))
        throw std::invalid_argument(fmt::format("make_grid: map_scale = {} must be positive", map_scale));

    auto g = std::make_shared<RadialGrid>();
    const std::size_t n = n_interior;
    const double L = map_scale;
    const double h = 1.0 / static_cast<double>(n + 1);
    g->n = n;
    g->L = L;
    g->h = h;
    g->s.resize(n);
    g->r.resize(n);
    g->drds.resize(n);
    g->quad_w.resize(n);
    g->s_mid.resize(n);
    g->r_mid.resize(n);
    g->drds_mid.resize(n);
    g->w_mid.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i + 1) * h;
        const double t = 1.0 - s;
        g->s[i] = s;
        g->r[i] = L * s / t;
        g->drds[i] = L / (t * t);
        g->quad_w[i] = four_pi * g->r[i] * g->r[i] * g->drds[i] * h;

        const double sm = (static_cast<double>(i) + 1.5) * h;
        const double tm = 1.0 - sm;
        g->s_mid[i] = sm;
        g->r_mid[i] = L * sm / tm;
        g->drds_mid[i] = L / (tm * tm);
        g->w_mid[i] = four_pi * g->r_mid[i] * g->r_mid[i] * g->drds_mid[i] * h;
    }
    return g;
}

Field::Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v))
{
    if (!grid) throw std::invalid_argument("Field: null grid");
    if (values.size() != grid->n)
        throw std::invalid_argument(
            fmt::format("Field: {} values on a grid with {} nodes", values.size(), grid->n));
}

Field zero_field(const GridPtr& g)
{
    return Field(g, std::vector<double>(g->n, 0.0));
}

Field sample(const GridPtr& g, const std::function<double(double)>& f_of_r)
{
    std::vector<double> v(g->n);
    for (std::size_t i = 0; i < g->n; ++i) v[i] = f_of_r(g->r[i]);
    return Field(g, std::move(v));
}

void require_same_grid(const Field& a, const Field& b, const char* where)
{
    if (!a.grid || !b.grid || !a.grid->same_as(*b.grid))
        throw GridMismatchError(fmt::format("{}: fields live on different grids", where));
}

Field differentiate(const Field& f)
{
    const RadialGrid& g = *f.grid;
    const std::size_t n = g.n;
    const auto& u = f.values;
    const double h = g.h;
    const double ghost = (4.0 * u[0] - u[1]) / 3.0;

    FieldDerivatives d{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double um = i == 0 ? ghost : u[i - 1];
        const double up = i + 1 < n ? u[i + 1] : 0.0;
        const double us = (up - um) / (2.0 * h);
        const double uss = (up - 2.0 * u[i] + um) / (h * h);
        const double rp = g.drds[i];
        d.d1[i] = us / rp;
        d.d2[i] = (uss - us * 2.0 / (1.0 - g.s[i])) / (rp * rp);
    }
    Field out = f;
    out.deriv = std::move(d);
    return out;
}

DerivativeStencils derivative_stencils(const RadialGrid& g)
{
    const std::size_t n = g.n;
    const double h = g.h;
    DerivativeStencils st{BandMatrix(n, 1, 1), BandMatrix(n, 1, 1)};
    for (std::size_t i = 0; i < n; ++i) {
        // coefficients of u_s and u_ss on (u_{i-1}, u_i, u_{i+1})
        double s_m = -1.0 / (2.0 * h), s_0 = 0.0, s_p = 1.0 / (2.0 * h);
        double q_m = 1.0 / (h * h), q_0 = -2.0 / (h * h), q_p = 1.0 / (h * h);
        if (i == 0) {
            // fold the ghost (4u_0 - u_1)/3 into the row
            s_0 += s_m * 4.0 / 3.0;
            s_p -= s_m / 3.0;
            q_0 += q_m * 4.0 / 3.0;
            q_p -= q_m / 3.0;
            s_m = q_m = 0.0;
        }
        const double rp = g.drds[i];
        const double c = 2.0 / (1.0 - g.s[i]);
        auto put = [&](std::size_t j, double sc, double qc) {
            st.P.at(i, j) = sc / rp;
            st.Q.at(i, j) = (qc - c * sc) / (rp * rp);
        };
        if (i > 0) put(i - 1, s_m, q_m);
        put(i, s_0, q_0);
        if (i + 1 < n) put(i + 1, s_p, q_p);
    }
    return st;
}

std::vector<double> staggered_gradient(const RadialGrid& g, std::span<const double> u)
{
    const std::size_t n = g.n;
    std::vector<double> d(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double up = m + 1 < n ? u[m + 1] : 0.0;
        d[m] = (up - u[m]) / (g.h * g.drds_mid[m]);
    }
    return d;
}

BandMatrix stiffness_matrix(const RadialGrid& g)
{
    return stiffness_matrix_ld(g).cast<double>();
}

BandMatrixLD stiffness_matrix_ld(const RadialGrid& g)
{
    const std::size_t n = g.n;
    BandMatrixLD a(n, 1, 1);
    for (std::size_t m = 0; m < n; ++m) {
        const long double hd = static_cast<long double>(g.h) * g.drds_mid[m];
        const long double c = g.w_mid[m] / (hd * hd);
        a.add(m, m, c);
        if (m + 1 < n) {
            a.add(m + 1, m + 1, c);
            a.add(m, m + 1, -c);
            a.add(m + 1, m, -c);
        }
    }
    return a;
}

Field apply_laplacian(const Field& f)
{
    const RadialGrid& g = *f.grid;
    std::vector<double> y = stiffness_matrix(g).multiply(f.values);
    for (std::size_t i = 0; i < g.n; ++i) y[i] /= g.quad_w[i];
    return Field(f.grid, std::move(y));
}

double dual_norm(const RadialGrid& g, std::span<const double> r)
{
    double s = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) s += r[i] * r[i] / g.quad_w[i];
    return std::sqrt(s);
}

double l2_norm(const RadialGrid& g, std::span<const double> u)
{
    double s = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) s += g.quad_w[i] * u[i] * u[i];
    return std::sqrt(s);
}

} // namespace mcbif
