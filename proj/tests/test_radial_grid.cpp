#include "doctest.h"

#include <cmath>
#include <numbers>

#include "mcbif/forms.hpp"
#include "mcbif/radial_grid.hpp"
#include "oracles.hpp"

using namespace mcbif;
using std::numbers::pi;

TEST_CASE("make_grid: map and invariants")
{
    CHECK_THROWS(make_grid(7, 1.0));
    CHECK_THROWS(make_grid(100, 0.0));
    const auto g = make_grid(9, 1.0); // h = 0.1, node 4 at s = 1/2
    CHECK(g->s[4] == doctest::Approx(0.5));
    CHECK(g->r[4] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < g->n; ++i) {
        CHECK(g->quad_w[i] > 0.0);
        if (i) CHECK(g->r[i] > g->r[i - 1]);
    }
    CHECK(g->r[0] > 0.0);
}

TEST_CASE("quadrature reproduces pi^2/4 at least at second order")
{
    auto f = [](double r) { return r * r / std::pow(1 + r * r, 3); };
    const double exact = 4 * pi * oracle::integrate_half_line(f);
    CHECK(exact == doctest::Approx(pi * pi / 4).epsilon(1e-10));
    std::vector<double> hs, errs;
    for (std::size_t n : {250u, 500u, 1000u, 2000u}) {
        const auto g = make_grid(n, 1.0);
        double q = 0;
        for (std::size_t i = 0; i < n; ++i) q += g->quad_w[i] * std::pow(1 + g->r[i] * g->r[i], -3);
        hs.push_back(g->h);
        errs.push_back(std::abs(q - exact));
    }
    CHECK(errs.back() / exact < 1e-5);
    // the integrand vanishes to all orders at s = 1, so the trapezoid rule
    // does better than its nominal order here
    CHECK(oracle::loglog_slope(hs, errs) > 1.9);
}

TEST_CASE("differentiate")
{
    const auto g = make_grid(2000, 1.0);
    const auto one = differentiate(sample(g, [](double) { return 1.0; }));
    // the far Dirichlet value only touches the last node
    for (std::size_t i = 0; i + 1 < g->n; ++i) CHECK(one.deriv->d1[i] == doctest::Approx(0.0));

    const auto q = differentiate(sample(g, [](double r) { return r * r; }));
    for (std::size_t i = 0; i < g->n; i += 97)
        if (g->r[i] < 2) CHECK(q.deriv->d1[i] == doctest::Approx(2 * g->r[i]).epsilon(1e-5));

    const auto u = differentiate(sample(g, [](double r) { return 1 / std::sqrt(1 + r * r); }));
    std::size_t k = 0;
    for (std::size_t i = 0; i < g->n; ++i)
        if (std::abs(g->r[i] - 1.0) < std::abs(g->r[k] - 1.0)) k = i;
    const double r = g->r[k];
    CHECK(u.deriv->d1[k] == doctest::Approx(-r * std::pow(1 + r * r, -1.5)).epsilon(1e-5));
    CHECK(std::pow(2.0, -1.5) == doctest::Approx(0.353553).epsilon(1e-6));
}

TEST_CASE("apply_laplacian examples")
{
    const auto g = make_grid(2000, 1.0);
    const auto z = apply_laplacian(zero_field(g));
    for (double v : z.values) CHECK(v == 0.0);

    // the first cells see the omitted inner flux and a trapezoid volume, an
    // O(1) pointwise defect that is confined to r = O(h); compare away from it
    const auto lu = apply_laplacian(sample(g, [](double r) { return 1 / std::sqrt(1 + r * r); }));
    double worst = 0;
    for (std::size_t i = 0; i < g->n; ++i) {
        const double r = g->r[i];
        if (r < 0.05) continue;
        const double exact = 3 * std::pow(1 + r * r, -2.5);
        worst = std::max(worst, std::abs(lu[i] - exact));
    }
    CHECK(worst < 1e-4);

    const auto le = apply_laplacian(sample(g, [](double r) { return std::exp(-r * r); }));
    worst = 0;
    for (std::size_t i = 0; i < g->n; ++i) {
        const double r = g->r[i];
        if (r < 0.05) continue;
        worst = std::max(worst, std::abs(le[i] + (4 * r * r - 6) * std::exp(-r * r)));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("integration by parts and symmetry are exact at the discrete level")
{
    const std::size_t n = 500;
    const auto g = make_grid(n, 1.0);
    const auto u = sample(g, [](double r) { return std::exp(-r) * (1 + r); });
    const auto v = sample(g, [](double r) { return 1 / (1 + r * r); });
    const auto lu = apply_laplacian(u);
    double lhs = 0;
    for (std::size_t i = 0; i < n; ++i) lhs += g->quad_w[i] * lu[i] * v[i];
    const double rhs = ip_d12(u, v);
    CHECK(std::abs(lhs - rhs) <= 10 * 2.2e-16 * n * std::abs(rhs));
    CHECK(stiffness_matrix(*g).relative_asymmetry() <= 1e-10);
}
