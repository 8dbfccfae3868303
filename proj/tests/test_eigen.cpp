#include "doctest.h"

#include <cmath>
#include <random>

#include "mcbif/eigen.hpp"
#include "oracles.hpp"

using namespace mcbif;

namespace {

const GridPtr& grid2000()
{
    static const GridPtr g = make_grid(2000, 1.0);
    return g;
}

double h_of_r(double r) { return 1 / std::pow(1 + r * r, 2); }

} // namespace

TEST_CASE("principal pair of the reference weight")
{
    const auto& g = grid2000();
    const auto sol = solve_unperturbed(reference_h(g), 1);
    REQUIRE(sol.pairs.size() == 1);
    const auto& p = sol.pairs[0];
    CHECK(p.lambda == doctest::Approx(3).epsilon(1e-5));
    CHECK(p.residual <= 1e-10);
    CHECK(norm_d12(p.u) == doctest::Approx(1).epsilon(1e-12));
    // u0 = c (1+r^2)^{-1/2}: fit c at the max node and compare everywhere
    const auto ref = sample(g, [](double r) { return 1 / std::sqrt(1 + r * r); });
    const double c = p.u[0] / ref[0];
    double err = 0, mx = 0;
    for (std::size_t i = 0; i < g->n; ++i) {
        err = std::max(err, std::abs(p.u[i] - c * ref[i]));
        mx = std::max(mx, std::abs(p.u[i]));
    }
    CHECK(err / mx <= 1e-3);
    CHECK(c > 0);
}

TEST_CASE("first three eigenvalues against an independent Sturm solver")
{
    const auto ora = oracle::sturm_radial_eigenvalues(h_of_r, 3, 200.0, 0.005);
    CHECK(ora[0] == doctest::Approx(3).epsilon(1e-3));
    CHECK(ora[1] == doctest::Approx(15).epsilon(1e-3));
    CHECK(ora[2] == doctest::Approx(35).epsilon(1e-3));
    const auto sol = solve_unperturbed(reference_h(grid2000()), 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(sol.pairs[k].lambda == doctest::Approx(ora[k]).epsilon(1e-3));
        CHECK(sol.pairs[k].residual <= 1e-10);
    }
}

TEST_CASE("doubling the weight halves the spectrum")
{
    const auto& g = grid2000();
    const auto h = reference_h(g);
    Field two = h.values;
    for (auto& x : two.values) x *= 2;
    const auto a = solve_unperturbed(h, 3);
    const auto b = solve_unperturbed(custom_weight(two, "2h"), 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(b.pairs[k].lambda == doctest::Approx(a.pairs[k].lambda / 2).epsilon(1e-11));
}

TEST_CASE("perturbed problem: eps = 0 reduces to the unperturbed problem")
{
    const auto h = reference_h(grid2000());
    const auto a = solve_unperturbed(h, 3);
    const auto b = solve_perturbed(h, XNormConfig{1}, 0.0, 3);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(std::abs(b.pairs[k].lambda - a.pairs[k].lambda) <= 1e-12 * a.pairs[k].lambda);
    CHECK(b.pairs[0].norm_used == NormKind::X);
    CHECK(norm_x(XNormConfig{1}, b.pairs[0].u) == doctest::Approx(1).epsilon(1e-12));
    CHECK_THROWS(solve_perturbed(h, XNormConfig{1}, -1e-3, 1));
}

TEST_CASE("perturbation bound and monotonicity, K = 1")
{
    const auto h = reference_h(grid2000());
    const XNormConfig k1{1};
    const auto u0 = principal_x_normalized(h, k1);
    const double l0 = u0.lambda;
    const double u0g = ip_l2g(h, u0.u, u0.u);
    double prev = l0;
    for (double eps : {1e-3, 1e-2, 1e-1}) {
        const double le = solve_perturbed(h, k1, eps, 1).pairs[0].lambda;
        CHECK(le >= l0);
        CHECK(le <= l0 + eps / u0g * (1 + 1e-12));
        CHECK(le >= prev);
        prev = le;
    }
}

TEST_CASE("eps = 1e-2 eigenvalue dominated by random trial quotients")
{
    const auto& g = grid2000();
    const auto h = reference_h(g);
    const XNormConfig k1{1};
    const double eps = 1e-2;
    const auto u0 = principal_x_normalized(h, k1);
    const double le = solve_perturbed(h, k1, eps, 1).pairs[0].lambda;
    CHECK(le > 3 * (1 - 1e-4));
    CHECK(le <= u0.lambda + eps / ip_l2g(h, u0.u, u0.u) * (1 + 1e-12));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.2, 3.0), C(-1, 1);
    for (int t = 0; t < 20; ++t) {
        const double a = U(rng), b = U(rng), c = C(rng);
        const auto u = sample(g, [&](double r) { return std::exp(-a * r * r) + c / std::pow(1 + b * r * r, 0.75); });
        const double q = (eps * ip_x(k1, u, u) + ip_d12(u, u)) / ip_l2g(h, u, u);
        CHECK(q >= le * (1 - 1e-12));
    }
}

TEST_CASE("auxiliary problem")
{
    const auto h = reference_h(grid2000());
    for (int K : {1, 2}) {
        const auto aux = solve_aux(h, XNormConfig{K}, 4);
        for (std::size_t i = 0; i < aux.pairs.size(); ++i) {
            CHECK(aux.pairs[i].lambda > 0);
            if (i) CHECK(aux.pairs[i].lambda >= aux.pairs[i - 1].lambda);
            for (std::size_t j = 0; j < i; ++j) {
                const double c = ip_l2g(h, aux.pairs[i].u, aux.pairs[j].u);
                CHECK(std::abs(c) <= 1e-8 * std::sqrt(ip_l2g(h, aux.pairs[i].u, aux.pairs[i].u) * ip_l2g(h, aux.pairs[j].u, aux.pairs[j].u)));
            }
        }
    }
}

TEST_CASE("K = 1 is exceptional, K = 2 is generic")
{
    const auto h = reference_h(grid2000());
    const auto c1 = trace_curve(h, XNormConfig{1}, {1e-2, 0.0});
    CHECK(c1.exceptional);
    REQUIRE(c1.exceptional_index.has_value());
    const double lt = c1.aux_values[*c1.exceptional_index];
    for (const auto& s : c1.samples) {
        CHECK(std::abs(s.beta) <= 1e-8);
        CHECK(s.pair.lambda == doctest::Approx(c1.lambda0 + s.eps * lt).epsilon(1e-10));
        CHECK(s.identity_norm <= 1e-10);
    }
    const auto& z = c1.samples.back();
    CHECK(z.eps == 0.0);
    CHECK(z.alpha == doctest::Approx(1).epsilon(1e-12));
    CHECK(z.eta_norm_x_sq <= 1e-20);
    CHECK(z.kappa == c1.kappa0);

    const auto c2 = trace_curve(h, XNormConfig{2}, {1e-2, 5e-3});
    CHECK_FALSE(c2.exceptional);
    REQUIRE(c2.aux_bracket.has_value());
    for (const auto& s : c2.samples) {
        CHECK(s.identity_norm <= 1e-10);
        CHECK(s.identity_kappa <= 1e-8);
        CHECK(s.beta > 0);
        CHECK(s.eta_norm_x_sq < s.alpha * s.beta);
        CHECK(s.beta_cross == doctest::Approx(s.beta).epsilon(1e-6));
        CHECK(s.kappa > 0);
        CHECK(s.kappa <= c2.kappa0);
        CHECK(s.identity_410 <= 1e-8 * s.eps);
    }
    CHECK(c2.samples[1].u_minus_u0_x <= c2.samples[0].u_minus_u0_x);
    CHECK_THROWS(trace_curve(h, XNormConfig{2}, {1e-3, 1e-2}));
}

TEST_CASE("s* estimate")
{
    const auto h = reference_h(grid2000());
    const XNormConfig k1{1};
    const auto u0 = principal_x_normalized(h, k1);
    const double u0g = ip_l2g(h, u0.u, u0.u);
    CHECK(estimate_sstar(h, k1, 1.0) == doctest::Approx(5 * u0g).epsilon(1e-3));
    const auto two = solve_unperturbed(h, 2);
    const double gap = two.pairs[1].lambda - two.pairs[0].lambda;
    CHECK(sstar_formula(3, 3 + gap, u0g, gap / 2 * (1 - 1e-9)) < 1e-8);
    double prev = 1e300;
    for (double d : {0.5, 1.0, 2.0, 4.0, 5.9}) {
        const double s = sstar_formula(two.pairs[0].lambda, two.pairs[1].lambda, u0g, d);
        CHECK(s < prev);
        prev = s;
    }
    CHECK_THROWS(estimate_sstar(h, k1, 6.5));
    CHECK_THROWS(estimate_sstar(h, k1, 0.0));
}

TEST_CASE("check_simplicity")
{
    const auto h = reference_h(grid2000());
    const auto sol = solve_perturbed(h, XNormConfig{1}, 0.0, 3);
    const auto rep = check_simplicity(sol.pairs[0], sol.pairs);
    CHECK(rep.gap == doctest::Approx(12).epsilon(1e-3));
    CHECK(rep.gap_positive);
    CHECK(rep.orthogonal);
    CHECK_FALSE(rep.duplicate_found);
    CHECK(rep.rhs_projection == doctest::Approx(1).epsilon(1e-12));
    CHECK(rep.algebraically_simple);

    auto dup = sol.pairs;
    dup.push_back(sol.pairs[0]);
    const auto rd = check_simplicity(sol.pairs[0], dup);
    CHECK(rd.duplicate_found);
    CHECK(rd.orthogonal);
    CHECK(rd.algebraically_simple);

    const auto pe = solve_perturbed(h, XNormConfig{2}, 1e-2, 2);
    const auto rp = check_simplicity(pe.pairs[0], pe.pairs);
    CHECK(rp.algebraically_simple);
    CHECK(rp.gap_positive);
}
