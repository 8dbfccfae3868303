#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "mcbif/limits.hpp"
#include "oracles.hpp"

using namespace mcbif;

namespace {

SamplePoint pt(const GridPtr& g, double lambda, double scale)
{
    return {lambda, sample(g, [scale](double r) { return scale / (1 + r * r); })};
}

StudyConfig study_config(std::size_t n)
{
    StudyConfig cfg;
    cfg.grid = make_grid(n);
    return cfg;
}

} // namespace

TEST_CASE("hausdorff distance of simple sets")
{
    const auto g = make_grid(100);
    const XNormConfig cfg{1};
    const std::vector<SamplePoint> a = {pt(g, 3.0, 0.0)};
    const std::vector<SamplePoint> b = {pt(g, 6.0, 0.0)};
    CHECK(hausdorff_distance(a, a, cfg) == 0.0);
    CHECK(hausdorff_distance(a, b, cfg) == doctest::Approx(3.0).epsilon(1e-14));

    std::vector<SamplePoint> c, d;
    for (int k = 0; k < 20; ++k) {
        c.push_back(pt(g, 3.0 + 0.01 * k, 0.05 * k));
        d.push_back(pt(g, 3.1 + 0.01 * k, 0.05 * k));
    }
    // same fields, lambda shifted by 0.1 (the shift is a multiple of the spacing)
    CHECK(hausdorff_distance(c, d, cfg) == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(hausdorff_distance(c, d, cfg) == hausdorff_distance(d, c, cfg));

    CHECK(hausdorff_distance(c, {}, cfg) == std::numeric_limits<double>::infinity());
    CHECK(hausdorff_distance({}, {}, cfg) == std::numeric_limits<double>::infinity());

    const auto g2 = make_grid(120);
    CHECK_THROWS_AS(hausdorff_distance(a, {pt(g2, 3.0, 0.0)}, cfg), GridMismatchError);
}

TEST_CASE("hausdorff distance satisfies the triangle inequality")
{
    const auto g = make_grid(80);
    const XNormConfig cfg{1};
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(-1, 1);
    auto random_set = [&]() {
        std::vector<SamplePoint> s;
        for (int k = 0; k < 6; ++k) s.push_back(pt(g, 3 + U(rng), U(rng)));
        return s;
    };
    for (int t = 0; t < 20; ++t) {
        const auto a = random_set(), b = random_set(), c = random_set();
        CHECK(hausdorff_distance(a, c, cfg) <= hausdorff_distance(a, b, cfg) + hausdorff_distance(b, c, cfg) + 1e-12);
    }
}

TEST_CASE("ball truncation keeps only points inside the radius")
{
    Branch b;
    const auto g = make_grid(50);
    for (int k = 0; k < 5; ++k) {
        BranchPoint p;
        p.step_index = static_cast<std::size_t>(k);
        p.lambda = 3.0 + 0.3 * k;
        p.u = zero_field(g);
        b.points.push_back(p);
    }
    CHECK(truncate_to_ball(b, 3.0, 1.0).size() == 4); // 0, 0.3, 0.6, 0.9
    CHECK(truncate_to_ball(b, 3.0, 0.1).size() == 1);
}

TEST_CASE("a family of identical branches has zero distances")
{
    auto cfg = study_config(400);
    RegularizedProblem p;
    p.weight = reference_h(cfg.grid);
    p.eps = 1e-3;
    ContinuationOptions opt;
    opt.max_steps = 40;
    const Branch b = continue_branch(p, opt);

    StudyReport rep;
    rep.parameter = "eps";
    rep.lambda0 = b.lambda_start;
    for (double v : {1e-2, 5e-3, 2.5e-3}) {
        auto& e = rep.entries.emplace_back();
        e.value = v;
        e.ok = true;
        e.branch = b;
        e.lambda_start = b.lambda_start;
    }
    finish_study(rep, cfg);
    REQUIRE(rep.distances.size() == 2);
    CHECK(rep.distances[0] == 0.0);
    CHECK(rep.distances[1] == 0.0);
    CHECK(rep.converged);
    CHECK_FALSE(rep.insufficient);
}

TEST_CASE("a single-value study is flagged insufficient")
{
    auto cfg = study_config(300);
    cfg.cont.max_steps = 20;
    const auto rep = eps_limit_study(cfg, {1e-2});
    CHECK(rep.insufficient);
    CHECK_FALSE(rep.converged);
    CHECK(rep.distances.empty());
    CHECK_FALSE(rep.notes.empty());
}

TEST_CASE("study parameter validation")
{
    auto cfg = study_config(200);
    CHECK_THROWS_AS(eps_limit_study(cfg, {1e-3, 1e-2}), std::invalid_argument);
    CHECK_THROWS_AS(eps_limit_study(cfg, {1e-2, -1e-3}), std::invalid_argument);
    cfg.eps = 1e-3;
    CHECK_THROWS_AS(theta_limit_study(cfg, {1e-1, 1e-2, 1e-3}), std::invalid_argument);
    cfg.eps = 0.0;
    CHECK_THROWS_AS(theta_limit_study(cfg, {1e-1, 0.0}), std::invalid_argument);
}

TEST_CASE("eps study: bifurcation points obey the eigenvalue bound")
{
    const auto cfg = study_config(1000);
    const auto rep = eps_limit_study(cfg, {1e-2, 5e-3, 2.5e-3});
    REQUIRE(rep.entries.size() == 3);
    for (const auto& e : rep.entries) {
        REQUIRE(e.ok);
        CHECK(e.eigbound_ok);
        CHECK(e.lambda_start >= rep.lambda0);
        CHECK(e.lambda_start <= rep.lambda0 + e.value / rep.u0_l2h_sq * (1 + 1e-9));
        CHECK(e.branch.termination == Termination::ball_exit);
    }
    CHECK(rep.bifurcation_monotone);
    REQUIRE(rep.distances.size() == 2);
    // the branches start at lambda_0eps, so consecutive sets differ by at least that shift
    const double shift = rep.entries[1].lambda_start - rep.entries[2].lambda_start;
    CHECK(rep.distances[1] >= 0.99 * shift);
    CHECK(rep.distances[1] <= rep.distances[0]);
}

TEST_CASE("theta study bifurcates from 3")
{
    auto cfg = study_config(1000);
    const auto rep = theta_limit_study(cfg, {1e-1, 1e-2, 1e-3});
    REQUIRE(rep.entries.size() == 3);
    for (const auto& e : rep.entries) {
        REQUIRE(e.ok);
        CHECK(e.bif_lambda == doctest::Approx(3.0).epsilon(1e-3));
        CHECK(e.bif_ok);
        CHECK(e.h_term_ratio <= 1e-3);
    }
    CHECK(rep.bifurcation_ok);
    CHECK(rep.distances_nonincreasing);
}

TEST_CASE("constructed weight")
{
    const auto g = make_grid(500);
    const auto h = reference_h(g);
    BranchPoint trivial;
    trivial.lambda = 3.0;
    trivial.u = zero_field(g);
    const auto w = constructed_weight(h, trivial, 1e-2);
    CHECK(w.values.values == h.values.values);
    trivial.lambda = 0.0;
    CHECK_THROWS_AS(constructed_weight(h, trivial, 1e-2), std::invalid_argument);

    // along a branch the weight approaches h in L^{3/2} as the amplitude shrinks
    RegularizedProblem p;
    p.weight = h;
    p.eps = 1e-3;
    ContinuationOptions opt;
    opt.max_steps = 30;
    const auto b = continue_branch(p, opt);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = b.points.size() - 1; k >= 1; k -= 5) {
        const auto wk = constructed_weight(h, b.points[k], 1e-2);
        Field d = wk.values;
        for (std::size_t i = 0; i < d.size(); ++i) d.values[i] -= h.values[i];
        const double n32 = lp_norm(d, 1.5);
        CHECK(n32 <= prev);
        prev = n32;
        if (b.points[k].u_norm_x <= 0.1) CHECK(wk.strictly_positive());
        if (k < 5) break;
    }
}

TEST_CASE("lp norm of constants and powers")
{
    const auto g = make_grid(2000);
    auto F = [](double r) { return std::pow(1 + r * r, -1.5); };
    const auto f = sample(g, F);
    for (double p : {1.5, 2.0, 3.0}) {
        const double ref = std::pow(
            oracle::integrate_half_line([&](double r) { return 4 * M_PI * r * r * std::pow(F(r), p); }), 1 / p);
        CHECK(lp_norm(f, p) == doctest::Approx(ref).epsilon(1e-4));
    }
    // integral of (1+r^2)^-3 over R^3 is pi^2/4
    CHECK(lp_norm(sample(g, [](double r) { return std::pow(1 + r * r, -3); }), 1.0) ==
          doctest::Approx(M_PI * M_PI / 4).epsilon(1e-4));
}

TEST_CASE("weight sequence eigencheck recovers the reference pair")
{
    const auto cfg = study_config(1000);
    const auto rep = theta_limit_study(cfg, {1e-1, 1e-2, 1e-3});
    const auto wc = weight_sequence_eigencheck(rep, 1e-2);
    REQUIRE(wc.entries.size() == 3);
    for (const auto& e : wc.entries) {
        CHECK(e.ok);
        CHECK(e.weight_positive);
    }
    CHECK(wc.hypothesis_met);
    CHECK(wc.distances_decreasing);
    CHECK(wc.final_within_tol);
    CHECK(wc.entries.back().lambda_distance <= 1e-2);
}

TEST_CASE("weight eigencheck of a family without usable branches")
{
    StudyReport rep;
    rep.parameter = "eps";
    rep.entries.emplace_back().value = 1e-2;
    const auto wc = weight_sequence_eigencheck(rep, 1e-2);
    CHECK_FALSE(wc.hypothesis_met);
    CHECK_FALSE(wc.notes.empty());
}

TEST_CASE("compactness probe on a converging weight sequence")
{
    const auto g = make_grid(400);
    const auto h = reference_h(g);
    std::vector<Weight> gs;
    for (int n = 1; n <= 4; ++n) {
        Field v = h.values;
        for (double& x : v.values) x *= 1.0 + 1.0 / n;
        gs.push_back(custom_weight(v, "h(1+1/n)"));
    }
    const auto rep = compactness_probe(h, gs, XNormConfig{1}, 1.0, 4);
    REQUIRE(rep.entries.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& e = rep.entries[k];
        CHECK(e.error.empty());
        // scaling the weight by c divides the spectrum by c
        const double c = 1.0 + 1.0 / static_cast<double>(k + 1);
        CHECK(e.lambda_n0 == doctest::Approx(rep.lambda0 / c).epsilon(1e-8));
        CHECK(e.kappa_ok);
        CHECK(e.bound_ok);
    }
    CHECK(rep.distances_decreasing);
    CHECK(rep.uniform_bound);
    CHECK(rep.kappa_bounds);
    CHECK(rep.sstar > 0);

    const std::vector<Weight> same(3, h);
    const auto flat = compactness_probe(h, same, XNormConfig{1}, 1.0, 3);
    for (const auto& e : flat.entries) CHECK(e.curve_distance == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(flat.N_delta == 0);

    CHECK_THROWS(compactness_probe(h, gs, XNormConfig{1}, 1.0, 1));
    CHECK_THROWS(compactness_probe(h, gs, XNormConfig{1}, -1.0, 4));
}
