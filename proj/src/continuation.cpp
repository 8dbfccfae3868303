#include "mcbif/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fmt/format.h>

namespace mcbif {

const char* to_string(Termination t)
{
    switch (t) {
    case Termination::ball_exit: return "ball_exit";
    case Termination::step_limit: return "step_limit";
    case Termination::met_trivial_at: return "met_trivial_at";
    case Termination::corrector_failure: return "corrector_failure";
    }
    return "?";
}

const char* to_string(Alternative a)
{
    switch (a) {
    case Alternative::meets_infinity_proxy: return "meets_infinity_proxy";
    case Alternative::meets_trivial: return "meets_trivial";
    case Alternative::inconclusive: return "inconclusive";
    }
    return "?";
}

void ContinuationOptions::validate() const
{
    if (!(R > 0.0)) throw std::invalid_argument(fmt::format("continuation: R = {} must be > 0", R));
    if (!(s0 > 0.0)) throw std::invalid_argument(fmt::format("continuation: s0 = {} must be > 0", s0));
    if (direction != 1 && direction != -1)
        throw std::invalid_argument(fmt::format("continuation: direction = {} must be +1 or -1", direction));
    if (!(ds_max >= s0)) throw std::invalid_argument("continuation: ds_max must be >= s0");
    if (!(grow >= 1.0)) throw std::invalid_argument("continuation: grow must be >= 1");
    if (!(corrector_tol > 0.0) || corrector_tol > accept_tol)
        throw std::invalid_argument("continuation: need 0 < corrector_tol <= accept_tol");
}

void fill_point_stats(const DiscreteProblem& dp, BranchPoint& pt, double positivity_tol)
{
    const auto& u = pt.u.values;
    const auto& cfg = dp.problem().xcfg;
    pt.u_norm_x = std::sqrt(std::max(0.0, ip_x(dp.grid(), cfg, u, u)));
    pt.u_norm_d12 = std::sqrt(std::max(0.0, ip_d12(dp.grid(), u, u)));
    const auto [mn, mx] = std::minmax_element(u.begin(), u.end());
    pt.min_u = *mn;
    pt.max_u = *mx;
    pt.positive = pt.min_u >= -positivity_tol * std::max(std::abs(pt.min_u), std::abs(pt.max_u));
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

struct Tangent {
    std::vector<double> u;
    double lambda = 0.0;
    std::vector<double> Gu; // Gram_X u
};

struct Corrected {
    bool ok = false;
    std::vector<double> u;
    double lambda = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    double condition = 0.0;
    std::string why;
};

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Newton on [R(lambda,u); <u - ua, t_u>_X + (lambda - la) t_lambda - ds] = 0.
Corrected correct(const DiscreteProblem& dp, std::vector<double> u, double lambda, const std::vector<double>& ua,
                  double la, const Tangent& t, double ds, const ContinuationOptions& opt)
{
    const std::size_t n = u.size();
    const auto& grid = dp.grid();
    Corrected out;
    double prev_res = std::numeric_limits<double>::infinity();

    for (std::size_t it = 0;; ++it) {
        const auto R = flux_residual(dp, lambda, u);
        double N = (lambda - la) * t.lambda - ds;
        for (std::size_t i = 0; i < n; ++i) N += (u[i] - ua[i]) * t.Gu[i];
        const double res = dual_norm(grid, R);
        if (!std::isfinite(res)) {
            out.why = "non-finite residual";
            return out;
        }
        const bool small_constraint = std::abs(N) <= 1e-12 * std::max(1.0, ds);
        if (small_constraint &&
            (res <= opt.corrector_tol || (it >= 3 && res <= opt.accept_tol && res > 0.5 * prev_res))) {
            out.ok = true;
            out.u = std::move(u);
            out.lambda = lambda;
            out.residual = res;
            out.iterations = it;
            return out;
        }
        if (it >= opt.max_newton) {
            out.why = fmt::format("no convergence in {} Newton steps (residual {:.3e})", it, res);
            return out;
        }
        if (it >= 2 && res > 10.0 * prev_res) {
            out.why = fmt::format("Newton diverging (residual {:.3e})", res);
            return out;
        }
        prev_res = res;

        const Linearization lin = jacobian(dp, lambda, u);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(n * (lin.J.lower() + lin.J.upper() + 3) + n);
        std::vector<double> colsum(n + 1, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t lo = j > lin.J.upper() ? j - lin.J.upper() : 0;
            const std::size_t hi = std::min(n - 1, j + lin.J.lower());
            for (std::size_t i = lo; i <= hi; ++i) {
                const double v = lin.J(i, j);
                trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
                colsum[j] += std::abs(v);
            }
            trip.emplace_back(static_cast<int>(n), static_cast<int>(j), t.Gu[j]);
            colsum[j] += std::abs(t.Gu[j]);
            trip.emplace_back(static_cast<int>(j), static_cast<int>(n), lin.d_lambda[j]);
            colsum[n] += std::abs(lin.d_lambda[j]);
        }
        trip.emplace_back(static_cast<int>(n), static_cast<int>(n), t.lambda);
        colsum[n] += std::abs(t.lambda);
        SpMat M(static_cast<int>(n + 1), static_cast<int>(n + 1));
        M.setFromTriplets(trip.begin(), trip.end());
        M.makeCompressed();

        Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(M);
        if (lu.info() != Eigen::Success) {
            out.why = "bordered system singular";
            return out;
        }
        // 1-norm condition lower bound from one extra solve
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n + 1));
        const Eigen::VectorXd y = lu.solve(ones);
        out.condition = *std::max_element(colsum.begin(), colsum.end()) * y.lpNorm<1>() / static_cast<double>(n + 1);
        if (!std::isfinite(out.condition) || out.condition > opt.max_condition) {
            out.why = fmt::format("bordered system ill-conditioned (estimate {:.3e})", out.condition);
            return out;
        }

        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n + 1));
        for (std::size_t i = 0; i < n; ++i) rhs(static_cast<Eigen::Index>(i)) = -R[i];
        rhs(static_cast<Eigen::Index>(n)) = -N;
        const Eigen::VectorXd d = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !d.allFinite()) {
            out.why = "bordered solve failed";
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) u[i] += d(static_cast<Eigen::Index>(i));
        lambda += d(static_cast<Eigen::Index>(n));
    }
}

BranchPoint make_point(const DiscreteProblem& dp, std::size_t step, double lambda, std::vector<double> u,
                       double arclength, double res, const ContinuationOptions& opt)
{
    BranchPoint pt;
    pt.step_index = step;
    pt.lambda = lambda;
    pt.u = Field(dp.problem().grid(), std::move(u));
    pt.arclength = arclength;
    pt.residual_norm = res;
    fill_point_stats(dp, pt, opt.positivity_tol);
    return pt;
}

} // namespace

double ball_radius_of(const Branch& b, const BranchPoint& pt)
{
    const double dl = pt.lambda - b.lambda_start;
    return std::sqrt(pt.u_norm_x * pt.u_norm_x + dl * dl);
}

std::pair<BranchPoint, BranchPoint> start_branch(const DiscreteProblem& dp, int direction, double s0,
                                                 const EigenOptions& eopt)
{
    if (!(s0 > 0.0)) throw std::invalid_argument(fmt::format("start_branch: amplitude s0 = {} must be > 0", s0));
    if (direction != 1 && direction != -1)
        throw std::invalid_argument(fmt::format("start_branch: direction = {} must be +1 or -1", direction));
    const auto& p = dp.problem();
    const EigenSolution sol = solve_perturbed(p.weight, p.xcfg, p.eps, 1, eopt);
    const EigenPair& e = sol.pairs.at(0);

    BranchPoint trivial;
    trivial.lambda = e.lambda;
    trivial.u = zero_field(p.grid());
    BranchPoint pred;
    pred.lambda = e.lambda;
    std::vector<double> v(e.u.values);
    for (auto& x : v) x *= direction * s0;
    pred.u = Field(p.grid(), std::move(v));
    fill_point_stats(dp, pred, 1e-8);
    return {trivial, pred};
}

Branch continue_branch(const DiscreteProblem& dp, const ContinuationOptions& opt, const EigenOptions& eopt)
{
    opt.validate();
    const auto& p = dp.problem();
    const auto& grid = dp.grid();
    const std::size_t n = grid.n;

    Branch b;
    b.problem = p;
    b.direction = opt.direction;
    b.ball_radius = opt.R;

    auto [trivial, pred] = start_branch(dp, opt.direction, opt.s0, eopt);
    b.lambda_start = trivial.lambda;
    b.u0 = pred.u;
    for (auto& x : b.u0.values) x /= opt.direction * opt.s0;
    b.points.push_back(trivial);
    if (opt.max_steps == 0) {
        b.termination = Termination::step_limit;
        return b;
    }

    const BandMatrix Gx = gram_x(grid, p.xcfg);
    auto x_norm2 = [&](const std::vector<double>& d) { return dot(d, Gx.multiply(d)); };

    Tangent t;
    t.u.assign(b.u0.values.begin(), b.u0.values.end());
    for (auto& x : t.u) x *= opt.direction;
    t.lambda = 0.0;
    t.Gu = Gx.multiply(t.u);
    double ds = opt.s0;
    std::size_t easy = 0;

    for (std::size_t step = 1; step <= opt.max_steps; ++step) {
        const BranchPoint& last = b.points.back();
        Corrected c;
        std::size_t halvings = 0;
        for (;;) {
            std::vector<double> up(n);
            for (std::size_t i = 0; i < n; ++i) up[i] = last.u[i] + ds * t.u[i];
            c = correct(dp, std::move(up), last.lambda + ds * t.lambda, last.u.values, last.lambda, t, ds, opt);
            if (c.ok) break;
            if (++halvings > opt.max_halvings) break;
            ds *= 0.5;
            easy = 0;
        }
        if (!c.ok) {
            b.termination = Termination::corrector_failure;
            b.note = fmt::format("step {}: {}", step, c.why);
            return b;
        }

        std::vector<double> du(n);
        for (std::size_t i = 0; i < n; ++i) du[i] = c.u[i] - last.u[i];
        const double dl = c.lambda - last.lambda;
        const double len = std::sqrt(std::max(0.0, x_norm2(du)) + dl * dl);
        if (!(len > 0.0)) {
            b.termination = Termination::corrector_failure;
            b.note = fmt::format("step {}: corrector returned the previous point", step);
            return b;
        }

        BranchPoint pt = make_point(dp, step, c.lambda, std::move(c.u), last.arclength + len, c.residual, opt);
        pt.newton_iterations = c.iterations;
        pt.condition_estimate = c.condition;
        b.points.push_back(std::move(pt));
        const BranchPoint& cur = b.points.back();

        // secant tangent for the next predictor
        t.u = std::move(du);
        for (auto& x : t.u) x /= len;
        t.lambda = dl / len;
        t.Gu = Gx.multiply(t.u);

        if (ball_radius_of(b, cur) > opt.R) {
            b.termination = Termination::ball_exit;
            return b;
        }
        if (cur.u_norm_x < opt.trivial_tol &&
            std::abs(cur.lambda - b.lambda_start) > 1e-6 * (1.0 + std::abs(b.lambda_start))) {
            b.termination = Termination::met_trivial_at;
            b.termination_data = cur.lambda;
            return b;
        }

        if (c.iterations <= opt.easy_iterations) {
            if (++easy >= opt.easy_steps_to_grow) {
                ds = std::min(opt.ds_max, ds * opt.grow);
                easy = 0;
            }
        } else {
            easy = 0;
        }
    }
    b.termination = Termination::step_limit;
    return b;
}

Branch continue_branch(const RegularizedProblem& p, const ContinuationOptions& opt)
{
    DiscreteProblem dp(p);
    return continue_branch(dp, opt);
}

std::vector<PositivityAnomaly> monitor_positivity(const Branch& b, double positivity_tol)
{
    std::vector<PositivityAnomaly> out;
    for (const auto& pt : b.points) {
        const double scale = std::max(std::abs(pt.min_u), std::abs(pt.max_u));
        const bool wrong = b.direction > 0 ? pt.min_u < -positivity_tol * scale : pt.max_u > positivity_tol * scale;
        const double rad = ball_radius_of(b, pt);
        if (wrong && rad <= b.ball_radius) out.push_back({pt.step_index, pt.min_u, pt.max_u, rad});
    }
    return out;
}

AlternativeReport detect_alternative(const Branch& b, std::size_t spectrum_size)
{
    AlternativeReport rep;
    rep.eps = b.problem.eps;
    switch (b.termination) {
    case Termination::ball_exit: rep.kind = Alternative::meets_infinity_proxy; return rep;
    case Termination::step_limit:
    case Termination::corrector_failure: rep.kind = Alternative::inconclusive; return rep;
    case Termination::met_trivial_at: break;
    }
    rep.kind = Alternative::meets_trivial;
    rep.lambda_star = b.termination_data;
    if (!rep.lambda_star) return rep;
    const double ls = *rep.lambda_star;
    const auto& p = b.problem;
    const EigenSolution sol = solve_perturbed(p.weight, p.xcfg, p.eps, std::max<std::size_t>(spectrum_size, 2));
    std::size_t best = 0;
    for (std::size_t k = 1; k < sol.pairs.size(); ++k)
        if (std::abs(sol.pairs[k].lambda - ls) < std::abs(sol.pairs[best].lambda - ls)) best = k;
    rep.nearest_index = best;
    rep.nearest_eigenvalue = sol.pairs[best].lambda;
    rep.distance = std::abs(sol.pairs[best].lambda - ls);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sol.pairs.size(); ++k)
        if (k != best) gap = std::min(gap, std::abs(sol.pairs[k].lambda - sol.pairs[best].lambda));
    rep.gap = gap;
    rep.matches_eigenvalue = *rep.distance < gap / 10.0;
    return rep;
}

} // namespace mcbif
