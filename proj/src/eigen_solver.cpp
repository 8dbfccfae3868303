#include "mcbif/eigen_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace mcbif {

using Real = long double;
using Vec = std::vector<Real>;

double weighted_dual_norm(std::span<const double> r, std::span<const double> quad_w)
{
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * r[i] / quad_w[i];
    return std::sqrt(s);
}

namespace {

Real dot(const Vec& a, const Vec& b)
{
    Real s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Real dual(const Vec& r, std::span<const double> quad_w)
{
    Real s = 0.0L;
    for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * r[i] / quad_w[i];
    return std::sqrt(s);
}

double relative_residual(const BandMatrixLD& K, const BandMatrixLD& B, const Vec& v, Real lambda,
                         std::span<const double> quad_w)
{
    const Vec Kv = K.multiply(v);
    const Vec Bv = B.multiply(v);
    Vec r(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) r[t] = Kv[t] - lambda * Bv[t];
    const Real scale = dual(Kv, quad_w) + std::abs(lambda) * dual(Bv, quad_w);
    return static_cast<double>(dual(r, quad_w) / scale);
}

// Two passes of modified Gram-Schmidt in the K-inner product. Columns that
// collapse are replaced by fresh random vectors.
void k_orthonormalize(const BandMatrixLD& K, std::vector<Vec>& Z, std::mt19937_64& rng)
{
    const std::size_t n = K.size();
    std::normal_distribution<double> nd;
    std::vector<Vec> KZ(Z.size());
    for (std::size_t j = 0; j < Z.size(); ++j) {
        for (int attempt = 0;; ++attempt) {
            const Real before = std::sqrt(std::max(0.0L, dot(Z[j], K.multiply(Z[j]))));
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t i = 0; i < j; ++i) {
                    const Real c = dot(KZ[i], Z[j]);
                    for (std::size_t t = 0; t < n; ++t) Z[j][t] -= c * Z[i][t];
                }
            Vec kz = K.multiply(Z[j]);
            const Real nrm2 = dot(Z[j], kz);
            if (nrm2 > 0.0L && std::sqrt(nrm2) > 1e-10L * before) {
                const Real inv = 1.0L / std::sqrt(nrm2);
                for (std::size_t t = 0; t < n; ++t) {
                    Z[j][t] *= inv;
                    kz[t] *= inv;
                }
                KZ[j] = std::move(kz);
                break;
            }
            if (attempt > 4) throw EigenBreakdownError("solve_pencil: cannot build an independent block");
            for (auto& x : Z[j]) x = nd(rng);
        }
    }
}

} // namespace

PencilResult solve_pencil(const BandMatrixLD& K, const BandMatrixLD& B, std::size_t m,
                          std::span<const double> quad_w, const PencilOptions& opt)
{
    using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    const std::size_t n = K.size();
    if (B.size() != n || quad_w.size() != n) throw std::invalid_argument("solve_pencil: size mismatch");
    if (m == 0 || m > n) throw std::invalid_argument(fmt::format("solve_pencil: m = {} invalid", m));
    const std::size_t p = std::min(n, m + opt.extra);

    PencilResult out;
    if (B.lower() == 0 && B.upper() == 0)
        for (std::size_t i = 0; i < n; ++i) out.negative_mass_directions += B(i, i) < 0.0L;

    const BandLULD lu(K);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd;

    std::vector<Vec> V(p, Vec(n));
    for (std::size_t j = 0; j < p; ++j) {
        if (j < opt.warm.size() && opt.warm[j].size() == n)
            std::copy(opt.warm[j].begin(), opt.warm[j].end(), V[j].begin());
        else
            for (auto& x : V[j]) x = nd(rng);
    }

    std::vector<Real> prev_lambda;
    std::vector<double> best_res(m, std::numeric_limits<double>::infinity());
    std::size_t stalled = 0;
    std::vector<Real> lambdas;
    std::vector<Vec> ritz;

    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        out.iterations = it;
        for (auto& v : V) v = lu.solve(B.multiply(v));
        k_orthonormalize(K, V, rng);

        std::vector<Vec> BV(p);
        for (std::size_t j = 0; j < p; ++j) BV[j] = B.multiply(V[j]);
        Mat T(p, p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i; j < p; ++j) T(i, j) = T(j, i) = dot(V[i], BV[j]);
        Eigen::SelfAdjointEigenSolver<Mat> es(T);
        const auto& mu = es.eigenvalues(); // ascending
        const auto& Y = es.eigenvectors();

        // columns ordered by mu descending
        std::vector<Vec> W(p, Vec(n, 0.0L));
        for (std::size_t c = 0; c < p; ++c) {
            const Eigen::Index col = static_cast<Eigen::Index>(p - 1 - c);
            for (std::size_t j = 0; j < p; ++j) {
                const Real y = Y(static_cast<Eigen::Index>(j), col);
                for (std::size_t t = 0; t < n; ++t) W[c][t] += y * V[j][t];
            }
        }
        V = std::move(W);

        lambdas.clear();
        ritz.clear();
        for (std::size_t c = 0; c < p && lambdas.size() < m; ++c) {
            const Real muc = mu(static_cast<Eigen::Index>(p - 1 - c));
            if (muc <= 0.0L) break;
            lambdas.push_back(1.0L / muc);
            ritz.push_back(V[c]);
        }
        if (lambdas.size() < m) {
            if (it > 50)
                throw EigenBreakdownError(fmt::format(
                    "solve_pencil: only {} positive eigenvalues in the search block of {} "
                    "(indefinite mass with {} negative directions)",
                    lambdas.size(), p, out.negative_mass_directions));
            continue;
        }

        Real change = prev_lambda.size() == m ? 0.0L : std::numeric_limits<Real>::infinity();
        for (std::size_t k = 0; k < m && prev_lambda.size() == m; ++k)
            change = std::max(change, std::abs(lambdas[k] - prev_lambda[k]) / std::abs(lambdas[k]));
        prev_lambda = lambdas;

        std::vector<double> res(m);
        bool res_ok = true, res_improved = false;
        for (std::size_t k = 0; k < m; ++k) {
            res[k] = relative_residual(K, B, ritz[k], lambdas[k], quad_w);
            res_ok = res_ok && res[k] <= opt.res_tol;
            if (res[k] < 0.5 * best_res[k]) {
                best_res[k] = res[k];
                res_improved = true;
            }
        }
        out.residuals = res;
        if (change <= opt.eig_tol && res_ok) {
            out.residual_target_met = true;
            break;
        }
        stalled = (change <= opt.stall_eig_tol && !res_improved) ? stalled + 1 : 0;
        if (stalled >= opt.stagnation_iter) break;
        if (it == opt.max_iter)
            throw EigenBreakdownError(fmt::format("solve_pencil: no convergence in {} iterations", it));
    }

    for (std::size_t k = 0; k < m; ++k) {
        out.values.push_back(static_cast<double>(lambdas[k]));
        std::vector<double> v(ritz[k].begin(), ritz[k].end());
        Vec vr(v.begin(), v.end());
        out.stored_residuals.push_back(relative_residual(K, B, vr, lambdas[k], quad_w));
        out.vectors.push_back(std::move(v));
        out.vectors_ext.push_back(ritz[k]);
    }
    return out;
}

} // namespace mcbif
