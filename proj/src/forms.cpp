#include "mcbif/forms.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include <fmt/format.h>

namespace mcbif {

const char* to_string(WeightKind k)
{
    switch (k) {
    case WeightKind::reference_h: return "reference_h";
    case WeightKind::constructed: return "constructed";
    case WeightKind::custom: return "custom";
    }
    return "?";
}

Weight::Weight(WeightKind k, Field v, std::string prov)
    : kind(k), values(std::move(v)), provenance(std::move(prov))
{
    if (!values.grid) throw std::invalid_argument("Weight: null grid");
    double mass = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double gi = values[i];
        if (!std::isfinite(gi))
            throw std::invalid_argument(fmt::format("Weight: non-finite value at node {}", i));
        if (gi > 0.0) mass += values.grid->quad_w[i] * gi;
    }
    if (!(mass > 0.0)) throw std::invalid_argument("Weight: positive part has zero mass");
}

bool Weight::strictly_positive() const
{
    for (double v : values.values)
        if (!(v > 0.0)) return false;
    return true;
}

Weight reference_h(const GridPtr& g)
{
    std::vector<double> v(g->n);
    for (std::size_t i = 0; i < g->n; ++i) {
        const double q = 1.0 + g->r[i] * g->r[i];
        v[i] = 1.0 / (q * q);
    }
    return Weight(WeightKind::reference_h, Field(g, std::move(v)), "h(r) = (1+r^2)^-2");
}

Weight custom_weight(Field values, std::string provenance)
{
    return Weight(WeightKind::custom, std::move(values), std::move(provenance));
}

void XNormConfig::validate() const
{
    if (order < 1 || order > 6)
        throw std::invalid_argument(fmt::format("XNormConfig: order {} outside [1, 6]", order));
}

// ---------------------------------------------------------------------------

double ip_d12(const RadialGrid& g, std::span<const double> u, std::span<const double> v)
{
    const auto du = staggered_gradient(g, u);
    const auto dv = staggered_gradient(g, v);
    double s = 0.0;
    for (std::size_t m = 0; m < g.n; ++m) s += g.w_mid[m] * du[m] * dv[m];
    return s;
}

double ip_l2g(const RadialGrid& grid, std::span<const double> g, std::span<const double> u,
              std::span<const double> v)
{
    double s = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) s += grid.quad_w[i] * g[i] * u[i] * v[i];
    return s;
}

double ip_x(const RadialGrid& g, const XNormConfig& cfg, std::span<const double> u,
            std::span<const double> v)
{
    cfg.validate();
    return static_cast<double>(x_levels(g, cfg.order)->form(u, v) + ip_d12(g, u, v));
}

double ip_d12(const Field& u, const Field& v)
{
    require_same_grid(u, v, "ip_d12");
    return ip_d12(*u.grid, u.values, v.values);
}

double ip_l2g(const Weight& g, const Field& u, const Field& v)
{
    require_same_grid(u, v, "ip_l2g");
    require_same_grid(g.values, u, "ip_l2g");
    return ip_l2g(*u.grid, g.values.values, u.values, v.values);
}

double ip_x(const XNormConfig& cfg, const Field& u, const Field& v)
{
    require_same_grid(u, v, "ip_x");
    return ip_x(*u.grid, cfg, u.values, v.values);
}

double rayleigh(const Weight& g, const Field& u)
{
    const double den = ip_l2g(g, u, u);
    if (den == 0.0) throw ZeroDenominatorError("rayleigh: L2_g(u,u) = 0");
    if (den < 0.0)
        throw NegativeDenominatorError(
            fmt::format("rayleigh: L2_g(u,u) = {} < 0 (sign-indefinite weight)", den));
    return ip_d12(u, u) / den;
}

double norm_x(const XNormConfig& cfg, const Field& u)
{
    return std::sqrt(ip_x(cfg, u, u));
}

double norm_d12(const Field& u)
{
    return std::sqrt(ip_d12(u, u));
}

// ---------------------------------------------------------------------------

namespace {

using Row = XLevelOperator::Row;

// sa*a + sb*b
Row combine(const Row& a, long double sa, const Row& b, long double sb)
{
    const std::size_t lo = std::min(a.first, b.first);
    const std::size_t hi = std::max(a.first + a.c.size(), b.first + b.c.size());
    Row r;
    r.first = lo;
    r.c.assign(hi - lo, 0.0L);
    for (std::size_t k = 0; k < a.c.size(); ++k) r.c[a.first - lo + k] += sa * a.c[k];
    for (std::size_t k = 0; k < b.c.size(); ++k) r.c[b.first - lo + k] += sb * b.c[k];
    return r;
}

} // namespace

XLevelOperator::XLevelOperator(const RadialGrid& g, int order) : n_(g.n)
{
    if (order < 1 || order > 6)
        throw std::invalid_argument(fmt::format("XLevelOperator: order {} outside [1, 6]", order));
    const std::size_t n = g.n;
    const double h = g.h;

    // defined[j] tracks which points of the current level exist
    std::vector<Row> prev(n);
    std::vector<bool> prev_ok(n, true);
    for (std::size_t m = 0; m < n; ++m) {
        const long double c = 1.0L / (h * static_cast<long double>(g.drds_mid[m]));
        prev[m].first = m;
        prev[m].c = m + 1 < n ? std::vector<long double>{-c, c} : std::vector<long double>{-c};
        prev[m].weight = g.w_mid[m];
    }
    levels_.push_back(prev);

    for (int k = 2; k <= order; ++k) {
        std::vector<Row> cur(n);
        std::vector<bool> ok(n, false);
        const bool at_nodes = k % 2 == 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (at_nodes) {
                const long double c = 1.0L / (h * static_cast<long double>(g.drds[j]));
                if (j == 0) {
                    if (k == 2 && prev_ok[0]) {
                        cur[0] = combine(prev[0], c, Row{0, {}, 0.0L}, 0.0L);
                        ok[0] = true;
                    }
                } else if (prev_ok[j] && prev_ok[j - 1]) {
                    cur[j] = combine(prev[j], c, prev[j - 1], -c);
                    ok[j] = true;
                }
            } else if (j + 1 < n && prev_ok[j] && prev_ok[j + 1]) {
                const long double c = 1.0L / (h * static_cast<long double>(g.drds_mid[j]));
                cur[j] = combine(prev[j + 1], c, prev[j], -c);
                ok[j] = true;
            }
        }
        // quadrature weights, trimming two defined points at each end for k >= 3
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < n; ++j)
            if (ok[j]) idx.push_back(j);
        for (std::size_t t = 0; t < idx.size(); ++t) {
            const std::size_t j = idx[t];
            const bool trimmed = k >= 3 && (t < 2 || t + 2 >= idx.size());
            cur[j].weight = trimmed ? 0.0 : (at_nodes ? g.quad_w[j] : g.w_mid[j]);
        }
        levels_.push_back(cur);
        prev = std::move(cur);
        prev_ok = std::move(ok);
    }
    // strip undefined rows (empty coefficient lists) from the weight sum
    for (auto& lvl : levels_)
        for (auto& r : lvl)
            if (r.c.empty()) r.weight = 0.0L;
}

namespace {

template <class T>
long double level_form(const std::vector<std::vector<XLevelOperator::Row>>& levels, std::span<const T> u,
                       std::span<const T> v)
{
    long double total = 0.0L;
    for (const auto& lvl : levels) {
        long double s = 0.0L;
        for (const auto& r : lvl) {
            if (r.weight == 0.0L) continue;
            long double du = 0.0L, dv = 0.0L;
            for (std::size_t k = 0; k < r.c.size(); ++k) {
                du += r.c[k] * u[r.first + k];
                dv += r.c[k] * v[r.first + k];
            }
            s += r.weight * du * dv;
        }
        total += s;
    }
    return total;
}

} // namespace

long double XLevelOperator::form(std::span<const double> u, std::span<const double> v) const
{
    return level_form(levels_, u, v);
}

long double XLevelOperator::form(std::span<const long double> u, std::span<const long double> v) const
{
    return level_form(levels_, u, v);
}

BandMatrixLD XLevelOperator::gram() const
{
    const std::size_t K = levels_.size();
    BandMatrixLD G(n_, K, K);
    for (const auto& lvl : levels_)
        for (const auto& r : lvl) {
            if (r.weight == 0.0L) continue;
            for (std::size_t a = 0; a < r.c.size(); ++a)
                for (std::size_t b = 0; b < r.c.size(); ++b)
                    G.add(r.first + a, r.first + b, r.weight * r.c[a] * r.c[b]);
        }
    return G;
}

std::shared_ptr<const XLevelOperator> x_levels(const RadialGrid& g, int order)
{
    static std::mutex mu;
    static std::map<std::tuple<std::size_t, double, int>, std::shared_ptr<const XLevelOperator>> cache;
    const auto key = std::make_tuple(g.n, g.L, order);
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto op = std::make_shared<const XLevelOperator>(g, order);
    std::lock_guard lock(mu);
    if (cache.size() > 16) cache.clear();
    return cache.emplace(key, op).first->second;
}

BandMatrix gram_d12(const RadialGrid& g)
{
    return stiffness_matrix(g);
}

BandMatrix gram_l2g(const Weight& g)
{
    const RadialGrid& grid = *g.grid();
    std::vector<double> d(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) d[i] = grid.quad_w[i] * g.values[i];
    return BandMatrix::diagonal(d);
}

BandMatrix gram_x(const RadialGrid& g, const XNormConfig& cfg)
{
    return gram_x_ld(g, cfg).cast<double>();
}

BandMatrixLD gram_d12_ld(const RadialGrid& g)
{
    return stiffness_matrix_ld(g);
}

BandMatrixLD gram_l2g_ld(const Weight& g)
{
    const RadialGrid& grid = *g.grid();
    std::vector<long double> d(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) d[i] = static_cast<long double>(grid.quad_w[i]) * g.values[i];
    return BandMatrixLD::diagonal(d);
}

BandMatrixLD gram_x_ld(const RadialGrid& g, const XNormConfig& cfg)
{
    cfg.validate();
    BandMatrixLD G = x_levels(g, cfg.order)->gram();
    G.add_scaled(1.0L, stiffness_matrix_ld(g));
    return G;
}

bool gram_x_ill_conditioned(const RadialGrid& g, const XNormConfig& cfg)
{
    return std::numeric_limits<double>::epsilon() / std::pow(g.h, 2 * cfg.order) > 1e-6;
}

} // namespace mcbif
