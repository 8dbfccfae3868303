#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcbif/band_matrix.hpp"
#include "mcbif/radial_grid.hpp"

namespace mcbif {

enum class WeightKind { reference_h, constructed, custom };

const char* to_string(WeightKind k);

/// A weight g on the grid. Construction checks finiteness and that the
/// positive part has positive mass.
struct Weight {
    WeightKind kind = WeightKind::custom;
    Field values;
    std::string provenance;

    Weight() = default;
    Weight(WeightKind k, Field v, std::string prov);

    const GridPtr& grid() const { return values.grid; }
    /// true when every nodal value is > 0
    bool strictly_positive() const;
};

/// h(r) = (1 + r^2)^-2
Weight reference_h(const GridPtr& g);
Weight custom_weight(Field values, std::string provenance);

struct XNormConfig {
    int order = 6; // K, number of repeated radial derivatives

    void validate() const;
};

class DenominatorError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};
/// L2_g(u,u) == 0
class ZeroDenominatorError : public DenominatorError {
public:
    using DenominatorError::DenominatorError;
};
/// L2_g(u,u) < 0 (sign-changing weight)
class NegativeDenominatorError : public DenominatorError {
public:
    using DenominatorError::DenominatorError;
};

double ip_d12(const Field& u, const Field& v);
double ip_l2g(const Weight& g, const Field& u, const Field& v);
double ip_x(const XNormConfig& cfg, const Field& u, const Field& v);
double rayleigh(const Weight& g, const Field& u);

// raw-vector variants used by the solvers (no grid checks)
double ip_d12(const RadialGrid& g, std::span<const double> u, std::span<const double> v);
double ip_l2g(const RadialGrid& grid, std::span<const double> g, std::span<const double> u,
              std::span<const double> v);
double ip_x(const RadialGrid& g, const XNormConfig& cfg, std::span<const double> u,
            std::span<const double> v);

/// Repeated radial derivatives of the X surrogate as explicit sparse rows.
///
/// Level 1 is the staggered gradient at cell midpoints; level k > 1 is the
/// difference quotient of level k-1 and lives alternately on nodes (k even)
/// and midpoints (k odd). Level 2 uses the ghost gradient 0 at s = h/2.
/// A point of level k is defined only if both parent values are; for k >= 3
/// the two defined points nearest each end carry zero quadrature weight.
class XLevelOperator {
public:
    struct Row {
        std::size_t first = 0;
        std::vector<long double> c;
        long double weight = 0.0; // quadrature weight, 0 when excluded
    };

    XLevelOperator(const RadialGrid& g, int order);

    int order() const { return static_cast<int>(levels_.size()); }
    const std::vector<Row>& level(int k) const { return levels_.at(static_cast<std::size_t>(k - 1)); }

    /// sum_k sum_j w_j (D_k u)_j (D_k v)_j, accumulated in long double
    long double form(std::span<const double> u, std::span<const double> v) const;
    long double form(std::span<const long double> u, std::span<const long double> v) const;
    /// sum_k D_k^T W_k D_k, half-bandwidth = order
    BandMatrixLD gram() const;

private:
    std::size_t n_;
    std::vector<std::vector<Row>> levels_;
};

/// Cached per (grid, order); thread-safe.
std::shared_ptr<const XLevelOperator> x_levels(const RadialGrid& g, int order);

BandMatrix gram_d12(const RadialGrid& g);
BandMatrix gram_l2g(const Weight& g);
BandMatrix gram_x(const RadialGrid& g, const XNormConfig& cfg);

// extended-precision assemblies used by the eigen solvers
BandMatrixLD gram_d12_ld(const RadialGrid& g);
BandMatrixLD gram_l2g_ld(const Weight& g);
BandMatrixLD gram_x_ld(const RadialGrid& g, const XNormConfig& cfg);

/// eps_mach / h^(2K) > 1e-6: applying Gram_X to a field stored in double
/// cancels so many digits that weak residuals cannot reach the solver
/// tolerance (h^-2K is the ratio of |Gram_X| |u| to |Gram_X u| for smooth u).
bool gram_x_ill_conditioned(const RadialGrid& g, const XNormConfig& cfg);

double norm_x(const XNormConfig& cfg, const Field& u);
double norm_d12(const Field& u);

} // namespace mcbif
