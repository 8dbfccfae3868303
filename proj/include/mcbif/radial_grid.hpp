#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcbif/band_matrix.hpp"

namespace mcbif {

// Compactified radial mesh: r = L s / (1 - s), s uniform on (0, 1).
//
// Nodes i = 0..n-1 sit at s = (i+1) h, h = 1/(n+1). The point s = 1 (r = inf)
// carries the Dirichlet value 0 and zero quadrature weight. Cell midpoints
// m = 0..n-1 sit between node m and node m+1 (node n being s = 1); they carry
// the staggered gradient used by the D^{1,2} form.
struct RadialGrid {
    std::size_t n = 0;
    double L = 1.0;
    double h = 0.0;

    std::vector<double> s, r, drds, quad_w;            // nodes
    std::vector<double> s_mid, r_mid, drds_mid, w_mid; // cell midpoints

    bool same_as(const RadialGrid& o) const { return n == o.n && L == o.L; }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

class GridMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

GridPtr make_grid(std::size_t n_interior, double map_scale = 1.0);

struct FieldDerivatives {
    std::vector<double> d1; // u'(r_i)
    std::vector<double> d2; // u''(r_i)
};

struct Field {
    GridPtr grid;
    std::vector<double> values;
    std::optional<FieldDerivatives> deriv;

    Field() = default;
    Field(GridPtr g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    const double& operator[](std::size_t i) const { return values[i]; }
};

Field zero_field(const GridPtr& g);
Field sample(const GridPtr& g, const std::function<double(double)>& f_of_r);

void require_same_grid(const Field& a, const Field& b, const char* where);

/// Centred second-order differences in s mapped to d/dr, d2/dr2.
/// Origin: even reflection (u'(0) = 0) through the ghost u(0) = (4u1 - u2)/3.
/// Far end: Dirichlet u(s=1) = 0.
Field differentiate(const Field& f);

/// Stencil matrices with differentiate(u).d1 = P u and .d2 = Q u (tridiagonal).
struct DerivativeStencils {
    BandMatrix P;
    BandMatrix Q;
};
DerivativeStencils derivative_stencils(const RadialGrid& g);

/// Staggered gradient at the cell midpoints (the D^{1,2} derivative).
std::vector<double> staggered_gradient(const RadialGrid& g, std::span<const double> u);

/// Gram matrix of the D^{1,2} form, tridiagonal SPD.
BandMatrix stiffness_matrix(const RadialGrid& g);
BandMatrixLD stiffness_matrix_ld(const RadialGrid& g);

/// -(u'' + 2u'/r) as diag(quad_w)^{-1} * stiffness * u.
Field apply_laplacian(const Field& f);

/// sqrt(sum_i r_i^2 / quad_w_i): the norm of a weak residual (tested against
/// nodal hat functions) measured as an L^2 function.
double dual_norm(const RadialGrid& g, std::span<const double> r);

/// sqrt(sum_i quad_w_i u_i^2)
double l2_norm(const RadialGrid& g, std::span<const double> u);

} // namespace mcbif
