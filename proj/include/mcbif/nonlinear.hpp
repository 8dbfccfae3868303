#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcbif/band_matrix.hpp"
#include "mcbif/forms.hpp"
#include "mcbif/radial_grid.hpp"

namespace mcbif {

enum class FluxKind { mean_curvature, relativistic, custom };

const char* to_string(FluxKind k);
FluxKind flux_kind_from_string(const std::string& s);

/// Radial flux f(r, u, u') and source g(r, u, u') of
///     -div(grad u / f) = lambda h u + g.
/// f_u and f_p are the partial derivatives in u and u' (needed for the
/// chain rule in grad f).
struct FluxFunctions {
    std::function<double(double r, double u, double p)> f, f_u, f_p, g;
};

struct FluxModel {
    FluxKind kind = FluxKind::mean_curvature;
    std::map<std::string, double> params; // relativistic: delta, c1
    FluxFunctions custom;                 // used when kind == custom

    /// f(x, 0, 0); must be > 0
    double c() const;
    FluxFunctions functions() const;
};

class InvalidFluxError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct RegularizedProblem {
    Weight weight; // normally reference_h
    double theta = 1e-2;
    double eps = 0.0;
    FluxModel flux;
    XNormConfig xcfg{1};

    /// test hook: drop the nonlinear term entirely
    bool linear_only = false;

    void validate() const;
    const GridPtr& grid() const { return weight.grid(); }
};

/// Precomputed Gram matrices and stencils of one problem; immutable, so it
/// can be shared between threads.
class DiscreteProblem {
public:
    explicit DiscreteProblem(RegularizedProblem p);

    const RegularizedProblem& problem() const { return p_; }
    const RadialGrid& grid() const { return *p_.grid(); }

    /// eps Gram_X + Gram_D12
    const BandMatrix& stiffness() const { return K_; }
    const std::vector<double>& mass_diag() const { return mass_; } // quad_w * g
    const DerivativeStencils& stencils() const { return st_; }

private:
    RegularizedProblem p_;
    BandMatrix K_;
    std::vector<double> mass_;
    DerivativeStencils st_;
};

/// H = lambda h u u'^2/(1 + sqrt(1+u'^2)) - u'' u'^2/(1 + u'^2), pointwise.
Field eval_H(const Weight& h, double lambda, const Field& u);
double eval_H_point(double lambda, double h, double u, double p, double q);

/// u^2/(u^2 + theta)
Field theta_factor(const Field& u, double theta);

/// eps Gram_X u + Gram_D12 u - lambda Gram_L2h u - W (H * theta_factor)
std::vector<double> residual(const DiscreteProblem& dp, double lambda, std::span<const double> u);
Field residual(const RegularizedProblem& p, double lambda, const Field& u);

struct Linearization {
    BandMatrix J;                 // d residual / du
    std::vector<double> d_lambda; // d residual / d lambda
};

Linearization jacobian(const DiscreteProblem& dp, double lambda, std::span<const double> u);
Linearization jacobian(const RegularizedProblem& p, double lambda, const Field& u);

/// Weak residual of -div(grad u / f) = lambda h u + g with the same eps and
/// theta treatment. With c = f(x,0,0) the equation is rewritten as
///     -Delta u = c lambda h u + [lambda h u (f - c) + f g - u' (f_u u' + f_p u'') / f]
/// and the bracket plays the role of H. mean_curvature dispatches to residual().
std::vector<double> flux_residual(const DiscreteProblem& dp, double lambda, std::span<const double> u);
Field flux_residual(const RegularizedProblem& p, double lambda, const Field& u);

struct SingularValues {
    double smallest = 0.0;
    double largest = 0.0;
    double ratio() const { return smallest / largest; }
};

/// Extreme singular values of a square banded matrix: power iteration on
/// J^T J for the largest, inverse iteration (two banded LU solves per sweep)
/// for the smallest.
SingularValues extreme_singular_values(const BandMatrix& J, std::size_t iterations = 200);

/// Nonlinear part of flux_residual before the theta factor and quadrature.
std::vector<double> flux_nonlinearity(const DiscreteProblem& dp, double lambda, std::span<const double> u);

} // namespace mcbif
