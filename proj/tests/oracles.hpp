#pragma once

// Independent reference computations used only by the tests. Nothing here
// touches the library's discretization.

#include <functional>
#include <vector>

namespace oracle {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

/// integral of f over (0, inf) via r = t/(1-t)
double integrate_half_line(const std::function<double(double)>& f, double tol = 1e-12);

/// Smallest `count` eigenvalues of -v'' = lambda w(r) v on (0, R) with
/// v(0) = 0, v'(R) = 0 (v = r u), uniform finite differences + Sturm bisection.
std::vector<double> sturm_radial_eigenvalues(const std::function<double(double)>& w, std::size_t count,
                                             double R = 200.0, double dr = 0.005);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Extrapolate values v_k on mesh sizes h_k to h -> 0 assuming
/// v(h) = v* + c1 h^2 + c2 h^4 + ... (uses as many terms as points).
double richardson_h2(const std::vector<double>& h, const std::vector<double>& v);

/// Central finite-difference Jacobian of F: R^n -> R^n, assuming the true
/// Jacobian has half-bandwidth `bw` (columns are colored with stride 2bw+1).
std::vector<std::vector<double>> fd_jacobian_banded(
    const std::function<std::vector<double>(const std::vector<double>&)>& F, const std::vector<double>& x,
    std::size_t bw, double step);

} // namespace oracle
