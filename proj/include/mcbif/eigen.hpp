#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcbif/eigen_solver.hpp"
#include "mcbif/forms.hpp"

namespace mcbif {

enum class NormKind { X, D12, L2g };
const char* to_string(NormKind k);

struct EigenPair {
    double lambda = 0.0;
    Field u;
    NormKind norm_used = NormKind::D12;
    Weight weight;
    XNormConfig xcfg;
    double eps = 0.0;
    double residual = 0.0;        // relative weak residual, dual quadrature norm
    double stored_residual = 0.0; // same, for the double-rounded u
    // extended-precision copy of u (same scaling); empty when not available
    std::vector<long double> u_ext;
};

struct EigenSolution {
    std::vector<EigenPair> pairs;
    std::size_t negative_mass_directions = 0;
    bool gram_x_ill_conditioned = false;
    bool residual_target_met = false;
    std::size_t iterations = 0;
};

struct EigenOptions {
    PencilOptions pencil;
    std::vector<std::vector<double>> warm; // initial iterates (any scaling)
};

/// -Delta u = lambda g u: stiffness D^{1,2}, mass L^2_g, fields D^{1,2}-normalized.
EigenSolution solve_unperturbed(const Weight& g, std::size_t m, const EigenOptions& opt = {});

/// (eps Gram_X + Gram_D12) u = lambda Gram_L2g u, fields X-normalized.
/// eps = 0 uses exactly the unperturbed operator.
EigenSolution solve_perturbed(const Weight& g, const XNormConfig& cfg, double eps, std::size_t m,
                              const EigenOptions& opt = {});

/// eps Gram_X + Gram_D12
BandMatrixLD perturbed_stiffness(const RadialGrid& grid, const XNormConfig& cfg, double eps);

/// Gram_X u = lambda~ Gram_L2g u, fields X-normalized.
EigenSolution solve_aux(const Weight& g, const XNormConfig& cfg, std::size_t m,
                        const EigenOptions& opt = {});

/// Principal pair of the unperturbed problem, field rescaled to unit X-norm.
EigenPair principal_x_normalized(const Weight& g, const XNormConfig& cfg);

struct EigenCurveSample {
    double eps = 0.0;
    EigenPair pair;
    double alpha = 1.0;
    double beta = 0.0;
    double beta_cross = 0.0; // -<u0, xi>_X, must agree with beta
    double kappa = 0.0;      // (lambda - lambda0)/eps, kappa0 at eps = 0
    double eta_norm_x_sq = 0.0;
    double xi_norm_d12_sq = 0.0;
    double xi_norm_l2g_sq = 0.0;
    double identity_norm = 0.0;  // |alpha^2 + |eta|_X^2 - 1|
    double identity_kappa = 0.0; // |kappa(alpha+beta) - kappa0 alpha| / (kappa0 alpha)
    double identity_410 = 0.0;   // |(|xi|_D^2 - lambda |xi|_g^2) - eps(alpha beta - |eta|^2)|
    double u_minus_u0_x = 0.0;   // |u_eps - u0|_X
    XNormConfig xcfg;
};

struct EigenCurve {
    double lambda0 = 0.0;
    double lambda0_second = 0.0; // lambda^(2) of the unperturbed problem
    double kappa0 = 0.0;         // 1 / |u0|^2_{L2_g}, u0 X-normalized
    EigenPair u0;                // X-normalized principal pair
    std::vector<double> aux_values;
    std::optional<std::size_t> aux_bracket; // kappa0 in (aux[i], aux[i+1])
    bool exceptional = false;               // kappa0 == aux[i]
    std::optional<std::size_t> exceptional_index;
    double sstar = 0.0;
    double delta = 1.0;
    std::vector<std::string> warnings;
    std::vector<EigenCurveSample> samples;
    XNormConfig xcfg;
};

class CurveIdentityError : public std::runtime_error {
public:
    CurveIdentityError(const std::string& what, double eps) : std::runtime_error(what), eps(eps) {}
    double eps;
};

struct TraceOptions {
    double delta = 1.0;           // for s* and the lambda^(2) - delta bound
    double identity_abort = 1e-6; // relative kappa identity violation that aborts
    double exceptional_tol = 1e-8;
    std::size_t aux_count = 6;
    bool warm_start = true;
    EigenOptions eigen;
};

/// Traces phi(eps) over `eps_list` (descending). Throws CurveIdentityError
/// if kappa(alpha+beta) = kappa0 alpha fails beyond `identity_abort`.
EigenCurve trace_curve(const Weight& g, const XNormConfig& cfg, const std::vector<double>& eps_list,
                       const TraceOptions& opt = {});

/// s* = (lambda^(2) - lambda0 - 2 delta) |u0|^2_{L2_g} / (1 + delta), u0 X-normalized.
double estimate_sstar(const Weight& g0, const XNormConfig& cfg, double delta);

/// Same formula from already computed quantities.
double sstar_formula(double lambda0, double lambda2, double u0_l2g_sq, double delta);

struct SimplicityReport {
    double gap = 0.0;                 // next eigenvalue above minus this one
    bool gap_positive = false;
    bool orthogonal = true;           // to every distinct pair, |cos|_g <= 1e-8
    double max_orthogonality_defect = 0.0;
    bool duplicate_found = false;     // an input pair equals this one
    double rhs_projection = 0.0;      // <u,u>_X
    double null_residual = 0.0;       // |L u| relative
    bool algebraically_simple = false;
};

SimplicityReport check_simplicity(const EigenPair& pair, const std::vector<EigenPair>& all_pairs);

/// Orientation used for all returned eigenfields.
void orient_principal(std::vector<double>& u);
void orient_first_nonzero(std::vector<double>& u);

} // namespace mcbif
