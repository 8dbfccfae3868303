#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mcbif/continuation.hpp"
#include "mcbif/eigen.hpp"
#include "mcbif/forms.hpp"
#include "mcbif/nonlinear.hpp"

namespace mcbif {

/// A point of R x X used by the set distances.
struct SamplePoint {
    double lambda = 0.0;
    Field u;
};

/// Points of the branch inside the closed ball of radius R around
/// (center, 0), radius sqrt(|u|_X^2 + (lambda - center)^2).
std::vector<SamplePoint> truncate_to_ball(const Branch& b, double center, double R);

/// Symmetric Hausdorff distance with metric sqrt(dlambda^2 + |du|_X^2).
/// Either set empty -> +inf.
double hausdorff_distance(const std::vector<SamplePoint>& a, const std::vector<SamplePoint>& b,
                          const XNormConfig& cfg);
double hausdorff_distance(const Branch& a, const Branch& b, double center, double R);

struct StudyConfig {
    GridPtr grid;
    XNormConfig xcfg{1};
    FluxModel flux;
    double theta = 1e-2;  // fixed in an eps study
    double eps = 0.0;     // fixed in a theta study (must be 0)
    double R = 1.0;
    ContinuationOptions cont; // R is overridden per branch
    double tol_factor = 5e-3; // converged when last distance <= tol_factor * R
};

struct StudyEntry {
    double value = 0.0;         // eps or theta
    bool ok = false;
    std::string error;          // branch failure, study continues
    Branch branch;
    double lambda_start = 0.0;  // lambda_0,param
    std::size_t points_in_ball = 0;
    // eps study: |lambda_0eps - lambda0| <= eps / |u0|^2_{L2_h}
    double eigbound = 0.0;
    bool eigbound_ok = true;
    // theta study
    double bif_lambda = 0.0;         // lambda at the smallest nontrivial amplitude
    bool bif_ok = true;
    double h_term_ratio = 0.0;       // max over points with |u|_X <= 1e-3
    double rayleigh_defect = 0.0;    // |1 - lambda int h u~^2 - H-term|
    std::size_t h_term_samples = 0;
};

struct StudyReport {
    std::string parameter;              // "eps" | "theta"
    std::vector<StudyEntry> entries;
    std::vector<double> distances;      // d_k between entries k and k+1
    double lambda0 = 0.0;               // unperturbed principal eigenvalue (ball centre)
    double u0_l2h_sq = 0.0;             // |u0|^2_{L2_h}, u0 X-normalized
    double R = 1.0;
    double R_cont = 1.0;
    double tolerance = 0.0;
    bool insufficient = false;          // fewer than 3 parameter values
    bool distances_nonincreasing = false;
    bool converged = false;
    bool bifurcation_monotone = true;   // eps: lambda_0eps nonincreasing as eps decreases
    bool bifurcation_ok = true;         // eigbound (eps) / bif_lambda near lambda0 (theta)
    double bif_tolerance = 0.0;
    std::vector<std::string> notes;
};

/// Convergence of the branches C_eps as eps decreases (theta fixed).
StudyReport eps_limit_study(const StudyConfig& cfg, const std::vector<double>& eps_values);

/// Same with theta as parameter; requires cfg.eps == 0.
StudyReport theta_limit_study(const StudyConfig& cfg, const std::vector<double>& theta_values);

/// Shared driver: also used for synthetic families in tests.
void finish_study(StudyReport& rep, const StudyConfig& cfg);

/// h + (1/lambda) H(lambda,u) u/(u^2+theta)
Weight constructed_weight(const Weight& h, const BranchPoint& pt, double theta);

/// (sum_i quad_w_i |f_i|^p)^(1/p)
double lp_norm(const Field& f, double p);

struct WeightCheckEntry {
    double value = 0.0;
    std::size_t step = 0;
    double target_amplitude = 0.0;
    double amplitude = 0.0;    // |u|_X of the chosen point
    double lambda_branch = 0.0;
    double lambda = 0.0;       // principal eigenvalue of the constructed weight
    double lambda_distance = 0.0;
    double field_distance = 0.0; // max|v - u0| / max|u0|, both D12-normalized
    double weight_minus_h_l32 = 0.0;
    bool weight_positive = true;
    bool ok = false;
    std::string error;
};

struct WeightCheckReport {
    std::vector<WeightCheckEntry> entries;
    double lambda0 = 0.0;
    bool hypothesis_met = true; // chosen amplitudes shrink to 0
    bool distances_decreasing = false;
    bool final_within_tol = false;
    double tolerance = 1e-2;
    std::vector<std::string> notes;
};

/// Builds the constructed weight on each branch of a study at the point whose
/// X-norm is nearest a0 * value_k / value_0 (a0 = amplitude_fraction * R) and
/// checks its principal pair against (lambda0, u0).
WeightCheckReport weight_sequence_eigencheck(const StudyReport& family, double theta_fixed,
                                             double amplitude_fraction = 0.5, double tol = 1e-2);

struct ProbeEntry {
    std::size_t index = 0;
    double lambda_n0 = 0.0;
    double mass_ratio_defect = 0.0; // |1 - |u0|^2 / |un0|^2| in L2_g
    double curve_distance = 0.0;    // max_eps dist(phi_n(eps), phi_0(eps))
    double max_lambda = 0.0;
    bool bound_ok = true;           // lambda_n,eps <= lambda0^(2) - delta
    bool kappa_ok = true;           // 0 < kappa <= 1 / |u_n0|^2
    bool exceptional = false;
    std::string error;
};

struct ProbeReport {
    double lambda0 = 0.0;
    double lambda0_second = 0.0;
    double delta = 1.0;
    double sstar = 0.0;
    std::vector<double> eps_grid;
    std::size_t N_delta = 0;
    bool N_capped = false;
    std::vector<ProbeEntry> entries;
    bool distances_decreasing = false;
    bool uniform_bound = true;
    bool kappa_bounds = true;
    std::vector<std::string> notes;
};

/// Compactness probe of the perturbed principal curves phi_n for weights g_n.
ProbeReport compactness_probe(const Weight& g0, const std::vector<Weight>& gs, const XNormConfig& cfg,
                              double delta = 1.0, std::size_t eps_points = 6);

} // namespace mcbif
