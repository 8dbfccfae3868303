#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcbif/eigen.hpp"
#include "mcbif/nonlinear.hpp"

namespace mcbif {

struct BranchPoint {
    std::size_t step_index = 0;
    double lambda = 0.0;
    Field u;
    double arclength = 0.0;
    double residual_norm = 0.0; // dual quadrature norm of the weak residual
    double u_norm_x = 0.0;
    double u_norm_d12 = 0.0;
    double min_u = 0.0;
    double max_u = 0.0;
    bool positive = true;
    std::size_t newton_iterations = 0;
    double condition_estimate = 0.0; // bordered system, 1-norm lower bound
};

enum class Termination { ball_exit, step_limit, met_trivial_at, corrector_failure };

const char* to_string(Termination t);

struct ContinuationOptions {
    double R = 1.0;                  // ball radius around (lambda_0eps, 0)
    std::size_t max_steps = 1000;
    double s0 = 5e-4;                // first amplitude (X-norm) off the trivial line
    int direction = +1;
    double ds_max = 0.015;
    std::size_t max_halvings = 16;
    double grow = 1.3;
    std::size_t easy_iterations = 3; // a step converging this fast counts as easy
    std::size_t easy_steps_to_grow = 2;
    double corrector_tol = 2e-10;    // target dual residual
    double accept_tol = 1e-9;        // hard bound for accepting a point
    std::size_t max_newton = 12;
    double max_condition = 1e15;
    double trivial_tol = 1e-8;
    double positivity_tol = 1e-8;

    void validate() const;
};

struct Branch {
    RegularizedProblem problem;
    int direction = +1;
    double ball_radius = 1.0;
    double lambda_start = 0.0; // lambda_0eps
    Field u0;                  // X-normalized principal eigenfield
    std::vector<BranchPoint> points;
    Termination termination = Termination::step_limit;
    std::optional<double> termination_data; // lambda* for met_trivial_at
    std::string note;
};

class ContinuationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Trivial point (lambda_0eps, 0) and the first predictor direction*s0*u0.
std::pair<BranchPoint, BranchPoint> start_branch(const DiscreteProblem& dp, int direction, double s0,
                                                 const EigenOptions& eopt = {});

Branch continue_branch(const DiscreteProblem& dp, const ContinuationOptions& opt,
                       const EigenOptions& eopt = {});
Branch continue_branch(const RegularizedProblem& p, const ContinuationOptions& opt);

/// positive = min_u >= -tol * max(|min_u|, |max_u|)
void fill_point_stats(const DiscreteProblem& dp, BranchPoint& pt, double positivity_tol);

struct PositivityAnomaly {
    std::size_t step = 0;
    double min_u = 0.0;
    double max_u = 0.0;
    double radius = 0.0;
};

/// Points inside the ball whose sign contradicts the branch direction
/// (negative dips on C+, positive bumps on C-).
std::vector<PositivityAnomaly> monitor_positivity(const Branch& b, double positivity_tol = 1e-8);

enum class Alternative { meets_infinity_proxy, meets_trivial, inconclusive };

const char* to_string(Alternative a);

struct AlternativeReport {
    Alternative kind = Alternative::inconclusive;
    double eps = 0.0;
    std::optional<double> lambda_star;
    std::optional<double> nearest_eigenvalue;
    std::optional<std::size_t> nearest_index; // 0 = principal
    std::optional<double> distance;
    std::optional<double> gap;
    bool matches_eigenvalue = false; // distance < gap / 10
};

AlternativeReport detect_alternative(const Branch& b, std::size_t spectrum_size = 4);

/// radius of (lambda, u) in the continuation ball: sqrt(|u|_X^2 + (lambda - lambda_start)^2)
double ball_radius_of(const Branch& b, const BranchPoint& pt);

} // namespace mcbif
