#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcbif/continuation.hpp"
#include "mcbif/limits.hpp"

namespace mcbif {

/// Bad configuration value; `key` names the offending entry.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key(key)
    {
    }
    std::string key;
};

struct Tolerances {
    double eigen = 1e-12;          // relative change of Ritz values
    double eigen_residual = 1e-10; // relative weak residual
    double identity = 1e-10;       // decomposition identities, absolute
    double kappa_identity = 1e-8;  // kappa(alpha+beta) = kappa0 alpha, relative
    double corrector = 2e-10;
    double accept = 1e-9;
    double trivial = 1e-8;
    double positivity = 1e-8;
    double limit_factor = 5e-3;    // study converged when d_last <= limit_factor * R
};

/// Flat dotted-key configuration shared by all commands.
struct RunConfig {
    std::size_t grid_n = 2000;
    double grid_L = 1.0;
    int xnorm_order = 1;
    double theta = 1e-2;
    double eps = 1e-3;
    std::string flux_kind = "mean_curvature";
    double flux_delta = 1.0;
    double flux_c1 = 1.0;
    double cont_R = 1.0;
    std::size_t cont_max_steps = 1000;
    double cont_s0 = 5e-4;
    int cont_direction = +1;
    double cont_ds_max = 0.015;
    std::string study_parameter = "eps";
    std::vector<double> study_values = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
    std::size_t eigen_m = 3;
    std::vector<double> perturb_eps = {1e-1, 1e-2, 1e-3, 0.0};
    double perturb_delta = 1.0;
    Tolerances tol;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    /// every key with its canonical value, sorted (for manifests)
    std::map<std::string, std::string> canonical() const;

    GridPtr make_grid() const;
    XNormConfig xnorm() const { return XNormConfig{xnorm_order}; }
    FluxModel flux() const;
    RegularizedProblem problem() const; // reference weight h
    ContinuationOptions continuation() const;
    EigenOptions eigen_options() const;
    StudyConfig study() const;
};

/// The recognised keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Sets one key; throws ConfigError for unknown keys and invalid values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines ('#' starts a comment) on top of the defaults.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Applies --key=value style overrides (given without the leading dashes).
void apply_overrides(RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv);

/// Number formatting used by every output file: 17 significant digits.
std::string fmt17(double v);

} // namespace mcbif
