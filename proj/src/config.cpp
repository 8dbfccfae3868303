#include "mcbif/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

namespace mcbif {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v)
{
    const std::string t = trim(v);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(out))
        throw ConfigError(key, fmt::format("'{}' is not a finite real number", v));
    return out;
}

long long to_integer(const std::string& key, const std::string& v)
{
    const std::string t = trim(v);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key, fmt::format("'{}' is not an integer", v));
    return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_real(key, item));
    return out;
}

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok) throw ConfigError(key, what);
}

std::string list_str(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
    return s;
}

struct KeyDef {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<std::pair<std::string, KeyDef>>& key_table()
{
    using C = RunConfig;
    auto real = [](double C::*m, std::function<bool(double)> ok, const char* what) {
        return KeyDef{[m, ok, what](C& c, const std::string& v) {
                          const double x = to_real("", v);
                          if (!ok(x)) throw std::invalid_argument(fmt::format("{} (got {})", what, v));
                          c.*m = x;
                      },
                      [m](const C& c) { return fmt17(c.*m); }};
    };
    auto tol = [](double Tolerances::*m) {
        return KeyDef{[m](C& c, const std::string& v) {
                          const double x = to_real("", v);
                          if (!(x > 0.0)) throw std::invalid_argument(fmt::format("must be > 0 (got {})", v));
                          c.tol.*m = x;
                      },
                      [m](const C& c) { return fmt17(c.tol.*m); }};
    };
    auto positive = [](double x) { return x > 0.0; };
    auto nonneg = [](double x) { return x >= 0.0; };

    static const std::vector<std::pair<std::string, KeyDef>> table = {
        {"grid.n", {[](C& c, const std::string& v) {
                        const auto n = to_integer("", v);
                        if (n < 8) throw std::invalid_argument(fmt::format("must be >= 8 (got {})", v));
                        c.grid_n = static_cast<std::size_t>(n);
                    },
                    [](const C& c) { return std::to_string(c.grid_n); }}},
        {"grid.L", real(&C::grid_L, positive, "must be > 0")},
        {"xnorm.order", {[](C& c, const std::string& v) {
                             const auto k = to_integer("", v);
                             if (k < 1 || k > 6) throw std::invalid_argument(fmt::format("must be in [1, 6] (got {})", v));
                             c.xnorm_order = static_cast<int>(k);
                         },
                         [](const C& c) { return std::to_string(c.xnorm_order); }}},
        {"problem.theta", real(&C::theta, positive, "must be > 0")},
        {"problem.eps", real(&C::eps, nonneg, "must be >= 0")},
        {"flux.kind", {[](C& c, const std::string& v) {
                           flux_kind_from_string(trim(v));
                           c.flux_kind = trim(v);
                       },
                       [](const C& c) { return c.flux_kind; }}},
        {"flux.delta", real(&C::flux_delta, positive, "must be > 0")},
        {"flux.c1", real(&C::flux_c1, positive, "must be > 0")},
        {"continuation.R", real(&C::cont_R, positive, "must be > 0")},
        {"continuation.max_steps", {[](C& c, const std::string& v) {
                                        const auto n = to_integer("", v);
                                        if (n < 0) throw std::invalid_argument(fmt::format("must be >= 0 (got {})", v));
                                        c.cont_max_steps = static_cast<std::size_t>(n);
                                    },
                                    [](const C& c) { return std::to_string(c.cont_max_steps); }}},
        {"continuation.s0", real(&C::cont_s0, positive, "must be > 0")},
        {"continuation.direction", {[](C& c, const std::string& v) {
                                        const auto d = to_integer("", v);
                                        if (d != 1 && d != -1)
                                            throw std::invalid_argument(fmt::format("must be +1 or -1 (got {})", v));
                                        c.cont_direction = static_cast<int>(d);
                                    },
                                    [](const C& c) { return std::to_string(c.cont_direction); }}},
        {"continuation.ds_max", real(&C::cont_ds_max, positive, "must be > 0")},
        {"study.parameter", {[](C& c, const std::string& v) {
                                 const auto t = trim(v);
                                 if (t != "eps" && t != "theta")
                                     throw std::invalid_argument(fmt::format("must be eps or theta (got '{}')", v));
                                 c.study_parameter = t;
                             },
                             [](const C& c) { return c.study_parameter; }}},
        {"study.values", {[](C& c, const std::string& v) {
                              auto vals = to_list("", v);
                              for (std::size_t i = 0; i < vals.size(); ++i) {
                                  if (!(vals[i] >= 0.0)) throw std::invalid_argument("values must be >= 0");
                                  if (i && !(vals[i] < vals[i - 1]))
                                      throw std::invalid_argument("values must be strictly descending");
                              }
                              c.study_values = std::move(vals);
                          },
                          [](const C& c) { return list_str(c.study_values); }}},
        {"eigen.m", {[](C& c, const std::string& v) {
                         const auto m = to_integer("", v);
                         if (m < 1) throw std::invalid_argument(fmt::format("must be >= 1 (got {})", v));
                         c.eigen_m = static_cast<std::size_t>(m);
                     },
                     [](const C& c) { return std::to_string(c.eigen_m); }}},
        {"perturb.eps_values", {[](C& c, const std::string& v) {
                                    auto vals = to_list("", v);
                                    for (std::size_t i = 0; i < vals.size(); ++i) {
                                        if (!(vals[i] >= 0.0)) throw std::invalid_argument("values must be >= 0");
                                        if (i && !(vals[i] < vals[i - 1]))
                                            throw std::invalid_argument("values must be strictly descending");
                                    }
                                    c.perturb_eps = std::move(vals);
                                },
                                [](const C& c) { return list_str(c.perturb_eps); }}},
        {"perturb.delta", real(&C::perturb_delta, positive, "must be > 0")},
        {"tolerances.eigen", tol(&Tolerances::eigen)},
        {"tolerances.eigen_residual", tol(&Tolerances::eigen_residual)},
        {"tolerances.identity", tol(&Tolerances::identity)},
        {"tolerances.kappa_identity", tol(&Tolerances::kappa_identity)},
        {"tolerances.corrector", tol(&Tolerances::corrector)},
        {"tolerances.accept", tol(&Tolerances::accept)},
        {"tolerances.trivial", tol(&Tolerances::trivial)},
        {"tolerances.positivity", tol(&Tolerances::positivity)},
        {"tolerances.limit_factor", tol(&Tolerances::limit_factor)},
        {"output.dir", {[](C& c, const std::string& v) {
                            if (trim(v).empty()) throw std::invalid_argument("must not be empty");
                            c.output_dir = trim(v);
                        },
                        [](const C& c) { return c.output_dir; }}},
    };
    return table;
}

} // namespace

std::string fmt17(double v) { return fmt::format("{:.17g}", v); }

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, def] : key_table()) k.push_back(name);
        return k;
    }();
    return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& [name, def] : key_table()) {
        if (name != key) continue;
        try {
            def.set(cfg, value);
        } catch (const ConfigError& e) {
            throw ConfigError(key, e.what() + 2); // strip the empty key prefix
        } catch (const std::exception& e) {
            throw ConfigError(key, e.what());
        }
        if (key == "continuation.s0" || key == "continuation.R") {
            // s0 must stay inside the ball it starts from
            require(cfg.cont_s0 < cfg.cont_R, key, "continuation.s0 must be < continuation.R");
        }
        return;
    }
    throw ConfigError(key, "unknown configuration key");
}

RunConfig parse_config(const std::string& text, const std::string& source)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, fmt::format("{}:{}: expected 'key = value'", source, lineno));
        set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("--config", fmt::format("cannot read '{}'", path));
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

void apply_overrides(RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv)
{
    for (const auto& [k, v] : kv) set_config_value(cfg, k, v);
}

std::map<std::string, std::string> RunConfig::canonical() const
{
    std::map<std::string, std::string> out;
    for (const auto& [name, def] : key_table()) out[name] = def.get(*this);
    return out;
}

GridPtr RunConfig::make_grid() const { return mcbif::make_grid(grid_n, grid_L); }

FluxModel RunConfig::flux() const
{
    FluxModel f;
    f.kind = flux_kind_from_string(flux_kind);
    if (f.kind == FluxKind::relativistic) f.params = {{"delta", flux_delta}, {"c1", flux_c1}};
    return f;
}

RegularizedProblem RunConfig::problem() const
{
    RegularizedProblem p;
    p.weight = reference_h(make_grid());
    p.theta = theta;
    p.eps = eps;
    p.flux = flux();
    p.xcfg = xnorm();
    return p;
}

EigenOptions RunConfig::eigen_options() const
{
    EigenOptions o;
    o.pencil.eig_tol = tol.eigen;
    o.pencil.res_tol = tol.eigen_residual;
    return o;
}

ContinuationOptions RunConfig::continuation() const
{
    ContinuationOptions o;
    o.R = cont_R;
    o.max_steps = cont_max_steps;
    o.s0 = cont_s0;
    o.direction = cont_direction;
    o.ds_max = cont_ds_max;
    o.corrector_tol = tol.corrector;
    o.accept_tol = tol.accept;
    o.trivial_tol = tol.trivial;
    o.positivity_tol = tol.positivity;
    return o;
}

StudyConfig RunConfig::study() const
{
    StudyConfig s;
    s.grid = make_grid();
    s.xcfg = xnorm();
    s.flux = flux();
    s.theta = theta;
    s.eps = eps;
    s.R = cont_R;
    s.cont = continuation();
    s.tol_factor = tol.limit_factor;
    return s;
}

} // namespace mcbif
