#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hmcf/geometry.hpp"
#include "hmcf/levelset.hpp"
#include "hmcf/rotational.hpp"
#include "hmcf/scalar_field.hpp"
#include "hmcf/sde.hpp"

namespace hmcf {

/// Build a ScalarField from an expression string over x1..xn (+, -, *, /, ^,
/// sin, cos, sqrt, abs, constants). Smooth expressions get symbolic first and
/// second derivatives; abs triggers the finite-difference fallback and marks
/// the field non-smooth.
ScalarField parse_field(const std::string& expr, int dim);

/// Named surfaces accepted wherever a field spec is expected:
/// "euclidean_ball(R)", "koranyi_ball(R)"; anything else is parsed as an
/// expression.
ScalarField resolve_field_spec(const std::string& spec, int dim);

/// Fixed 17-significant-digit CSV cell so doubles round-trip losslessly.
std::string format_double(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::string csv_string(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows);

std::string tool_version();

/// Resolved run configuration; round-trips losslessly through JSON and is
/// written next to every run's outputs.
struct RunConfig {
    std::string geometry = "heisenberg(1)";
    std::string field;
    std::string terminal;
    std::vector<double> box_lo, box_hi;
    double h = 1.0 / 32.0;
    double T = 0.1;
    double dt = 1e-4;
    int n_paths = 10000;
    std::vector<double> p_list{1, 2, 4, 8};
    std::uint64_t seed = 12345;
    std::string branch = "regularized";
    std::string policy = "both";  // feedback | fan | both
    std::string ess_sup = "max";  // max | quantile:Q
    int snap_every = 0;
    double rmax = 1.0;
    std::string output_dir;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
};

struct CrossvalRow {
    std::string quantity;
    double a = 0, b = 0;
    double discrepancy = 0;
    double tolerance = 0;
    bool pass = false;
};

struct CrossvalReport {
    std::vector<CrossvalRow> rows;
    bool all_pass() const;
    nlohmann::json to_json() const;
};

/// Runs the rotational oracle, the grid solver and the stochastic estimator
/// on one problem and tabulates pairwise discrepancies. Supported problems:
/// "vertical_plane", "radial_cap", "constant_cost".
CrossvalReport crossval(const RunConfig& config);

}  // namespace hmcf
