#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hmcf/geometry.hpp"
#include "hmcf/horizontal.hpp"

namespace hmcf {

/// Dense node-centered grid over an axis-aligned box (dim 2 or 3, nodes
/// include the box corners). A one-cell ghost layer of constant
/// extrapolation is applied implicitly by index clamping.
struct GridField {
    int dim = 3;
    std::array<int, 3> shape{1, 1, 1};
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
    std::vector<double> values;
    double time = 0.0;

    static GridField create(int dim, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                            double h);

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * shape[1] + j) * shape[0] + i;
    }
    Eigen::Vector3d point(int i, int j, int k) const {
        return origin + Eigen::Vector3d(i * spacing(0), j * spacing(1), k * spacing(2));
    }
    double& at(int i, int j, int k) { return values[index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }

    void fill(const std::function<double(const Eigen::Vector3d&)>& f);
    double min_spacing() const;
};

enum class Branch { regularized, upper_envelope, lower_envelope };

Branch branch_from_string(const std::string& s);
std::string to_string(Branch b);

struct SchemeParams {
    double epsilon = -1.0;  // regularization length; <=0 means "use grid spacing"
    double char_tol = 1e-8;
    double cfl = 0.5;
    Branch branch = Branch::regularized;
};

/// Right-hand side u_t = Delta_0 u - (branch-dependent second term).
/// Non-characteristic points: Delta_0 - Delta_{0,inf} for the envelope
/// branches; the regularized branch always uses q_eps = Xu/sqrt(|Xu|^2+eps^2).
/// Characteristic points: Delta_0 - lambda_max for lower_envelope,
/// Delta_0 - lambda_min for upper_envelope. Total by construction.
double envelope_rhs(const HorizontalJet& j, Branch branch, double char_tol, double epsilon);

struct BlowupError : std::runtime_error {
    BlowupError(const Eigen::Vector3d& node, double t)
        : std::runtime_error("level-set evolution blew up at t=" + std::to_string(t)),
          node(node),
          time(t) {}
    Eigen::Vector3d node;
    double time;
};

struct EvolveResult {
    std::vector<GridField> snapshots;  // initial state, every snap_every steps, final
    double dt = 0.0;
    double s_max = 0.0;
    int steps = 0;
};

/// Forward Euler on u_t = envelope_rhs with centered differences.
/// dt = cfl * h_min^2 / (2 * dim * S_max); S_max is a uniform bound computed
/// once per run. Node updates are independent; `parallel` selects the OpenMP
/// kernel, which is bitwise identical to the serial reference.
EvolveResult evolve(const Frame& frame, const GridField& initial, double T,
                    const SchemeParams& params, int snap_every = 0, bool parallel = true);

/// One explicit step (exposed for the benchmark); writes into `out`.
void evolve_step(const Frame& frame, const GridField& in, GridField& out, double dt,
                 const SchemeParams& params, bool parallel);

struct ZeroLevel {
    std::vector<Eigen::Vector3d> points;
    bool empty = false;  // flagged when the field has a single sign
};

/// Linear interpolation along grid edges with a sign change.
ZeroLevel zero_level_extract(const GridField& gf);

/// Multilinear interpolation of the grid values at an arbitrary point
/// (clamped to the box).
double grid_sample(const GridField& gf, const Eigen::Vector3d& p);

}  // namespace hmcf
