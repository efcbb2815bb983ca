#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace hmcf {

/// Horizontal mean curvature of a rotational surface |z| = f(r) in H^1:
/// k0 = sign * ((r^2/4) f'' + f'^3 / r) / (f'^2 + r^2/4)^{3/2}.
/// sign is +1 for z > 0, -1 for z < 0. Throws for r <= 0 (characteristic axis).
double radial_curvature(double fp, double fpp, double r, int sign);

struct OffSurfaceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Closed-form curvatures of the named surfaces. Points are checked to lie
/// on the surface (tolerance `tol`); characteristic input throws.
double euclidean_ball_curvature(double R, const Eigen::Vector3d& p, double tol = 1e-8);
double koranyi_ball_curvature(double R, const Eigen::Vector3d& p, double tol = 1e-8);

/// Heisenberg (Carnot-Caratheodory) ball of radius R via the geodesic
/// parametrization r = (2/c) sin(cR/2), z = (cR - sin(cR)) / (2 c^2);
/// c is an input parameter, not solved for.
double heisenberg_ball_curvature(double R, double c);
/// The (r, z) point of the Heisenberg-ball parametrization at (R, c).
Eigen::Vector2d heisenberg_ball_point(double R, double c);

struct RotationalProfile {
    std::vector<double> r;  // uniform grid on [0, r_max]
    std::vector<double> f;
    double time = 0.0;
};

/// Right-hand side of the reduced 1-D evolution
/// f_t = (4 f'^3 + r^3 f'') / (4 r f'^2 + r^3) for r > 0, with the r -> 0
/// limit f_t = f'' applied where the denominator underflows, and
/// f_t = f''(0) at r = 0 (mirror stencil).
double rotational_rhs(double fp, double fpp, double r, double denom_tol = 1e-14);

/// Explicit time stepping with Neumann f'(0)=0 via a mirrored ghost node,
/// dt = 0.25 h^2 / max(1, max|f''|) recomputed per step. Snapshots are the
/// initial profile, every snap_every accepted steps, and the final state.
std::vector<RotationalProfile> evolve_profile(const std::vector<double>& f0, double r_max,
                                              double T, int snap_every = 0);

/// f value at radius r by linear interpolation.
double profile_value(const RotationalProfile& p, double r);
/// Smallest radius where f crosses level (profile assumed monotone near it);
/// returns -1 when no crossing exists.
double profile_radius_at_level(const RotationalProfile& p, double level);

}  // namespace hmcf
