#include "hmcf/rotational.hpp"

#include <algorithm>
#include <cmath>

namespace hmcf {

double radial_curvature(double fp, double fpp, double r, int sign) {
    if (r <= 0) throw std::invalid_argument("radial_curvature: r > 0 required (axis is characteristic)");
    double num = 0.25 * r * r * fpp + fp * fp * fp / r;
    double den = std::pow(fp * fp + 0.25 * r * r, 1.5);
    return (sign >= 0 ? 1.0 : -1.0) * num / den;
}

double euclidean_ball_curvature(double R, const Eigen::Vector3d& p, double tol) {
    double res = p.squaredNorm() - R * R;
    if (std::abs(res) > tol * std::max(1.0, R * R))
        throw OffSurfaceError("point not on the Euclidean sphere");
    double rho = std::hypot(p(0), p(1));
    if (rho <= tol) throw std::invalid_argument("characteristic point of the Euclidean sphere");
    return 2.0 * (4.0 + R * R) / (rho * std::pow(4.0 + p(2) * p(2), 1.5));
}

double koranyi_ball_curvature(double R, const Eigen::Vector3d& p, double tol) {
    double r2 = p(0) * p(0) + p(1) * p(1);
    double res = r2 * r2 + 16.0 * p(2) * p(2) - std::pow(R, 4);
    if (std::abs(res) > tol * std::max(1.0, std::pow(R, 4)))
        throw OffSurfaceError("point not on the Koranyi ball");
    double rho = std::sqrt(r2);
    if (rho <= tol) throw std::invalid_argument("characteristic point of the Koranyi ball");
    return 3.0 * rho / (R * R);
}

Eigen::Vector2d heisenberg_ball_point(double R, double c) {
    double r = 2.0 / c * std::sin(c * R / 2.0);
    double z = (c * R - std::sin(c * R)) / (2.0 * c * c);
    return {r, z};
}

double heisenberg_ball_curvature(double R, double c) {
    double s2 = std::sin(c * R / 2.0);
    double den = s2 - (c * R / 2.0) * std::cos(c * R / 2.0);
    if (std::abs(s2) < 1e-12 || std::abs(den) < 1e-12)
        throw std::invalid_argument("heisenberg_ball_curvature: degenerate parameter");
    return 0.5 * (c / 2.0) / s2 * (std::sin(c * R) - c * R * std::cos(c * R)) / den;
}

double rotational_rhs(double fp, double fpp, double r, double denom_tol) {
    double den = 4.0 * r * fp * fp + r * r * r;
    if (std::abs(den) < denom_tol) return fpp;  // r -> 0 limit along the stencil
    return (4.0 * fp * fp * fp + r * r * r * fpp) / den;
}

std::vector<RotationalProfile> evolve_profile(const std::vector<double>& f0, double r_max,
                                              double T, int snap_every) {
    if (f0.size() < 3) throw std::invalid_argument("evolve_profile: need at least 3 nodes");
    if (r_max <= 0 || T <= 0) throw std::invalid_argument("evolve_profile: bad r_max or T");
    const int n = static_cast<int>(f0.size());
    const double h = r_max / (n - 1);

    RotationalProfile prof;
    prof.r.resize(n);
    for (int i = 0; i < n; ++i) prof.r[i] = i * h;
    prof.f = f0;
    prof.time = 0.0;

    std::vector<RotationalProfile> snaps{prof};
    std::vector<double> rhs(n);
    int step = 0;
    while (prof.time < T - 1e-15) {
        // Mirrored ghosts enforce f'(0)=0 and f'(r_max)=0.
        auto fval = [&](int i) {
            if (i < 0) return prof.f[-i];
            if (i >= n) return prof.f[2 * (n - 1) - i];
            return prof.f[i];
        };
        double max_fpp = 0.0;
        for (int i = 0; i < n; ++i) {
            double fp = (fval(i + 1) - fval(i - 1)) / (2 * h);
            double fpp = (fval(i + 1) - 2 * prof.f[i] + fval(i - 1)) / (h * h);
            max_fpp = std::max(max_fpp, std::abs(fpp));
            rhs[i] = i == 0 ? fpp : rotational_rhs(fp, fpp, prof.r[i]);
        }
        double dt = 0.25 * h * h / std::max(1.0, max_fpp);
        dt = std::min(dt, T - prof.time);
        for (int i = 0; i < n; ++i) {
            prof.f[i] += dt * rhs[i];
            if (!std::isfinite(prof.f[i]))
                throw std::runtime_error("evolve_profile: blow-up at r=" + std::to_string(prof.r[i]) +
                                         ", t=" + std::to_string(prof.time));
        }
        prof.time += dt;
        ++step;
        bool last = prof.time >= T - 1e-15;
        if (last || (snap_every > 0 && step % snap_every == 0)) snaps.push_back(prof);
    }
    return snaps;
}

double profile_value(const RotationalProfile& p, double r) {
    if (r <= p.r.front()) return p.f.front();
    if (r >= p.r.back()) return p.f.back();
    auto it = std::upper_bound(p.r.begin(), p.r.end(), r);
    std::size_t i = static_cast<std::size_t>(it - p.r.begin());
    double t = (r - p.r[i - 1]) / (p.r[i] - p.r[i - 1]);
    return (1 - t) * p.f[i - 1] + t * p.f[i];
}

double profile_radius_at_level(const RotationalProfile& p, double level) {
    for (std::size_t i = 1; i < p.r.size(); ++i) {
        double a = p.f[i - 1] - level, b = p.f[i] - level;
        if (a == 0.0) return p.r[i - 1];
        if ((a < 0) != (b < 0)) {
            double t = a / (a - b);
            return p.r[i - 1] + t * (p.r[i] - p.r[i - 1]);
        }
    }
    return -1.0;
}

}  // namespace hmcf
