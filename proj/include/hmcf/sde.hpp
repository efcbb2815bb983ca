#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hmcf/geometry.hpp"
#include "hmcf/horizontal.hpp"
#include "hmcf/scalar_field.hpp"

namespace hmcf {

/// Admissible control nu = I_m - a (x) a for a unit direction a, or the
/// distinguished unconstrained value nu = I_m (free horizontal Brownian
/// motion, not admissible for the value function). For projections
/// nu^2 = nu and I - nu^2 = a (x) a, so Tr(I - nu^2) = 1.
struct ControlMatrix {
    static ControlMatrix projection(const Vec& direction);
    static ControlMatrix unconstrained(int m);

    bool is_unconstrained() const { return unconstrained_; }
    const Vec& direction() const { return a_; }
    int rank() const { return m_; }
    Mat nu() const;
    Mat nu_squared() const { return nu(); }  // nu is an orthogonal projection (or I)

    /// Apply nu to a vector of length m without forming the matrix.
    Vec apply(const Vec& w) const;

private:
    bool unconstrained_ = false;
    Vec a_;
    int m_ = 0;
};

struct ControlPolicy {
    std::function<ControlMatrix(double t, const Vec& x)> fn;
    std::string label;
};

ControlPolicy constant_policy(const ControlMatrix& nu, const std::string& label = "constant");
ControlPolicy unconstrained_policy(int m);

/// a = Xfield/|Xfield| away from characteristic points; at characteristic
/// points a = the lambda_max eigenvector of (X^2 field)*, sign fixed so the
/// first component above tolerance is positive.
ControlPolicy feedback_policy(const Frame& frame, const ScalarField& field, double char_tol);
ControlMatrix feedback_optimal_control(const Frame& frame, const ScalarField& field, double t,
                                       const Vec& x, double char_tol);

/// Constant-direction policies over a fan of `count` unit directions in R^m
/// (uniform angles for m=2, Fibonacci-spaced for m>=3).
std::vector<ControlPolicy> fan_policies(int m, int count = 32);

struct PathEnsemble {
    int n_paths = 0;
    std::vector<Vec> states;
    double t = 0.0;
    double dt = 0.0;
    std::uint64_t seed = 0;
};

/// Counter-based per-path Gaussian stream keyed by (seed, path index):
/// results cannot depend on scheduling order.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path);
    double gaussian();
    double uniform();  // in (0,1)

private:
    std::uint64_t next_u64();
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Ito drift sum_{i,j} (nu^2)_{ij} nabla_{X_i}X_j(x).
Vec drift_vector(const Frame& frame, const ControlMatrix& nu, const Vec& x);

/// Euler-Maruyama step of the Ito form:
/// x + sqrt(2) sigma^T(x) nu dW + drift(x) dt, with dW ~ N(0, dt I_m).
Vec step_ito(const Frame& frame, const Vec& x, const ControlMatrix& nu, double dt, const Vec& dW);

struct PathBlowupError : std::runtime_error {
    PathBlowupError(int path, double t)
        : std::runtime_error("path " + std::to_string(path) + " blew up at t=" + std::to_string(t)),
          path(path),
          time(t) {}
    int path;
    double time;
};

/// Advance one path from (t0, x0) to T; the final partial step is shortened
/// to land exactly on T. Optionally records the trajectory (t, x) pairs.
Vec simulate_path(const Frame& frame, const Vec& x0, double t0, double T,
                  const ControlPolicy& policy, double dt, PathRng& rng,
                  std::vector<std::pair<double, Vec>>* trajectory = nullptr);

PathEnsemble simulate(const Frame& frame, const Vec& x0, double t0, double T,
                      const ControlPolicy& policy, int n_paths, double dt, std::uint64_t seed,
                      bool parallel = true);

/// (mean over paths of g(xi_T)^p)^{1/p} for one policy, evaluated via
/// log-sum-exp after shifting g so the sample is >= 1; the shift is removed
/// on output.
double estimate_vp(const Frame& frame, const Vec& x0, double t0, double T, const ScalarField& g,
                   double p, const ControlPolicy& policy, int n_paths, double dt,
                   std::uint64_t seed, bool parallel = true);

struct EssSupMode {
    bool use_max = true;
    double quantile = 0.999;
    static EssSupMode max() { return {true, 0}; }
    static EssSupMode quantile_mode(double q) { return {false, q}; }
};

struct ValueEstimate {
    double value = 0.0;
    std::string best_policy;
    double stderr_best = 0.0;  // standard error of the g-sample under the best policy
};

/// min over the policy family of the sample max (or q-quantile) of g(xi_T),
/// with common random numbers across policies.
ValueEstimate estimate_v(const Frame& frame, const Vec& x0, double t0, double T,
                         const ScalarField& g, const std::vector<ControlPolicy>& policy_family,
                         int n_paths, double dt, std::uint64_t seed,
                         EssSupMode mode = EssSupMode::max(), bool parallel = true);

/// With S~ = sigma S sigma^T + A(x,d): -Tr(S~) + lambda_max(S~), the sup of
/// -Tr(nu^2 S~) over the admissible set.
double control_hamiltonian(const Frame& frame, const Vec& x, const Vec& d, const Mat& S);

}  // namespace hmcf
