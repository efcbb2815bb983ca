#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "hmcf/scalar_field.hpp"

namespace hmcf {

/// A sub-Riemannian geometry given by the coefficient matrix sigma(x) whose
/// i-th row is the vector field X_i, together with the directional
/// derivatives nabla(i,j,x) = D X_j(x) X_i(x). Built-in frames carry
/// analytic nabla; custom frames fall back to central differences of the
/// sigma rows with step fd_step.
struct Frame {
    int n = 0;  // ambient dimension
    int m = 0;  // horizontal rank, m <= n
    std::function<Mat(const Vec&)> sigma;                 // m x n
    std::function<Vec(int, int, const Vec&)> nabla;       // optional, 0-based indices
    double fd_step = 1e-5;
    std::string label;

    Mat eval_sigma(const Vec& x) const;
    /// nabla when supplied, central finite difference of sigma otherwise.
    Vec eval_nabla(int i, int j, const Vec& x) const;
    /// Finite-difference route, always available (used as cross-check).
    Vec nabla_fd(int i, int j, const Vec& x) const;
};

/// Built-in names: "euclidean(n)", "heisenberg(k)", "grusin",
/// "rototranslation". Throws std::invalid_argument for unknown names or
/// frames with non-finite sigma at the probe point.
Frame make_geometry(const std::string& spec);

Frame make_euclidean(int n);
Frame make_heisenberg(int k);  // H^k on R^{2k+1}, m = 2k
Frame make_grusin();
Frame make_rototranslation();

/// Custom frame from {"n":..,"m":..,"rows":[["expr",...],...]} with
/// coefficient expressions in x1..xn. Row derivatives are taken
/// symbolically, so nabla is analytic whenever the expressions are smooth.
Frame frame_from_json_text(const std::string& json_text);

/// [X_i, X_j](x) = nabla(i,j,x) - nabla(j,i,x). 0-based indices.
Vec lie_bracket(const Frame& frame, int i, int j, const Vec& x);

struct HormanderResult {
    bool satisfied = false;
    int step = 0;
    std::string diagnostic;
};

/// Iterated numerical brackets at x until the span reaches R^n (singular
/// value test, relative tolerance 1e-8) or max_step is exceeded.
HormanderResult hormander_step(const Frame& frame, const Vec& x, int max_step);

// ---- Heisenberg H^1 group structure (Example formulas) ----

using H1Point = Eigen::Vector3d;

H1Point h1_mul(const H1Point& p, const H1Point& q);
H1Point h1_inverse(const H1Point& p);
H1Point h1_dilation(double lambda, const H1Point& p);  // throws for lambda <= 0
double h1_homogeneous_norm(const H1Point& p);
Eigen::Matrix3d h1_left_translation_diff(const H1Point& a);

}  // namespace hmcf
