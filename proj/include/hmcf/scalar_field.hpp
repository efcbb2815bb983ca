#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hmcf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A level-set / cost function with evaluation plus first and second
/// Euclidean derivatives. When grad/hess are not supplied, central finite
/// differences of eval with step fd_step are used.
struct ScalarField {
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> grad;  // optional
    std::function<Mat(const Vec&)> hess;  // optional
    double fd_step = 1e-5;
    bool smooth = true;

    Vec gradient(const Vec& x) const;
    /// Symmetrized on read.
    Mat hessian(const Vec& x) const;
    bool has_analytic_derivatives() const { return static_cast<bool>(grad) && static_cast<bool>(hess); }
};

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h);
Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h);

/// Default characteristic threshold: FD noise must not create spurious
/// characteristic points.
inline double default_char_tol(const ScalarField& f) {
    return f.has_analytic_derivatives() ? 1e-8 : 1e-4;
}

}  // namespace hmcf
