#include "hmcf/scalar_field.hpp"

namespace hmcf {

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        g(i) = (f(xp) - f(xm)) / (2 * h);
        xp(i) = x(i);
        xm(i) = x(i);
    }
    return g;
}

Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    const int n = static_cast<int>(x.size());
    Mat H(n, n);
    const double f0 = f(x);
    Vec p = x;
    for (int i = 0; i < n; ++i) {
        p(i) = x(i) + h;
        double fp = f(p);
        p(i) = x(i) - h;
        double fm = f(p);
        p(i) = x(i);
        H(i, i) = (fp - 2 * f0 + fm) / (h * h);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            p(i) = x(i) + h;
            p(j) = x(j) + h;
            double fpp = f(p);
            p(j) = x(j) - h;
            double fpm = f(p);
            p(i) = x(i) - h;
            double fmm = f(p);
            p(j) = x(j) + h;
            double fmp = f(p);
            p(i) = x(i);
            p(j) = x(j);
            H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4 * h * h);
        }
    }
    return H;
}

Vec ScalarField::gradient(const Vec& x) const {
    if (grad) return grad(x);
    return fd_gradient(eval, x, fd_step);
}

Mat ScalarField::hessian(const Vec& x) const {
    Mat H = hess ? hess(x) : fd_hessian(eval, x, fd_step);
    return 0.5 * (H + H.transpose());
}

}  // namespace hmcf
