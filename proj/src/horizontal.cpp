#include "hmcf/horizontal.hpp"

#include <cmath>

namespace hmcf {

HorizontalJet jet(const Frame& frame, const ScalarField& field, const Vec& x) {
    HorizontalJet j;
    j.point = x;
    j.euclid_grad = field.gradient(x);
    Mat H = field.hessian(x);
    Mat s = frame.eval_sigma(x);
    j.horiz_grad = s * j.euclid_grad;
    j.correction = Mat::Zero(frame.m, frame.m);
    for (int a = 0; a < frame.m; ++a)
        for (int b = a; b < frame.m; ++b) {
            Vec c = frame.eval_nabla(a, b, x) + frame.eval_nabla(b, a, x);
            j.correction(a, b) = j.correction(b, a) = 0.5 * c.dot(j.euclid_grad);
        }
    j.horiz_hess = s * H * s.transpose() + j.correction;
    if (!j.euclid_grad.allFinite() || !j.horiz_hess.allFinite())
        throw std::runtime_error("non-finite derivative values in jet");
    return j;
}

double horizontal_laplacian(const HorizontalJet& j) { return j.horiz_hess.trace(); }

double horizontal_inf_laplacian(const HorizontalJet& j, double char_tol) {
    double norm = j.horiz_grad.norm();
    if (norm <= char_tol) throw CharacteristicPointError(norm);
    Vec q = j.horiz_grad / norm;
    return q.dot(j.horiz_hess * q);
}

double horizontal_mean_curvature(const Frame& frame, const ScalarField& field, const Vec& x,
                                 double char_tol) {
    HorizontalJet j = jet(frame, field, x);
    double norm = j.horiz_grad.norm();
    if (norm <= char_tol) throw CharacteristicPointError(norm);
    return (horizontal_laplacian(j) - horizontal_inf_laplacian(j, char_tol)) / norm;
}

bool is_characteristic(const HorizontalJet& j, double char_tol) {
    return j.horiz_grad.norm() <= char_tol;
}

std::vector<Vec> char_scan(const Frame& frame, const ScalarField& field,
                           const std::vector<Vec>& sampler, double char_tol) {
    if (sampler.empty()) throw std::invalid_argument("char_scan: empty sampler");
    std::vector<Vec> out;
    for (const Vec& x : sampler) {
        HorizontalJet j = jet(frame, field, x);
        if (is_characteristic(j, char_tol)) out.push_back(x);
    }
    return out;
}

}  // namespace hmcf
