#pragma once

#include <stdexcept>
#include <vector>

#include "hmcf/geometry.hpp"
#include "hmcf/scalar_field.hpp"

namespace hmcf {

/// All pointwise horizontal data of a scalar field at x.
struct HorizontalJet {
    Vec point;
    Vec euclid_grad;  // Du, size n
    Vec horiz_grad;   // Xu = sigma Du, size m
    Mat correction;   // A(x, Du), m x m symmetric
    Mat horiz_hess;   // (X^2 u)* = sigma D2u sigma^T + A, m x m symmetric
};

struct CharacteristicPointError : std::runtime_error {
    explicit CharacteristicPointError(double norm)
        : std::runtime_error("characteristic point: |Xu| = " + std::to_string(norm)),
          horiz_grad_norm(norm) {}
    double horiz_grad_norm;
};

HorizontalJet jet(const Frame& frame, const ScalarField& field, const Vec& x);

/// Tr (X^2 u)*.
double horizontal_laplacian(const HorizontalJet& j);

/// <(X^2 u)* q, q> with q = Xu/|Xu|. Throws CharacteristicPointError when
/// |Xu| <= char_tol.
double horizontal_inf_laplacian(const HorizontalJet& j, double char_tol = 1e-8);

/// k0 = (Delta_0 u - Delta_{0,inf} u) / |Xu|; sign follows the outward
/// horizontal normal Xu/|Xu|.
double horizontal_mean_curvature(const Frame& frame, const ScalarField& field, const Vec& x,
                                 double char_tol = 1e-8);

bool is_characteristic(const HorizontalJet& j, double char_tol);

/// Returns the sampled surface points flagged characteristic. Throws
/// std::invalid_argument on an empty sampler.
std::vector<Vec> char_scan(const Frame& frame, const ScalarField& field,
                           const std::vector<Vec>& sampler, double char_tol);

}  // namespace hmcf
