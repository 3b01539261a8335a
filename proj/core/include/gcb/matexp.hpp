#pragma once

#include <Eigen/Dense>

namespace gcb {

/// exp(A) by scaling-and-squaring with a (6,6) Pade approximant.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a);

/// Largest singular value (operator 2-norm) by power iteration on A^T A,
/// relative tolerance `tol` on the iterate.
double operator_norm(const Eigen::MatrixXd& a, double tol = 1e-10);

}  // namespace gcb
