#include "gcb/matexp.hpp"

#include <cmath>
#include <stdexcept>

namespace gcb {

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("matrix_exponential: matrix must be square");
    }
    const Eigen::Index n = a.rows();
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm

    int squarings = 0;
    if (norm > 0.5) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.5))));
    }
    const Eigen::MatrixXd a_scaled = a / std::ldexp(1.0, squarings);

    // (6,6) Pade: N = sum c_k A^k, D = sum (-1)^k c_k A^k.
    constexpr int q = 6;
    Eigen::MatrixXd x = a_scaled;
    Eigen::MatrixXd numer = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd denom = Eigen::MatrixXd::Identity(n, n);
    double c = 1.0;
    int sign = 1;
    for (int k = 1; k <= q; ++k) {
        c = c * (q - k + 1) / (k * (2 * q - k + 1));
        sign = -sign;
        numer += c * x;
        denom += (sign * c) * x;
        if (k < q) {
            x = x * a_scaled;
        }
    }

    Eigen::MatrixXd result = denom.partialPivLu().solve(numer);
    for (int k = 0; k < squarings; ++k) {
        result = result * result;
    }
    return result;
}

double operator_norm(const Eigen::MatrixXd& a, double tol) {
    if (a.size() == 0) {
        return 0.0;
    }
    const Eigen::MatrixXd gram = a.transpose() * a;
    const Eigen::Index n = gram.rows();

    // Deterministic start with components in every direction.
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = 1.0 / static_cast<double>(i + 1);
    }
    v.normalize();

    double lambda = 0.0;
    constexpr int kMaxIter = 100000;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        Eigen::VectorXd w = gram * v;
        const double next = w.norm();
        if (next == 0.0) {
            return 0.0;  // A^T A v = 0 from a dense start: zero matrix
        }
        v = w / next;
        if (std::abs(next - lambda) <= tol * std::max(next, 1e-300)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(lambda);
}

}  // namespace gcb
